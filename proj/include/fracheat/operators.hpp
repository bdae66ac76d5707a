#pragma once

#include "fracheat/grid.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace fracheat {

enum class OperatorKind { Rfl, Sfl, Cfl, Synthetic };

std::string_view to_string(OperatorKind kind);
std::optional<OperatorKind> parse_operator_kind(std::string_view name);

/// Boundary exponent of a model operator: s, 1 and 2s-1 respectively.
double boundary_exponent(OperatorKind kind, double s);

/**
 * Dense operator acting on grid functions: (Lu)_i = sum_j matrix(i,j) u_j.
 * Self-adjoint in the weighted pairing sum_i w_i u_i v_i.
 */
struct DiscreteOperator {
    OperatorKind kind = OperatorKind::Rfl;
    double s = 0.5;
    double gamma = 0.5;
    GridPtr grid;
    Eigen::MatrixXd matrix;

    Field apply(const Field& u) const { return matrix * u; }
    /// max |W A - (W A)^T| relative to max |W A|.
    double symmetry_residual() const;
};

/// Second-order Dirichlet Laplacian, antisymmetric ghost value across the faces.
Eigen::MatrixXd dirichlet_laplacian(const Grid& grid);
/// Same stencil with the ghost value set to zero.
Eigen::MatrixXd zero_ghost_laplacian(const Grid& grid);
/// Same stencil with the ghost value copied from the adjacent cell; annihilates constants.
Eigen::MatrixXd neumann_laplacian(const Grid& grid);

/// Integral of |x_i - y|^{-(d+2s)} over the complement of the unit cube.
Field exterior_tail(const Grid& grid, double s);
/// Coefficient of the in-cell second-order correction c(s,h).
double cell_correction(const Grid& grid, double s);

DiscreteOperator assemble_rfl(GridPtr grid, double s);
DiscreteOperator assemble_cfl(GridPtr grid, double s);
DiscreteOperator assemble_sfl(GridPtr grid, double s);
DiscreteOperator assemble(OperatorKind kind, GridPtr grid, double s);

enum class SyntheticVariant { Baseline, Discontinuous, OscillatoryBoundary, OscillatoryDiagonal };

std::string_view to_string(SyntheticVariant v);
std::optional<SyntheticVariant> parse_synthetic_variant(std::string_view name);

struct SyntheticOptions {
    SyntheticVariant variant = SyntheticVariant::Baseline;
    int exp_depth = 1;            // iterated exponentials, oscillatory-diagonal only
    bool symmetric_set = false;   // discontinuous: use {x1 + y1 < 1} instead of {x1 < y1}
};

enum class KernelRegime { Singular, Logarithmic, Regular };

/// Explicit Green kernel values G(x_i, x_j).
struct GreenKernelMatrix {
    GridPtr grid;
    double s = 0.5;
    double gamma = 0.5;
    KernelRegime regime = KernelRegime::Singular;
    Eigen::MatrixXd values;
    bool symmetric = true;
    double min_eigenvalue = 0.0;   // of W^{1/2} G_sym W^{1/2}
    bool positive_definite = true;
    long unresolved_entries = 0;   // oscillatory arguments beyond double resolution
};

/// Two-sided shape |x-y|^{-(d-2s)} (d_x d_y / |x-y|^2 ^ 1)^gamma and its d <= 2s analogues.
double green_comparator(int dim, double s, double gamma, double dist, double delta_x, double delta_y);
KernelRegime kernel_regime(int dim, double s);

GreenKernelMatrix synthetic_green(GridPtr grid, double s, double gamma, const SyntheticOptions& options);

/// Operator whose inverse is the kernel; throws if the kernel is not symmetric positive definite.
DiscreteOperator operator_from_green(const GreenKernelMatrix& kernel);

}  // namespace fracheat
