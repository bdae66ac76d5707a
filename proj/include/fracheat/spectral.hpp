#pragma once

#include "fracheat/operators.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace fracheat {

/// Raised when an operator or spectrum cannot support the requested computation.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Full eigen-decomposition of a discrete operator.
 *
 * Eigenvectors are orthonormal in the weighted pairing, eigenvalues ascend and
 * the first eigenvector is positive. Series evaluations use the leading
 * `modes` pairs; the rest stay available for diagnostics.
 */
struct EigenSystem {
    OperatorKind kind = OperatorKind::Rfl;
    double s = 0.5;
    double gamma = 0.5;
    GridPtr grid;
    Eigen::VectorXd lambdas;
    Eigen::MatrixXd phis;   // column k is the k-th eigenvector
    Eigen::Index modes = 0;
    bool ground_state_positive = false;

    Eigen::Index size() const { return lambdas.size(); }
    double lambda1() const { return lambdas(0); }
    auto active_lambdas() const { return lambdas.head(modes); }
    auto active_phis() const { return phis.leftCols(modes); }

    /// Copy using the leading m modes (m = 0 keeps all).
    EigenSystem with_modes(Eigen::Index m) const;

    /// <u, phi_k> for the active modes.
    Eigen::VectorXd coefficients(const Field& u) const;
    Field synthesize(const Eigen::VectorXd& coefficients) const;

    /// Fitted Weyl constant c = min_k lambda_k / k^{2s/d} over k <= k_max.
    double weyl_constant(Eigen::Index k_max) const;
    /// Estimate of sum_{k > modes} exp(-lambda_k t) from the Weyl law.
    double tail_sum(double t) const;
    /// max over active modes of sup |phi_k|.
    double max_sup_norm() const;
};

/// Throws NumericalError when an eigenvalue is not positive or the ground state is degenerate.
EigenSystem eigendecompose(const DiscreteOperator& op, Eigen::Index modes = 0);

struct WeylReport {
    double constant = 0.0;
    Eigen::Index k_max = 0;
    std::vector<double> margins;   // lambda_k - c k^{2s/d}
    double tolerance = 0.0;
    bool pass = false;
    std::optional<double> sobolev_constant;
    std::optional<double> sobolev_bound_constant;   // explicit lower-bound constant from the Sobolev constant
    bool sobolev_bound_holds = false;
};

WeylReport weyl_check(const EigenSystem& eig, Eigen::Index k_max, double tolerance = 0.0);

/// Adds the Sobolev-constant comparison to an existing report (requires d > 2s).
void attach_sobolev_bound(WeylReport& report, const EigenSystem& eig, double sobolev_constant);

/**
 * Sampled lower estimate of the Sobolev constant of the operator:
 * min over all eigenvectors and `trials` random fields of energy^{1/2} / ||u||_alpha.
 * Requires d > 2s; alpha defaults to 2d/(d-2s).
 */
double estimate_sobolev_constant(const EigenSystem& eig, std::optional<double> alpha = std::nullopt,
                                 int trials = 64, std::uint64_t seed = 0);

/// Rayleigh quotient residual max_k |<L phi_k, phi_k> - lambda_k| / lambda_k over active modes.
double rayleigh_residual(const EigenSystem& eig, const DiscreteOperator& op);
/// max |<phi_k, phi_m> - delta_km|.
double orthonormality_residual(const EigenSystem& eig);

}  // namespace fracheat
