#pragma once

#include "fracheat/spectral.hpp"

#include <string>
#include <vector>

namespace fracheat {

/// Values on boundary nodes with a per-node flag for an accepted limit.
struct BoundaryTrace {
    Eigen::VectorXd values;
    std::vector<bool> converged;

    bool all_converged() const;
    long failures() const;
};

/// Relative disagreement allowed between the quadratic and linear extrapolants.
inline constexpr double kTraceTolerance = 0.05;

/**
 * Limit of u / delta^gamma at each boundary node.
 *
 * Samples the three nearest interior nodes along the inward normal (normal
 * distances h/2, 3h/2, 5h/2) and extrapolates to zero distance with the
 * quadratic Lagrange weights (15/8, -5/4, 3/8). The node is flagged when the
 * linear extrapolant from the first two samples differs by more than `tolerance`.
 */
BoundaryTrace dgamma_trace(const Field& u, double gamma, const Grid& grid, double tolerance = kTraceTolerance);

/// The linear map u -> trace as a (boundary x interior) matrix.
Eigen::MatrixXd trace_operator(const Grid& grid, double gamma);

/// Traces of the active eigenvectors, (boundary x modes).
Eigen::MatrixXd mode_traces(const EigenSystem& eig);

Field green_apply(const EigenSystem& eig, const Field& f);

/// Truncated eigen-series G(x,y) = sum_k phi_k(x) phi_k(y) / lambda_k.
GreenKernelMatrix green_kernel(const EigenSystem& eig);
/// Kernel of the inverse operator by direct factorization, G = L^{-1} W^{-1}.
GreenKernelMatrix green_kernel_direct(const DiscreteOperator& op);

struct RatioReport {
    bool skipped = false;
    std::string note;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    double spread = 0.0;
    long pairs = 0;
    double spread_limit = 1e3;
    bool pass = false;
};

/// Ratio of the kernel to the two-sided Green shape over pairs with |x-y| > 2h.
RatioReport h1_check(const GreenKernelMatrix& kernel, double spread_limit = 1e3);

struct MartinKernel {
    GridPtr grid;
    double gamma = 0.5;
    Eigen::MatrixXd values;        // (interior x boundary)
    std::vector<bool> converged;   // per boundary node, far-field columns only
    long far_field_failures = 0;

    bool all_converged() const;
};

/// Boundary traces of the Green kernel columns.
MartinKernel martin_kernel(const EigenSystem& eig);

/// Boundary integral sum_zeta w_zeta M(x,zeta) h(zeta).
Field martin_apply(const MartinKernel& martin, const Eigen::VectorXd& h);
Field martin_apply(const EigenSystem& eig, const Eigen::VectorXd& h);

/// Response to unit boundary data.
Field u_star(const EigenSystem& eig);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rss = 0.0;
    int points = 0;
};

/// Least-squares line through (x_i, y_i).
SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Default band of boundary distances used for log-log slope fits.
struct Band {
    double lower;
    double upper;
};
Band default_band(const Grid& grid);

/// log u against log delta over nodes inside the band; requires u > 0 there.
SlopeFit boundary_slope(const Grid& grid, const Field& u, Band band);
SlopeFit boundary_slope(const Grid& grid, const Field& u);

enum class BoundaryRegime { Interior, Critical, Saturated };

struct RegimeReport {
    double beta = 0.0;
    BoundaryRegime regime = BoundaryRegime::Saturated;
    double expected_slope = 0.0;
    SlopeFit fit;
    double aic_power = 0.0;       // free exponent
    double aic_log = 0.0;         // delta^gamma (A |ln delta| + B) with A > 0
    bool log_preferred = false;
    double tolerance = 0.1;
    bool pass = false;
};

/// Boundary profile of G[delta^beta]; throws for beta <= -gamma-1.
RegimeReport boundary_behavior_check(const EigenSystem& eig, double beta, double tolerance = 0.1);

struct IdentityResidual {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
    double relative = 0.0;
};

/**
 * |<v, L phi> - <Lv, phi> - int_boundary Ev D_gamma phi| for phi = G[psi].
 * The caller supplies Lv and the boundary datum Ev of v.
 */
IdentityResidual integration_by_parts_residual(const EigenSystem& eig, const Field& v, const Field& lv,
                                               const Eigen::VectorXd& ev, const Field& psi);

/// Relative residual of <G f, g> = <f, G g>.
double green_symmetry_residual(const EigenSystem& eig, const Field& f, const Field& g);

/// Largest c with G[f] >= c delta^gamma int f delta^gamma at every node, for f >= 0.
double lower_hopf_constant(const EigenSystem& eig, const Field& f);

}  // namespace fracheat
