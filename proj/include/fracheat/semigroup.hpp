#pragma once

#include "fracheat/green.hpp"

#include <cstdint>
#include <vector>

namespace fracheat {

/// Truncated eigen-series exp(-tL) u0. Throws for t < 0.
Field semigroup_apply(const EigenSystem& eig, const Field& u0, double t);

struct HeatKernel {
    double t = 0.0;
    Eigen::MatrixXd values;
    Eigen::Index modes = 0;
    double tail_bound = 0.0;   // bound on the omitted part of any entry
    bool degraded = false;     // tail above 1e-6 of the largest entry

    /// sum_j w_j K(x_i, y_j)
    Field row_mass(const Grid& grid) const;
};

/// Throws for t <= 0: the identity at t = 0 has no bounded kernel.
HeatKernel heat_kernel(const EigenSystem& eig, double t);

/// Smallest t (to 1% in t) for which the truncation tail is below rel * sup entry; 0 for a full spectrum.
double minimum_time(const EigenSystem& eig, double rel = 1e-6);

struct CompositionReport {
    double max_error = 0.0;
    double tail_bound = 0.0;
};

/// K(t) W K(tau) against K(t + tau).
CompositionReport chapman_kolmogorov(const EigenSystem& eig, double t, double tau);

/**
 * int_0^inf K(t) dt evaluated mode by mode: the exact integral over [0, t_split]
 * plus the exact tail, summed with the active modes.
 */
GreenKernelMatrix time_integrated_kernel(const EigenSystem& eig, double t_split = 0.1);

/// Relative off-diagonal (|x-y| > 2h) max-norm distance between two kernels.
double off_diagonal_relative_error(const GreenKernelMatrix& a, const GreenKernelMatrix& b);

struct KernelTrace {
    Eigen::MatrixXd values;        // (boundary x interior)
    std::vector<bool> converged;   // per boundary node, far-field columns
    long failures = 0;
};

/// Boundary trace of every heat-kernel column.
KernelTrace dgamma_heat_kernel(const EigenSystem& eig, double t);
/// sum_m exp(-lambda_m t) D phi_m(zeta) phi_m(y) from mode traces.
Eigen::MatrixXd dgamma_heat_kernel_series(const EigenSystem& eig, double t);

struct SubMarkovReport {
    double t = 0.0;
    double min_value = 0.0;           // over S(t)1 and S(t)u0 for random 0 <= u0 <= 1
    double max_value = 0.0;
    double domination_excess = 0.0;   // max(|S u0| - S|u0|)
    double l1_excess = 0.0;           // max(||S u0||_1 - ||u0||_1) / ||u0||_1
    double tolerance = 1e-10;
    bool pass = false;
};

std::vector<SubMarkovReport> submarkov_check(const EigenSystem& eig, const std::vector<double>& times,
                                             int samples = 16, std::uint64_t seed = 0, double tolerance = 1e-10);

struct UltracontractivityReport {
    std::vector<double> times;             // t >= the truncation floor
    std::vector<double> sup_scaled;        // sup K t^{d/2s}
    std::vector<double> boundary_scaled;   // sup K t^{d/(2s-gamma)} / (delta^gamma delta^gamma), empty if gamma >= 2s
    double sup_growth_slope = 0.0;         // log-log slope over the three smallest times
    double boundary_growth_slope = 0.0;
    bool boundary_informational = false;   // d <= 2s: the weighted rate is reported, not enforced
    bool pass = false;
};

/// Scaled sup-norms of the kernel over a time sweep; fails on power-law growth as t -> 0.
UltracontractivityReport ultracontractivity_check(const EigenSystem& eig, const std::vector<double>& times);

struct DecayReport {
    std::vector<double> times;
    std::vector<double> values;
    double fitted_rate = 0.0;   // minus the fitted log slope
    double lambda1 = 0.0;
    double relative_error = 0.0;
    double tolerance = 0.02;
    bool pass = false;
};

/// Times where the first excited mode has decayed relative to the ground state.
std::vector<double> asymptotic_times(const EigenSystem& eig, int count = 5);

/// Decay of ||S(t)u0 delta^gamma||_1 against exp(-lambda_1 t).
DecayReport weighted_decay_check(const EigenSystem& eig, const Field& u0, const std::vector<double>& times,
                                 double tolerance = 0.02);

struct LargeTimeReport {
    double epsilon = 0.05;
    double fitted_time = 0.0;      // first probed t with the two-sided envelope
    double gap_time = 0.0;         // 2 ln(C/eps) / (lambda_2 - lambda_1)
    double trace_ratio_error = 0.0;   // max |D K / (exp(-lambda_1 t) D phi_1 phi_1) - 1| at the fitted time
    bool pass = false;
};

/// (1-eps) e^{-lambda_1 t} phi_1 phi_1 <= K(t) <= (1+eps) e^{-lambda_1 t} phi_1 phi_1 for t >= T.
LargeTimeReport large_time_check(const EigenSystem& eig, double epsilon = 0.05);

/// (lambda + L)^{-1} f. Throws for lambda <= 0.
Field resolvent_apply(const EigenSystem& eig, const Field& f, double lambda);

struct ResolventReport {
    double lambda = 0.0;
    double ratio = 0.0;   // worst int |J f| phi_1 / int |f| phi_1
    double bound = 0.0;   // 1 / (lambda + lambda_1)
    double domination_excess = 0.0;   // max(|J f| - G|f|)
    double tolerance = 1e-6;
    bool pass = false;
};

ResolventReport resolvent_check(const EigenSystem& eig, double lambda, int samples = 16, std::uint64_t seed = 0,
                                double tolerance = 1e-6);

/// |sum_k exp(-2 lambda_k t) - sum_ij w_i w_j K_ij^2| relative.
double kernel_trace_identity_residual(const EigenSystem& eig, double t);

/// Relative residual of <S f, g> = <f, S g>.
double semigroup_symmetry_residual(const EigenSystem& eig, const Field& f, const Field& g, double t);

}  // namespace fracheat
