#pragma once

#include "fracheat/semigroup.hpp"

#include <vector>

namespace fracheat {

/**
 * Initial value plus interior and boundary forcing, piecewise linear in time
 * between the nodes of `times` (which starts at 0). Empty `f` or `h` means zero.
 */
struct TimeDependentData {
    std::vector<double> times;
    Field u0;
    std::vector<Field> f;
    std::vector<Eigen::VectorXd> h;

    /// Constant-in-time data on [0, t_end].
    static TimeDependentData stationary(const Field& u0, const Field& f, const Eigen::VectorXd& h, double t_end);

    double end_time() const { return times.back(); }
    bool has_forcing() const { return !f.empty(); }
    bool has_boundary() const { return !h.empty(); }
    Field forcing_at(double t) const;
    Eigen::VectorXd boundary_at(double t) const;

    /// Throws std::invalid_argument on inconsistent sizes or times.
    void validate(const Grid& grid) const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Field> fields;
    OperatorKind kind = OperatorKind::Rfl;
    double s = 0.5;
    double gamma = 0.5;
    Eigen::Index modes = 0;
    bool trace_flagged = false;   // boundary data met a non-converged trace
};

/// exp(-z) and the weights of the left/right endpoint values for a linear ramp over a step with z = lambda dt.
struct StepWeights {
    double decay;
    double left;
    double right;
};
StepWeights exact_step_weights(double lambda, double dt);

/// Interior Duhamel term int_0^t S(t-s) f(s) ds.
Field duhamel(const EigenSystem& eig, const TimeDependentData& data, double t);
/// Boundary Duhamel term driven by h; sets *flagged when a needed trace failed to converge.
Field boundary_duhamel(const EigenSystem& eig, const TimeDependentData& data, double t, bool* flagged = nullptr);

/// S(t)u0 + interior Duhamel + boundary Duhamel at each requested time.
Trajectory solve_h(const EigenSystem& eig, const TimeDependentData& data, const std::vector<double>& times);

/// Evenly spaced times 0, T/K, ..., T.
std::vector<double> uniform_times(double t_end, int steps);

/**
 * Interior forcing concentrating on the boundary band {1/j <= delta <= 2/j}:
 * (|boundary| / |band|) delta^{-gamma} h(t, nearest boundary node) on the band.
 * Throws when the band holds no node next to some face.
 */
TimeDependentData concentration_sequence(const Grid& grid, double gamma, const TimeDependentData& boundary_data,
                                         int j);

struct EllipticLimitReport {
    std::vector<double> times;
    std::vector<double> errors;   // ||(H(t) - G f - M h) delta^gamma||_1
    double fitted_rate = 0.0;
    double lambda1 = 0.0;
    double relative_error = 0.0;
    double tolerance = 0.05;
    bool stationary = false;      // all errors below the stationary tolerance
    bool pass = false;
};

/// Requires time-independent data; compares the trajectory with the elliptic solution.
EllipticLimitReport elliptic_limit_check(const EigenSystem& eig, const TimeDependentData& data,
                                         const std::vector<double>& times, double tolerance = 0.05);

/// int_{t0}^{t1} sum_{i in A} w_i |u| delta^gamma by the trapezoid rule on the trajectory times.
double space_time_integral(const Trajectory& traj, const Grid& grid, double gamma, double t0, double t1,
                           const std::vector<bool>& mask);

struct IntegrabilityReport {
    std::vector<double> windows;
    std::vector<double> window_integrals;
    double window_exponent = 0.0;   // I(h) ~ h^p
    std::vector<double> set_measures;
    std::vector<double> set_integrals;
    double set_exponent = 0.0;      // I(A) ~ |A|^r
    double fitted_q = 0.0;          // r = 1/(2q)
    double tolerance = 0.05;
    bool pass = false;              // p >= 1/2 - tolerance
};

/**
 * Space-time integrals over [t0, t0 + h] x A for a halving sequence of windows
 * (on the full set) and a halving sequence of bands around the boundary.
 */
IntegrabilityReport uniform_integrability_probe(const Trajectory& traj, const Grid& grid, double gamma, double t0,
                                                double window, int levels = 4, double tolerance = 0.05);

/// ||H(t)||_2^2 - (exp(-lambda_1 t) ||u0||_2^2 + int_0^t ||f||_2^2): nonpositive when the estimate holds.
std::vector<double> energy_margins(const EigenSystem& eig, const TimeDependentData& data, const Trajectory& traj);

}  // namespace fracheat
