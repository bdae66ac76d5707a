#pragma once

#include "fracheat/semigroup.hpp"

#include <cstdint>
#include <vector>

namespace fracheat {

struct EnvelopeOptions {
    double threshold = 1.0;                 // T: large-time branch for t >= T
    double lower_exp_constant = 1.0 / 6.0;  // SFL: exp(-c |x-y|^2 / t) in the lower comparator
    double upper_exp_constant = 1.0 / 6.0;
    double spread_limit = 1e3;
};

struct EnvelopeValue {
    double lower = 0.0;
    double upper = 0.0;
};

/**
 * Comparator shapes with unit constants for the heat kernel at nodes x, y.
 * RFL and CFL share the stable-like shape with their own gamma; SFL uses the
 * Gaussian shape; every kind switches to exp(-lambda_1 t) delta^gamma delta^gamma at t >= T.
 * Throws std::invalid_argument for SYNTHETIC and for t <= 0.
 */
EnvelopeValue envelope(OperatorKind kind, double s, double t, Eigen::Index x, Eigen::Index y, const Grid& grid,
                       double lambda1, const EnvelopeOptions& options = {});

/// Same shapes for the boundary trace D_gamma K(t, zeta, y).
EnvelopeValue trace_envelope(OperatorKind kind, double s, double t, Eigen::Index boundary_node, Eigen::Index y,
                             const Grid& grid, double lambda1, const EnvelopeOptions& options = {});

struct BoundTimeRow {
    double t = 0.0;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
};

struct BoundReport {
    OperatorKind kind = OperatorKind::Rfl;
    double s = 0.5;
    double gamma = 0.5;
    double c_low = 0.0;
    double c_up = 0.0;
    double spread = 0.0;
    double spread_limit = 1e3;
    std::vector<BoundTimeRow> rows;
    bool degraded = false;        // some t below the truncation floor
    bool informational = false;   // d = 1 and s >= 1/2 for the stable-like shapes
    bool pass = false;
};

/// c_low = min K / lower, c_up = max K / upper over all node pairs and times.
BoundReport two_sided_report(const EigenSystem& eig, const std::vector<double>& times,
                             const EnvelopeOptions& options = {});

/// Same fit for D_gamma K over boundary nodes and interior nodes.
BoundReport trace_bound_report(const EigenSystem& eig, const std::vector<double>& times,
                               const EnvelopeOptions& options = {});

/// Log-spaced times in [t_lo, 4 t_lo] with exp(-lambda_N t_lo) = 1e-3.
std::vector<double> on_diagonal_window(const EigenSystem& eig, int count = 8);

struct OnDiagonalReport {
    Eigen::Index node = 0;
    std::vector<double> times;
    std::vector<double> values;
    double slope = 0.0;
    double expected = 0.0;   // -d / (2s)
    double tolerance = 0.15;
    bool pass = false;
};

/// Log-log slope of K(t, x0, x0) at the node nearest the centre.
OnDiagonalReport on_diagonal_slope(const EigenSystem& eig, const std::vector<double>& times,
                                   double tolerance = 0.15);

struct HopfReport {
    double t = 1.0;
    double min_ratio = 0.0;   // (S u0 / delta^gamma)(x) / int u0 delta^gamma
    double max_ratio = 0.0;
    double factor = 0.0;
    double bound = 0.0;
    bool pass = false;
};

/// Random nonnegative data; pass iff factor <= bound.
HopfReport hopf_report(const EigenSystem& eig, double t, double bound, int samples = 16, std::uint64_t seed = 0);

struct WeightedBoundReport {
    std::vector<double> times;
    std::vector<double> negative_scaled;   // sup K / (t^{-d/2s} delta^gamma delta^gamma)
    std::vector<double> positive_scaled;   // sup K / (t^{+d/2s} delta^gamma delta^gamma)
    double negative_slope = 0.0;           // log-log slope as t decreases
    double positive_slope = 0.0;
    bool negative_bounded = false;
    bool positive_bounded = false;
};

/// K <= C t^{-d/2s} delta^gamma delta^gamma against the positive-exponent variant.
WeightedBoundReport weighted_bound_check(const EigenSystem& eig, const std::vector<double>& times);

}  // namespace fracheat
