#include "fracheat/kernel_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>

namespace fracheat {

namespace {

void require_published(OperatorKind kind) {
    if (kind == OperatorKind::Synthetic) throw std::invalid_argument("no published heat-kernel bound for synthetic kernels");
}

double clip(double v) { return std::min(1.0, v); }

// (1 ∧ a/r)^p, equal to 1 on the diagonal
double off_diagonal_factor(double a, double r, double p) { return r > 0.0 ? std::pow(clip(a / r), p) : 1.0; }

bool stable_shape_informational(OperatorKind kind, int dim, double s) {
    return kind != OperatorKind::Sfl && dim <= 2.0 * s;
}

BoundReport fit(OperatorKind kind, double s, double gamma, const EnvelopeOptions& options,
                const std::vector<double>& times, bool degraded, bool informational,
                const std::function<void(double, double&, double&)>& ratios) {
    BoundReport r;
    r.kind = kind;
    r.s = s;
    r.gamma = gamma;
    r.spread_limit = options.spread_limit;
    r.degraded = degraded;
    r.informational = informational;
    r.c_low = std::numeric_limits<double>::infinity();
    r.c_up = -std::numeric_limits<double>::infinity();
    for (double t : times) {
        BoundTimeRow row{t, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        ratios(t, row.min_ratio, row.max_ratio);
        r.c_low = std::min(r.c_low, row.min_ratio);
        r.c_up = std::max(r.c_up, row.max_ratio);
        r.rows.push_back(row);
    }
    r.spread = r.c_low > 0.0 ? r.c_up / r.c_low : std::numeric_limits<double>::infinity();
    r.pass = !degraded && r.c_low > 0.0 && r.spread <= r.spread_limit;
    return r;
}

}  // namespace

EnvelopeValue envelope(OperatorKind kind, double s, double t, Eigen::Index x, Eigen::Index y, const Grid& grid,
                       double lambda1, const EnvelopeOptions& options) {
    require_published(kind);
    if (!(t > 0.0)) throw std::invalid_argument("envelope needs t > 0");
    const double gamma = boundary_exponent(kind, s);
    const Field& delta = grid.delta();
    const double dx = delta(x);
    const double dy = delta(y);
    if (t >= options.threshold) {
        const double v = std::exp(-lambda1 * t) * std::pow(dx, gamma) * std::pow(dy, gamma);
        return {v, v};
    }
    const double d = grid.dim();
    const double r = grid.distance(x, y);
    if (kind == OperatorKind::Sfl) {
        const double base = clip(dx * dy / t) * std::pow(t, -d / 2.0);
        return {base * std::exp(-options.lower_exp_constant * r * r / t),
                base * std::exp(-options.upper_exp_constant * r * r / t)};
    }
    const double a = std::pow(t, 1.0 / (2.0 * s));
    const double v = std::pow(t, -d / (2.0 * s)) * off_diagonal_factor(a, r, d + 2.0 * s) *
                     std::pow(clip(dx / a), gamma) * std::pow(clip(dy / a), gamma);
    return {v, v};
}

EnvelopeValue trace_envelope(OperatorKind kind, double s, double t, Eigen::Index boundary_node, Eigen::Index y,
                             const Grid& grid, double lambda1, const EnvelopeOptions& options) {
    require_published(kind);
    if (!(t > 0.0)) throw std::invalid_argument("envelope needs t > 0");
    const double gamma = boundary_exponent(kind, s);
    const double dy = grid.delta()(y);
    if (t >= options.threshold) {
        const double v = std::exp(-lambda1 * t) * std::pow(dy, gamma);
        return {v, v};
    }
    const double d = grid.dim();
    const double r = grid.distance_to_boundary_node(y, boundary_node);
    if (kind == OperatorKind::Sfl) {
        const double base = dy * std::pow(t, -(d + 2.0) / 2.0);
        return {base * std::exp(-options.lower_exp_constant * r * r / t),
                base * std::exp(-options.upper_exp_constant * r * r / t)};
    }
    const double a = std::pow(t, 1.0 / (2.0 * s));
    const double v = std::pow(t, -(d + gamma) / (2.0 * s)) * off_diagonal_factor(a, r, d + 2.0 * s) *
                     std::pow(clip(dy / a), gamma);
    return {v, v};
}

BoundReport two_sided_report(const EigenSystem& eig, const std::vector<double>& times, const EnvelopeOptions& options) {
    require_published(eig.kind);
    const Grid& grid = *eig.grid;
    const double floor = minimum_time(eig);
    const bool degraded = std::any_of(times.begin(), times.end(), [&](double t) { return t < floor; });
    const Eigen::Index n = grid.size();
    return fit(eig.kind, eig.s, eig.gamma, options, times, degraded,
               stable_shape_informational(eig.kind, grid.dim(), eig.s), [&](double t, double& lo, double& hi) {
                   const HeatKernel k = heat_kernel(eig, t);
                   for (Eigen::Index j = 0; j < n; ++j) {
                       for (Eigen::Index i = 0; i < n; ++i) {
                           const EnvelopeValue e = envelope(eig.kind, eig.s, t, i, j, grid, eig.lambda1(), options);
                           lo = std::min(lo, k.values(i, j) / e.lower);
                           hi = std::max(hi, k.values(i, j) / e.upper);
                       }
                   }
               });
}

BoundReport trace_bound_report(const EigenSystem& eig, const std::vector<double>& times,
                               const EnvelopeOptions& options) {
    require_published(eig.kind);
    const Grid& grid = *eig.grid;
    const double floor = minimum_time(eig);
    const bool degraded = std::any_of(times.begin(), times.end(), [&](double t) { return t < floor; });
    const Eigen::Index nb = static_cast<Eigen::Index>(grid.boundary().size());
    return fit(eig.kind, eig.s, eig.gamma, options, times, degraded,
               stable_shape_informational(eig.kind, grid.dim(), eig.s), [&](double t, double& lo, double& hi) {
                   const Eigen::MatrixXd k = dgamma_heat_kernel_series(eig, t);
                   for (Eigen::Index y = 0; y < grid.size(); ++y) {
                       for (Eigen::Index b = 0; b < nb; ++b) {
                           const EnvelopeValue e = trace_envelope(eig.kind, eig.s, t, b, y, grid, eig.lambda1(), options);
                           lo = std::min(lo, k(b, y) / e.lower);
                           hi = std::max(hi, k(b, y) / e.upper);
                       }
                   }
               });
}

std::vector<double> on_diagonal_window(const EigenSystem& eig, int count) {
    const double t_lo = std::log(1e3) / eig.lambdas(eig.modes - 1);
    std::vector<double> times;
    for (int k = 0; k < count; ++k) times.push_back(t_lo * std::pow(4.0, static_cast<double>(k) / (count - 1)));
    return times;
}

OnDiagonalReport on_diagonal_slope(const EigenSystem& eig, const std::vector<double>& times, double tolerance) {
    const Grid& grid = *eig.grid;
    OnDiagonalReport r;
    const Eigen::Index mid = grid.n_per_axis() / 2;
    r.node = grid.dim() == 1 ? mid : grid.index(mid, mid);
    r.times = times;
    r.expected = -grid.dim() / (2.0 * eig.s);
    r.tolerance = tolerance;
    const auto phi = eig.active_phis().row(r.node).array().square();
    std::vector<double> lx, ly;
    for (double t : times) {
        const double v = (phi * (-eig.active_lambdas().array().transpose() * t).exp()).sum();
        r.values.push_back(v);
        lx.push_back(std::log(t));
        ly.push_back(std::log(v));
    }
    r.slope = fit_line(lx, ly).slope;
    r.pass = std::abs(r.slope - r.expected) <= tolerance;
    return r;
}

HopfReport hopf_report(const EigenSystem& eig, double t, double bound, int samples, std::uint64_t seed) {
    const Grid& grid = *eig.grid;
    const Field dg = grid.delta().array().pow(eig.gamma).matrix();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    HopfReport r;
    r.t = t;
    r.bound = bound;
    r.min_ratio = std::numeric_limits<double>::infinity();
    r.max_ratio = 0.0;
    for (int k = 0; k < samples; ++k) {
        Field u0(grid.size());
        if (k == 0) {
            u0.setOnes();
        } else {
            // sparse bumps so that some samples concentrate near the boundary
            for (Eigen::Index i = 0; i < grid.size(); ++i) u0(i) = unit(rng) < 0.1 ? unit(rng) : 0.0;
            if (u0.sum() == 0.0) u0(0) = 1.0;
        }
        const Field v = semigroup_apply(eig, u0, t).cwiseQuotient(dg) / grid.l1(u0, dg);
        r.min_ratio = std::min(r.min_ratio, v.minCoeff());
        r.max_ratio = std::max(r.max_ratio, v.maxCoeff());
    }
    r.factor = r.min_ratio > 0.0 ? r.max_ratio / r.min_ratio : std::numeric_limits<double>::infinity();
    r.pass = r.factor <= bound;
    return r;
}

WeightedBoundReport weighted_bound_check(const EigenSystem& eig, const std::vector<double>& times) {
    const Grid& grid = *eig.grid;
    const double d = grid.dim();
    const Field dg = grid.delta().array().pow(eig.gamma).matrix();
    const Eigen::MatrixXd weight = dg * dg.transpose();
    WeightedBoundReport r;
    r.times = times;
    std::sort(r.times.begin(), r.times.end());
    std::vector<double> lt, ln, lp;
    for (double t : r.times) {
        const double sup = heat_kernel(eig, t).values.cwiseQuotient(weight).maxCoeff();
        r.negative_scaled.push_back(sup * std::pow(t, d / (2.0 * eig.s)));
        r.positive_scaled.push_back(sup * std::pow(t, -d / (2.0 * eig.s)));
        lt.push_back(std::log(t));
        ln.push_back(std::log(r.negative_scaled.back()));
        lp.push_back(std::log(r.positive_scaled.back()));
    }
    // growth as t -> 0 shows up as a negative slope over the smallest times
    const std::size_t m = std::min<std::size_t>(3, lt.size());
    const std::vector<double> x(lt.begin(), lt.begin() + m);
    r.negative_slope = fit_line(x, std::vector<double>(ln.begin(), ln.begin() + m)).slope;
    r.positive_slope = fit_line(x, std::vector<double>(lp.begin(), lp.begin() + m)).slope;
    r.negative_bounded = r.negative_slope >= -0.25;
    r.positive_bounded = r.positive_slope >= -0.25;
    return r;
}

}  // namespace fracheat
