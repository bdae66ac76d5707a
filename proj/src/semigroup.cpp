#include "fracheat/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace fracheat {

namespace {

Eigen::MatrixXd kernel_series(const EigenSystem& eig, const Eigen::VectorXd& factors) {
    const auto p = eig.active_phis();
    Eigen::MatrixXd k = p * factors.asDiagonal() * p.transpose();
    return 0.5 * (k + k.transpose());
}

Field random_field(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Field u(n);
    for (Eigen::Index i = 0; i < n; ++i) u(i) = dist(rng);
    return u;
}

double envelope_error(const EigenSystem& eig, double t) {
    const Eigen::MatrixXd k = heat_kernel(eig, t).values;
    const Field p1 = eig.phis.col(0);
    const double e = std::exp(-eig.lambda1() * t);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
        for (Eigen::Index j = 0; j < k.cols(); ++j) {
            const double base = e * p1(i) * p1(j);
            worst = std::max(worst, std::abs(k(i, j) / base - 1.0));
        }
    }
    return worst;
}

}  // namespace

Field semigroup_apply(const EigenSystem& eig, const Field& u0, double t) {
    if (t < 0.0) throw std::invalid_argument("semigroup time must be nonnegative");
    const Eigen::VectorXd c = eig.coefficients(u0);
    return eig.synthesize((c.array() * (-eig.active_lambdas().array() * t).exp()).matrix());
}

Field HeatKernel::row_mass(const Grid& grid) const { return values * grid.weights(); }

HeatKernel heat_kernel(const EigenSystem& eig, double t) {
    if (!(t > 0.0)) {
        throw std::invalid_argument("heat kernel needs t > 0; at t = 0 the semigroup is the identity, which has no bounded kernel");
    }
    HeatKernel k;
    k.t = t;
    k.modes = eig.modes;
    k.values = kernel_series(eig, (-eig.active_lambdas().array() * t).exp().matrix());
    const double sup = eig.max_sup_norm();
    k.tail_bound = eig.tail_sum(t) * sup * sup;
    k.degraded = k.tail_bound > 1e-6 * k.values.cwiseAbs().maxCoeff();
    return k;
}

double minimum_time(const EigenSystem& eig, double rel) {
    if (eig.modes >= eig.size()) return 0.0;
    const double sup = eig.max_sup_norm();
    auto ok = [&](double t) {
        const double diag = (eig.active_phis().array().square().rowwise() *
                             (-eig.active_lambdas().array() * t).exp().transpose())
                                .rowwise()
                                .sum()
                                .maxCoeff();
        return eig.tail_sum(t) * sup * sup <= rel * diag;
    };
    double hi = 1.0;
    while (!ok(hi) && hi < 1e6) hi *= 2.0;
    double lo = hi / 2.0;
    while (ok(lo) && lo > 1e-12) lo /= 2.0;
    while (hi / lo > 1.01) {
        const double mid = std::sqrt(lo * hi);
        (ok(mid) ? hi : lo) = mid;
    }
    return hi;
}

CompositionReport chapman_kolmogorov(const EigenSystem& eig, double t, double tau) {
    const HeatKernel a = heat_kernel(eig, t);
    const HeatKernel b = heat_kernel(eig, tau);
    const HeatKernel c = heat_kernel(eig, t + tau);
    const Eigen::MatrixXd composed = a.values * eig.grid->weights().asDiagonal() * b.values;
    return CompositionReport{(composed - c.values).cwiseAbs().maxCoeff(), a.tail_bound + b.tail_bound + c.tail_bound};
}

GreenKernelMatrix time_integrated_kernel(const EigenSystem& eig, double t_split) {
    const Eigen::ArrayXd lam = eig.active_lambdas().array();
    const Eigen::ArrayXd head = -(-lam * t_split).unaryExpr([](double z) { return std::expm1(z); }) / lam;
    const Eigen::ArrayXd tail = (-lam * t_split).exp() / lam;
    GreenKernelMatrix g;
    g.grid = eig.grid;
    g.s = eig.s;
    g.gamma = eig.gamma;
    g.regime = kernel_regime(eig.grid->dim(), eig.s);
    g.values = kernel_series(eig, (head + tail).matrix());
    g.symmetric = true;
    return g;
}

double off_diagonal_relative_error(const GreenKernelMatrix& a, const GreenKernelMatrix& b) {
    const Grid& grid = *a.grid;
    const double cutoff = 2.0 * grid.spacing();
    double diff = 0.0;
    double scale = 0.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        for (Eigen::Index j = 0; j < grid.size(); ++j) {
            if (grid.distance(i, j) <= cutoff) continue;
            diff = std::max(diff, std::abs(a.values(i, j) - b.values(i, j)));
            scale = std::max(scale, std::abs(b.values(i, j)));
        }
    }
    return scale > 0.0 ? diff / scale : diff;
}

KernelTrace dgamma_heat_kernel(const EigenSystem& eig, double t) {
    const Grid& grid = *eig.grid;
    const HeatKernel k = heat_kernel(eig, t);
    KernelTrace out;
    out.values.resize(static_cast<Eigen::Index>(grid.boundary().size()), grid.size());
    out.converged.assign(grid.boundary().size(), true);
    const double near = 3.0 * grid.spacing();
    for (Eigen::Index y = 0; y < grid.size(); ++y) {
        const BoundaryTrace tr = dgamma_trace(k.values.col(y), eig.gamma, grid);
        out.values.col(y) = tr.values;
        for (std::size_t b = 0; b < tr.converged.size(); ++b) {
            if (!tr.converged[b] && grid.distance_to_boundary_node(y, b) > near) {
                out.converged[b] = false;
                ++out.failures;
            }
        }
    }
    return out;
}

Eigen::MatrixXd dgamma_heat_kernel_series(const EigenSystem& eig, double t) {
    const Eigen::MatrixXd traces = mode_traces(eig);
    const Eigen::VectorXd e = (-eig.active_lambdas().array() * t).exp().matrix();
    return traces * e.asDiagonal() * eig.active_phis().transpose();
}

std::vector<SubMarkovReport> submarkov_check(const EigenSystem& eig, const std::vector<double>& times, int samples,
                                             std::uint64_t seed, double tolerance) {
    const Grid& grid = *eig.grid;
    std::vector<SubMarkovReport> out;
    for (double t : times) {
        std::mt19937_64 rng(seed);
        SubMarkovReport r;
        r.t = t;
        r.tolerance = tolerance;
        const Field one = semigroup_apply(eig, Field::Ones(grid.size()), t);
        r.min_value = one.minCoeff();
        r.max_value = one.maxCoeff();
        r.domination_excess = -std::numeric_limits<double>::infinity();
        r.l1_excess = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < samples; ++k) {
            const Field unit = random_field(rng, grid.size(), 0.0, 1.0);
            const Field su = semigroup_apply(eig, unit, t);
            r.min_value = std::min(r.min_value, su.minCoeff());
            r.max_value = std::max(r.max_value, su.maxCoeff());

            const Field signed_u = random_field(rng, grid.size(), -1.0, 1.0);
            const Field s_signed = semigroup_apply(eig, signed_u, t);
            const Field s_abs = semigroup_apply(eig, signed_u.cwiseAbs(), t);
            r.domination_excess = std::max(r.domination_excess, (s_signed.cwiseAbs() - s_abs).maxCoeff());
            const double n0 = grid.l1(signed_u);
            r.l1_excess = std::max(r.l1_excess, (grid.l1(s_signed) - n0) / n0);
        }
        r.pass = r.min_value >= -tolerance && r.max_value <= 1.0 + tolerance && r.domination_excess <= tolerance &&
                 r.l1_excess <= tolerance;
        out.push_back(r);
    }
    return out;
}

UltracontractivityReport ultracontractivity_check(const EigenSystem& eig, const std::vector<double>& times) {
    const Grid& grid = *eig.grid;
    const double d = grid.dim();
    const double floor = minimum_time(eig);
    const bool boundary_form = eig.gamma < 2.0 * eig.s;
    const Field dg = grid.delta().array().pow(eig.gamma).matrix();
    const Eigen::MatrixXd weight = dg * dg.transpose();

    UltracontractivityReport r;
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    for (double t : sorted) {
        if (t < floor) continue;
        const HeatKernel k = heat_kernel(eig, t);
        r.times.push_back(t);
        r.sup_scaled.push_back(k.values.maxCoeff() * std::pow(t, d / (2.0 * eig.s)));
        if (boundary_form) {
            r.boundary_scaled.push_back(k.values.cwiseQuotient(weight).maxCoeff() *
                                        std::pow(t, d / (2.0 * eig.s - eig.gamma)));
        }
    }
    auto early_slope = [&](const std::vector<double>& v) {
        const std::size_t m = std::min<std::size_t>(3, v.size());
        std::vector<double> x, y;
        for (std::size_t i = 0; i < m; ++i) {
            x.push_back(std::log(r.times[i]));
            y.push_back(std::log(v[i]));
        }
        return fit_line(x, y).slope;
    };
    if (r.times.size() < 2) return r;
    // growth as t -> 0 shows up as a negative slope
    r.sup_growth_slope = early_slope(r.sup_scaled);
    r.pass = r.sup_growth_slope >= -0.25;
    if (boundary_form) {
        r.boundary_growth_slope = early_slope(r.boundary_scaled);
        // below d = 2s the sharp kernel shape grows like t^{-(d+2 gamma)/2s}, faster than the weighted rate
        r.boundary_informational = d <= 2.0 * eig.s;
        if (!r.boundary_informational) r.pass = r.pass && r.boundary_growth_slope >= -0.25;
    }
    return r;
}

std::vector<double> asymptotic_times(const EigenSystem& eig, int count) {
    const double gap = eig.lambdas(1) - eig.lambdas(0);
    const double start = std::log(1e4) / gap;
    std::vector<double> times;
    for (int k = 0; k < count; ++k) times.push_back(start + k / eig.lambda1());
    return times;
}

DecayReport weighted_decay_check(const EigenSystem& eig, const Field& u0, const std::vector<double>& times,
                                 double tolerance) {
    const Grid& grid = *eig.grid;
    const Field dg = grid.delta().array().pow(eig.gamma).matrix();
    DecayReport r;
    r.times = times;
    r.lambda1 = eig.lambda1();
    r.tolerance = tolerance;
    std::vector<double> logs;
    for (double t : times) {
        const double v = grid.l1(semigroup_apply(eig, u0, t), dg);
        r.values.push_back(v);
        logs.push_back(std::log(v));
    }
    r.fitted_rate = -fit_line(times, logs).slope;
    r.relative_error = std::abs(r.fitted_rate - r.lambda1) / r.lambda1;
    r.pass = r.relative_error <= tolerance;
    return r;
}

LargeTimeReport large_time_check(const EigenSystem& eig, double epsilon) {
    LargeTimeReport r;
    r.epsilon = epsilon;
    const double gap = eig.lambdas(1) - eig.lambdas(0);
    const Field p1 = eig.phis.col(0);

    // sum_{k>=2} exp(-(lambda_k - lambda_1) t0) sup (phi_k / phi_1)^2
    const double t0 = 1.0 / eig.lambdas(1);
    double c = 0.0;
    for (Eigen::Index k = 1; k < eig.modes; ++k) {
        const double a = eig.phis.col(k).cwiseQuotient(p1).cwiseAbs().maxCoeff();
        c += std::exp(-(eig.lambdas(k) - eig.lambda1()) * t0) * a * a;
    }
    r.gap_time = t0 + std::max(0.0, std::log(c / epsilon)) / gap;

    const double step = 0.25 / gap;
    double t = step;
    while (envelope_error(eig, t) > epsilon && t < 1e3 * step) t += step;
    r.fitted_time = t;

    const Eigen::MatrixXd traces = mode_traces(eig);
    const Eigen::MatrixXd dk = dgamma_heat_kernel_series(eig, r.fitted_time);
    const double e = std::exp(-eig.lambda1() * r.fitted_time);
    double worst = 0.0;
    for (Eigen::Index b = 0; b < dk.rows(); ++b) {
        for (Eigen::Index y = 0; y < dk.cols(); ++y) {
            worst = std::max(worst, std::abs(dk(b, y) / (e * traces(b, 0) * p1(y)) - 1.0));
        }
    }
    r.trace_ratio_error = worst;
    r.pass = envelope_error(eig, r.gap_time) <= epsilon && envelope_error(eig, 2.0 * r.gap_time) <= epsilon &&
             envelope_error(eig, 2.0 * r.fitted_time) <= epsilon;
    return r;
}

Field resolvent_apply(const EigenSystem& eig, const Field& f, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("resolvent parameter must be positive");
    const Eigen::VectorXd c = eig.coefficients(f);
    return eig.synthesize((c.array() / (lambda + eig.active_lambdas().array())).matrix());
}

ResolventReport resolvent_check(const EigenSystem& eig, double lambda, int samples, std::uint64_t seed,
                                double tolerance) {
    const Grid& grid = *eig.grid;
    const Field p1 = eig.phis.col(0);
    std::mt19937_64 rng(seed);
    ResolventReport r;
    r.lambda = lambda;
    r.bound = 1.0 / (lambda + eig.lambda1());
    r.tolerance = tolerance;
    r.domination_excess = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
        const Field f = random_field(rng, grid.size(), -1.0, 1.0);
        const Field j = resolvent_apply(eig, f, lambda);
        r.ratio = std::max(r.ratio, grid.l1(j, p1) / grid.l1(f, p1));
        r.domination_excess = std::max(r.domination_excess, (j.cwiseAbs() - green_apply(eig, f.cwiseAbs())).maxCoeff());
    }
    r.pass = r.ratio <= r.bound + tolerance && r.domination_excess <= tolerance;
    return r;
}

double kernel_trace_identity_residual(const EigenSystem& eig, double t) {
    const HeatKernel k = heat_kernel(eig, t);
    const Field& w = eig.grid->weights();
    const double lhs = (-2.0 * eig.active_lambdas().array() * t).exp().sum();
    const double rhs = (w.asDiagonal() * k.values.cwiseAbs2() * w).sum();
    return std::abs(lhs - rhs) / lhs;
}

double semigroup_symmetry_residual(const EigenSystem& eig, const Field& f, const Field& g, double t) {
    const Grid& grid = *eig.grid;
    const double a = grid.inner(semigroup_apply(eig, f, t), g);
    const double b = grid.inner(f, semigroup_apply(eig, g, t));
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace fracheat
