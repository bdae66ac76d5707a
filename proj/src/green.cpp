#include "fracheat/green.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fracheat {

namespace {

constexpr std::array<double, 3> kQuadratic{15.0 / 8.0, -5.0 / 4.0, 3.0 / 8.0};
constexpr std::array<double, 2> kLinear{1.5, -0.5};

bool accept(double quad, double lin, double tolerance, double floor) {
    const double gap = std::abs(quad - lin);
    return std::isfinite(quad) && std::isfinite(lin) &&
           (gap <= tolerance * std::max(std::abs(quad), std::abs(lin)) || gap <= floor);
}

GreenKernelMatrix wrap_kernel(const GridPtr& grid, double s, double gamma, Eigen::MatrixXd values) {
    GreenKernelMatrix k;
    k.grid = grid;
    k.s = s;
    k.gamma = gamma;
    k.regime = kernel_regime(grid->dim(), s);
    k.values = std::move(values);
    const double scale = k.values.cwiseAbs().maxCoeff();
    k.symmetric = (k.values - k.values.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale;
    const Eigen::VectorXd sqrt_w = grid->weights().cwiseSqrt();
    const Eigen::MatrixXd sym =
        sqrt_w.asDiagonal() * (0.5 * (k.values + k.values.transpose())) * sqrt_w.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    k.min_eigenvalue = solver.eigenvalues()(0);
    k.positive_definite = k.symmetric && k.min_eigenvalue > 0.0;
    return k;
}

}  // namespace

bool BoundaryTrace::all_converged() const {
    return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
}

long BoundaryTrace::failures() const {
    return static_cast<long>(std::count(converged.begin(), converged.end(), false));
}

BoundaryTrace dgamma_trace(const Field& u, double gamma, const Grid& grid, double tolerance) {
    const auto& nodes = grid.boundary();
    BoundaryTrace trace;
    trace.values.resize(static_cast<Eigen::Index>(nodes.size()));
    trace.converged.resize(nodes.size());

    std::vector<std::array<double, 3>> samples(nodes.size());
    double scale = 0.0;
    for (std::size_t b = 0; b < nodes.size(); ++b) {
        for (int k = 0; k < 3; ++k) {
            samples[b][k] = u(nodes[b].stencil[k]) / std::pow(nodes[b].normal_distance[k], gamma);
            scale = std::max(scale, std::abs(samples[b][k]));
        }
    }
    const double floor = 1e-13 * scale;
    for (std::size_t b = 0; b < nodes.size(); ++b) {
        const auto& g = samples[b];
        const double quad = kQuadratic[0] * g[0] + kQuadratic[1] * g[1] + kQuadratic[2] * g[2];
        const double lin = kLinear[0] * g[0] + kLinear[1] * g[1];
        trace.values(static_cast<Eigen::Index>(b)) = quad;
        trace.converged[b] = accept(quad, lin, tolerance, floor);
    }
    return trace;
}

Eigen::MatrixXd trace_operator(const Grid& grid, double gamma) {
    const auto& nodes = grid.boundary();
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nodes.size()), grid.size());
    for (std::size_t b = 0; b < nodes.size(); ++b) {
        for (int k = 0; k < 3; ++k) {
            t(static_cast<Eigen::Index>(b), nodes[b].stencil[k]) +=
                kQuadratic[k] / std::pow(nodes[b].normal_distance[k], gamma);
        }
    }
    return t;
}

Eigen::MatrixXd mode_traces(const EigenSystem& eig) {
    return trace_operator(*eig.grid, eig.gamma) * eig.active_phis();
}

Field green_apply(const EigenSystem& eig, const Field& f) {
    const Eigen::VectorXd c = eig.coefficients(f);
    return eig.synthesize((c.array() / eig.active_lambdas().array()).matrix());
}

GreenKernelMatrix green_kernel(const EigenSystem& eig) {
    const auto p = eig.active_phis();
    Eigen::MatrixXd g = p * eig.active_lambdas().cwiseInverse().asDiagonal() * p.transpose();
    g = 0.5 * (g + g.transpose());
    return wrap_kernel(eig.grid, eig.s, eig.gamma, std::move(g));
}

GreenKernelMatrix green_kernel_direct(const DiscreteOperator& op) {
    const Eigen::Index n = op.matrix.rows();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(op.matrix);
    Eigen::MatrixXd g = lu.solve(Eigen::MatrixXd::Identity(n, n)) * op.grid->weights().cwiseInverse().asDiagonal();
    return wrap_kernel(op.grid, op.s, op.gamma, std::move(g));
}

RatioReport h1_check(const GreenKernelMatrix& kernel, double spread_limit) {
    const Grid& grid = *kernel.grid;
    RatioReport report;
    report.spread_limit = spread_limit;
    if (!(grid.dim() > 2.0 * kernel.s)) {
        report.skipped = true;
        report.note = "skipped: the two-sided Green shape is only defined here for d > 2s";
        return report;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const double cutoff = 2.0 * grid.spacing();
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        for (Eigen::Index j = 0; j < grid.size(); ++j) {
            const double dist = grid.distance(i, j);
            if (dist <= cutoff) continue;
            const double shape = green_comparator(grid.dim(), kernel.s, kernel.gamma, dist, grid.delta()(i),
                                                  grid.delta()(j));
            const double r = kernel.values(i, j) / shape;
            lo = std::min(lo, r);
            hi = std::max(hi, r);
            ++report.pairs;
        }
    }
    report.min_ratio = lo;
    report.max_ratio = hi;
    report.spread = hi / lo;
    report.pass = report.pairs > 0 && std::isfinite(lo) && std::isfinite(hi) && lo > 0.0 &&
                  report.spread <= spread_limit;
    return report;
}

bool MartinKernel::all_converged() const {
    return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
}

MartinKernel martin_kernel(const EigenSystem& eig) {
    const Grid& grid = *eig.grid;
    const GreenKernelMatrix g = green_kernel(eig);
    const Eigen::MatrixXd t = trace_operator(grid, eig.gamma);
    MartinKernel m;
    m.grid = eig.grid;
    m.gamma = eig.gamma;
    m.values = (t * g.values).transpose();

    const auto& nodes = grid.boundary();
    m.converged.assign(nodes.size(), true);
    const double near = 3.0 * grid.spacing();
    const double floor = 1e-13 * g.values.cwiseAbs().maxCoeff();
    for (std::size_t b = 0; b < nodes.size(); ++b) {
        for (Eigen::Index x = 0; x < grid.size(); ++x) {
            if (grid.distance_to_boundary_node(x, b) <= near) continue;
            std::array<double, 3> s{};
            for (int k = 0; k < 3; ++k) {
                s[k] = g.values(nodes[b].stencil[k], x) / std::pow(nodes[b].normal_distance[k], eig.gamma);
            }
            const double quad = kQuadratic[0] * s[0] + kQuadratic[1] * s[1] + kQuadratic[2] * s[2];
            const double lin = kLinear[0] * s[0] + kLinear[1] * s[1];
            if (!accept(quad, lin, kTraceTolerance, floor)) {
                m.converged[b] = false;
                ++m.far_field_failures;
            }
        }
    }
    return m;
}

Field martin_apply(const MartinKernel& martin, const Eigen::VectorXd& h) {
    if (h.size() != martin.values.cols()) throw std::invalid_argument("boundary data has the wrong length");
    return martin.values * (martin.grid->boundary_weights().array() * h.array()).matrix();
}

Field martin_apply(const EigenSystem& eig, const Eigen::VectorXd& h) {
    const Eigen::MatrixXd traces = mode_traces(eig);
    if (h.size() != traces.rows()) throw std::invalid_argument("boundary data has the wrong length");
    const Eigen::VectorXd b = traces.transpose() * (eig.grid->boundary_weights().array() * h.array()).matrix();
    return eig.synthesize((b.array() / eig.active_lambdas().array()).matrix());
}

Field u_star(const EigenSystem& eig) {
    return martin_apply(eig, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(eig.grid->boundary().size())));
}

SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    SlopeFit fit;
    fit.points = static_cast<int>(x.size());
    if (x.size() < 2 || x.size() != y.size()) {
        fit.slope = fit.intercept = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - fit.intercept - fit.slope * x[i];
        fit.rss += r * r;
    }
    return fit;
}

Band default_band(const Grid& grid) {
    const double lower = 3.0 * grid.spacing();
    return Band{lower, std::max(0.1, 2.0 * lower)};
}

SlopeFit boundary_slope(const Grid& grid, const Field& u, Band band) {
    std::vector<double> x, y;
    bool positive = true;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double d = grid.delta()(i);
        if (d < band.lower - 1e-12 || d > band.upper + 1e-12) continue;
        if (!(u(i) > 0.0)) positive = false;
        x.push_back(std::log(d));
        y.push_back(std::log(u(i)));
    }
    SlopeFit fit = fit_line(x, y);
    if (!positive) fit.slope = std::numeric_limits<double>::quiet_NaN();
    return fit;
}

SlopeFit boundary_slope(const Grid& grid, const Field& u) { return boundary_slope(grid, u, default_band(grid)); }

RegimeReport boundary_behavior_check(const EigenSystem& eig, double beta, double tolerance) {
    if (!(beta > -eig.gamma - 1.0)) {
        throw std::invalid_argument("boundary exponent beta must exceed -gamma-1 for delta^beta delta^gamma to be integrable");
    }
    const Grid& grid = *eig.grid;
    RegimeReport report;
    report.beta = beta;
    report.tolerance = tolerance;
    const double critical = eig.gamma - 2.0 * eig.s;
    if (std::abs(beta - critical) <= 1e-12) {
        report.regime = BoundaryRegime::Critical;
        report.expected_slope = eig.gamma;
    } else if (beta < critical) {
        report.regime = BoundaryRegime::Interior;
        report.expected_slope = beta + 2.0 * eig.s;
    } else {
        report.regime = BoundaryRegime::Saturated;
        report.expected_slope = eig.gamma;
    }

    const Field f = grid.delta().array().pow(beta).matrix();
    const Field u = green_apply(eig, f);
    const Band band = default_band(grid);
    report.fit = boundary_slope(grid, u, band);

    // delta^gamma (A |ln delta| + B): linear in u / delta^gamma, residuals measured in log u
    std::vector<double> logs, ratios, log_u, log_dg;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double d = grid.delta()(i);
        if (d < band.lower - 1e-12 || d > band.upper + 1e-12 || !(u(i) > 0.0)) continue;
        logs.push_back(std::abs(std::log(d)));
        ratios.push_back(u(i) / std::pow(d, eig.gamma));
        log_u.push_back(std::log(u(i)));
        log_dg.push_back(eig.gamma * std::log(d));
    }
    const SlopeFit lin = fit_line(logs, ratios);
    double rss_log = 0.0;
    bool admissible = lin.slope > 0.0;
    for (std::size_t k = 0; k < logs.size(); ++k) {
        const double model = lin.slope * logs[k] + lin.intercept;
        if (!(model > 0.0)) {
            admissible = false;
            break;
        }
        const double r = log_u[k] - log_dg[k] - std::log(model);
        rss_log += r * r;
    }
    const double n = static_cast<double>(logs.size());
    const double tiny = 1e-300;
    // both models carry two parameters
    report.aic_power = n * std::log(std::max(report.fit.rss, tiny) / n) + 4.0;
    report.aic_log = admissible ? n * std::log(std::max(rss_log, tiny) / n) + 4.0
                                : std::numeric_limits<double>::infinity();
    report.log_preferred = admissible && report.aic_log < report.aic_power;

    if (report.regime == BoundaryRegime::Critical) {
        report.pass = report.log_preferred;
    } else {
        report.pass = std::abs(report.fit.slope - report.expected_slope) <= tolerance;
    }
    return report;
}

IdentityResidual integration_by_parts_residual(const EigenSystem& eig, const Field& v, const Field& lv,
                                               const Eigen::VectorXd& ev, const Field& psi) {
    const Grid& grid = *eig.grid;
    const Field phi = green_apply(eig, psi);
    const Field l_phi = eig.synthesize(eig.coefficients(psi));
    const Eigen::VectorXd d_phi = trace_operator(grid, eig.gamma) * phi;

    IdentityResidual r;
    r.lhs = grid.inner(v, l_phi);
    const double bulk = grid.inner(lv, phi);
    const double boundary = (grid.boundary_weights().array() * ev.array() * d_phi.array()).sum();
    r.rhs = bulk + boundary;
    r.residual = std::abs(r.lhs - r.rhs);
    const double scale = std::max({std::abs(r.lhs), std::abs(bulk) + std::abs(boundary), 1e-300});
    r.relative = r.residual / scale;
    return r;
}

double green_symmetry_residual(const EigenSystem& eig, const Field& f, const Field& g) {
    const Grid& grid = *eig.grid;
    const double a = grid.inner(green_apply(eig, f), g);
    const double b = grid.inner(f, green_apply(eig, g));
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

double lower_hopf_constant(const EigenSystem& eig, const Field& f) {
    const Grid& grid = *eig.grid;
    const Field dg = grid.delta().array().pow(eig.gamma).matrix();
    const double mass = grid.inner(f, dg);
    const Field u = green_apply(eig, f);
    return (u.array() / (dg.array() * mass)).minCoeff();
}

}  // namespace fracheat
