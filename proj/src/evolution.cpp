#include "fracheat/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fracheat {

namespace {

struct Segment {
    std::size_t index;
    double theta;
};

Segment locate(const std::vector<double>& times, double t) {
    if (t < times.front() - 1e-12 || t > times.back() + 1e-12) {
        throw std::invalid_argument("time " + std::to_string(t) + " lies outside the data range [" +
                                    std::to_string(times.front()) + ", " + std::to_string(times.back()) + "]");
    }
    if (times.size() == 1) return {0, 0.0};
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    k = std::min(k, times.size() - 2);
    const double theta = std::clamp((t - times[k]) / (times[k + 1] - times[k]), 0.0, 1.0);
    return {k, theta};
}

template <typename V>
V interpolate(const std::vector<double>& times, const std::vector<V>& values, double t) {
    const Segment seg = locate(times, t);
    if (values.size() == 1) return values.front();
    return (1.0 - seg.theta) * values[seg.index] + seg.theta * values[seg.index + 1];
}

// (1 - exp(-z)(1+z)) / z^2
double ramp_weight(double z) {
    if (std::abs(z) < 0.1) {
        double term = 1.0;   // (-z)^k / k!
        double sum = 0.0;
        for (int k = 0; k < 16; ++k) {
            sum += term / (k + 2);
            term *= -z / (k + 1);
        }
        return sum;
    }
    return (1.0 - std::exp(-z) * (1.0 + z)) / (z * z);
}

// (1 - exp(-z)) / z
double mean_weight(double z) {
    if (z == 0.0) return 1.0;
    return -std::expm1(-z) / z;
}

enum class Parts { All, Interior, Boundary };

// Marches the modal coefficients through the data nodes and the requested times.
std::vector<Eigen::VectorXd> march(const EigenSystem& eig, const TimeDependentData& data,
                                   const std::vector<double>& out_times, Parts parts) {
    const Grid& grid = *eig.grid;
    data.validate(grid);
    for (std::size_t k = 1; k < out_times.size(); ++k) {
        if (out_times[k] < out_times[k - 1]) throw std::invalid_argument("output times must be nondecreasing");
    }
    for (double t : out_times) locate(data.times, t);

    const Eigen::ArrayXd lam = eig.active_lambdas().array();
    const bool interior = parts != Parts::Boundary && data.has_forcing();
    const bool boundary = parts != Parts::Interior && data.has_boundary();
    Eigen::MatrixXd traces;
    if (boundary) traces = mode_traces(eig);
    const Eigen::VectorXd bw = grid.boundary_weights();

    auto forcing = [&](double t) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(eig.modes);
        if (interior) c += eig.coefficients(data.forcing_at(t));
        if (boundary) c += traces.transpose() * (bw.array() * data.boundary_at(t).array()).matrix();
        return c;
    };

    Eigen::VectorXd c = Eigen::VectorXd::Zero(eig.modes);
    if (parts == Parts::All && data.u0.size() > 0) c = eig.coefficients(data.u0);

    std::vector<double> nodes(data.times.begin(), data.times.end());
    nodes.insert(nodes.end(), out_times.begin(), out_times.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end(), [](double a, double b) { return std::abs(a - b) < 1e-14; }),
                nodes.end());

    std::vector<Eigen::VectorXd> out;
    out.reserve(out_times.size());
    std::size_t next = 0;
    double t = 0.0;
    Eigen::VectorXd f_left = (interior || boundary) ? forcing(0.0) : Eigen::VectorXd::Zero(eig.modes);
    auto emit = [&]() {
        while (next < out_times.size() && std::abs(out_times[next] - t) < 1e-14) {
            out.push_back(c);
            ++next;
        }
    };
    emit();
    for (double node : nodes) {
        if (next >= out_times.size()) break;
        if (node <= t + 1e-14) continue;
        const double dt = node - t;
        const Eigen::VectorXd f_right =
            (interior || boundary) ? forcing(node) : Eigen::VectorXd::Zero(eig.modes);
        for (Eigen::Index m = 0; m < eig.modes; ++m) {
            const StepWeights w = exact_step_weights(lam(m), dt);
            c(m) = w.decay * c(m) + w.left * f_left(m) + w.right * f_right(m);
        }
        f_left = f_right;
        t = node;
        emit();
    }
    return out;
}

bool traces_flagged(const EigenSystem& eig, const TimeDependentData& data) {
    if (!data.has_boundary()) return false;
    return !martin_kernel(eig).all_converged();
}

}  // namespace

TimeDependentData TimeDependentData::stationary(const Field& u0, const Field& f, const Eigen::VectorXd& h,
                                                double t_end) {
    TimeDependentData d;
    d.times = {0.0, t_end};
    d.u0 = u0;
    if (f.size() > 0) d.f = {f, f};
    if (h.size() > 0) d.h = {h, h};
    return d;
}

Field TimeDependentData::forcing_at(double t) const { return interpolate(times, f, t); }

Eigen::VectorXd TimeDependentData::boundary_at(double t) const { return interpolate(times, h, t); }

void TimeDependentData::validate(const Grid& grid) const {
    if (times.empty()) throw std::invalid_argument("data needs at least one time node");
    if (std::abs(times.front()) > 1e-14) throw std::invalid_argument("data time grid must start at 0");
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) throw std::invalid_argument("data times must be strictly increasing");
    }
    if (u0.size() != 0 && u0.size() != grid.size()) throw std::invalid_argument("u0 has the wrong length");
    if (!f.empty()) {
        if (f.size() != times.size()) throw std::invalid_argument("forcing needs one field per time node");
        for (const auto& v : f) {
            if (v.size() != grid.size()) throw std::invalid_argument("forcing field has the wrong length");
        }
    }
    if (!h.empty()) {
        if (h.size() != times.size()) throw std::invalid_argument("boundary data needs one trace per time node");
        for (const auto& v : h) {
            if (v.size() != static_cast<Eigen::Index>(grid.boundary().size())) {
                throw std::invalid_argument("boundary data has the wrong length");
            }
        }
    }
}

StepWeights exact_step_weights(double lambda, double dt) {
    const double z = lambda * dt;
    const double g = ramp_weight(z);
    return StepWeights{std::exp(-z), dt * g, dt * (mean_weight(z) - g)};
}

Field duhamel(const EigenSystem& eig, const TimeDependentData& data, double t) {
    return eig.synthesize(march(eig, data, {t}, Parts::Interior).front());
}

Field boundary_duhamel(const EigenSystem& eig, const TimeDependentData& data, double t, bool* flagged) {
    if (flagged != nullptr) *flagged = traces_flagged(eig, data);
    return eig.synthesize(march(eig, data, {t}, Parts::Boundary).front());
}

Trajectory solve_h(const EigenSystem& eig, const TimeDependentData& data, const std::vector<double>& times) {
    Trajectory traj;
    traj.kind = eig.kind;
    traj.s = eig.s;
    traj.gamma = eig.gamma;
    traj.modes = eig.modes;
    traj.times = times;
    traj.trace_flagged = traces_flagged(eig, data);
    for (const auto& c : march(eig, data, times, Parts::All)) traj.fields.push_back(eig.synthesize(c));
    return traj;
}

std::vector<double> uniform_times(double t_end, int steps) {
    std::vector<double> t(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) t[static_cast<std::size_t>(k)] = t_end * k / steps;
    t.back() = t_end;
    return t;
}

TimeDependentData concentration_sequence(const Grid& grid, double gamma, const TimeDependentData& boundary_data,
                                         int j) {
    if (j < 1) throw std::invalid_argument("concentration index must be positive");
    if (!boundary_data.has_boundary()) throw std::invalid_argument("concentration needs boundary data");
    const double lo = 1.0 / j;
    const double hi = 2.0 / j;
    std::vector<bool> band(static_cast<std::size_t>(grid.size()), false);
    std::vector<std::size_t> nearest(static_cast<std::size_t>(grid.size()), 0);
    double measure = 0.0;
    std::vector<int> per_face(4, 0);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double d = grid.delta()(i);
        if (d < lo - 1e-12 || d > hi + 1e-12) continue;
        band[static_cast<std::size_t>(i)] = true;
        measure += grid.weights()(i);
        const std::size_t b = grid.nearest_boundary_node(i);
        nearest[static_cast<std::size_t>(i)] = b;
        ++per_face[static_cast<std::size_t>(2 * grid.boundary()[b].axis + grid.boundary()[b].side)];
    }
    const int faces = grid.dim() == 1 ? 2 : 4;
    for (int k = 0; k < faces; ++k) {
        if (per_face[static_cast<std::size_t>(k)] == 0) {
            throw std::invalid_argument("band {1/j <= delta <= 2/j} holds no grid node next to every face for j = " +
                                        std::to_string(j));
        }
    }

    TimeDependentData out;
    out.times = boundary_data.times;
    out.u0 = Field::Zero(grid.size());
    const double scale = grid.boundary_measure() / measure;
    for (const auto& h : boundary_data.h) {
        Field f = Field::Zero(grid.size());
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            if (!band[static_cast<std::size_t>(i)]) continue;
            f(i) = scale * std::pow(grid.delta()(i), -gamma) * h(static_cast<Eigen::Index>(nearest[static_cast<std::size_t>(i)]));
        }
        out.f.push_back(std::move(f));
    }
    return out;
}

EllipticLimitReport elliptic_limit_check(const EigenSystem& eig, const TimeDependentData& data,
                                         const std::vector<double>& times, double tolerance) {
    const Grid& grid = *eig.grid;
    data.validate(grid);
    const Field f = data.has_forcing() ? data.f.front() : Field::Zero(grid.size());
    const Eigen::VectorXd h =
        data.has_boundary() ? data.h.front() : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.boundary().size()));
    for (std::size_t k = 1; k < data.times.size(); ++k) {
        if ((data.has_forcing() && (data.f[k] - f).cwiseAbs().maxCoeff() > 0.0) ||
            (data.has_boundary() && (data.h[k] - h).cwiseAbs().maxCoeff() > 0.0)) {
            throw std::invalid_argument("elliptic limit needs time-independent data");
        }
    }
    TimeDependentData extended = data;
    const double t_end = *std::max_element(times.begin(), times.end());
    if (t_end > data.end_time()) extended = TimeDependentData::stationary(data.u0, f, h, t_end);

    const Field target = green_apply(eig, f) + martin_apply(eig, h);
    const Field dg = grid.delta().array().pow(eig.gamma).matrix();
    const Trajectory traj = solve_h(eig, extended, times);

    EllipticLimitReport r;
    r.times = times;
    r.lambda1 = eig.lambda1();
    r.tolerance = tolerance;
    std::vector<double> logs;
    const double scale = std::max(grid.l1(target, dg), 1e-300);
    r.stationary = true;
    for (const auto& u : traj.fields) {
        const double e = grid.l1(u - target, dg);
        r.errors.push_back(e);
        logs.push_back(std::log(e));
        if (e > 1e-6 * scale) r.stationary = false;
    }
    r.fitted_rate = -fit_line(times, logs).slope;
    r.relative_error = std::abs(r.fitted_rate - r.lambda1) / r.lambda1;
    r.pass = r.stationary || r.relative_error <= tolerance;
    return r;
}

double space_time_integral(const Trajectory& traj, const Grid& grid, double gamma, double t0, double t1,
                           const std::vector<bool>& mask) {
    const Field dg = grid.delta().array().pow(gamma).matrix();
    auto slice = [&](std::size_t k) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            if (mask[static_cast<std::size_t>(i)]) acc += grid.weights()(i) * std::abs(traj.fields[k](i)) * dg(i);
        }
        return acc;
    };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
        const double a = std::max(traj.times[k], t0);
        const double b = std::min(traj.times[k + 1], t1);
        if (b <= a) continue;
        const double span = traj.times[k + 1] - traj.times[k];
        const double fa = slice(k);
        const double fb = slice(k + 1);
        auto at = [&](double t) { return fa + (fb - fa) * (t - traj.times[k]) / span; };
        total += 0.5 * (b - a) * (at(a) + at(b));
    }
    return total;
}

IntegrabilityReport uniform_integrability_probe(const Trajectory& traj, const Grid& grid, double gamma, double t0,
                                                double window, int levels, double tolerance) {
    if (t0 < traj.times.front() || t0 + window > traj.times.back() + 1e-12) {
        throw std::invalid_argument("probe window must lie inside the trajectory time range");
    }
    IntegrabilityReport r;
    r.tolerance = tolerance;
    const std::vector<bool> all(static_cast<std::size_t>(grid.size()), true);
    std::vector<double> lx, ly;
    double h = window;
    for (int k = 0; k < levels; ++k, h /= 2.0) {
        const double v = space_time_integral(traj, grid, gamma, t0, t0 + h, all);
        r.windows.push_back(h);
        r.window_integrals.push_back(v);
        if (v > 0.0) {
            lx.push_back(std::log(h));
            ly.push_back(std::log(v));
        }
    }
    r.window_exponent = fit_line(lx, ly).slope;

    lx.clear();
    ly.clear();
    double width = 0.5;
    for (int k = 0; k < levels; ++k, width /= 2.0) {
        std::vector<bool> mask(static_cast<std::size_t>(grid.size()), false);
        double measure = 0.0;
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            if (grid.delta()(i) <= width) {
                mask[static_cast<std::size_t>(i)] = true;
                measure += grid.weights()(i);
            }
        }
        if (measure == 0.0) break;
        const double v = space_time_integral(traj, grid, gamma, t0, t0 + window, mask);
        r.set_measures.push_back(measure);
        r.set_integrals.push_back(v);
        if (v > 0.0) {
            lx.push_back(std::log(measure));
            ly.push_back(std::log(v));
        }
    }
    r.set_exponent = fit_line(lx, ly).slope;
    r.fitted_q = r.set_exponent > 0.0 ? 1.0 / (2.0 * r.set_exponent) : std::numeric_limits<double>::infinity();
    r.pass = r.window_exponent >= 0.5 - tolerance;
    return r;
}

std::vector<double> energy_margins(const EigenSystem& eig, const TimeDependentData& data, const Trajectory& traj) {
    const Grid& grid = *eig.grid;
    const double u0_sq = data.u0.size() > 0 ? grid.inner(data.u0, data.u0) : 0.0;
    std::vector<double> margins;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double t = traj.times[k];
        double forcing = 0.0;
        if (data.has_forcing()) {
            // exact integral of ||f||^2 for f linear on each segment
            for (std::size_t m = 0; m + 1 < data.times.size(); ++m) {
                const double a = data.times[m];
                const double b = std::min(data.times[m + 1], t);
                if (b <= a) break;
                const Field fa = data.f[m];
                const Field fb = data.forcing_at(b);
                forcing += (b - a) * (grid.inner(fa, fa) + grid.inner(fa, fb) + grid.inner(fb, fb)) / 3.0;
            }
        }
        const Field& u = traj.fields[k];
        margins.push_back(grid.inner(u, u) - (std::exp(-eig.lambda1() * t) * u0_sq + forcing));
    }
    return margins;
}

}  // namespace fracheat
