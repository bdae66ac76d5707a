#include "fracheat/weakdual.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace fracheat {

namespace {

void require_matching_grid(const Trajectory& traj, const TestFunction& phi) {
    if (phi.times.size() != traj.times.size()) throw std::invalid_argument("test function and trajectory use different time grids");
    const std::size_t k = traj.times.size();
    if (k < 2) throw std::invalid_argument("trajectory needs at least two times");
    const double t_end = traj.times.back();
    for (std::size_t i = 0; i < k; ++i) {
        if (std::abs(phi.times[i] - traj.times[i]) > 1e-12) {
            throw std::invalid_argument("test function and trajectory use different time grids");
        }
        // T - t_i must be a node as well
        if (std::abs(traj.times[k - 1 - i] - (t_end - traj.times[i])) > 1e-9) {
            throw std::invalid_argument("trajectory time grid must be symmetric about T/2");
        }
    }
    if (phi.start.size() != k - 1 || phi.end.size() != k - 1) throw std::invalid_argument("test function segment count mismatch");
}

double segment_trapezoid(const std::vector<double>& times, const std::vector<double>& left,
                         const std::vector<double>& right) {
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) total += 0.5 * (times[k + 1] - times[k]) * (left[k] + right[k]);
    return total;
}

double trapezoid(const std::vector<double>& times, const std::vector<double>& values) {
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) total += 0.5 * (times[k + 1] - times[k]) * (values[k] + values[k + 1]);
    return total;
}

struct Sides {
    double lhs;
    double magnitude;
};

// int_0^T <u(t), phi(T-t)> dt with one-sided values of phi
Sides tested_solution(const Grid& grid, const Trajectory& traj, const TestFunction& phi) {
    const std::size_t k = traj.times.size();
    std::vector<double> left(k - 1), right(k - 1), abs_left(k - 1), abs_right(k - 1);
    for (std::size_t i = 0; i + 1 < k; ++i) {
        // t in [t_i, t_{i+1}] maps to phi segment k-2-i, traversed backwards
        const std::size_t j = k - 2 - i;
        left[i] = grid.inner(traj.fields[i], phi.end[j]);
        right[i] = grid.inner(traj.fields[i + 1], phi.start[j]);
        abs_left[i] = grid.inner(traj.fields[i].cwiseAbs(), phi.end[j].cwiseAbs());
        abs_right[i] = grid.inner(traj.fields[i + 1].cwiseAbs(), phi.start[j].cwiseAbs());
    }
    return {segment_trapezoid(traj.times, left, right), segment_trapezoid(traj.times, abs_left, abs_right)};
}

// rhs given the response coefficients at tau = t_0 .. t_K
double tested_data(const EigenSystem& eig, const Trajectory& traj, const TimeDependentData& data,
                   const std::vector<Eigen::VectorXd>& response) {
    const Grid& grid = *eig.grid;
    const std::size_t k = traj.times.size();
    const Eigen::MatrixXd traces = data.has_boundary() ? mode_traces(eig) : Eigen::MatrixXd();
    const Eigen::VectorXd bw = grid.boundary_weights();
    double rhs = 0.0;
    if (data.u0.size() > 0) rhs += eig.coefficients(data.u0).dot(response[k - 1]);
    std::vector<double> integrand(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const Eigen::VectorXd& c = response[k - 1 - i];   // H[0,phi,0](T - t_i)
        const double t = traj.times[i];
        double v = 0.0;
        if (data.has_forcing()) v += eig.coefficients(data.forcing_at(t)).dot(c);
        if (data.has_boundary()) v += (bw.array() * data.boundary_at(t).array()).matrix().dot(traces * c);
        integrand[i] = v;
    }
    return rhs + trapezoid(traj.times, integrand);
}

}  // namespace

TestFunction TestFunction::constant(std::string name, const std::vector<double>& times, const Field& value) {
    TestFunction phi;
    phi.name = std::move(name);
    phi.times = times;
    phi.start.assign(times.size() - 1, value);
    phi.end.assign(times.size() - 1, value);
    return phi;
}

TestFunction TestFunction::nodal(std::string name, const std::vector<double>& times, const std::vector<Field>& values) {
    if (values.size() != times.size()) throw std::invalid_argument("need one value per time node");
    TestFunction phi;
    phi.name = std::move(name);
    phi.times = times;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        phi.start.push_back(values[k]);
        phi.end.push_back(values[k + 1]);
    }
    return phi;
}

std::vector<Eigen::VectorXd> test_response(const EigenSystem& eig, const TestFunction& phi) {
    const Eigen::ArrayXd lam = eig.active_lambdas().array();
    std::vector<Eigen::VectorXd> out;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(eig.modes);
    out.push_back(c);
    for (std::size_t k = 0; k + 1 < phi.times.size(); ++k) {
        const double dt = phi.times[k + 1] - phi.times[k];
        const Eigen::VectorXd a = eig.coefficients(phi.start[k]);
        const Eigen::VectorXd b = eig.coefficients(phi.end[k]);
        for (Eigen::Index m = 0; m < eig.modes; ++m) {
            const StepWeights w = exact_step_weights(lam(m), dt);
            c(m) = w.decay * c(m) + w.left * a(m) + w.right * b(m);
        }
        out.push_back(c);
    }
    return out;
}

WeakDualResidual weak_phi_residual(const EigenSystem& eig, const Trajectory& traj, const TimeDependentData& data,
                                   const TestFunction& phi) {
    require_matching_grid(traj, phi);
    const Grid& grid = *eig.grid;
    WeakDualResidual r;
    r.test = phi.name;
    r.trace_flagged = traj.trace_flagged;
    const Sides sides = tested_solution(grid, traj, phi);
    r.lhs = sides.lhs;
    r.rhs = tested_data(eig, traj, data, test_response(eig, phi));
    r.residual = std::abs(r.lhs - r.rhs);
    r.relative = r.residual / std::max(sides.magnitude, 1e-300);
    return r;
}

std::vector<TestFunction> default_test_bank(const EigenSystem& eig, const std::vector<double>& times,
                                            std::uint64_t seed) {
    const Grid& grid = *eig.grid;
    const Field p1 = eig.phis.col(0);
    const Field dg = grid.delta().array().pow(eig.gamma).matrix();
    std::vector<TestFunction> bank;
    bank.push_back(TestFunction::constant("phi1", times, p1));

    Field pattern(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) pattern(i) = std::sin(3.0 * M_PI * grid.coord(i, 0)) >= 0.0 ? 1.0 : -1.0;
    bank.push_back(TestFunction::constant("sign_phi1", times, pattern.cwiseProduct(p1)));

    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    Field blocks(grid.size());
    std::vector<double> flips(8);
    for (auto& f : flips) f = coin(rng) ? 1.0 : -1.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        blocks(i) = flips[static_cast<std::size_t>(std::min(7.0, std::floor(8.0 * grid.coord(i, 0))))];
    }
    bank.push_back(TestFunction::constant("random_sign_phi1", times, blocks.cwiseProduct(p1)));

    Field chi(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) chi(i) = grid.coord(i, 0) < 0.3 ? 1.0 : 0.0;
    bank.push_back(TestFunction::constant("chi_phi1", times, chi.cwiseProduct(p1)));

    Field bump(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        double r2 = 0.0;
        for (int a = 0; a < grid.dim(); ++a) r2 += std::pow((grid.coord(i, a) - 0.4) / 0.15, 2);
        bump(i) = std::exp(-r2) * dg(i);
    }
    bank.push_back(TestFunction::constant("bump", times, bump));

    std::vector<Field> ramp;
    for (double t : times) ramp.push_back((times.back() - t) * p1);
    bank.push_back(TestFunction::nodal("ramp_phi1", times, ramp));
    return bank;
}

TimeDependentData random_data(const Grid& grid, double t_end, std::uint64_t seed, int coarse_cells) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> centered(-0.5, 0.5);
    std::uniform_real_distribution<double> level(0.5, 1.5);
    const int cells = grid.dim() == 1 ? coarse_cells : coarse_cells * coarse_cells;
    std::vector<double> a(static_cast<std::size_t>(cells)), b(a.size()), c(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        a[k] = unit(rng);
        b[k] = unit(rng);
        c[k] = centered(rng);
    }
    auto cell_of = [&](Eigen::Index i) {
        int idx = 0;
        int stride = 1;
        for (int ax = 0; ax < grid.dim(); ++ax) {
            idx += std::min(coarse_cells - 1, static_cast<int>(grid.coord(i, ax) * coarse_cells)) * stride;
            stride *= coarse_cells;
        }
        return static_cast<std::size_t>(idx);
    };
    Field u0(grid.size()), f0(grid.size()), f1(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const std::size_t k = cell_of(i);
        u0(i) = a[k];
        f0(i) = b[k];
        f1(i) = b[k] + c[k] * t_end;
    }
    const Eigen::Index nb = static_cast<Eigen::Index>(grid.boundary().size());
    Eigen::VectorXd h0(nb), h1(nb);
    for (Eigen::Index k = 0; k < nb; ++k) {
        h0(k) = level(rng);
        h1(k) = level(rng);
    }
    TimeDependentData d;
    d.times = {0.0, t_end};
    d.u0 = u0;
    d.f = {f0, f1};
    d.h = {h0, h1};
    return d;
}

PsiResidual weak_psi_residual(const EigenSystem& eig, const Trajectory& traj, const TimeDependentData& data,
                              const TestFunction& psi) {
    require_matching_grid(traj, psi);
    if (psi.end.back().cwiseAbs().maxCoeff() > 0.0) throw std::invalid_argument("psi must vanish at the final time");
    const Grid& grid = *eig.grid;
    const std::size_t k = psi.times.size();
    const Eigen::ArrayXd lam = eig.active_lambdas().array();

    // -G[psi_t] + psi with psi_t constant on each segment
    auto slope = [&](std::size_t seg) {
        return ((psi.end[seg] - psi.start[seg]) / (psi.times[seg + 1] - psi.times[seg])).eval();
    };
    TestFunction combined;
    combined.name = psi.name;
    combined.times = psi.times;
    for (std::size_t seg = 0; seg + 1 < k; ++seg) {
        const Field g = green_apply(eig, slope(seg));
        combined.start.push_back(psi.start[seg] - g);
        combined.end.push_back(psi.end[seg] - g);
    }

    // G[psi(t)] at nodes, from the left value of each segment (psi continuous)
    std::vector<Eigen::VectorXd> g_psi(k);
    for (std::size_t i = 0; i < k; ++i) {
        const Field& v = i + 1 < k ? psi.start[i] : psi.end[k - 2];
        g_psi[i] = (eig.coefficients(v).array() / lam).matrix();
    }

    PsiResidual out;
    // psi-form: the tested solution against -G[psi_t] + psi at the same time, data tested against G[psi]
    {
        WeakDualResidual r;
        r.test = psi.name;
        r.trace_flagged = traj.trace_flagged;
        std::vector<double> left(k - 1), right(k - 1), abs_left(k - 1), abs_right(k - 1);
        for (std::size_t i = 0; i + 1 < k; ++i) {
            left[i] = grid.inner(traj.fields[i], combined.start[i]);
            right[i] = grid.inner(traj.fields[i + 1], combined.end[i]);
            abs_left[i] = grid.inner(traj.fields[i].cwiseAbs(), combined.start[i].cwiseAbs());
            abs_right[i] = grid.inner(traj.fields[i + 1].cwiseAbs(), combined.end[i].cwiseAbs());
        }
        r.lhs = segment_trapezoid(traj.times, left, right);
        std::vector<Eigen::VectorXd> response(k);
        for (std::size_t i = 0; i < k; ++i) response[k - 1 - i] = g_psi[i];
        r.rhs = tested_data(eig, traj, data, response);
        r.residual = std::abs(r.lhs - r.rhs);
        r.relative = r.residual / std::max(segment_trapezoid(traj.times, abs_left, abs_right), 1e-300);
        out.psi_form = r;
    }

    // phi(t) = combined(T - t): reverse the segments
    TestFunction phi;
    phi.name = psi.name + "_as_phi";
    phi.times = psi.times;
    for (std::size_t seg = 0; seg + 1 < k; ++seg) {
        const std::size_t j = k - 2 - seg;
        phi.start.push_back(combined.end[j]);
        phi.end.push_back(combined.start[j]);
    }
    out.phi_form = weak_phi_residual(eig, traj, data, phi);

    const std::vector<Eigen::VectorXd> response = test_response(eig, phi);
    double worst = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < k; ++i) scale = std::max(scale, g_psi[i].cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < k; ++i) {
        worst = std::max(worst, (response[k - 1 - i] - g_psi[i]).cwiseAbs().maxCoeff());
    }
    out.relation_residual = scale > 0.0 ? worst / scale : worst;
    return out;
}

L1EstimateReport l1_estimate_check(const EigenSystem& eig, const Trajectory& traj, const TimeDependentData& data) {
    const Grid& grid = *eig.grid;
    const Field dg = grid.delta().array().pow(eig.gamma).matrix();
    const Field p1 = eig.phis.col(0);
    const Eigen::VectorXd bw = grid.boundary_weights();
    const Eigen::VectorXd d_p1 = mode_traces(eig).col(0);

    std::vector<double> u_dg, u_p1, f_dg, f_p1, h_abs, h_p1;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        u_dg.push_back(grid.l1(traj.fields[i], dg));
        u_p1.push_back(grid.l1(traj.fields[i], p1));
        if (data.has_forcing()) {
            const Field f = data.forcing_at(t);
            f_dg.push_back(grid.l1(f, dg));
            f_p1.push_back(grid.l1(f, p1));
        } else {
            f_dg.push_back(0.0);
            f_p1.push_back(0.0);
        }
        if (data.has_boundary()) {
            const Eigen::VectorXd h = data.boundary_at(t).cwiseAbs();
            h_abs.push_back(bw.dot(h));
            h_p1.push_back((bw.array() * h.array() * d_p1.array()).sum());
        } else {
            h_abs.push_back(0.0);
            h_p1.push_back(0.0);
        }
    }
    L1EstimateReport r;
    r.solution_norm = trapezoid(traj.times, u_dg);
    const double u0_dg = data.u0.size() > 0 ? grid.l1(data.u0, dg) : 0.0;
    const double u0_p1 = data.u0.size() > 0 ? grid.l1(data.u0, p1) : 0.0;
    r.data_norm = u0_dg + trapezoid(traj.times, f_dg) + trapezoid(traj.times, h_abs);
    r.constant = r.data_norm > 0.0 ? r.solution_norm / r.data_norm : 0.0;
    r.weighted_lhs = trapezoid(traj.times, u_p1);
    r.weighted_rhs = (u0_p1 + trapezoid(traj.times, f_p1) + trapezoid(traj.times, h_p1)) / eig.lambda1();
    r.weighted_holds = r.weighted_lhs <= r.weighted_rhs * (1.0 + 1e-9) + 1e-300;
    return r;
}

}  // namespace fracheat
