#include "support.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace fracheat;
using fracheat::testing::cached_system;
using fracheat::testing::random_field;

namespace {

StepWeights quadrature_weights(double lambda, double dt) {
    using boost::math::quadrature::gauss;
    const double left = gauss<double, 30>::integrate(
        [&](double tau) { return std::exp(-lambda * (dt - tau)) * (1.0 - tau / dt); }, 0.0, dt);
    const double right =
        gauss<double, 30>::integrate([&](double tau) { return std::exp(-lambda * (dt - tau)) * tau / dt; }, 0.0, dt);
    return {std::exp(-lambda * dt), left, right};
}

// Crank-Nicolson on the assembled matrix with forcing linear in time
Field crank_nicolson(const DiscreteOperator& op, const Field& u0, const Field& f0, const Field& f1, double t_end,
                     int steps) {
    const Eigen::Index n = op.matrix.rows();
    const double dt = t_end / steps;
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lhs(id + 0.5 * dt * op.matrix);
    const Eigen::MatrixXd rhs = id - 0.5 * dt * op.matrix;
    Field u = u0;
    for (int k = 0; k < steps; ++k) {
        const double a = k * dt / t_end;
        const double b = (k + 1) * dt / t_end;
        const Field fa = (1.0 - a) * f0 + a * f1;
        const Field fb = (1.0 - b) * f0 + b * f1;
        u = lhs.solve(rhs * u + 0.5 * dt * (fa + fb));
    }
    return u;
}

TimeDependentData ramp(const Field& u0, const Field& f0, const Field& f1, double t_end) {
    TimeDependentData d;
    d.times = {0.0, t_end};
    d.u0 = u0;
    d.f = {f0, f1};
    return d;
}

}  // namespace

TEST(StepWeights, MatchQuadrature) {
    for (double z : {0.0, 1e-8, 1e-3, 0.05, 0.0999, 0.1, 0.1001, 0.5, 3.0, 40.0}) {
        for (double dt : {1e-3, 0.1, 1.0}) {
            const double lambda = z / dt;
            const StepWeights w = exact_step_weights(lambda, dt);
            const StepWeights q = quadrature_weights(lambda, dt);
            EXPECT_NEAR(w.decay, q.decay, 1e-15);
            EXPECT_NEAR(w.left, q.left, 1e-13 * dt) << z;
            EXPECT_NEAR(w.right, q.right, 1e-13 * dt) << z;
        }
    }
}

TEST(StepWeights, ContinuousAcrossSeriesSwitch) {
    const StepWeights below = exact_step_weights(0.1 - 1e-12, 1.0);
    const StepWeights above = exact_step_weights(0.1 + 1e-12, 1.0);
    EXPECT_NEAR(below.left, above.left, 1e-11);
    EXPECT_NEAR(below.right, above.right, 1e-11);
    // a constant source integrates to (1 - e^{-z}) / lambda
    const StepWeights w = exact_step_weights(2.0, 0.3);
    EXPECT_NEAR(w.left + w.right, -std::expm1(-0.6) / 2.0, 1e-15);
}

TEST(Duhamel, ClosedFormsOnGroundState) {
    const EigenSystem& eig = cached_system(OperatorKind::Rfl, 0.25, 128);
    const Field p1 = eig.phis.col(0);
    const double l = eig.lambda1();
    const Field zero = Field::Zero(eig.grid->size());
    for (double t : {0.1, 1.0, 5.0}) {
        const Field constant = duhamel(eig, TimeDependentData::stationary(zero, p1, {}, 5.0), t);
        EXPECT_LE((constant - -std::expm1(-l * t) / l * p1).cwiseAbs().maxCoeff(), 1e-12);
        const Field linear = duhamel(eig, ramp(zero, zero, 5.0 * p1, 5.0), t);
        EXPECT_LE((linear - (l * t - 1.0 + std::exp(-l * t)) / (l * l) * p1).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(SolveH, MatchesCrankNicolson) {
    for (OperatorKind kind : {OperatorKind::Rfl, OperatorKind::Cfl}) {
        const EigenSystem& eig = cached_system(kind, 0.75, 64);
        const DiscreteOperator op = assemble(kind, eig.grid, 0.75);
        const Grid& g = *eig.grid;
        Field u0(g.size()), f0(g.size()), f1(g.size());
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            const double x = g.coord(i, 0);
            u0(i) = x * (1.0 - x);
            f0(i) = std::cos(3.0 * x);
            f1(i) = 1.0 + x;
        }
        const Field exact = solve_h(eig, ramp(u0, f0, f1, 0.5), {0.5}).fields.front();
        const Field cn = crank_nicolson(op, u0, f0, f1, 0.5, 2000);
        EXPECT_LE((exact - cn).cwiseAbs().maxCoeff(), 1e-5 * exact.cwiseAbs().maxCoeff());
    }
}

TEST(SolveH, Linear) {
    const EigenSystem& eig = cached_system(OperatorKind::Sfl, 0.5, 64);
    std::mt19937_64 rng(8);
    const Grid& g = *eig.grid;
    auto data = [&]() {
        TimeDependentData d = ramp(random_field(g, rng), random_field(g, rng), random_field(g, rng), 1.0);
        d.h = {Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(-1.0, 0.5)};
        return d;
    };
    const TimeDependentData a = data();
    const TimeDependentData b = data();
    TimeDependentData sum = a;
    sum.u0 = 2.0 * a.u0 - 3.0 * b.u0;
    for (int k = 0; k < 2; ++k) {
        sum.f[k] = 2.0 * a.f[k] - 3.0 * b.f[k];
        sum.h[k] = 2.0 * a.h[k] - 3.0 * b.h[k];
    }
    const std::vector<double> times = {0.0, 0.3, 1.0};
    const Trajectory ta = solve_h(eig, a, times);
    const Trajectory tb = solve_h(eig, b, times);
    const Trajectory ts = solve_h(eig, sum, times);
    for (std::size_t k = 0; k < times.size(); ++k) {
        const Field expected = 2.0 * ta.fields[k] - 3.0 * tb.fields[k];
        EXPECT_LE((ts.fields[k] - expected).cwiseAbs().maxCoeff(), 1e-11 * expected.cwiseAbs().maxCoeff());
    }
}

TEST(SolveH, PositivityForNonNegativeData) {
    const EigenSystem& eig = cached_system(OperatorKind::Sfl, 0.5, 128);
    std::mt19937_64 rng(12);
    const Grid& g = *eig.grid;
    const TimeDependentData d = ramp(random_field(g, rng, 0.0, 1.0), random_field(g, rng, 0.0, 1.0),
                                     random_field(g, rng, 0.0, 1.0), 1.0);
    for (const Field& u : solve_h(eig, d, uniform_times(1.0, 10)).fields) EXPECT_GE(u.minCoeff(), -1e-10);
}

TEST(SolveH, EnergyEstimateHolds) {
    for (const auto& c : {fracheat::testing::OperatorCase{OperatorKind::Rfl, 0.25},
                          fracheat::testing::OperatorCase{OperatorKind::Sfl, 0.5},
                          fracheat::testing::OperatorCase{OperatorKind::Cfl, 0.75}}) {
        const EigenSystem& eig = cached_system(c.kind, c.s, 64);
        std::mt19937_64 rng(13);
        const Grid& g = *eig.grid;
        const TimeDependentData d = ramp(random_field(g, rng), random_field(g, rng), random_field(g, rng), 2.0);
        const Trajectory traj = solve_h(eig, d, uniform_times(2.0, 20));
        for (double m : energy_margins(eig, d, traj)) EXPECT_LE(m, 1e-12);
    }
}

TEST(SolveH, SingularSolutionIsStationary) {
    const EigenSystem& eig = cached_system(OperatorKind::Rfl, 0.25, 128);
    const Field star = u_star(eig);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(2);
    const Trajectory traj = solve_h(eig, TimeDependentData::stationary(star, Field(), one, 1.0), {0.0, 0.5, 1.0});
    for (const Field& u : traj.fields) {
        EXPECT_LE((u - star).cwiseAbs().maxCoeff(), 1e-9 * star.cwiseAbs().maxCoeff());
    }
}

TEST(BoundaryDuhamel, ClosedFormAndLimit) {
    const EigenSystem& eig = cached_system(OperatorKind::Sfl, 0.5, 128);
    const Eigen::VectorXd h = Eigen::Vector2d(1.0, 3.0);
    const Eigen::MatrixXd traces = mode_traces(eig);
    const Eigen::VectorXd b = traces.transpose() * (eig.grid->boundary_weights().array() * h.array()).matrix();
    const TimeDependentData d = TimeDependentData::stationary(Field(), Field(), h, 50.0);
    const Eigen::ArrayXd lam = eig.active_lambdas().array();
    for (double t : {0.2, 2.0}) {
        bool flagged = true;
        const Field u = boundary_duhamel(eig, d, t, &flagged);
        EXPECT_FALSE(flagged);
        const Field exact = eig.synthesize((b.array() * -(-lam * t).unaryExpr([](double z) { return std::expm1(z); }) / lam).matrix());
        EXPECT_LE((u - exact).cwiseAbs().maxCoeff(), 1e-11 * exact.cwiseAbs().maxCoeff());
    }
    const Field late = boundary_duhamel(eig, d, 50.0);
    const Field m = martin_apply(eig, h);
    EXPECT_LE((late - m).cwiseAbs().maxCoeff(), 1e-10 * m.cwiseAbs().maxCoeff());
}

TEST(BoundaryDuhamel, FlagsNonConvergedTraces) {
    const EigenSystem& eig = cached_system(OperatorKind::Cfl, 0.75, 64);
    bool flagged = false;
    boundary_duhamel(eig, TimeDependentData::stationary(Field(), Field(), Eigen::VectorXd::Ones(2), 1.0), 0.5, &flagged);
    EXPECT_EQ(flagged, !martin_kernel(eig).all_converged());
    EXPECT_FALSE(solve_h(eig, TimeDependentData::stationary(Field::Ones(64), Field(), {}, 1.0), {1.0}).trace_flagged);
}

TEST(Data, ValidationRejectsInconsistentInput) {
    const EigenSystem& eig = cached_system(OperatorKind::Sfl, 0.5, 64);
    const Field one = Field::Ones(64);
    TimeDependentData d = TimeDependentData::stationary(one, one, {}, 1.0);
    EXPECT_THROW(solve_h(eig, d, {1.5}), std::invalid_argument);
    EXPECT_THROW(solve_h(eig, d, {0.5, 0.2}), std::invalid_argument);
    d.times = {0.1, 1.0};
    EXPECT_THROW(solve_h(eig, d, {0.5}), std::invalid_argument);
    d.times = {0.0, 0.0};
    EXPECT_THROW(solve_h(eig, d, {0.0}), std::invalid_argument);
    d = TimeDependentData::stationary(Field::Ones(10), Field(), {}, 1.0);
    EXPECT_THROW(solve_h(eig, d, {0.5}), std::invalid_argument);
    d = TimeDependentData::stationary(one, Field(), Eigen::VectorXd::Ones(3), 1.0);
    EXPECT_THROW(solve_h(eig, d, {0.5}), std::invalid_argument);
    d = TimeDependentData::stationary(one, one, {}, 1.0);
    d.f.pop_back();
    EXPECT_THROW(solve_h(eig, d, {0.5}), std::invalid_argument);
}

TEST(Concentration, BandAndMass) {
    const GridPtr g = build_grid(1, 64);
    const TimeDependentData h = TimeDependentData::stationary(Field(), Field(), Eigen::Vector2d(1.0, 2.0), 1.0);
    const TimeDependentData c = concentration_sequence(*g, 0.25, h, 8);
    ASSERT_EQ(c.f.size(), 2u);
    // weighted mass next to each face equals the boundary datum there
    double left = 0.0, right = 0.0;
    for (Eigen::Index i = 0; i < g->size(); ++i) {
        const double m = g->weights()(i) * c.f[0](i) * std::pow(g->delta()(i), 0.25);
        (g->coord(i, 0) < 0.5 ? left : right) += m;
        if (c.f[0](i) != 0.0) {
            EXPECT_GE(g->delta()(i), 1.0 / 8 - 1e-12);
            EXPECT_LE(g->delta()(i), 2.0 / 8 + 1e-12);
        }
    }
    EXPECT_NEAR(left, 1.0, 1e-12);
    EXPECT_NEAR(right, 2.0, 1e-12);
    EXPECT_THROW(concentration_sequence(*g, 0.25, h, 1000), std::invalid_argument);
    EXPECT_THROW(concentration_sequence(*g, 0.25, h, 0), std::invalid_argument);
    EXPECT_THROW(concentration_sequence(*g, 0.25, TimeDependentData::stationary(Field(), Field(), {}, 1.0), 8),
                 std::invalid_argument);
}

TEST(Integrability, EmptySetAndWindowExponent) {
    const EigenSystem& eig = cached_system(OperatorKind::Rfl, 0.25, 64);
    std::mt19937_64 rng(17);
    const TimeDependentData d = TimeDependentData::stationary(random_field(*eig.grid, rng, 0.0, 1.0),
                                                              Field::Ones(64), Eigen::VectorXd::Ones(2), 1.0);
    const Trajectory traj = solve_h(eig, d, uniform_times(1.0, 64));
    const std::vector<bool> none(64, false);
    EXPECT_DOUBLE_EQ(space_time_integral(traj, *eig.grid, eig.gamma, 0.0, 1.0, none), 0.0);
    const IntegrabilityReport r = uniform_integrability_probe(traj, *eig.grid, eig.gamma, 0.5, 0.25);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.window_exponent, 1.0, 0.05);
    EXPECT_GT(r.set_exponent, 0.0);
    EXPECT_THROW(uniform_integrability_probe(traj, *eig.grid, eig.gamma, 0.9, 0.25), std::invalid_argument);
}

TEST(EllipticLimit, SflRateIsGroundState) {
    const EigenSystem& eig = cached_system(OperatorKind::Sfl, 0.5, 256);
    std::mt19937_64 rng(19);
    const TimeDependentData d =
        TimeDependentData::stationary(random_field(*eig.grid, rng, 0.0, 1.0), Field::Ones(256), {}, 1.0);
    const EllipticLimitReport r = elliptic_limit_check(eig, d, asymptotic_times(eig));
    EXPECT_TRUE(r.pass);
    EXPECT_FALSE(r.stationary);
    EXPECT_NEAR(r.fitted_rate, M_PI, 0.05 * M_PI);
}

TEST(EllipticLimit, RejectsTimeDependentData) {
    const EigenSystem& eig = cached_system(OperatorKind::Sfl, 0.5, 64);
    const Field one = Field::Ones(64);
    EXPECT_THROW(elliptic_limit_check(eig, ramp(one, one, 2.0 * one, 1.0), {0.5, 1.0}), std::invalid_argument);
}
