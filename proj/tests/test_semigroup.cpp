#include "support.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

using namespace fracheat;
using fracheat::testing::cached_system;
using fracheat::testing::OperatorCase;
using fracheat::testing::random_field;

namespace {

// exp(-tA) W^{-1}, independent of the eigen-series
Eigen::MatrixXd exponential_kernel(const DiscreteOperator& op, double t) {
    const Eigen::MatrixXd e = (-t * op.matrix).exp();
    return e * op.grid->weights().cwiseInverse().asDiagonal();
}

}  // namespace

TEST(Semigroup, IdentityAtZeroAndRejectsNegativeTime) {
    const EigenSystem& eig = cached_system(OperatorKind::Rfl, 0.25, 64);
    std::mt19937_64 rng(2);
    const Field u = random_field(*eig.grid, rng);
    EXPECT_LE((semigroup_apply(eig, u, 0.0) - u).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(semigroup_apply(eig, u, -1e-3), std::invalid_argument);
    EXPECT_THROW(heat_kernel(eig, 0.0), std::invalid_argument);
    EXPECT_THROW(heat_kernel(eig, -1.0), std::invalid_argument);
}

TEST(Semigroup, GroundStateDecay) {
    const EigenSystem& eig = cached_system(OperatorKind::Sfl, 0.5, 256);
    const Field p1 = eig.phis.col(0);
    const Field u = semigroup_apply(eig, p1, 1.0);
    EXPECT_LE((u - std::exp(-eig.lambda1()) * p1).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(eig.grid->l2(u), std::exp(-M_PI), 0.01 * std::exp(-M_PI));
}

TEST(Semigroup, MatchesMatrixExponential) {
    for (OperatorKind kind : {OperatorKind::Rfl, OperatorKind::Cfl}) {
        const EigenSystem& eig = cached_system(kind, 0.75, 64);
        const DiscreteOperator op = assemble(kind, eig.grid, 0.75);
        for (double t : {0.01, 0.1}) {
            const Eigen::MatrixXd exact = exponential_kernel(op, t);
            const HeatKernel k = heat_kernel(eig, t);
            EXPECT_LE((k.values - exact).cwiseAbs().maxCoeff(), 1e-9 * exact.cwiseAbs().maxCoeff());
            EXPECT_DOUBLE_EQ(k.tail_bound, 0.0);
            EXPECT_FALSE(k.degraded);
        }
    }
}

TEST(Semigroup, TwoDimensionalMatchesMatrixExponential) {
    const EigenSystem& eig = cached_system(OperatorKind::Rfl, 0.5, 8, 2);
    const Eigen::MatrixXd exact = exponential_kernel(assemble_rfl(eig.grid, 0.5), 0.05);
    EXPECT_LE((heat_kernel(eig, 0.05).values - exact).cwiseAbs().maxCoeff(), 1e-9 * exact.cwiseAbs().maxCoeff());
}

class SemigroupProperties : public ::testing::TestWithParam<OperatorCase> {};

TEST_P(SemigroupProperties, ContractionAndSymmetry) {
    const auto c = GetParam();
    const EigenSystem& eig = cached_system(c.kind, c.s, 128);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 20; ++k) {
        const Field f = random_field(*eig.grid, rng);
        const Field g = random_field(*eig.grid, rng);
        const double t = 0.001 * (k + 1);
        EXPECT_LE(eig.grid->l2(semigroup_apply(eig, f, t)), eig.grid->l2(f) * (1.0 + 1e-12));
        EXPECT_LE(semigroup_symmetry_residual(eig, f, g, t), 1e-8);
    }
}

TEST_P(SemigroupProperties, ChapmanKolmogorov) {
    const auto c = GetParam();
    const EigenSystem& eig = cached_system(c.kind, c.s, 128);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> time(1e-3, 0.5);
    for (int k = 0; k < 10; ++k) {
        const double t = time(rng);
        const double tau = time(rng);
        const CompositionReport r = chapman_kolmogorov(eig, t, tau);
        EXPECT_LE(r.max_error, 1e-9 * heat_kernel(eig, t + tau).values.cwiseAbs().maxCoeff() + r.tail_bound);
    }
}

TEST_P(SemigroupProperties, KernelTraceIdentity) {
    const auto c = GetParam();
    const EigenSystem& eig = cached_system(c.kind, c.s, 128);
    for (double t : {1e-3, 0.05, 1.0}) EXPECT_LE(kernel_trace_identity_residual(eig, t), 1e-10);
}

TEST_P(SemigroupProperties, SubMarkov) {
    const auto c = GetParam();
    const EigenSystem& eig = cached_system(c.kind, c.s, 128);
    for (const SubMarkovReport& r : submarkov_check(eig, {1e-3, 0.01, 0.1, 1.0}, 8, 4)) {
        EXPECT_TRUE(r.pass) << r.t << " min " << r.min_value << " max " << r.max_value;
        EXPECT_LE(r.max_value, 1.0 + 1e-10);
    }
}

TEST_P(SemigroupProperties, Ultracontractive) {
    const auto c = GetParam();
    const EigenSystem& eig = cached_system(c.kind, c.s, 128);
    const UltracontractivityReport r = ultracontractivity_check(eig, {0.002, 0.004, 0.008, 0.016, 0.032});
    EXPECT_EQ(r.times.size(), 5u);
    EXPECT_TRUE(r.pass) << r.sup_growth_slope << " " << r.boundary_growth_slope;
    EXPECT_EQ(r.boundary_informational, !r.boundary_scaled.empty() && 1.0 <= 2.0 * c.s);
}

TEST(Ultracontractivity, WeightedRateGapMatchesSharpShape) {
    // (d + 2 gamma)/2s - d/(2s - gamma) = 1/3 for both operators at s = 0.75
    for (OperatorKind kind : {OperatorKind::Rfl, OperatorKind::Cfl}) {
        const UltracontractivityReport r =
            ultracontractivity_check(cached_system(kind, 0.75, 256), {0.002, 0.004, 0.008, 0.016});
        EXPECT_TRUE(r.boundary_informational);
        EXPECT_NEAR(r.boundary_growth_slope, -1.0 / 3.0, 0.1);
    }
}

TEST_P(SemigroupProperties, WeightedDecayRate) {
    const auto c = GetParam();
    const EigenSystem& eig = cached_system(c.kind, c.s, 128);
    std::mt19937_64 rng(21);
    const DecayReport r = weighted_decay_check(eig, random_field(*eig.grid, rng, 0.0, 1.0), asymptotic_times(eig));
    EXPECT_TRUE(r.pass) << r.fitted_rate << " vs " << r.lambda1;
}

TEST_P(SemigroupProperties, LargeTimeEnvelope) {
    const auto c = GetParam();
    const LargeTimeReport r = large_time_check(cached_system(c.kind, c.s, 128));
    EXPECT_TRUE(r.pass);
    EXPECT_GT(r.fitted_time, 0.0);
    EXPECT_TRUE(std::isfinite(r.trace_ratio_error));
}

TEST_P(SemigroupProperties, ResolventBound) {
    const auto c = GetParam();
    const EigenSystem& eig = cached_system(c.kind, c.s, 128);
    for (double lambda : {0.1, 1.0, 100.0}) {
        const ResolventReport r = resolvent_check(eig, lambda, 8, 3);
        EXPECT_TRUE(r.pass) << lambda << " " << r.ratio << " " << r.bound;
    }
}

INSTANTIATE_TEST_SUITE_P(Models, SemigroupProperties,
                         ::testing::Values(OperatorCase{OperatorKind::Rfl, 0.25}, OperatorCase{OperatorKind::Rfl, 0.75},
                                           OperatorCase{OperatorKind::Sfl, 0.5}, OperatorCase{OperatorKind::Cfl, 0.75}),
                         [](const auto& info) { return fracheat::testing::case_name(info.param); });

TEST(Semigroup, PositiveKernelAtShortTime) {
    const HeatKernel k = heat_kernel(cached_system(OperatorKind::Sfl, 0.5, 128), 0.1);
    EXPECT_GT(k.values.minCoeff(), 0.0);
}

TEST(Resolvent, EigenfunctionAndValidation) {
    const EigenSystem& eig = cached_system(OperatorKind::Rfl, 0.25, 64);
    for (int k : {0, 3}) {
        const Field p = eig.phis.col(k);
        EXPECT_LE((resolvent_apply(eig, p, 2.0) - p / (2.0 + eig.lambdas(k))).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_THROW(resolvent_apply(eig, eig.phis.col(0), 0.0), std::invalid_argument);
}

TEST(TimeIntegral, RecoversGreenKernel) {
    const EigenSystem& eig = cached_system(OperatorKind::Rfl, 0.25, 128);
    const GreenKernelMatrix direct = green_kernel_direct(assemble_rfl(eig.grid, 0.25));
    for (double split : {0.01, 0.1, 1.0}) {
        EXPECT_LE(off_diagonal_relative_error(time_integrated_kernel(eig, split), direct), 1e-9);
    }
}

TEST(KernelTrace, SeriesAgreesWithColumnTraces) {
    const EigenSystem& eig = cached_system(OperatorKind::Sfl, 0.5, 128);
    const double t = 0.05;
    const KernelTrace k = dgamma_heat_kernel(eig, t);
    const Eigen::MatrixXd series = dgamma_heat_kernel_series(eig, t);
    EXPECT_EQ(k.failures, 0);
    EXPECT_LE((k.values - series).cwiseAbs().maxCoeff(), 1e-10 * series.cwiseAbs().maxCoeff());
    EXPECT_GE(series.minCoeff(), 0.0);
}

TEST(MinimumTime, TruncatedAndFullSpectra) {
    const EigenSystem& full = cached_system(OperatorKind::Rfl, 0.5, 64);
    EXPECT_DOUBLE_EQ(minimum_time(full), 0.0);
    const EigenSystem half = full.with_modes(16);
    const double t = minimum_time(half);
    EXPECT_GT(t, 0.0);
    EXPECT_FALSE(heat_kernel(half, 1.05 * t).degraded);
    EXPECT_TRUE(heat_kernel(half, 0.1 * t).degraded);
}
