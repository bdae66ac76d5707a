#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace fracheat;
using fracheat::testing::cached_system;
using fracheat::testing::OperatorCase;
using fracheat::testing::random_field;

namespace {

const EigenSystem& rfl() { return cached_system(OperatorKind::Rfl, 0.25, 128); }

Eigen::VectorXd boundary_ones(const Grid& g) {
    return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.boundary().size()));
}

}  // namespace

TEST(GreenApply, EigenfunctionAndZero) {
    const EigenSystem& sfl = cached_system(OperatorKind::Sfl, 0.5, 128);
    const Field p1 = sfl.phis.col(0);
    EXPECT_LE((green_apply(sfl, p1) - p1 / sfl.lambda1()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(sfl.lambda1(), M_PI, 0.005 * M_PI);
    EXPECT_DOUBLE_EQ(green_apply(sfl, Field::Zero(sfl.grid->size())).cwiseAbs().maxCoeff(), 0.0);
}

TEST(GreenApply, InvertsTheOperator) {
    const EigenSystem eig = rfl().with_modes(64);
    const DiscreteOperator op = assemble_rfl(eig.grid, 0.25);
    std::mt19937_64 rng(1);
    const Eigen::VectorXd c = Eigen::VectorXd::Random(64);
    const Field f = eig.synthesize(c);
    EXPECT_LE((op.apply(green_apply(eig, f)) - f).cwiseAbs().maxCoeff(), 1e-8 * f.cwiseAbs().maxCoeff());
}

class GreenProperties : public ::testing::TestWithParam<OperatorCase> {};

TEST_P(GreenProperties, SelfAdjointAndMercer) {
    const auto c = GetParam();
    const EigenSystem& eig = cached_system(c.kind, c.s, 128);
    std::mt19937_64 rng(7);
    for (int k = 0; k < 100; ++k) {
        const Field f = random_field(*eig.grid, rng);
        const Field g = random_field(*eig.grid, rng);
        EXPECT_LE(green_symmetry_residual(eig, f, g), 1e-8);
        EXPECT_GE(eig.grid->inner(green_apply(eig, f), f), 0.0);
    }
}

TEST_P(GreenProperties, LowerHopfConstantPositive) {
    const auto c = GetParam();
    const EigenSystem& eig = cached_system(c.kind, c.s, 128);
    std::mt19937_64 rng(11);
    for (int k = 0; k < 5; ++k) EXPECT_GT(lower_hopf_constant(eig, random_field(*eig.grid, rng, 0.0, 1.0)), 0.0);
}

TEST_P(GreenProperties, MartinKernelNonNegative) {
    const auto c = GetParam();
    const EigenSystem& eig = cached_system(c.kind, c.s, 128);
    const MartinKernel m = martin_kernel(eig);
    const Grid& g = *eig.grid;
    // the extrapolated trace is only meaningful once x is off the normal stencil
    for (std::size_t b = 0; b < g.boundary().size(); ++b) {
        for (Eigen::Index x = 0; x < g.size(); ++x) {
            if (g.distance_to_boundary_node(x, b) <= 3.0 * g.spacing()) continue;
            EXPECT_GE(m.values(x, static_cast<Eigen::Index>(b)), 0.0);
        }
    }
    const long flagged = std::count(m.converged.begin(), m.converged.end(), false);
    EXPECT_EQ(m.all_converged(), flagged == 0);
    EXPECT_LE(flagged, m.far_field_failures);
    // first-cell lattice effects make the extrapolants disagree when gamma > 0
    if (c.kind == OperatorKind::Sfl) EXPECT_TRUE(m.all_converged());
    EXPECT_DOUBLE_EQ(martin_apply(m, Eigen::VectorXd::Zero(2)).cwiseAbs().maxCoeff(), 0.0);
    // kernel and series forms of M[h] coincide
    const Eigen::VectorXd h = Eigen::Vector2d(1.0, 3.0);
    const Field a = martin_apply(m, h);
    EXPECT_LE((a - martin_apply(eig, h)).cwiseAbs().maxCoeff(), 1e-8 * a.cwiseAbs().maxCoeff());
}

TEST_P(GreenProperties, ExponentArithmetic) {
    const auto c = GetParam();
    const double gamma = boundary_exponent(c.kind, c.s);
    for (int n : {1, 2}) EXPECT_NEAR(-(n - 2.0 * c.s + 2.0 * gamma) + gamma + (n - 1.0), 2.0 * c.s - gamma - 1.0, 1e-15);
}

INSTANTIATE_TEST_SUITE_P(Models, GreenProperties,
                         ::testing::Values(OperatorCase{OperatorKind::Rfl, 0.25}, OperatorCase{OperatorKind::Sfl, 0.5},
                                           OperatorCase{OperatorKind::Cfl, 0.75}),
                         [](const auto& info) { return fracheat::testing::case_name(info.param); });

TEST(GreenKernel, RowsMatchApplyOnDiracs) {
    const EigenSystem& eig = rfl();
    const GreenKernelMatrix k = green_kernel(eig);
    EXPECT_TRUE(k.symmetric);
    for (Eigen::Index j : {0, 17, 64, 127}) {
        Field dirac = Field::Zero(eig.grid->size());
        dirac(j) = 1.0 / eig.grid->weights()(j);
        EXPECT_LE((green_apply(eig, dirac) - k.values.col(j)).cwiseAbs().maxCoeff(), 1e-10 * k.values.maxCoeff());
    }
}

TEST(GreenKernel, ClassicalIntervalGreenFunction) {
    const EigenSystem& eig = cached_system(OperatorKind::Sfl, 1.0, 256);
    const GreenKernelMatrix k = green_kernel(eig);
    const Grid& g = *eig.grid;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        for (Eigen::Index j = 0; j < g.size(); ++j) {
            if (g.distance(i, j) <= 2.0 * g.spacing()) continue;
            const double x = g.coord(i, 0);
            const double y = g.coord(j, 0);
            const double exact = std::min(x, y) * (1.0 - std::max(x, y));
            worst = std::max(worst, std::abs(k.values(i, j) - exact) / exact);
        }
    }
    EXPECT_LE(worst, 0.01);
}

TEST(GreenKernel, DirectInverseMatchesFullSeries) {
    const EigenSystem& eig = cached_system(OperatorKind::Cfl, 0.75, 64);
    const GreenKernelMatrix series = green_kernel(eig);
    const GreenKernelMatrix direct = green_kernel_direct(assemble_cfl(eig.grid, 0.75));
    EXPECT_LE((series.values - direct.values).cwiseAbs().maxCoeff(), 1e-10 * direct.values.maxCoeff());
}

TEST(H1, BaselineRatiosAreOne) {
    const GreenKernelMatrix k = synthetic_green(build_grid(1, 64), 0.25, 0.25, {});
    const RatioReport r = h1_check(k);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.min_ratio, 1.0, 1e-14);
    EXPECT_NEAR(r.max_ratio, 1.0, 1e-14);
}

TEST(H1, RflSpreadBoundedAndStable) {
    const RatioReport a = h1_check(green_kernel(rfl()));
    const RatioReport b = h1_check(green_kernel(cached_system(OperatorKind::Rfl, 0.25, 256)));
    EXPECT_TRUE(a.pass);
    EXPECT_TRUE(b.pass);
    EXPECT_LE(std::max(a.spread / b.spread, b.spread / a.spread), 2.0);
}

TEST(H1, SkippedWhenOrderTooLarge) {
    const RatioReport r = h1_check(green_kernel(cached_system(OperatorKind::Cfl, 0.75, 64)));
    EXPECT_TRUE(r.skipped);
    EXPECT_FALSE(r.pass);
    EXPECT_FALSE(r.note.empty());
}

TEST(Trace, ExactForQuadraticProfiles) {
    for (int dim : {1, 2}) {
        const GridPtr g = build_grid(dim, 16);
        for (double gamma : {0.25, 0.5, 1.0}) {
            // profile in the distance to the face x = 0 only, so corner stencils see it too
            Field u(g->size());
            for (Eigen::Index i = 0; i < g->size(); ++i) {
                const double d = g->coord(i, 0);
                u(i) = std::pow(d, gamma) * (2.0 + 3.0 * d + d * d);
            }
            const BoundaryTrace t = dgamma_trace(u, gamma, *g);
            for (std::size_t b = 0; b < g->boundary().size(); ++b) {
                const BoundaryNode& node = g->boundary()[b];
                if (node.axis != 0 || node.side != 0) continue;
                EXPECT_TRUE(t.converged[b]);
                EXPECT_NEAR(t.values(static_cast<Eigen::Index>(b)), 2.0, 1e-12);
            }
            EXPECT_LE((trace_operator(*g, gamma) * u - t.values).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

TEST(Trace, PowerProfileIsOne) {
    const GridPtr g = build_grid(1, 32);
    const BoundaryTrace t = dgamma_trace(g->delta().array().pow(0.3).matrix(), 0.3, *g);
    EXPECT_NEAR(t.values(0), 1.0, 1e-14);
    EXPECT_NEAR(t.values(1), 1.0, 1e-14);
}

TEST(Trace, SineSlope) {
    const EigenSystem& sfl = cached_system(OperatorKind::Sfl, 0.5, 256);
    const BoundaryTrace t = dgamma_trace(sfl.phis.col(0), 1.0, *sfl.grid);
    EXPECT_NEAR(t.values(0), std::sqrt(2.0) * M_PI, 0.01 * std::sqrt(2.0) * M_PI);
    EXPECT_TRUE(t.all_converged());
}

TEST(Trace, OscillatoryProfileFlagged) {
    const GridPtr g = build_grid(1, 64);
    SyntheticOptions opt;
    opt.variant = SyntheticVariant::OscillatoryBoundary;
    const GreenKernelMatrix k = synthetic_green(g, 0.25, 0.25, opt);
    const BoundaryTrace t = dgamma_trace(k.values.col(32), 0.25, *g);
    EXPECT_FALSE(t.all_converged());
    // the same column without oscillation converges
    const GreenKernelMatrix base = synthetic_green(g, 0.25, 0.25, {});
    EXPECT_TRUE(dgamma_trace(base.values.col(32), 0.25, *g).all_converged());
}

TEST(UStar, CensoredProfileIsFlat) {
    const EigenSystem& eig = cached_system(OperatorKind::Cfl, 0.75, 256);
    const Field u = u_star(eig);
    const Grid& g = *eig.grid;
    double lo = 1e300, hi = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (g.delta()(i) <= 0.1) {
            lo = std::min(lo, u(i));
            hi = std::max(hi, u(i));
        }
    }
    EXPECT_LT(hi / lo, 2.0);
}

TEST(UStar, RestrictedSlope) {
    const EigenSystem& eig = cached_system(OperatorKind::Rfl, 0.25, 256);
    const SlopeFit fit = boundary_slope(*eig.grid, u_star(eig));
    EXPECT_NEAR(fit.slope, 0.25 - 1.0, 0.1);
}

TEST(Martin, WeakIdentity) {
    const EigenSystem& eig = rfl();
    const Grid& g = *eig.grid;
    std::mt19937_64 rng(5);
    const Eigen::VectorXd h = Eigen::Vector2d(0.7, 1.9);
    const Field dg = g.delta().array().pow(eig.gamma).matrix();
    for (int k = 0; k < 5; ++k) {
        const Field psi = random_field(g, rng).cwiseProduct(dg);
        const double lhs = g.inner(martin_apply(eig, h), psi);
        const Eigen::VectorXd trace = trace_operator(g, eig.gamma) * green_apply(eig, psi);
        const double rhs = (g.boundary_weights().array() * h.array() * trace.array()).sum();
        EXPECT_NEAR(lhs, rhs, 1e-9 * std::abs(rhs) + 1e-12);
    }
}

TEST(Martin, BoundaryEstimateRatioBounded) {
    auto spread = [](const EigenSystem& eig) {
        const Grid& g = *eig.grid;
        const MartinKernel m = martin_kernel(eig);
        const double n = g.dim();
        double lo = 1e300, hi = 0.0;
        for (std::size_t b = 0; b < g.boundary().size(); ++b) {
            for (Eigen::Index y = 0; y < g.size(); ++y) {
                const double r = g.distance_to_boundary_node(y, b);
                if (r <= 2.0 * g.spacing()) continue;
                const double shape = std::pow(r, -(n - 2.0 * eig.s + 2.0 * eig.gamma)) * std::pow(g.delta()(y), eig.gamma);
                const double q = m.values(y, static_cast<Eigen::Index>(b)) / shape;
                lo = std::min(lo, q);
                hi = std::max(hi, q);
            }
        }
        return hi / lo;
    };
    const double a = spread(rfl());
    const double b = spread(cached_system(OperatorKind::Rfl, 0.25, 256));
    EXPECT_LT(a, 1e3);
    EXPECT_LT(b, 1e3);
    EXPECT_LE(std::max(a / b, b / a), 2.0);
}

TEST(BoundaryBehavior, SaturatedRegime) {
    const RegimeReport r = boundary_behavior_check(cached_system(OperatorKind::Rfl, 0.25, 256), 0.0);
    EXPECT_EQ(r.regime, BoundaryRegime::Saturated);
    EXPECT_NEAR(r.fit.slope, 0.25, 0.1);
    EXPECT_TRUE(r.pass);
}

TEST(BoundaryBehavior, InteriorRegime) {
    // beta < gamma - 2s: slope beta + 2s
    const RegimeReport r = boundary_behavior_check(cached_system(OperatorKind::Rfl, 0.25, 256), -0.8);
    EXPECT_EQ(r.regime, BoundaryRegime::Interior);
    EXPECT_NEAR(r.expected_slope, -0.3, 1e-14);
    EXPECT_TRUE(r.pass) << r.fit.slope;
}

TEST(BoundaryBehavior, CriticalRegimePrefersLogarithm) {
    const EigenSystem& eig = cached_system(OperatorKind::Rfl, 0.25, 256);
    const RegimeReport r = boundary_behavior_check(eig, eig.gamma - 2.0 * eig.s);
    EXPECT_EQ(r.regime, BoundaryRegime::Critical);
    EXPECT_TRUE(r.log_preferred);
    EXPECT_TRUE(r.pass);
    EXPECT_FALSE(boundary_behavior_check(eig, -0.8).log_preferred);
}

TEST(BoundaryBehavior, RejectsNonIntegrableExponent) {
    EXPECT_THROW(boundary_behavior_check(rfl(), -1.25), std::invalid_argument);
    EXPECT_THROW(boundary_behavior_check(rfl(), -2.0), std::invalid_argument);
}

TEST(IntegrationByParts, GreenPotential) {
    const EigenSystem& eig = rfl();
    const Grid& g = *eig.grid;
    std::mt19937_64 rng(9);
    const Field f = random_field(g, rng);
    const Field psi = random_field(g, rng);
    const IdentityResidual r = integration_by_parts_residual(
        eig, green_apply(eig, f), f, Eigen::VectorXd::Zero(2), psi);
    EXPECT_LE(r.relative, 1e-10);
}

TEST(IntegrationByParts, MartinPotential) {
    const EigenSystem& eig = rfl();
    const Grid& g = *eig.grid;
    std::mt19937_64 rng(10);
    const Eigen::VectorXd h = Eigen::Vector2d(2.0, 0.5);
    const IdentityResidual r =
        integration_by_parts_residual(eig, martin_apply(eig, h), Field::Zero(g.size()), h, random_field(g, rng));
    EXPECT_LE(r.relative, 1e-10);
}

TEST(IntegrationByParts, GroundStateClosedForm) {
    const EigenSystem& eig = rfl();
    const Field p1 = eig.phis.col(0);
    // v = phi_1: <v, L G[phi_1]> = 1 and <L v, G[phi_1]> = 1
    const IdentityResidual r =
        integration_by_parts_residual(eig, p1, eig.lambda1() * p1, Eigen::VectorXd::Zero(2), p1);
    EXPECT_NEAR(r.lhs, 1.0, 1e-10);
    EXPECT_NEAR(r.rhs, 1.0, 1e-10);
}

TEST(FitLine, ExactLine) {
    const SlopeFit f = fit_line({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.rss, 0.0, 1e-20);
    EXPECT_TRUE(std::isnan(fit_line({1.0}, {1.0}).slope));
}

TEST(Band, DefaultBandClampsToGrid) {
    const Band coarse = default_band(*build_grid(1, 16));
    EXPECT_NEAR(coarse.lower, 3.0 / 16, 1e-14);
    EXPECT_NEAR(coarse.upper, 6.0 / 16, 1e-14);
    const Band fine = default_band(*build_grid(1, 256));
    EXPECT_NEAR(fine.lower, 3.0 / 256, 1e-14);
    EXPECT_NEAR(fine.upper, 0.1, 1e-14);
    EXPECT_TRUE(std::isnan(boundary_slope(*build_grid(1, 64), -Field::Ones(64)).slope));
}

TEST(Martin, UStarIsResponseToUnitData) {
    const EigenSystem& eig = rfl();
    EXPECT_LE((u_star(eig) - martin_apply(eig, boundary_ones(*eig.grid))).cwiseAbs().maxCoeff(), 0.0);
}
