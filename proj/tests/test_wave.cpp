#include <gtest/gtest.h>

#include <cmath>

#include "degen_kpp/verify.hpp"
#include "degen_kpp/wave.hpp"
#include "property.hpp"

using namespace degen_kpp;
using degen_kpp::testing::Gen;

namespace {

const ToleranceSet tol;
constexpr double c21 = 2.1;

const WaveProfile& ns() {
    static const WaveProfile p = reconstruct(solve_small(c21, tol).trace, tol);
    return p;
}

const WaveProfile& large() {
    static const WaveProfile p = reconstruct(solve_large_iteration(c21, tol).trace, tol);
    return p;
}

double alpha_a() { return 0.0141; }

}  // namespace

TEST(Reconstruct, NonSaturatedHasNoFront) {
    const auto& p = ns();
    EXPECT_EQ(p.tag, WaveTag::NonSaturated);
    EXPECT_FALSE(p.saturated());
    EXPECT_EQ(p.samples[p.anchor].z, 0.0);
    EXPECT_DOUBLE_EQ(p.samples[p.anchor].u, 0.5);
}

TEST(Reconstruct, LargeWaveFrontIsFrozen) {
    const auto& p = large();
    EXPECT_EQ(p.tag, WaveTag::SaturatedC);
    EXPECT_NEAR(p.z_star, -0.211191027278, 1e-9);
}

TEST(Reconstruct, ProfileIsMonotone) {
    for (const WaveProfile* p : {&ns(), &large()}) {
        for (std::size_t i = 1; i < p->samples.size(); ++i) {
            const auto& a = p->samples[i - 1];
            const auto& b = p->samples[i];
            ASSERT_GE(b.z, a.z);
            ASSERT_LE(b.u, a.u);
            if (p->saturated()) {
                ASSERT_GT(b.zeta, a.zeta);
            }
            ASSERT_LT(b.slope, 0.0);
        }
    }
}

TEST(Reconstruct, RejectsTraceWithoutWave) {
    EXPECT_THROW(reconstruct(shoot(c21, 0.001, tol), tol), DomainError);
    EXPECT_THROW(reconstruct(shoot(c21, 3.0, tol), tol), DomainError);
}

TEST(Reconstruct, RejectsWrongTag) {
    EXPECT_THROW(reconstruct(shoot(c21, 0.5, tol), tol, 2000, WaveTag::SaturatedA), ConsistencyError);
}

// (u')^2 = h(u) is the defining identity of the transformation.
TEST(Reconstruct, RoundTripOfTheTransformation) {
    EXPECT_LT(round_trip_error(ns()), 1e-10);
    const auto p = reconstruct(solve_large_iteration(c21, tol).trace, tol, 8000);
    EXPECT_LT(round_trip_error(p), 1e-10);
}

TEST(Evaluate, UIsMonotoneAndBounded) {
    Gen g(31);
    for (const WaveProfile* p : {&ns(), &large()}) {
        for (int i = 0; i < 300; ++i) {
            const double a = g.uniform(-5.0, 10.0), b = a + g.log_uniform(1e-6, 1.0);
            const double ua = evaluate_u(*p, a), ub = evaluate_u(*p, b);
            ASSERT_GE(ua, ub) << a << ' ' << b;
            ASSERT_GE(ub, 0.0);
            ASSERT_LE(ua, 1.0);
        }
        EXPECT_DOUBLE_EQ(evaluate_u(*p, 0.0), 0.5);
    }
    EXPECT_EQ(evaluate_u(large(), large().z_star - 1.0), 1.0);
}

TEST(Evaluate, OneMinusUKeepsPrecisionNearTheFront) {
    const auto& p = large();
    const auto v = evaluate_u_detail(p, p.z_star + 1e-9);
    EXPECT_GT(v.one_minus_u, 0.0);
    EXPECT_LT(v.one_minus_u, 1e-6);
}

TEST(Tails, RightRatesFollowTheBells) {
    const auto sp = Speed::make(c21);
    EXPECT_NEAR(right_tail_rate(ns(), tol).rate, sp.lambda_minus, 0.02 * sp.lambda_minus);
    EXPECT_NEAR(right_tail_rate(large(), tol).rate, sp.lambda_plus, 0.03 * sp.lambda_plus);
}

TEST(Tails, NonSaturatedLeftRateIsOneOverC) {
    const auto lt = left_tail(ns(), tol);
    EXPECT_FALSE(lt.saturated);
    EXPECT_NEAR(lt.rate, 1.0 / c21, 0.02 / c21);
    EXPECT_TRUE(lt.steeper_than_classical);
    EXPECT_GT(lt.rate, classical_left_rate(c21));
}

TEST(Tails, SharpFrontLaw) {
    for (double a : {0.5, 1.0}) {
        const auto lt = left_tail(reconstruct(shoot(c21, a, tol), tol), tol);
        EXPECT_TRUE(lt.saturated);
        EXPECT_GE(lt.ratio_min, 0.95) << a;
        EXPECT_LE(lt.ratio_max, 1.05) << a;
    }
}

TEST(SpeedIdentity, HoldsForSmallAndLargeSolutions) {
    for (double c : {2.0, 2.1, 3.0}) {
        EXPECT_NEAR(speed_identity(solve_small(c, tol).trace, tol) / c, 1.0, 1e-6) << c;
        EXPECT_NEAR(speed_identity(solve_large_iteration(c, tol).trace, tol) / c, 1.0, 1e-6) << c;
    }
}

TEST(SpeedIdentity, HoldsForEveryShootingWave) {
    Gen g(32);
    for (int i = 0; i < 8; ++i) {
        const double a = g.log_uniform(0.0141, 1.37);
        EXPECT_NEAR(speed_identity(shoot(c21, a, tol), tol) / c21, 1.0, 1e-6) << a;
    }
}

TEST(Convexity, PatternsPerClass) {
    const auto zn = convexity_pattern(*ns().trace, WaveTag::NonSaturated, tol);
    ASSERT_EQ(zn.size(), 1u);
    EXPECT_NEAR(zn[0], 0.2228, 1e-3);
    const auto za = convexity_pattern(shoot(c21, alpha_a(), tol), WaveTag::SaturatedA, tol);
    ASSERT_EQ(za.size(), 2u);
    EXPECT_LT(za[0], 0.0);
    EXPECT_GT(za[1], 0.0);
    EXPECT_TRUE(convexity_pattern(shoot(c21, 0.5, tol), WaveTag::SaturatedC, tol).empty());
    // Type (b): u''(0) = h'(1/2)/2 vanishes.
    EXPECT_NEAR(rhs(0.5, bell(c21, 0.5), c21), 0.0, 1e-15);
}

TEST(Convexity, MismatchThrows) {
    EXPECT_THROW(convexity_pattern(shoot(c21, 0.5, tol), WaveTag::SaturatedA, tol), ConsistencyError);
}

// u'' = h'(u)/2: the inflection of u_NS sits where h0 peaks.
TEST(Convexity, InflectionMatchesCriticalRadius) {
    const auto s = solve_small(c21, tol);
    const double z = z_of_r(s.trace, logit(s.max_radius), tol);
    EXPECT_NEAR(z, convexity_pattern(s.trace, WaveTag::NonSaturated, tol)[0], 1e-6);
}

// Larger alpha gives a steeper profile at the anchor: profiles cross only at z = 0.
TEST(Ordering, ProfilesCrossOnlyAtTheAnchor) {
    std::vector<WaveProfile> ps{ns(), reconstruct(shoot(c21, alpha_a(), tol), tol),
                                reconstruct(shoot(c21, 0.5, tol), tol),
                                reconstruct(shoot(c21, 1.0, tol), tol)};
    for (double z = -3.0; z <= 6.0; z += 0.01) {
        if (std::abs(z) < 1e-9) continue;
        for (std::size_t k = 1; k < ps.size(); ++k) {
            const double a = evaluate_u(ps[k - 1], z), b = evaluate_u(ps[k], z);
            if (z > 0.0)
                ASSERT_GT(a, b) << "z=" << z << " k=" << k;
            else
                ASSERT_LE(a, b) << "z=" << z << " k=" << k;
        }
    }
}

// Fourth-order stencil on coarse grids; finer grids are roundoff dominated.
TEST(Residual, TravellingWaveResidualConvergesAtOrderFour) {
    const auto tr = solve_small(c21, tol).trace;
    std::vector<double> lx, ly;
    for (int n : {125, 250, 500, 1000}) {
        const auto r = tw_residual(reconstruct(tr, tol, n), c21);
        lx.push_back(std::log(double(n)));
        ly.push_back(std::log(r.max_residual));
    }
    const auto fit = numerics::fit_line(lx, ly);
    EXPECT_LT(fit.slope, -3.0);
}
