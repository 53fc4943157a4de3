#include <gtest/gtest.h>

#include <cmath>

#include "degen_kpp/verify.hpp"
#include "property.hpp"

using namespace degen_kpp;
using degen_kpp::testing::Gen;

namespace {

const ToleranceSet tol;

}  // namespace

TEST(Certificates, StandardCandidatesPass) {
    for (double c : {2.0, 2.05, 2.1, 2.5, 3.0})
        for (const auto& k : standard_candidates(c)) {
            const auto cert = check_inequality(k.g, k.kind, c, k.r_lo, k.r_hi, 512);
            EXPECT_TRUE(cert.passed) << cert.candidate << " c=" << c << " margin=" << cert.min_margin;
            EXPECT_GT(cert.min_margin, strict_margin);
        }
}

TEST(Certificates, ExactNegativeBranchIsNotStrict) {
    const auto cert = check_subsolution(CandidateFunction::exact_negative(), 2.1, 0.01, 0.99);
    EXPECT_TRUE(cert.exact_solution);
    EXPECT_FALSE(cert.passed);
}

TEST(Certificates, RequireThrowsOnFailure) {
    // The lambda+ bell is a subsolution, never a supersolution.
    const auto g = CandidateFunction::bell_lambda(lambda_pm(2.1).second);
    EXPECT_NO_THROW(require(check_subsolution(g, 2.1, 0.01, 0.99)));
    EXPECT_THROW(require(check_supersolution(g, 2.1, 0.01, 0.99)), CertificateFailure);
}

// The power bump with alpha = 1, beta = 0.9 at c = 2.05 is strict only on a
// vanishing interval; alpha = 10 gives a usable one.
TEST(Certificates, PowerBumpValidityRadius) {
    const double c = 2.05, lm = lambda_pm(c).first;
    const double r1 = validity_radius(CandidateFunction::power_bump(lm, 1.0, 0.9), Inequality::supersolution,
                                      c, Anchor::at_zero);
    EXPECT_LT(r1, 1e-10);
    const double r10 = validity_radius(CandidateFunction::power_bump(lm, 10.0, 0.9), Inequality::supersolution,
                                       c, Anchor::at_zero);
    EXPECT_GT(r10, 0.1);
    const auto g = CandidateFunction::power_bump(lm, 10.0, 0.9);
    EXPECT_TRUE(check_supersolution(g, c, r10 * 1e-3, 0.9 * r10).passed);
}

TEST(Certificates, BellsBelowTheBellAreSubsolutions) {
    Gen g(41);
    for (int i = 0; i < 20; ++i) {
        const double c = g.uniform(2.0, 4.0);
        const auto [lm, lp] = lambda_pm(c);
        const double lambda = g.uniform(lm, lp);
        EXPECT_TRUE(check_subsolution(CandidateFunction::bell_lambda(lambda), c, 0.01, 0.99).passed)
            << c << ' ' << lambda;
    }
}

TEST(Recursions, MnFirstNegative) {
    const auto m = bootstrap_Mn(1.5, 0.1);
    EXPECT_EQ(m.first_negative, 4);
    const double expected[] = {1.65, 1.0439393939393942, 0.6920899854862123, 0.20510118485897122,
                               -3.225642238184074};
    ASSERT_EQ(m.values.size(), 5u);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(m.values[i], expected[i], 1e-12);
    EXPECT_EQ(bootstrap_Mn(1.99, 0.001).first_negative, 34);
}

TEST(Recursions, MnMatchesClosedForm) {
    Gen g(42);
    for (int i = 0; i < 200; ++i) {
        const double c = g.uniform(0.2, 1.95), eps = g.uniform(1e-3, 2.0 / c - 1.0 - 1e-3);
        const auto m = bootstrap_Mn(c, eps);
        for (std::size_t n = 0; n < m.values.size(); ++n)
            ASSERT_NEAR(m.values[n], Mn_closed_form(c, eps, long(n)), 1e-10 * std::max(1.0, std::abs(m.values[n])));
    }
}

TEST(Recursions, MnRejectsSupercritical) { EXPECT_THROW(bootstrap_Mn(2.1, 0.1), DomainError); }

TEST(Recursions, KnConvergesToLargestRoot) {
    const auto a = bootstrap_Kn(2.5, 0.0, 3.0);
    EXPECT_NEAR(a.limit, 2.0, 1e-10);
    const auto b = bootstrap_Kn(2.1, 0.1, 3.0);
    EXPECT_NEAR(b.limit, b.root, 1e-10);
    EXPECT_NEAR(b.root, 1.96399097693778, 1e-12);
    for (std::size_t i = 1; i < b.head.size(); ++i) EXPECT_LT(b.head[i], b.head[i - 1]);
}

// Double root: sublinear convergence, so a looser tolerance.
TEST(Recursions, KnAtCriticalSpeed) { EXPECT_NEAR(bootstrap_Kn(2.0, 0.0, 2.0).limit, 1.0, 1e-5); }

TEST(Recursions, EpsilonIncreasesToOne) {
    Gen g(43);
    for (int i = 0; i < 50; ++i) {
        const double c = g.uniform(2.01, 5.0), e0 = g.uniform(0.01, 0.99);
        const auto e = epsilon_recursion(c, e0);
        EXPECT_TRUE(e.increasing);
        EXPECT_NEAR(e.limit, 1.0, 1e-10);
    }
}

TEST(Residual, WeakFormOnBumps) {
    const auto ns = reconstruct(solve_small(2.1, tol).trace, tol);
    const auto H = reconstruct(solve_large_iteration(2.1, tol).trace, tol);
    for (const auto& b : standard_bumps()) {
        EXPECT_LT(weak_residual(ns, 2.1, TestFunction::from(b), tol), 1e-8);
        EXPECT_LT(weak_residual(H, 2.1, TestFunction::from(b), tol), 1e-8);
    }
}

// Dropping the boundary term c psi(z*) must break the weak form.
TEST(Residual, BoundaryTermMatters) {
    const auto H = reconstruct(solve_large_iteration(2.1, tol).trace, tol);
    const Bump b{H.z_star, 1.0, 1.0};
    EXPECT_LT(weak_residual(H, 2.1, TestFunction::from(b), tol), 1e-8);
    EXPECT_GT(2.1 * b.value(H.z_star), 0.1);
}

TEST(Residual, StrongForm) {
    for (double a : {0.0141, 0.5, 1.0}) {
        const auto p = reconstruct(shoot(2.1, a, tol), tol);
        EXPECT_LT(tw_residual(p, 2.1).max_residual, 1e-4) << a;
    }
}

TEST(Residual, RejectsSupportOutsideProfile) {
    const auto ns = reconstruct(solve_small(2.1, tol).trace, tol);
    EXPECT_THROW(weak_residual(ns, 2.1, TestFunction::from(Bump{1000.0, 1.0, 1.0}), tol), DomainError);
}
