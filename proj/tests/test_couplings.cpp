#include <gtest/gtest.h>

#include <cmath>

#include "kcontract/couplings.hpp"
#include "kcontract/montecarlo.hpp"
#include "kcontract/oracle.hpp"

using namespace kcontract;

namespace {

EulerModel linear_model(double h, double g, double kappa = kInf) {
    const auto dr = drift_linear(1.0);
    return {dr.b, 1.0, 1.0, 1.0, h, g, kappa, 1.0, 1, dr.name};
}

EulerModel zero_drift(double g, double kappa) {
    return {[](const Vec& x) { return Vec(x.size(), 0.0); }, 1.0, 1.0, 1.0, 0.1, g, kappa, 1.0, 1, "zero"};
}

}  // namespace

TEST(Truncate, Definition) {
    EXPECT_EQ(truncate_kappa({0.5}, 1.0), Vec{0.5});
    const Vec t = truncate_kappa({3.0, 0.0}, 1.0);
    EXPECT_DOUBLE_EQ(t[0], 1.0);
    EXPECT_EQ(t[1], 0.0);
    const Vec u = truncate_kappa({3.0, 4.0}, 1.0);
    EXPECT_NEAR(norm(u), 1.0, 1e-15);
    EXPECT_NEAR(u[0] / u[1], 0.75, 1e-15);
    EXPECT_EQ(truncate_kappa({1e9, -3.0}, kInf), (Vec{1e9, -3.0}));
    EXPECT_EQ(truncate_kappa({0.0}, 1.0), Vec{0.0});
}

TEST(Reflect, AxisAndIsometry) {
    EXPECT_EQ(reflect({1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}), (Vec{-1.0, 0.0}));
    EXPECT_EQ(reflect({1.0}, {1.0}, {0.7}), Vec{0.7});
    const Vec xh{0.3, -1.2, 2.0}, yh{1.1, 0.4, -0.5}, z{0.9, -0.2, 1.7};
    const Vec once = reflect(xh, yh, z), twice = reflect(xh, yh, once);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(twice[i], z[i], 1e-15);
    EXPECT_NEAR(norm(once), norm(z), 1e-15);
}

TEST(Reflect, MapsTruncatedShiftToItsNegative) {
    const Vec xh{0.3, -1.2}, yh{1.1, 0.4};
    const double g = 0.3, kappa = 0.5;
    const Vec a = scale(1.0 / g, truncate_kappa(sub(yh, xh), kappa));
    const Vec b = scale(1.0 / g, truncate_kappa(sub(xh, yh), kappa));
    const Vec ra = reflect(xh, yh, a);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(ra[i], b[i], 1e-14);
}

TEST(Coupler, EqualStatesStayEqual) {
    for (auto kind : {CouplingKind::RefinedBasic, CouplingKind::Reflection, CouplingKind::Mixed}) {
        const Coupler cp(linear_model(0.1, std::sqrt(0.1)), NoiseSpec::gaussian(), kind, {1.0, 5.0});
        for (std::size_t i = 0; i < 1000; ++i) {
            Stream rng(3, i);
            const auto s = cp.step({0.4}, {0.4}, rng);
            EXPECT_EQ(s.X, s.Y);
            EXPECT_TRUE(s.coalesced);
        }
    }
}

TEST(Coupler, RefinedBasicTwoPointSupport) {
    // r_hat = 0.5 <= kappa = 1
    const Coupler cp(zero_drift(0.5, 1.0), NoiseSpec::gaussian(), CouplingKind::RefinedBasic);
    for (std::size_t i = 0; i < 20000; ++i) {
        Stream rng(4, i);
        const auto s = cp.step({0.5}, {0.0}, rng);
        const bool ok = s.r_after == 0.0 || std::fabs(s.r_after - 1.0) < 1e-12 || std::fabs(s.r_after - 0.5) < 1e-12;
        ASSERT_TRUE(ok) << s.r_after;
        if (s.r_after == 0.0) {
            ASSERT_TRUE(s.coalesced && s.X == s.Y);
        }
    }
}

TEST(Coupler, RefinedBasicTruncatedSupport) {
    // r_hat = 3 > kappa = 1: {2, 3, 4}, no coalescence
    const Coupler cp(zero_drift(1.0, 1.0), NoiseSpec::cauchy(), CouplingKind::RefinedBasic);
    int seen[3] = {0, 0, 0};
    for (std::size_t i = 0; i < 20000; ++i) {
        Stream rng(5, i);
        const auto s = cp.step({3.0}, {0.0}, rng);
        ASSERT_FALSE(s.coalesced);
        const int k = static_cast<int>(std::lround(s.r_after)) - 2;
        ASSERT_TRUE(k >= 0 && k <= 2 && std::fabs(s.r_after - (k + 2)) < 1e-12) << s.r_after;
        ++seen[k];
    }
    EXPECT_GT(seen[0], 0);
    EXPECT_GT(seen[1], 0);
    EXPECT_GT(seen[2], 0);
}

TEST(Coupler, BranchFrequenciesMatchLatticeOracle) {
    const auto lat = discretize(NoiseSpec::gaussian(), 0.05);
    const EulerModel m = zero_drift(0.5, 1.0);
    const Coupler cp(m, lat, CouplingKind::RefinedBasic);
    RhoSpec rho;
    rho.kind = RhoKind::W1;
    rho.c = 0.0;
    rho.r1 = 100.0;
    // c = 0 head: f(r) = r; unused beyond the law
    const auto ex = oracle_exact({lat, m, CouplingKind::RefinedBasic, {}}, {0.5}, {0.0}, rho);
    const std::size_t n = 1'000'000;
    std::vector<double> co(n), anti(n);
    for (std::size_t i = 0; i < n; ++i) {
        Stream rng(6, i);
        const auto s = cp.step({0.5}, {0.0}, rng);
        co[i] = s.branch == Branch::CoalesceMove;
        anti[i] = s.branch == Branch::AntiMove;
    }
    double p_co = 0.0, p_anti = 0.0;
    for (const auto& [r, p] : ex.r_after_law) {
        if (r == 0.0) p_co += p;
        else if (std::fabs(r - 1.0) < 1e-9) p_anti += p;
    }
    const MeanSe a = mean_se_pairwise(co), b = mean_se_pairwise(anti);
    EXPECT_LE(std::fabs(a.mean - p_co), 3.0 * a.se);
    EXPECT_LE(std::fabs(b.mean - p_anti), 3.0 * b.se);
    EXPECT_NEAR(p_co, ex.pi, 1e-15);
}

TEST(Coupler, ReflectionPreservesMeanDistance) {
    const EulerModel m = linear_model(0.1, std::sqrt(0.1));
    const Coupler cp(m, NoiseSpec::gaussian(), CouplingKind::Reflection);
    const std::size_t n = 1'000'000;
    std::vector<double> r(n);
    double r_hat = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Stream rng(7, i);
        const auto s = cp.step({0.0}, {1.0}, rng);
        r[i] = s.r_after;
        r_hat = s.r_hat;
    }
    const MeanSe ms = mean_se_pairwise(r);
    EXPECT_LE(std::fabs(ms.mean - r_hat), 4.0 * ms.se * std::sqrt(1.0));
}

TEST(Coupler, ReflectionCoalescesAtLeastJ) {
    const double g = 0.5, kappa = 1.0;
    const EulerModel m = zero_drift(g, kappa);
    const Coupler cp(m, NoiseSpec::cauchy(), CouplingKind::Reflection);
    const auto st = estimate_coupling_stats(cp, {0.6}, {0.0}, {}, 100000, 8);
    EXPECT_GE(st.pi.mean + 3.0 * st.pi.se, overlap_J(NoiseSpec::cauchy(), kappa / g));
}

TEST(Coupler, RequiresC4) {
    try {
        Coupler cp(linear_model(0.1, 0.1), NoiseSpec::nonisotropic(1.5), CouplingKind::Reflection);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "condition c4 violated");
    }
    EXPECT_NO_THROW(Coupler(linear_model(0.1, 0.1), NoiseSpec::nonisotropic(1.5), CouplingKind::RefinedBasic));
    EXPECT_THROW(Coupler(linear_model(0.1, 0.1, 0.0), NoiseSpec::gaussian(), CouplingKind::RefinedBasic), Error);
}

TEST(Coupler, Deterministic) {
    const Coupler cp(linear_model(0.1, std::sqrt(0.1)), NoiseSpec::stable(1.5, 1), CouplingKind::Reflection);
    for (std::size_t i = 0; i < 100; ++i) {
        Stream a(9, i), b(9, i);
        const auto s = cp.step({0.0}, {2.0}, a), t = cp.step({0.0}, {2.0}, b);
        EXPECT_EQ(s.X, t.X);
        EXPECT_EQ(s.Y, t.Y);
        EXPECT_EQ(s.branch, t.branch);
    }
}

TEST(Mixed, FarPairsMoveSynchronously) {
    const Coupler cp(linear_model(0.1, std::sqrt(0.1)), NoiseSpec::gaussian(), CouplingKind::Mixed, {1.0, 3.0});
    for (std::size_t i = 0; i < 1000; ++i) {
        Stream rng(10, i);
        const auto s = cp.step({0.0}, {2.0}, rng);
        EXPECT_EQ(s.branch, Branch::Synchronous);
        EXPECT_NEAR(s.r_after, s.r_hat, 1e-14);
    }
}

TEST(Mixed, JumpBound) {
    const EulerModel m = linear_model(0.1, std::sqrt(0.1), 0.05);
    const MixedParams mp{1.0, 2.0};
    const Coupler cp(m, NoiseSpec::gaussian(), CouplingKind::Mixed, mp);
    const double l = mp.jump_bound(m);
    Vec x{0.0}, y{0.8};
    std::size_t violations = 0;
    Stream rng(11, 0);
    for (std::size_t i = 0; i < 1'000'000; ++i) {
        const auto s = cp.step(x, y, rng);
        if (s.r_after > s.r_before + l) ++violations;
        x = s.X;
        y = s.Y;
        if (s.coalesced) y = {x[0] + 0.8};
    }
    EXPECT_EQ(violations, 0u);
}

TEST(Mixed, LargeParametersRecoverReflection) {
    const EulerModel m = linear_model(0.1, std::sqrt(0.1));
    const Coupler mixed(m, NoiseSpec::gaussian(), CouplingKind::Mixed, {1e9, 1e9});
    const Coupler refl(m, NoiseSpec::gaussian(), CouplingKind::Reflection);
    const auto a = estimate_coupling_stats(mixed, {0.0}, {0.3}, {}, 200000, 12);
    const auto b = estimate_coupling_stats(refl, {0.0}, {0.3}, {}, 200000, 13);
    EXPECT_LE(std::fabs(a.pi.mean - b.pi.mean), 3.0 * std::hypot(a.pi.se, b.pi.se));
}
