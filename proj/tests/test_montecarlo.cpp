#include <gtest/gtest.h>

#include <cmath>

#include "kcontract/montecarlo.hpp"
#include "kcontract/oracle.hpp"

using namespace kcontract;

namespace {

EulerModel zero_drift(double g, double kappa = kInf) {
    return {[](const Vec& x) { return Vec(x.size(), 0.0); }, 1.0, 1.0, 1.0, 0.1, g, kappa, 1.0, 1, "zero"};
}

EulerModel linear_model(double h, double kappa = kInf) {
    const auto dr = drift_linear(1.0);
    return {dr.b, 1.0, 1.0, 1.0, h, std::sqrt(h), kappa, 1.0, 1, dr.name};
}

RhoSpec tv_spec() {
    RhoSpec s;
    s.kind = RhoKind::TV;
    s.a = 1.0;
    s.c = 1.0;
    s.r0 = s.r1 = 1.0;
    return s;
}

NoiseSpec three_point() { return NoiseSpec::lattice(0.5, {0.25, 0.5, 0.25}); }

}  // namespace

TEST(Stats, EqualStatesCoalesce) {
    const Coupler cp(linear_model(0.1), NoiseSpec::gaussian(), CouplingKind::Reflection);
    const auto st = estimate_coupling_stats(cp, {0.2}, {0.2}, {1.0}, 5000, 1);
    EXPECT_EQ(st.pi.mean, 1.0);
    EXPECT_EQ(st.beta.mean, 0.0);
}

TEST(Stats, RefinedBasicDriftMatchesContraction) {
    // refined basic moves symmetrically, so E[r_after] = r_hat
    const EulerModel m = linear_model(0.1);
    const Coupler cp(m, NoiseSpec::gaussian(), CouplingKind::RefinedBasic);
    const auto st = estimate_coupling_stats(cp, {0.0}, {1.0}, {}, 400000, 2, 4);
    EXPECT_LE(std::fabs(st.beta.mean - (0.9 - 1.0)), 3.0 * st.beta.se);
}

TEST(Stats, InsufficientSamples) {
    const Coupler cp(linear_model(0.1), NoiseSpec::gaussian(), CouplingKind::Reflection);
    try {
        estimate_coupling_stats(cp, {0.0}, {1.0}, {}, 10, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "insufficient samples");
    }
}

TEST(Oracle, ThreePointRefinedBasicByHand) {
    const RhoSpec rho = tv_spec();
    const auto ex = oracle_exact({three_point(), zero_drift(1.0), CouplingKind::RefinedBasic, {}}, {0.5}, {0.0}, rho,
                                 {0.5, 1.0});
    // coalesce 1/4, anti-move 1/4 (r = 1), synchronous 1/2 (r = 1/2)
    EXPECT_NEAR(ex.pi, 0.25, 1e-12);
    EXPECT_NEAR(ex.beta, 0.0, 1e-12);
    EXPECT_NEAR(ex.r_after_law.at(0.0), 0.25, 1e-12);
    EXPECT_NEAR(ex.r_after_law.at(1.0), 0.25, 1e-12);
    EXPECT_NEAR(ex.r_after_law.at(0.5), 0.5, 1e-12);
    EXPECT_EQ(ex.r_after_law.size(), 3u);
    EXPECT_NEAR(ex.alpha[0].second, 0.03125, 1e-12);
    EXPECT_NEAR(ex.alpha[1].second, 0.0625, 1e-12);
    EXPECT_NEAR(ex.E_rho, 0.25 * (1.0 + rho.radial(1.0)) + 0.5 * (1.0 + rho.radial(0.5)), 1e-12);
}

TEST(Oracle, ThreePointReflectionByHand) {
    const auto ex =
        oracle_exact({three_point(), zero_drift(1.0), CouplingKind::Reflection, {}}, {0.5}, {0.0}, tv_spec());
    EXPECT_NEAR(ex.pi, 0.5, 1e-12);
    EXPECT_NEAR(ex.r_after_law.at(0.5), 0.25, 1e-12);
    EXPECT_NEAR(ex.r_after_law.at(1.5), 0.25, 1e-12);
    // mean distance is preserved by reflection
    EXPECT_NEAR(ex.beta, 0.0, 1e-12);
}

TEST(Oracle, RejectsLargeInstances) {
    const std::size_t n = 3'333'335;
    const auto big = NoiseSpec::lattice(1e-3, std::vector<double>(n, 1.0 / static_cast<double>(n)));
    try {
        oracle_exact({big, zero_drift(1.0), CouplingKind::RefinedBasic, {}}, {0.5}, {0.0}, tv_spec());
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "instance too large");
    }
    EXPECT_THROW(oracle_exact({NoiseSpec::gaussian(), zero_drift(1.0), CouplingKind::RefinedBasic, {}}, {0.5}, {0.0},
                              tv_spec()),
                 Error);
}

TEST(Oracle, AgreesWithMonteCarlo) {
    const auto lat = discretize(NoiseSpec::gaussian(), 0.05);
    const EulerModel m = zero_drift(0.5);
    const RhoSpec rho = tv_spec();
    // shift r_hat / g = 1 sits on the lattice, so every branch has mass
    for (auto kind : {CouplingKind::RefinedBasic, CouplingKind::Reflection, CouplingKind::Mixed}) {
        const MixedParams mp{1.0, 2.0};
        const Coupler cp(m, lat, kind, mp);
        const Vec x{0.3}, y{-0.2};
        const auto ex = oracle_exact({lat, m, kind, mp}, x, y, rho, {0.5});
        const auto st = estimate_coupling_stats(cp, x, y, {0.5}, 400000, 3, 4);
        EXPECT_LE(std::fabs(st.pi.mean - ex.pi), 3.0 * st.pi.se) << to_string(kind);
        EXPECT_LE(std::fabs(st.beta.mean - ex.beta), 3.0 * st.beta.se + 1e-15) << to_string(kind);
        EXPECT_LE(std::fabs(st.alpha[0].second.mean - ex.alpha[0].second), 3.0 * st.alpha[0].second.se + 1e-15);
        const auto rep = contraction_audit(cp, rho, 0.0, {{x, y}}, 400000, 4, 4);
        // 4 SE: twelve comparisons share this test
        EXPECT_LE(std::fabs(rep.rows[0].E_rho - ex.E_rho), 4.0 * rep.rows[0].se) << to_string(kind);
    }
}

TEST(Marginals, CouplingsPreserveMarginals) {
    for (auto kind : {CouplingKind::RefinedBasic, CouplingKind::Reflection, CouplingKind::Mixed}) {
        // l' = 3 makes the gate W and its shift W + t differ on heavy-tailed mass
        const Coupler cp(linear_model(0.1), NoiseSpec::cauchy(), kind, {2.0, 3.0});
        const auto rep = verify_marginals(cp, {0.0}, {0.6}, 100000, 5, 4);
        EXPECT_TRUE(rep.pass) << to_string(kind) << " " << rep.x.p_value << " " << rep.y.p_value;
    }
}

TEST(Marginals, CorruptedCouplerIsDetected) {
    Coupler cp(linear_model(0.1), NoiseSpec::gaussian(), CouplingKind::Reflection);
    cp.set_corrupt_ratio(true);
    const auto rep = verify_marginals(cp, {0.0}, {0.6}, 100000, 6, 4);
    EXPECT_FALSE(rep.pass);
    EXPECT_GT(rep.x.p_value, 1e-3);
    EXPECT_LT(rep.y.p_value, 1e-3);
}

TEST(Audit, EqualPointsPassAndCsvShape) {
    const Coupler cp(linear_model(0.1), NoiseSpec::gaussian(), CouplingKind::Reflection);
    const auto rep = contraction_audit(cp, tv_spec(), 0.01, {{{0.0}, {0.0}}}, 1000, 7);
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(audit_csv(rep).rfind("point,r,rho,E_rho,se,threshold,pass\n", 0), 0u);
}

TEST(Audit, StandardErrorHalvesWhenSamplesQuadruple) {
    const Coupler cp(linear_model(0.1), NoiseSpec::gaussian(), CouplingKind::Reflection);
    const auto pts = symmetric_pairs({0.5}, 1);
    const auto a = contraction_audit(cp, tv_spec(), 0.0, pts, 50000, 8, 4);
    const auto b = contraction_audit(cp, tv_spec(), 0.0, pts, 200000, 8, 4);
    EXPECT_NEAR(b.rows[0].se / a.rows[0].se, 0.5, 0.05);
}

TEST(Audit, IndependentOfWorkerCount) {
    const Coupler cp(linear_model(0.1), NoiseSpec::stable(1.5), CouplingKind::Reflection);
    const auto pts = symmetric_pairs({0.1, 1.0, 4.0}, 1);
    const auto a = contraction_audit(cp, tv_spec(), 0.01, pts, 20000, 9, 1);
    const auto b = contraction_audit(cp, tv_spec(), 0.01, pts, 20000, 9, 6);
    EXPECT_EQ(audit_csv(a), audit_csv(b));
}

TEST(Audit, InflatedRateFails) {
    const Coupler cp(linear_model(0.1), NoiseSpec::gaussian(), CouplingKind::Reflection);
    const auto rep = contraction_audit(cp, tv_spec(), 0.9, symmetric_pairs({0.5, 2.0}, 1), 20000, 10, 4);
    EXPECT_FALSE(rep.pass);
    EXPECT_EQ(rep.pass_rate, 0.0);
}

TEST(Trajectory, CoalescedFractionIsMonotone) {
    const Coupler cp(linear_model(0.1), NoiseSpec::cauchy(), CouplingKind::Reflection);
    const auto tr = simulate_coupled_chain(cp, tv_spec(), {1.0}, {-1.0}, 60, 4000, 11, 4);
    for (std::size_t t = 1; t < tr.rows.size(); ++t)
        EXPECT_GE(tr.rows[t].coalesced_frac, tr.rows[t - 1].coalesced_frac);
    EXPECT_GT(tr.rows.back().coalesced_frac, 0.5);
    // E rho decays roughly geometrically
    std::vector<double> t, le;
    for (const auto& r : tr.rows) {
        if (r.E_rho <= 0.0) break;
        t.push_back(static_cast<double>(r.t));
        le.push_back(std::log(r.E_rho));
    }
    EXPECT_LT(fit_slope(t, le), 0.0);
    EXPECT_FALSE(tr.w1_is_upper_bound);
    EXPECT_EQ(trajectory_csv(tr).substr(0, 2), "t,");
}

TEST(Trajectory, EqualStartsStayAtZero) {
    const Coupler cp(linear_model(0.1), NoiseSpec::gaussian(2), CouplingKind::Mixed, {1.0, 3.0});
    const auto tr = simulate_coupled_chain(cp, tv_spec(), {0.3, 0.1}, {0.3, 0.1}, 10, 500, 12);
    for (const auto& r : tr.rows) {
        EXPECT_EQ(r.W1, 0.0);
        EXPECT_EQ(r.E_rho, 0.0);
        EXPECT_EQ(r.coalesced_frac, 1.0);
    }
    EXPECT_TRUE(tr.w1_is_upper_bound);
}
