#include <gtest/gtest.h>

#include <cmath>

#include "kcontract/rho.hpp"

using namespace kcontract;

namespace {

// pi = 1/2 everywhere, beta = 0.005 on (0, 1], beta = -0.1 r beyond.
AssumptionA flat_assumption(double r0 = 1.0, double r1 = 1.0) {
    CouplingStatsProfile p;
    p.pi_lower = [](double) { return 0.5; };
    p.beta_upper = [r1](double r) { return r <= r1 ? 0.005 : -0.1 * r; };
    p.alpha_lower = [](double r, double) { return 0.25 * r * r; };
    return {r0, r1, 0.1, p, std::nullopt, {}};
}

AssumptionB w1_assumption(double r1, double l0, double c0 = 0.1) {
    CouplingStatsProfile p;
    p.pi_lower = [](double) { return 0.0; };
    p.beta_upper = [c0](double r) { return -c0 * r; };
    p.alpha_lower = [](double r, double) { return 0.2 * r; };
    AssumptionB q;
    q.profile = p;
    q.l0 = l0;
    q.r1 = r1;
    q.c0 = c0;
    return q;
}

RhoSpec tv_spec(double a, double c, double r1) {
    RhoSpec s;
    s.kind = RhoKind::TV;
    s.a = a;
    s.c = c;
    s.r0 = s.r1 = r1;
    return s;
}

bool all_pass(const std::vector<ShapeCheck>& checks) {
    bool ok = true;
    for (const auto& c : checks) {
        EXPECT_TRUE(c.pass) << c.name << " worst=" << c.worst;
        ok = ok && c.pass;
    }
    return ok;
}

}  // namespace

TEST(Tv, UnitCancellationAtR1) {
    const RhoSpec s = tv_spec(1.0, 1.0, 1.0);
    EXPECT_NEAR(s.radial(1.0), 1.0, 1e-15);
    EXPECT_NEAR(s({0.0}, {1.0}), 2.0, 1e-15);
}

TEST(Tv, ZeroOnDiagonal) {
    const RhoSpec s = build_tv_distance(flat_assumption(), true);
    EXPECT_EQ(s({0.3}, {0.3}), 0.0);
    EXPECT_EQ(s({1.0, -2.0}, {1.0, -2.0}), 0.0);
}

TEST(Tv, SimplifiedConstants) {
    const RhoSpec s = build_tv_distance(flat_assumption(), true);
    EXPECT_EQ(s.c, 1.0);
    EXPECT_EQ(s.r0, s.r1);
    EXPECT_NEAR(s.a, 1.0273575888234288, 1e-12);
}

TEST(Tv, FullModeUsesAlphaRatio) {
    // sup 4 beta / alpha over (0.5, 1] = 4 * 0.005 / 0.0625 = 0.32
    const RhoSpec s = build_tv_distance(flat_assumption(0.5, 1.0), false);
    EXPECT_NEAR(s.c, 1.32, 1e-8);  // sampled envelope, grid excludes r0
}

TEST(Tv, RejectsBadRadii) {
    try {
        build_tv_distance(flat_assumption(2.0, 1.0), false);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "assumption A violated: 0 < r0 <= r1");
    }
    EXPECT_THROW(build_tv_distance(flat_assumption(0.0, 1.0), false), Error);
}

TEST(Tv, RejectsZeroCoalescence) {
    auto q = flat_assumption();
    q.profile.pi_lower = [](double) { return 0.0; };
    try {
        build_tv_distance(q, true);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "assumption A violated: a1");
    }
}

TEST(Tv, ShapeAndSandwich) {
    const RhoSpec s = build_tv_distance(flat_assumption(0.5, 1.0), false);
    EXPECT_TRUE(all_pass(check_shape(s)));
    const auto [lo, hi] = comparability_bounds(s);
    EXPECT_NEAR(lo * hi, 1.0, 1e-12);
    for (double r : log_grid(1e-6, 1e3, 500)) {
        const double v = s({0.0}, {r});
        EXPECT_LE(lo * (1.0 + r), v * (1 + 1e-12));
        EXPECT_LE(v, hi * (1.0 + r) * (1 + 1e-12));
    }
}

TEST(WeightedTv, EpsilonAndA) {
    EXPECT_NEAR(weighted_tv_epsilon(1.0, 1.0, 0.1, 1.0), 0.004598493014643029, 1e-15);
    EXPECT_DOUBLE_EQ(weighted_tv_A(1.0, 1.0, 0.5, 1.0), 32.0);
}

TEST(WeightedTv, BuildAndEvaluate) {
    LyapunovData lyap;
    lyap.V = [](const Vec& x) { return dot(x, x); };
    lyap.v_sum_min = [](double r) { return 0.5 * r * r; };
    lyap.lambda = 0.5;
    lyap.C0 = 1.0;
    lyap.K = 1.0;
    lyap.r1 = 1.0;
    auto q = flat_assumption(0.5, 1.0);
    const RhoSpec s = build_weighted_tv_distance(q, lyap);
    // sup 2 beta/alpha on (0.5, 1] = 0.16, A = 16 K C0 / (lambda inf alpha) = 32 / 0.0625
    EXPECT_NEAR(s.c, 0.16 + 512.0 + 1.0, 1e-5);
    EXPECT_EQ(s({2.0}, {2.0}), 0.0);
    const Vec x{1.0}, y{-1.0};
    EXPECT_NEAR(s(x, y), s.a + s.radial(2.0) + s.epsilon * 2.0, 1e-12);
    EXPECT_EQ(s(x, y), s(y, x));
}

TEST(WeightedTv, LambdaOutOfRange) {
    LyapunovData lyap;
    lyap.V = [](const Vec& x) { return dot(x, x); };
    lyap.lambda = 1.5;
    lyap.C0 = 1.0;
    lyap.r1 = 1.0;
    try {
        build_weighted_tv_distance(flat_assumption(), lyap);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "lambda out of range");
    }
}

TEST(WeightedTv, NanLyapunovPropagates) {
    RhoSpec s;
    s.kind = RhoKind::WeightedTV;
    s.a = 1.0;
    s.epsilon = 0.1;
    s.lyapunov = [](const Vec&) { return std::nan(""); };
    EXPECT_THROW(s({0.0}, {1.0}), Error);
}

TEST(W1, ClosedFormHead) {
    RhoSpec s;
    s.kind = RhoKind::W1;
    s.c = 1.0;
    s.r1 = 1.0;
    s.l0 = 0.5;
    EXPECT_NEAR(s.radial(1.0), 0.6321205588285577, 1e-15);
    EXPECT_EQ(s.radial(0.0), 0.0);
}

TEST(W1, BuilderAndSplice) {
    const RhoSpec s = build_w1_distance(w1_assumption(0.5, 0.5));
    EXPECT_EQ(s.c, 1.0);
    EXPECT_TRUE(all_pass(check_shape(s)));
}

TEST(W1, SineProfileQuadrature) {
    auto q = w1_assumption(1.0, 0.2);
    q.psi = ConcavityProfile::sine(2.0);
    const RhoSpec s = build_w1_distance(q);
    EXPECT_TRUE(all_pass(check_shape(s)));
    // doubled knot resolution changes cached values by < 1e-9
    const auto fine = build_head_cache(q.psi, s.c, s.splice(), 2 * HeadCache::kKnots);
    for (std::size_t i = 0; i < s.head->values.size(); ++i)
        ASSERT_NEAR(s.head->values[i], fine->values[2 * i], 1e-9);
    // knot + local integral agrees with a direct integral
    const std::function<double(double)> f = [&](double u) { return std::exp(-s.c * q.psi.psi(u)); };
    EXPECT_NEAR(s.head_value(0.7777), adaptive_simpson(f, 0.0, 0.7777, 1e-13, 50), 1e-11);
}

TEST(W1, LogTwoBudget) {
    try {
        build_w1_distance(w1_assumption(0.5, 0.8));
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "b2 violated");
    }
}

TEST(ConcavityProfile, RejectsConvex) {
    ConcavityProfile p{[](double r) { return r * r; }, [](double r) { return 2 * r; }, [](double) { return 2.0; },
                       "square"};
    EXPECT_THROW(p.validate(1.0), Error);
}

TEST(Wp, AFormula) {
    EXPECT_NEAR(wp_A(3.0, 10.0, 2.0, 1.0, 2.0), 2.3245567440574373e-12, 1e-24);
}

TEST(Wp, InflectionAndShape) {
    const RhoSpec s = build_wp_distance(w1_assumption(2.0, 0.5, 1.0), 3.0, 0.1);
    EXPECT_EQ(s.radial(0.0), 0.0);
    EXPECT_LT(std::fabs(s.radial_d2((s.k + 1.0) * s.splice())), 1e-9);
    EXPECT_TRUE(all_pass(check_shape(s)));
}

TEST(Wp, TinyAStillMonotone) {
    // the k floor is 129 here, so A u^p sits below double resolution for r <= 1e3
    const RhoSpec s = build_wp_distance(w1_assumption(2.0, 0.5), 3.0, 0.5);
    EXPECT_LT(s.A, 1e-100);
    EXPECT_TRUE(all_pass(check_shape(s)));
}

TEST(Wp, Floors) {
    try {
        build_wp_distance(w1_assumption(1.2, 0.5), 3.0, 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "r1 too small vs l");
    }
    try {
        build_wp_distance(w1_assumption(2.0, 0.5), 3.0, 0.5, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(std::string(e.what()).rfind("k below floor: ", 0), 0u);
    }
    EXPECT_THROW(build_wp_distance(w1_assumption(2.0, 0.5), 2.0, 0.5), Error);
}

TEST(Eval, NegativeDistanceOnNan) {
    const RhoSpec s = tv_spec(1.0, 1.0, 1.0);
    try {
        s({std::nan("")}, {0.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "negative distance");
    }
}

TEST(Eval, IncrementMatchesDifference) {
    const RhoSpec s = tv_spec(3.0, 1.3, 2.0);
    const Vec x{0.0}, y{1.0};
    for (const Vec& Y : {Vec{0.5}, Vec{0.0}, Vec{4.0}}) {
        const Vec X{0.0};
        EXPECT_NEAR(s.increment(x, y, X, Y), s(X, Y) - s(x, y), 1e-14);
    }
    EXPECT_EQ(s.increment(x, x, x, x), 0.0);
}

TEST(Json, RoundTripIsBitExact) {
    auto q = w1_assumption(1.0, 0.2);
    q.psi = ConcavityProfile::sine(2.0);
    const RhoSpec s = build_wp_distance(q, 3.5, 0.0);
    const RhoSpec t = rho_from_json(nlohmann::json::parse(to_json(s).dump()));
    EXPECT_EQ(t.kind, s.kind);
    EXPECT_EQ(t.a, s.a);
    EXPECT_EQ(t.c, s.c);
    EXPECT_EQ(t.k, s.k);
    EXPECT_EQ(t.A, s.A);
    EXPECT_EQ(t.p, s.p);
    EXPECT_EQ(t.head->values, s.head->values);
    for (double r : {0.3, 1.1, 5.0, 40.0}) EXPECT_EQ(t.radial(r), s.radial(r));
}
