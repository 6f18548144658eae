#include <gtest/gtest.h>

#include <cmath>

#include "kcontract/model.hpp"
#include "kcontract/numeric.hpp"

using namespace kcontract;

namespace {

EulerModel from_drift(const Drift& dr, double R, double h, std::size_t d = 1) {
    return {dr.b, dr.L, dr.K_of_R(R), R, h, std::sqrt(h), kInf, 1.0, d, dr.name};
}

double eval1(const std::string& src, double x) { return expr::compile_drift(src, 1)({x})[0]; }

}  // namespace

TEST(Expr, PrecedenceAndAssociativity) {
    EXPECT_EQ(eval1("1 + 2 * 3", 0.0), 7.0);
    EXPECT_EQ(eval1("(1 + 2) * 3", 0.0), 9.0);
    EXPECT_EQ(eval1("2 ^ 3 ^ 2", 0.0), 512.0);
    EXPECT_EQ(eval1("-2 ^ 2", 0.0), -4.0);
    EXPECT_EQ(eval1("8 / 4 / 2", 0.0), 1.0);
    EXPECT_EQ(eval1("1 - 2 - 3", 0.0), -4.0);
    EXPECT_DOUBLE_EQ(eval1("-x + 2*tanh(x)", 0.7), -0.7 + 2.0 * std::tanh(0.7));
    EXPECT_DOUBLE_EQ(eval1("1.5e-1 * x", 2.0), 0.3);
}

TEST(Expr, FunctionsAndConstants) {
    EXPECT_DOUBLE_EQ(eval1("sin(pi / 2)", 0.0), 1.0);
    EXPECT_DOUBLE_EQ(eval1("log(e)", 0.0), 1.0);
    EXPECT_EQ(eval1("abs(x) + sqrt(4)", -3.0), 5.0);
    EXPECT_DOUBLE_EQ(eval1("exp(x) * cos(0) + atan(0) + tan(0)", 1.0), std::exp(1.0));
}

TEST(Expr, VectorComponents) {
    const auto b = expr::compile_drift("-x1 + 0.5*x2; -x2", 2);
    EXPECT_EQ(b({1.0, 2.0}), (Vec{0.0, -2.0}));
}

TEST(Expr, Errors) {
    EXPECT_THROW(eval1("1 +", 0.0), Error);
    EXPECT_THROW(eval1("foo(x)", 0.0), Error);
    EXPECT_THROW(eval1("(1 + 2", 0.0), Error);
    EXPECT_THROW(eval1("1 2", 0.0), Error);
    EXPECT_THROW(expr::compile_drift("x3", 2), Error);
    try {
        expr::compile_drift("-x1", 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "expression has 1 components, expected 2");
    }
    try {
        eval1("x $ 2", 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(std::string(e.what()).rfind("expression error at 2", 0), 0u);
    }
}

TEST(Drift, ExpressionMatchesBuiltin) {
    const Drift a = drift_linear_tanh(1.0, 2.0, 1), b = drift_expression("-x + 2*tanh(x)", 1);
    for (double x : linear_grid(-5.0, 5.0, 41)) EXPECT_NEAR(a.b({x})[0], b.b({x})[0], 1e-15);
}

TEST(Drift, TrackedConstantsPassSampledCheck) {
    for (std::size_t d : {1, 3}) {
        const Drift dr = drift_linear_tanh(1.0, 2.0, d);
        const EulerModel m = from_drift(dr, 8.0, 0.1, d);
        EXPECT_NO_THROW(verify_model(m)) << d;
        EXPECT_NO_THROW(verify_lyapunov_drift(m, dr.M1, dr.M2)) << d;
    }
    const Drift bump = drift_linear_bump(1.0, 0.5, 2);
    EXPECT_NO_THROW(verify_model(from_drift(bump, 2.0, 0.1, 2)));
    EXPECT_NO_THROW(verify_lyapunov_drift(from_drift(bump, 2.0, 0.1, 2), bump.M1, bump.M2));
}

TEST(Drift, TanhConstantsClosedForm) {
    const Drift dr = drift_linear_tanh(1.0, 2.0, 1);
    EXPECT_EQ(dr.L, 1.0);
    EXPECT_NEAR(dr.K_of_R(8.0), 1.0 - 0.5 * std::tanh(4.0), 1e-15);
    EXPECT_EQ(dr.M2, 0.5);
    EXPECT_EQ(dr.M1, 2.0);
    EXPECT_THROW(drift_linear(0.0), Error);
}

TEST(VerifyModel, Errors) {
    const Drift dr = drift_linear_tanh(1.0, 2.0, 1);
    auto expect_msg = [](const EulerModel& m, const char* msg) {
        try {
            verify_model(m);
            FAIL() << msg;
        } catch (const Error& e) {
            EXPECT_STREQ(e.what(), msg);
        }
    };
    EulerModel m = from_drift(dr, 8.0, 0.1);
    m.L = 0.5;
    m.K = 0.4;
    expect_msg(m, "drift constants violated: L");
    m = from_drift(dr, 8.0, 0.1);
    m.K = 0.9;
    expect_msg(m, "drift constants violated: K");
    m.K = 2.0;
    expect_msg(m, "drift constants violated: K > L");
    m.K = -1.0;
    expect_msg(m, "drift constants violated: L, K, R must be positive");
}

TEST(VerifyModel, LyapunovViolation) {
    const Drift dr = drift_linear_tanh(1.0, 2.0, 1);
    EXPECT_THROW(verify_lyapunov_drift(from_drift(dr, 8.0, 0.1), 0.1, 0.5), Error);
}

TEST(EulerModel, PredictorAndC0) {
    const Drift dr = drift_linear(2.0);
    const EulerModel m{dr.b, 2.0, 2.0, 1.0, 0.1, std::sqrt(0.1), kInf, 1.0, 1, dr.name};
    EXPECT_NEAR(m.x_hat({1.0})[0], 0.8, 1e-15);
    EXPECT_NEAR(m.c0(), (2.0 - 0.5 * 0.1 * 4.0) * 0.1, 1e-15);
}
