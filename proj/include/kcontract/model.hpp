#pragma once

// Euler-type chain x -> x + h b(x) + g xi and a catalogue of drifts with tracked constants.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "kcontract/core.hpp"
#include "kcontract/expr.hpp"
#include "kcontract/rng.hpp"

namespace kcontract {

struct EulerModel {
    std::function<Vec(const Vec&)> b;
    double L = 1.0;
    double K = 1.0;
    double R = 1.0;
    double h = 0.1;
    double g = 1.0;
    double kappa = kInf;
    double kappa0 = 1.0;
    std::size_t d = 1;
    std::string drift_name;

    Vec x_hat(const Vec& x) const { return axpy(x, h, b(x)); }

    // c0 = (K - h L^2 / 2) h
    double c0() const { return (K - 0.5 * h * L * L) * h; }
};

// Drift with analytically tracked constants. K depends on the radius R.
struct Drift {
    std::function<Vec(const Vec&)> b;
    double L = 0.0;
    std::function<double(double)> K_of_R;
    // <x, b(x)> <= M1 - M2 |x|^2
    double M1 = 0.0;
    double M2 = 0.0;
    std::string name;
};

// b(x) = -theta x
inline Drift drift_linear(double theta) {
    if (!(theta > 0.0)) throw Error("theta must be positive");
    return {[theta](const Vec& x) { return scale(-theta, x); }, theta, [theta](double) { return theta; }, 0.0, theta,
            "linear"};
}

// b(x) = -theta x + beta tanh(x), tanh componentwise
inline Drift drift_linear_tanh(double theta, double beta, std::size_t d) {
    if (!(theta > 0.0)) throw Error("theta must be positive");
    Drift out;
    out.b = [theta, beta](const Vec& x) {
        Vec y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = -theta * x[i] + beta * std::tanh(x[i]);
        return y;
    };
    out.L = std::max(theta, std::fabs(beta - theta));
    const double sd = std::sqrt(static_cast<double>(d));
    if (d == 1)
        out.K_of_R = [theta, beta](double R) { return theta - 2.0 * std::fabs(beta) * std::tanh(0.5 * R) / R; };
    else
        out.K_of_R = [theta, beta, sd](double R) { return theta - 2.0 * std::fabs(beta) * sd / R; };
    out.M2 = 0.5 * theta;
    out.M1 = beta * beta * static_cast<double>(d) / (2.0 * theta);
    out.name = "linear+tanh";
    return out;
}

// b(x) = -theta x + beta x e^{-|x|^2/2}
inline Drift drift_linear_bump(double theta, double beta, std::size_t) {
    if (!(theta > 0.0)) throw Error("theta must be positive");
    Drift out;
    out.b = [theta, beta](const Vec& x) {
        const double w = beta * std::exp(-0.5 * dot(x, x));
        Vec y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = (-theta + w) * x[i];
        return y;
    };
    const double ab = std::fabs(beta);
    out.L = std::max(theta + 2.0 * ab * std::exp(-1.5), std::fabs(ab - theta));
    out.K_of_R = [theta, ab](double R) { return std::max(theta - ab, theta - 2.0 * ab * std::exp(-0.5) / R); };
    // <x, bump(x)> = |x|^2 e^{-|x|^2/2} <= 2/e
    out.M2 = theta;
    out.M1 = 2.0 * ab * std::exp(-1.0);
    out.name = "linear+bounded-bump";
    return out;
}

// User expression; constants are supplied by the caller and sampled-verified.
inline Drift drift_expression(const std::string& src, std::size_t d) {
    Drift out;
    out.b = expr::compile_drift(src, d);
    out.name = "expression";
    return out;
}

// Sampled check of |b(x)-b(y)| <= L|x-y| and <x-y, b(x)-b(y)> <= -K|x-y|^2
// for |x-y| >= R, and K <= L. Throws "drift constants violated: <which>".
inline void verify_model(const EulerModel& m, std::size_t pairs = 10000, std::uint64_t seed = 0x5eed) {
    if (!(m.K <= m.L)) throw Error("drift constants violated: K > L");
    if (!(m.L > 0.0) || !(m.K > 0.0) || !(m.R > 0.0)) throw Error("drift constants violated: L, K, R must be positive");
    const double box = 2.0 * m.R + 5.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        Stream rng(seed, i);
        Vec x(m.d), u(m.d);
        for (auto& v : x) v = box * (2.0 * rng.uniform() - 1.0);
        for (auto& v : u) v = rng.normal();
        const double nu = norm(u);
        // half the pairs beyond R, half on a log scale below it
        const double r = (i % 2 == 0) ? m.R * (1.0 + 3.0 * rng.uniform()) : m.R * std::pow(10.0, -4.0 * rng.uniform());
        const Vec y = axpy(x, r / nu, u);
        const Vec db = sub(m.b(x), m.b(y));
        const double rr = distance(x, y);
        if (norm(db) > m.L * rr * (1.0 + 1e-9) + 1e-12) throw Error("drift constants violated: L");
        if (rr >= m.R && -dot(sub(x, y), db) < m.K * rr * rr * (1.0 - 1e-9) - 1e-12)
            throw Error("drift constants violated: K");
    }
}

// Sampled check of <x, b(x)> <= M1 - M2 |x|^2.
inline void verify_lyapunov_drift(const EulerModel& m, double M1, double M2, std::size_t n = 10000,
                                  std::uint64_t seed = 0x1a9) {
    const double box = 4.0 * m.R + 10.0;
    for (std::size_t i = 0; i < n; ++i) {
        Stream rng(seed, i);
        Vec x(m.d);
        const double scale_i = box * std::pow(10.0, -3.0 * rng.uniform());
        for (auto& v : x) v = scale_i * (2.0 * rng.uniform() - 1.0);
        if (dot(x, m.b(x)) > M1 - M2 * dot(x, x) + 1e-9 * (1.0 + dot(x, x)))
            throw Error("lyapunov drift condition violated: <x, b(x)> <= M1 - M2 |x|^2");
    }
}

}  // namespace kcontract
