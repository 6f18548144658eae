#pragma once

// Symmetric alpha-stable law with characteristic function exp(-|t|^alpha):
// density, distribution function, samplers and absolute moments.

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "kcontract/core.hpp"
#include "kcontract/numeric.hpp"
#include "kcontract/rng.hpp"

namespace kcontract::stable {

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw Error("alpha out of range");
}

// Near alpha = 1 the integral representation below loses accuracy; there the
// direct Fourier inversion takes over.
inline constexpr double kNearOne = 0.05;

// ============================================================================
// Fourier inversion (reference route)
// ============================================================================

namespace detail {

// Integrates w(t) e^{-t^alpha} over (0, inf) where w oscillates with frequency x.
template <class W>
double fourier_integral(double alpha, double x, W&& w) {
    const double t_max = std::pow(45.0, 1.0 / alpha);
    const double step = x > 0.0 ? std::min(1.0, kPi / (2.0 * x)) : 1.0;
    const auto& gl = gauss20();
    auto f = [&](double t) { return w(t) * std::exp(-std::pow(t, alpha)); };
    double s = 0.0;
    // geometric panels resolve the t^alpha cusp at the origin
    double hi = step;
    for (int k = 0; k < 60; ++k) {
        const double lo = hi * 0.5;
        s += gl.integrate(f, lo, hi);
        hi = lo;
    }
    for (double lo = step; lo < t_max; lo += step) s += gl.integrate(f, lo, std::min(lo + step, t_max));
    return s;
}

}  // namespace detail

inline double density_fourier(double alpha, double x) {
    x = std::fabs(x);
    return detail::fourier_integral(alpha, x, [x](double t) { return std::cos(x * t); }) / kPi;
}

inline double cdf_fourier(double alpha, double x) {
    if (x == 0.0) return 0.5;
    const double s = detail::fourier_integral(alpha, std::fabs(x), [x](double t) { return std::sin(x * t) / t; });
    return 0.5 + s / kPi;
}

// ============================================================================
// Integral representation (Zolotarev / Nolan form, symmetric case)
// ============================================================================

namespace detail {

inline double log_v(double alpha, double theta) {
    const double e = alpha / (alpha - 1.0);
    return e * (std::log(std::cos(theta)) - std::log(std::sin(alpha * theta))) +
           std::log(std::cos((alpha - 1.0) * theta)) - std::log(std::cos(theta));
}

// theta where x^{alpha/(alpha-1)} V(theta) = 1; V is monotone on (0, pi/2).
inline double split_point(double alpha, double log_xp) {
    double lo = 0.0, hi = kPi / 2.0;
    const bool decreasing = alpha > 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double g = log_xp + log_v(alpha, mid);
        if ((g > 0.0) == decreasing)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

template <class F>
double split_integral(double alpha, double log_xp, F&& integrand) {
    const double mid = split_point(alpha, log_xp);
    auto f = [&](double th) {
        if (th <= 0.0 || th >= kPi / 2.0) return integrand(th <= 0.0 ? (alpha > 1 ? kInf : 0.0) : (alpha > 1 ? 0.0 : kInf));
        return integrand(std::exp(log_xp + log_v(alpha, th)));
    };
    const std::function<double(double)> fn = f;
    double s = 0.0;
    if (mid > 0.0) s += adaptive_simpson(fn, 0.0, mid, 1e-13 * mid, 50);
    if (mid < kPi / 2.0) s += adaptive_simpson(fn, mid, kPi / 2.0, 1e-13 * (kPi / 2.0 - mid), 50);
    return s;
}

}  // namespace detail

inline double density_direct(double alpha, double x) {
    check_alpha(alpha);
    x = std::fabs(x);
    if (alpha == 1.0) return 1.0 / (kPi * (1.0 + x * x));
    if (std::fabs(alpha - 1.0) < kNearOne) return density_fourier(alpha, x);
    if (x < 1e-12) return std::tgamma(1.0 + 1.0 / alpha) / kPi;
    const double log_xp = alpha / (alpha - 1.0) * std::log(x);
    const double s = detail::split_integral(alpha, log_xp, [](double t) {
        if (t == 0.0 || std::isinf(t)) return 0.0;
        return t * std::exp(-t);
    });
    return alpha / (kPi * std::fabs(alpha - 1.0) * x) * s;
}

// P(X > x) for x >= 0, accurate in relative terms in the tail.
inline double survival(double alpha, double x) {
    check_alpha(alpha);
    if (x < 0.0) return 1.0 - survival(alpha, -x);
    if (alpha == 1.0) return 0.5 - std::atan(x) / kPi;
    if (std::fabs(alpha - 1.0) < kNearOne) return 1.0 - cdf_fourier(alpha, x);
    if (x == 0.0) return 0.5;
    const double log_xp = alpha / (alpha - 1.0) * std::log(x);
    if (alpha > 1.0) return detail::split_integral(alpha, log_xp, [](double t) { return std::exp(-t); }) / kPi;
    return -detail::split_integral(alpha, log_xp, [](double t) { return std::expm1(-t); }) / kPi;
}

inline double cdf(double alpha, double x) { return x >= 0.0 ? 1.0 - survival(alpha, x) : survival(alpha, -x); }

// ============================================================================
// Cached density table
// ============================================================================

// Density on |x| <= 100 interpolated from knots uniform in u = asinh(x); the
// change of variable puts knots densely where the density curves most.
class DensityTable {
public:
    static constexpr double kXMax = 100.0;
    static constexpr int kKnots = 1 << 13;

    explicit DensityTable(double alpha) : alpha_(alpha) {
        const double umax = std::asinh(kXMax);
        const double du = umax / (kKnots - 1);
        std::vector<double> y(kKnots + 2);
        for (int i = 0; i < kKnots + 2; ++i) y[i] = density_direct(alpha, std::sinh(std::min(i, kKnots + 1) * du));
        std::vector<double> slope(kKnots);
        for (int i = 0; i < kKnots; ++i) slope[i] = i == 0 ? 0.0 : (y[i + 1] - y[i - 1]) / (2.0 * du);
        y.resize(kKnots);
        interp_ = MonotoneCubic(0.0, du, std::move(y), std::move(slope));
    }

    double operator()(double x) const {
        x = std::fabs(x);
        if (x > kXMax) return density_direct(alpha_, x);
        return interp_(std::asinh(x));
    }

    static const DensityTable& get(double alpha) {
        static std::mutex mu;
        static std::map<double, std::unique_ptr<DensityTable>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto& slot = cache[alpha];
        if (!slot) slot = std::make_unique<DensityTable>(alpha);
        return *slot;
    }

private:
    double alpha_;
    MonotoneCubic interp_;
};

inline double density(double alpha, double x) {
    check_alpha(alpha);
    if (alpha == 1.0) return 1.0 / (kPi * (1.0 + x * x));
    return DensityTable::get(alpha)(x);
}

// Distribution function on |x| <= 100 from the density table, integrated
// knot to knot in u = asinh(x); the direct integral takes over beyond.
class CdfTable {
public:
    // Survival P(X > x) on [0, kXMax], accumulated inward from the direct value
    // at kXMax so the upper tail keeps relative precision.
    explicit CdfTable(double alpha) : alpha_(alpha) {
        const auto& dens = DensityTable::get(alpha);
        const int n = DensityTable::kKnots;
        const double du = std::asinh(DensityTable::kXMax) / (n - 1);
        const auto& gl = gauss20();
        auto f = [&](double u) { return dens(std::sinh(u)) * std::cosh(u); };
        std::vector<double> y(n), slope(n);
        double acc = survival(alpha, DensityTable::kXMax);
        for (int i = n - 1; i >= 0; --i) {
            if (i < n - 1) acc += gl.integrate(f, i * du, (i + 1) * du);
            y[i] = acc;
            slope[i] = -f(i * du);
        }
        interp_ = MonotoneCubic(0.0, du, std::move(y), std::move(slope));
    }

    double survival_at(double x) const {
        if (x < 0.0) return 1.0 - survival_at(-x);
        if (x > DensityTable::kXMax) return survival(alpha_, x);
        return interp_(std::asinh(x));
    }
    double operator()(double x) const { return x >= 0.0 ? 1.0 - survival_at(x) : survival_at(-x); }

    static const CdfTable& get(double alpha) {
        static std::mutex mu;
        static std::map<double, std::unique_ptr<CdfTable>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto& slot = cache[alpha];
        if (!slot) slot = std::make_unique<CdfTable>(alpha);
        return *slot;
    }

private:
    double alpha_;
    MonotoneCubic interp_;
};

inline double cdf_cached(double alpha, double x) {
    check_alpha(alpha);
    if (alpha == 1.0) return 0.5 + std::atan(x) / kPi;
    return CdfTable::get(alpha)(x);
}

inline double survival_cached(double alpha, double x) {
    check_alpha(alpha);
    if (alpha == 1.0) return 0.5 - std::atan(x) / kPi;
    return CdfTable::get(alpha).survival_at(x);
}

// ============================================================================
// Sampling and moments
// ============================================================================

// Chambers-Mallows-Stuck, symmetric case.
inline double sample_1d(double alpha, Stream& rng) {
    const double v = kPi * (rng.uniform() - 0.5);
    const double w = rng.exponential();
    if (alpha == 1.0) return std::tan(v);
    return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

// Positive stable amplitude with Laplace transform exp(-s^a), a in (0,1)
// (Kanter's representation).
inline double sample_positive(double a, Stream& rng) {
    const double u = kPi * rng.uniform();
    const double w = rng.exponential();
    return std::sin(a * u) / std::pow(std::sin(u), 1.0 / a) * std::pow(std::sin((1.0 - a) * u) / w, (1.0 - a) / a);
}

// Isotropic d-dimensional draw: sqrt(A) * N(0, 2 I) with A positive alpha/2-stable.
inline Vec sample_isotropic(double alpha, std::size_t d, Stream& rng) {
    const double amp = std::sqrt(2.0 * sample_positive(alpha / 2.0, rng));
    Vec z(d);
    for (auto& zi : z) zi = amp * rng.normal();
    return z;
}

// E|X|^p for the isotropic law in R^d, valid for p < alpha.
inline double abs_moment(double alpha, std::size_t d, double p) {
    if (!(p < alpha)) throw Error("moment unavailable");
    const double hd = 0.5 * static_cast<double>(d);
    return std::pow(2.0, p) * std::tgamma(hd + 0.5 * p) * std::tgamma(1.0 - p / alpha) /
           (std::tgamma(hd) * std::tgamma(1.0 - 0.5 * p));
}

}  // namespace kcontract::stable
