#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "kcontract/core.hpp"

namespace kcontract {

// ============================================================================
// Summation and grids
// ============================================================================

// Pairwise (tree) summation in a fixed order: the result depends only on the
// values and their order, never on how the work producing them was split.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = n == 1 ? lo : std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

// Points of (lo, hi]: uniform plus a log-spaced cluster near lo so that
// suprema/infima attained at the left end are not missed.
inline std::vector<double> half_open_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g;
    g.reserve(2 * n);
    const double w = hi - lo;
    for (std::size_t i = 1; i <= n; ++i) g.push_back(lo + w * static_cast<double>(i) / static_cast<double>(n));
    for (double t : log_grid(1e-9, 1.0 / static_cast<double>(n), n / 4 + 2)) g.push_back(lo + w * t);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    while (!g.empty() && g.front() <= lo) g.erase(g.begin());
    return g;
}

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

// ============================================================================
// Quadrature
// ============================================================================

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                           double fb, double whole, double eps, int depth, int max_depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    const double floor_eps = 8.0 * std::numeric_limits<double>::epsilon() * std::fabs(left + right);
    if (std::fabs(delta) <= 15.0 * std::max(eps, floor_eps)) return left + right + delta / 15.0;
    if (depth >= max_depth) throw Error("quadrature non-convergent");
    return simpson_step(f, a, m, fa, flm, fm, left, eps / 2.0, depth + 1, max_depth) +
           simpson_step(f, m, b, fm, frm, fb, right, eps / 2.0, depth + 1, max_depth);
}

}  // namespace detail

// Adaptive Simpson with absolute tolerance; throws "quadrature non-convergent"
// once the recursion depth limit is exceeded.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-10,
                               int max_depth = 40) {
    if (a == b) return 0.0;
    // Seed with a few panels so narrow features are not skipped by the first estimate.
    constexpr int kPanels = 8;
    double total = 0.0;
    for (int i = 0; i < kPanels; ++i) {
        const double lo = a + (b - a) * i / kPanels;
        const double hi = i + 1 == kPanels ? b : a + (b - a) * (i + 1) / kPanels;
        const double flo = f(lo), fhi = f(hi), fm = f(0.5 * (lo + hi));
        const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
        total += detail::simpson_step(f, lo, hi, flo, fm, fhi, whole, abs_tol / kPanels, 0, max_depth);
    }
    return total;
}

// Gauss-Legendre nodes/weights on [-1, 1], computed once by Newton iteration.
template <int N>
struct GaussLegendre {
    std::array<double, N> x{}, w{};
    GaussLegendre() {
        for (int i = 0; i < (N + 1) / 2; ++i) {
            double z = std::cos(kPi * (i + 0.75) / (N + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = z;
                for (int k = 2; k <= N; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N * (z * p1 - p0) / (z * z - 1.0);
                const double dz = p1 / dp;
                z -= dz;
                if (std::fabs(dz) < 1e-16) break;
            }
            x[i] = -z;
            x[N - 1 - i] = z;
            w[i] = w[N - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
    }
    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += w[i] * f(c + h * x[i]);
        return s * h;
    }
};

inline const GaussLegendre<20>& gauss20() {
    static const GaussLegendre<20> g;
    return g;
}

// ============================================================================
// Interpolation
// ============================================================================

// Piecewise cubic Hermite on a uniform grid with Fritsch-Carlson limited
// slopes: monotone data stays monotone between knots.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(double x0, double dx, std::vector<double> y, std::vector<double> slope)
        : x0_(x0), dx_(dx), y_(std::move(y)), m_(std::move(slope)) {
        for (std::size_t i = 0; i + 1 < y_.size(); ++i) {
            const double s = (y_[i + 1] - y_[i]) / dx_;
            if (s == 0.0) {
                m_[i] = m_[i + 1] = 0.0;
                continue;
            }
            const double a = m_[i] / s, b = m_[i + 1] / s;
            if (a < 0) m_[i] = 0.0;
            if (b < 0) m_[i + 1] = 0.0;
            const double r = a * a + b * b;
            if (r > 9.0) {
                const double t = 3.0 / std::sqrt(r);
                m_[i] = t * a * s;
                m_[i + 1] = t * b * s;
            }
        }
    }

    bool empty() const { return y_.empty(); }
    double x_max() const { return x0_ + dx_ * static_cast<double>(y_.size() - 1); }
    const std::vector<double>& values() const { return y_; }
    const std::vector<double>& slopes() const { return m_; }
    double x0() const { return x0_; }
    double dx() const { return dx_; }

    double operator()(double x) const {
        const double u = (x - x0_) / dx_;
        auto i = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(y_.size() - 2)));
        const double t = u - static_cast<double>(i);
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * dx_ * m_[i] + (-2 * t3 + 3 * t2) * y_[i + 1] +
               (t3 - t2) * dx_ * m_[i + 1];
    }

private:
    double x0_ = 0.0, dx_ = 1.0;
    std::vector<double> y_, m_;
};

}  // namespace kcontract
