#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "kcontract/core.hpp"
#include "kcontract/numeric.hpp"
#include "kcontract/rng.hpp"
#include "kcontract/stable.hpp"
#include "kcontract/stats.hpp"

namespace kcontract {

enum class NoiseFamily { Gaussian, Stable, Cauchy, Radial, NonIsotropic, Lattice };

// One-step noise law mu on R^d. Radial families store m as a function of |z|.
struct NoiseSpec {
    NoiseFamily family = NoiseFamily::Gaussian;
    double alpha = 2.0;
    std::size_t d = 1;

    // Radial: user density m(|z|) and sampler; `monotone` asserts m non-increasing.
    std::function<double(double)> radial_m;
    std::function<Vec(Stream&)> radial_sampler;
    bool monotone = false;

    // Lattice (1D): pmf on k*delta, k = -K..K, stored from -K upward.
    double delta = 0.0;
    std::vector<double> pmf;
    std::vector<double> cum;

    // NonIsotropic normalizer.
    double norm_const = 1.0;

    static NoiseSpec gaussian(std::size_t d = 1) {
        NoiseSpec s;
        s.family = NoiseFamily::Gaussian;
        s.alpha = 2.0;
        s.d = d;
        s.monotone = true;
        return s;
    }
    static NoiseSpec cauchy(std::size_t d = 1) {
        NoiseSpec s;
        s.family = NoiseFamily::Cauchy;
        s.alpha = 1.0;
        s.d = d;
        s.monotone = true;
        return s;
    }
    static NoiseSpec stable(double alpha, std::size_t d = 1) {
        stable::check_alpha(alpha);
        if (alpha == 1.0) return cauchy(d);
        NoiseSpec s;
        s.family = NoiseFamily::Stable;
        s.alpha = alpha;
        s.d = d;
        s.monotone = true;
        return s;
    }
    static NoiseSpec radial(std::size_t d, std::function<double(double)> m, std::function<Vec(Stream&)> sampler,
                            bool monotone) {
        NoiseSpec s;
        s.family = NoiseFamily::Radial;
        s.d = d;
        s.radial_m = std::move(m);
        s.radial_sampler = std::move(sampler);
        s.monotone = monotone;
        if (monotone) {
            double prev = kInf;
            for (double r : log_grid(1e-6, 1e3, 2000)) {
                const double v = s.radial_m(r);
                if (!(v <= prev)) {
                    s.monotone = false;
                    break;
                }
                prev = v;
            }
        }
        return s;
    }
    static NoiseSpec nonisotropic(double alpha, std::size_t d = 1);
    static NoiseSpec lattice(double delta, std::vector<double> pmf);

    bool is_radial() const { return family != NoiseFamily::NonIsotropic && family != NoiseFamily::Lattice; }

    // Condition (c4): radial with non-increasing density (lattice: symmetric, non-increasing in |k|).
    bool satisfies_c4() const {
        if (family == NoiseFamily::NonIsotropic) return false;
        return monotone;
    }

    bool centered() const { return family != NoiseFamily::NonIsotropic; }

    // Natural scale g(h) of the Euler scheme for this family.
    double natural_scale(double h) const {
        switch (family) {
            case NoiseFamily::Stable:
            case NoiseFamily::NonIsotropic: return std::pow(h, 1.0 / alpha);
            case NoiseFamily::Cauchy: return h;
            default: return std::sqrt(h);
        }
    }

    std::string key() const {
        std::ostringstream os;
        switch (family) {
            case NoiseFamily::Gaussian: return "gaussian";
            case NoiseFamily::Cauchy: return "cauchy";
            case NoiseFamily::Stable: os << "stable:" << alpha; return os.str();
            case NoiseFamily::NonIsotropic: os << "example-nonisotropic:" << alpha; return os.str();
            case NoiseFamily::Radial: return "radial";
            case NoiseFamily::Lattice: return "lattice";
        }
        return "?";
    }

    long lattice_half_width() const { return static_cast<long>(pmf.size() / 2); }
};

// ============================================================================
// NonIsotropic example: mu(dz) proportional to 1{0 < z1 <= 1} (1+|z|)^{-(d+alpha)}
// ============================================================================

namespace detail {

inline double sphere_area(std::size_t dim) {  // area of the unit sphere in R^dim
    return 2.0 * std::pow(kPi, 0.5 * static_cast<double>(dim)) / std::tgamma(0.5 * static_cast<double>(dim));
}

// int_{R^{d-1}} (shift + sqrt(z1^2 + |w|^2))^{-(d+alpha)} dw, by polar reduction.
inline double transverse_integral(double z1, double shift, double alpha, std::size_t d) {
    const double e = static_cast<double>(d) + alpha;
    const double dm = static_cast<double>(d) - 2.0;
    const std::function<double(double)> f = [&](double s) {
        if (s >= 1.0) return 0.0;
        const double rho = s / (1.0 - s);
        const double jac = 1.0 / ((1.0 - s) * (1.0 - s));
        return std::pow(rho, dm) * std::pow(shift + std::sqrt(z1 * z1 + rho * rho), -e) * jac;
    };
    return sphere_area(d - 1) * adaptive_simpson(f, 0.0, 1.0, 1e-11, 50);
}

inline double nonisotropic_mass(double lo, double shift, double alpha, std::size_t d) {
    const std::function<double(double)> f = [&](double z1) { return transverse_integral(z1, shift, alpha, d); };
    return adaptive_simpson(f, lo, 1.0, 1e-10, 50);
}

}  // namespace detail

inline NoiseSpec NoiseSpec::nonisotropic(double alpha, std::size_t d) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw Error("alpha out of range");
    NoiseSpec s;
    s.family = NoiseFamily::NonIsotropic;
    s.alpha = alpha;
    s.d = d;
    s.monotone = false;
    s.norm_const = d == 1 ? (1.0 - std::pow(2.0, -alpha)) / alpha : detail::nonisotropic_mass(0.0, 1.0, alpha, d);
    return s;
}

inline NoiseSpec NoiseSpec::lattice(double delta, std::vector<double> pmf) {
    if (pmf.size() % 2 != 1) throw Error("lattice pmf must have odd length");
    NoiseSpec s;
    s.family = NoiseFamily::Lattice;
    s.d = 1;
    s.delta = delta;
    s.pmf = std::move(pmf);
    double total = 0.0;
    s.cum.resize(s.pmf.size());
    for (std::size_t i = 0; i < s.pmf.size(); ++i) {
        total += s.pmf[i];
        s.cum[i] = total;
    }
    s.monotone = true;
    const std::size_t mid = s.pmf.size() / 2;
    for (std::size_t k = 0; k < mid; ++k) {
        if (s.pmf[mid + k] != s.pmf[mid - k]) s.monotone = false;
        if (s.pmf[mid + k + 1] > s.pmf[mid + k]) s.monotone = false;
    }
    return s;
}

// ============================================================================
// Densities and distribution functions
// ============================================================================

// Radial density m(r) = m(|z|) for radial families.
inline double density_radial(const NoiseSpec& s, double r) {
    if (std::isnan(r) || r < 0.0) throw Error("negative distance");
    const double d = static_cast<double>(s.d);
    switch (s.family) {
        case NoiseFamily::Gaussian: return std::pow(2.0 * kPi, -0.5 * d) * std::exp(-0.5 * r * r);
        case NoiseFamily::Cauchy:
            return std::tgamma(0.5 * (d + 1.0)) / std::pow(kPi, 0.5 * (d + 1.0)) * std::pow(1.0 + r * r, -0.5 * (d + 1.0));
        case NoiseFamily::Stable:
            if (s.d != 1) throw Error("density unavailable");
            return stable::density(s.alpha, r);
        case NoiseFamily::Radial: return s.radial_m(r);
        default: throw Error("density unavailable");
    }
}

// Density (Lebesgue, or counting measure for the lattice) at the point z.
inline double density(const NoiseSpec& s, const Vec& z) {
    switch (s.family) {
        case NoiseFamily::NonIsotropic: {
            if (!(z[0] > 0.0 && z[0] <= 1.0)) return 0.0;
            return std::pow(1.0 + norm(z), -(static_cast<double>(s.d) + s.alpha)) / s.norm_const;
        }
        case NoiseFamily::Lattice: {
            const double u = z[0] / s.delta;
            const double k = std::nearbyint(u);
            if (std::fabs(u - k) > 1e-9) return 0.0;
            const long idx = static_cast<long>(k) + s.lattice_half_width();
            if (idx < 0 || idx >= static_cast<long>(s.pmf.size())) return 0.0;
            return s.pmf[static_cast<std::size_t>(idx)];
        }
        default: return density_radial(s, norm(z));
    }
}

// CDF of the first coordinate of xi.
inline double marginal_cdf(const NoiseSpec& s, double x) {
    switch (s.family) {
        case NoiseFamily::Gaussian: return normal_cdf(x);
        case NoiseFamily::Cauchy: return 0.5 + std::atan(x) / kPi;
        case NoiseFamily::Stable: return stable::cdf_cached(s.alpha, x);
        case NoiseFamily::NonIsotropic:
            if (s.d != 1) break;
            if (x <= 0.0) return 0.0;
            if (x >= 1.0) return 1.0;
            return (1.0 - std::pow(1.0 + x, -s.alpha)) / (s.alpha * s.norm_const);
        case NoiseFamily::Radial: {
            if (s.d != 1) break;
            const std::function<double(double)> m = s.radial_m;
            double cut = 1.0;
            while (m(cut) > 1e-14 && cut < 1e8) cut *= 2.0;
            const double half = adaptive_simpson(m, 0.0, std::min(std::fabs(x), cut), 1e-11);
            return x >= 0.0 ? 0.5 + half : 0.5 - half;
        }
        case NoiseFamily::Lattice: {
            const double k = std::floor(x / s.delta + 1e-9);
            const long idx = static_cast<long>(k) + s.lattice_half_width();
            if (idx < 0) return 0.0;
            if (idx >= static_cast<long>(s.pmf.size())) return 1.0;
            return s.cum[static_cast<std::size_t>(idx)];
        }
    }
    throw Error("cdf unavailable");
}

// 1D marginal density of the first coordinate (radial families; used by the
// W1 certificate search).
inline double marginal_density(const NoiseSpec& s, double x) {
    switch (s.family) {
        case NoiseFamily::Gaussian: return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
        case NoiseFamily::Cauchy: return 1.0 / (kPi * (1.0 + x * x));
        case NoiseFamily::Stable: return stable::density(s.alpha, x);
        case NoiseFamily::Radial:
            if (s.d == 1) return s.radial_m(std::fabs(x));
            break;
        default: break;
    }
    throw Error("density unavailable");
}

// ============================================================================
// Sampling
// ============================================================================

inline Vec sample_one(const NoiseSpec& s, Stream& rng) {
    switch (s.family) {
        case NoiseFamily::Gaussian: {
            Vec z(s.d);
            for (auto& zi : z) zi = rng.normal();
            return z;
        }
        case NoiseFamily::Cauchy: {
            // G / |G'|: multivariate t with one degree of freedom
            Vec z(s.d);
            for (auto& zi : z) zi = rng.normal();
            if (s.d == 1) return {stable::sample_1d(1.0, rng)};
            const double chi = std::fabs(rng.normal());
            for (auto& zi : z) zi /= chi;
            return z;
        }
        case NoiseFamily::Stable:
            if (s.d == 1) return {stable::sample_1d(s.alpha, rng)};
            return stable::sample_isotropic(s.alpha, s.d, rng);
        case NoiseFamily::Radial: return s.radial_sampler(rng);
        case NoiseFamily::NonIsotropic: {
            const double a = s.alpha;
            if (s.d == 1) return {std::pow(1.0 - rng.uniform() * (1.0 - std::pow(2.0, -a)), -1.0 / a) - 1.0};
            const double e = static_cast<double>(s.d) + a;
            for (;;) {
                const double z1 = 1.0 - rng.uniform();  // (0, 1]
                const double rho = rng.gamma(static_cast<double>(s.d) - 1.0) / rng.gamma(a + 1.0);
                Vec dir(s.d - 1);
                double nn = 0.0;
                for (auto& w : dir) {
                    w = rng.normal();
                    nn += w * w;
                }
                nn = std::sqrt(nn);
                const double accept = std::pow((1.0 + rho) / (1.0 + std::sqrt(z1 * z1 + rho * rho)), e);
                if (rng.uniform() <= accept) {
                    Vec z(s.d);
                    z[0] = z1;
                    for (std::size_t i = 1; i < s.d; ++i) z[i] = rho * dir[i - 1] / nn;
                    return z;
                }
            }
        }
        case NoiseFamily::Lattice: {
            const double u = rng.uniform() * s.cum.back();
            const auto it = std::lower_bound(s.cum.begin(), s.cum.end(), u);
            const long idx = std::min<long>(it - s.cum.begin(), static_cast<long>(s.pmf.size()) - 1);
            return {static_cast<double>(idx - s.lattice_half_width()) * s.delta};
        }
    }
    throw Error("unknown noise family");
}

inline std::vector<Vec> sample(const NoiseSpec& s, std::size_t n, Stream& rng) {
    std::vector<Vec> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_one(s, rng));
    return out;
}

// ============================================================================
// Overlap functionals
// ============================================================================

// mu(|z| >= t).
inline double tail_mass(const NoiseSpec& s, double t) {
    if (t <= 0.0) return 1.0;
    const double d = static_cast<double>(s.d);
    switch (s.family) {
        case NoiseFamily::Gaussian: return boost::math::gamma_q(0.5 * d, 0.5 * t * t);
        case NoiseFamily::Cauchy: {
            if (s.d == 1) return 1.0 - 2.0 * std::atan(t) / kPi;
            // |z|^2 / d ~ F(d, 1)
            boost::math::fisher_f_distribution<double> f(d, 1.0);
            return boost::math::cdf(boost::math::complement(f, t * t / d));
        }
        case NoiseFamily::Stable:
            if (s.d == 1) return 2.0 * stable::survival_cached(s.alpha, t);
            break;
        case NoiseFamily::Radial: {
            const double area = detail::sphere_area(s.d);
            const std::function<double(double)> f = [&](double u) {
                if (u >= 1.0) return 0.0;
                const double r = t + u / (1.0 - u);
                return area * std::pow(r, d - 1.0) * s.radial_m(r) / ((1.0 - u) * (1.0 - u));
            };
            return adaptive_simpson(f, 0.0, 1.0, 1e-11, 50);
        }
        default: break;
    }
    throw Error("density unavailable");
}

// True when overlap_mass returns the exact mass rather than a certified lower bound.
inline bool overlap_is_exact(const NoiseSpec& s) {
    switch (s.family) {
        case NoiseFamily::Radial:
        case NoiseFamily::NonIsotropic: return s.d == 1;
        default: return true;
    }
}

// Certified lower bound (1/d) mu(|z| >= sqrt(d) kappa / 2) on J_kappa for radial,
// non-increasing densities.
inline double overlap_lower_bound(const NoiseSpec& s, double kappa) {
    const double d = static_cast<double>(s.d);
    return tail_mass(s, std::sqrt(d) * kappa / 2.0) / d;
}

// Lower bound G(kappa) on J_kappa for the non-isotropic example in d > 1.
inline double nonisotropic_overlap_bound(const NoiseSpec& s, double kappa) {
    if (kappa >= 1.0) return 0.0;
    return detail::nonisotropic_mass(kappa, 1.0 + kappa, s.alpha, s.d) / s.norm_const;
}

// (mu ^ (delta_v * mu))(R^d). For radial non-increasing m the mass equals
// mu(|z_1| >= |v|/2), exact through the 1D marginal; radial densities in d > 1
// and the non-isotropic example in d > 1 return a certified lower bound.
inline double overlap_mass(const NoiseSpec& s, const Vec& v) {
    const double r = norm(v);
    if (r == 0.0) return 1.0;
    switch (s.family) {
        case NoiseFamily::Gaussian: return std::erfc(r / (2.0 * std::sqrt(2.0)));
        case NoiseFamily::Cauchy: return 1.0 - 2.0 * std::atan(r / 2.0) / kPi;
        case NoiseFamily::Stable: return 2.0 * stable::survival_cached(s.alpha, r / 2.0);
        case NoiseFamily::Radial: {
            if (s.d > 1) return overlap_lower_bound(s, r);
            const std::function<double(double)> m = s.radial_m;
            double cut = std::max(1.0, r);
            while (m(cut) >= 1e-14 && cut < 1e8) cut *= 2.0;
            if (r / 2.0 >= cut) return 0.0;
            return std::min(1.0, 2.0 * adaptive_simpson(m, r / 2.0, cut, 1e-10));
        }
        case NoiseFamily::NonIsotropic: {
            if (s.d > 1) return nonisotropic_overlap_bound(s, r);
            if (r >= 1.0) return 0.0;
            const double t = std::pow(2.0, -s.alpha);
            return (std::pow(1.0 + r, -s.alpha) - t) / (1.0 - t);
        }
        case NoiseFamily::Lattice: {
            const double u = v[0] / s.delta;
            const double k = std::nearbyint(u);
            if (std::fabs(u - k) > 1e-9) return 0.0;
            const long shift = std::labs(static_cast<long>(k));
            const long n = static_cast<long>(s.pmf.size());
            std::vector<double> terms;
            for (long i = 0; i < n; ++i) {
                const long j = i - shift;
                terms.push_back(j >= 0 ? std::min(s.pmf[i], s.pmf[j]) : 0.0);
            }
            return pairwise_sum(terms);
        }
    }
    return 0.0;
}

// log of overlap_mass at |v| = r, without underflow in the far Gaussian tail.
inline double log_overlap_mass(const NoiseSpec& s, double r) {
    if (s.family == NoiseFamily::Gaussian) {
        const double x = r / (2.0 * std::sqrt(2.0));
        if (x < 20.0) return std::log(std::erfc(x));
        // erfc(x) = e^{-x^2}/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4) - ...)
        const double ix2 = 1.0 / (x * x);
        return -x * x - std::log(x * std::sqrt(kPi)) + std::log1p(-0.5 * ix2 + 0.75 * ix2 * ix2 - 1.875 * ix2 * ix2 * ix2);
    }
    // a few direct evaluations are cheaper than building the survival table
    if (s.family == NoiseFamily::Stable && s.d == 1) return std::log(2.0 * stable::survival(s.alpha, 0.5 * r));
    Vec v(s.d, 0.0);
    v[0] = r;
    return std::log(overlap_mass(s, v));
}

// J_kappa = inf_{|v| <= kappa} overlap_mass(v).
inline double overlap_J(const NoiseSpec& s, double kappa) {
    if (kappa == 0.0) return 1.0;
    if (s.family == NoiseFamily::Lattice) {
        double j = 1.0;
        for (long k = 1; static_cast<double>(k) * s.delta <= kappa * (1.0 + 1e-12); ++k)
            j = std::min(j, overlap_mass(s, {static_cast<double>(k) * s.delta}));
        return j;
    }
    if (s.family == NoiseFamily::Radial && !s.monotone) throw Error("condition c4 violated");
    Vec v(s.d, 0.0);
    v[0] = kappa;
    return overlap_mass(s, v);
}

// Monte Carlo estimate of overlap_mass: E[min(1, m(xi - v)/m(xi))].
inline MeanSe overlap_mc(const NoiseSpec& s, const Vec& v, std::size_t n, std::uint64_t seed) {
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
        Stream rng(seed, i);
        const Vec z = sample_one(s, rng);
        const double mz = density(s, z);
        vals[i] = mz > 0.0 ? std::min(1.0, density(s, sub(z, v)) / mz) : 0.0;
    }
    const MeanSe r = mean_se(vals);
    if (r.mean <= 0.0 || r.se > 0.05 * r.mean) throw Error("estimator variance too high");
    return r;
}

// Constant c with J_kappa >= c ((1+kappa)^{-alpha} - 2^{-alpha}) on (0, 1),
// computed as the infimum of the ratio over a kappa grid.
inline double nonisotropic_overlap_constant(const NoiseSpec& s, std::size_t n = 64) {
    if (s.family != NoiseFamily::NonIsotropic) throw Error("not the non-isotropic example");
    const double t = std::pow(2.0, -s.alpha);
    if (s.d == 1) return 1.0 / (1.0 - t);
    double c = kInf;
    for (std::size_t i = 1; i < n; ++i) {
        const double kappa = static_cast<double>(i) / static_cast<double>(n);
        c = std::min(c, nonisotropic_overlap_bound(s, kappa) / (std::pow(1.0 + kappa, -s.alpha) - t));
    }
    return c;
}

// E|xi|^p.
inline double abs_moment(const NoiseSpec& s, double p) {
    const double d = static_cast<double>(s.d);
    switch (s.family) {
        case NoiseFamily::Gaussian: return std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * (d + p)) / std::tgamma(0.5 * d);
        case NoiseFamily::Cauchy: return stable::abs_moment(1.0, s.d, p);
        case NoiseFamily::Stable: return stable::abs_moment(s.alpha, s.d, p);
        case NoiseFamily::Lattice: {
            double m = 0.0;
            for (std::size_t i = 0; i < s.pmf.size(); ++i)
                m += s.pmf[i] * std::pow(std::fabs((static_cast<double>(i) - static_cast<double>(s.pmf.size() / 2)) * s.delta), p);
            return m;
        }
        case NoiseFamily::Radial: {
            const double area = detail::sphere_area(s.d);
            const std::function<double(double)> f = [&](double u) {
                if (u >= 1.0) return 0.0;
                const double r = u / (1.0 - u);
                return area * std::pow(r, d - 1.0 + p) * s.radial_m(r) / ((1.0 - u) * (1.0 - u));
            };
            return adaptive_simpson(f, 0.0, 1.0, 1e-10, 50);
        }
        case NoiseFamily::NonIsotropic: {
            if (!(p < s.alpha)) throw Error("moment unavailable");
            if (s.d == 1) {
                const std::function<double(double)> f = [&](double z) {
                    return std::pow(z, p) * std::pow(1.0 + z, -(1.0 + s.alpha)) / s.norm_const;
                };
                return adaptive_simpson(f, 0.0, 1.0, 1e-12);
            }
            break;
        }
    }
    throw Error("moment unavailable");
}

// Discretizes a 1D noise onto the lattice delta*Z, cut at the (1 - tail)
// quantile; cell masses come from the distribution function.
inline NoiseSpec discretize(const NoiseSpec& s, double delta, double tail = 1e-6, long max_half_width = 5'000'000) {
    double q = 1.0;
    while (1.0 - marginal_cdf(s, q) > tail) {
        q *= 2.0;
        if (q / delta > static_cast<double>(max_half_width)) throw Error("instance too large");
    }
    double lo = q / 2.0, hi = q;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (1.0 - marginal_cdf(s, mid) > tail ? lo : hi) = mid;
    }
    const long half = static_cast<long>(std::ceil(hi / delta));
    std::vector<double> pmf(static_cast<std::size_t>(2 * half + 1));
    for (long k = -half; k <= half; ++k) {
        const double a = (static_cast<double>(k) - 0.5) * delta, b = (static_cast<double>(k) + 0.5) * delta;
        // symmetric families: evaluate the right half and mirror, for exact symmetry
        pmf[static_cast<std::size_t>(k + half)] =
            k >= 0 ? marginal_cdf(s, b) - marginal_cdf(s, a) : marginal_cdf(s, -a) - marginal_cdf(s, -b);
    }
    const double total = pairwise_sum(pmf);
    for (auto& p : pmf) p /= total;
    return NoiseSpec::lattice(delta, std::move(pmf));
}

}  // namespace kcontract
