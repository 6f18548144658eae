#pragma once

// Maps an Euler model + noise + coupling to the envelope quantities of
// Assumptions (A)/(B), the Lyapunov drift data, and the noise comparison table.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kcontract/assumptions.hpp"
#include "kcontract/couplings.hpp"
#include "kcontract/model.hpp"
#include "kcontract/noise.hpp"
#include "kcontract/numeric.hpp"
#include "kcontract/rates.hpp"
#include "kcontract/rho.hpp"
#include "kcontract/stats.hpp"

namespace kcontract {

enum class EulerPath { TvBounded, TvUnbounded, W1, Wp };

inline std::string to_string(EulerPath p) {
    switch (p) {
        case EulerPath::TvBounded: return "tv-bounded";
        case EulerPath::TvUnbounded: return "tv-unbounded";
        case EulerPath::W1: return "w1";
        case EulerPath::Wp: return "wp";
    }
    return "?";
}

struct AlphaSearch {
    double epsilon = 0.0;
    double gamma = 0.0;
    double c_alpha = 0.0;  // the constant c* of the truncated second-moment bound
};

struct EulerQuantities {
    EulerPath path = EulerPath::TvBounded;
    std::optional<AssumptionA> tv;
    std::optional<AssumptionB> w;
    double kappa = kInf;  // truncation to use in the coupler
    double J = 0.0;       // the overlap value entering the bounds
    std::optional<AlphaSearch> alpha;
    MixedParams mixed;
    double l = 0.0;  // jump bound of the mixed coupling (Wp path)
    std::vector<std::string> notes;

    // The model with the truncation this path requires.
    EulerModel configured(EulerModel m) const {
        m.kappa = kappa;
        return m;
    }
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw Error("step size too large: " + what);
}

inline bool full_support(const NoiseSpec& n) {
    return n.family == NoiseFamily::Gaussian || n.family == NoiseFamily::Cauchy || n.family == NoiseFamily::Stable;
}

inline double overlap_at(const NoiseSpec& n, double r) {
    Vec v(n.d, 0.0);
    v[0] = r;
    return overlap_mass(n, v);
}

}  // namespace detail

// (epsilon, gamma, c*) for the truncated second-moment bound: the first
// epsilon in 2^-3 .. 2^-10 for which the step-size and (b2) budgets hold, with
// gamma doubled from 4 until m(eps) - m(gamma/2 - eps/4) >= m(eps)/2 and
// c* = eps^2 m(eps) / 4, m the 1D marginal density.
inline std::optional<AlphaSearch> alpha_search(const EulerModel& m, const NoiseSpec& noise) {
    const double L = m.L, R = m.R, h = m.h, g = m.g;
    for (int k = 3; k <= 10; ++k) {
        const double eps = std::ldexp(1.0, -k);
        const double me = marginal_density(noise, eps);
        double gamma = 4.0;
        while (me - marginal_density(noise, 0.5 * gamma - 0.25 * eps) < 0.5 * me) {
            gamma *= 2.0;
            if (gamma > 1e12) throw Error("gamma search did not terminate");
        }
        const double cst = eps * eps * me / 4.0;
        const double kappa = eps * g / 4.0;
        if (h / g > eps / (2.0 * L * R)) continue;
        const double c = 2.0 * h * L * R / (cst * g * std::min(0.5 * R, kappa)) + 1.0;
        if (c * gamma * g > std::log(2.0)) continue;
        return AlphaSearch{eps, gamma, cst};
    }
    return std::nullopt;
}

// Closed-form envelope bounds with kappa = g kappa0, r0 = kappa/(1 + hL), r1 = R.
inline TvEnvelopes tv_bounded_envelopes(double h, double g, double L, double R, double kappa0, double J,
                                        bool reflection) {
    const double pw = reflection ? 1.0 : 0.5;
    const double a2 = reflection ? 0.125 : 0.0625;
    const double kappa = g * kappa0;
    TvEnvelopes b;
    b.inf_pi = pw * J;
    b.inf_alpha = a2 * kappa * kappa * J;
    b.sup_beta_plus = h * L * kappa / (1.0 + h * L);
    b.sup_4beta_over_alpha = 4.0 * h * L * R / b.inf_alpha;
    b.sup_2beta_over_alpha = 0.5 * b.sup_4beta_over_alpha;
    b.sup_beta_over_pi = h * g * kappa0 * L / (pw * J);
    return b;
}

inline EulerQuantities euler_assumption_quantities(const EulerModel& m, const NoiseSpec& noise, CouplingKind kind,
                                                   EulerPath path) {
    const double L = m.L, K = m.K, R = m.R, h = m.h, g = m.g;
    if (!(h > 0.0) || !(g > 0.0)) throw Error("step size too large: h, g must be positive");
    detail::require(h < 2.0 * K / (L * L), "h < 2K/L^2");
    detail::require(h < 1.0 / L, "h < 1/L");
    const double c0 = m.c0();
    const double hL = h * L;
    EulerQuantities out;
    out.path = path;
    const bool reflection = kind != CouplingKind::RefinedBasic;
    if (reflection && !noise.satisfies_c4()) throw Error("condition c4 violated");

    CouplingStatsProfile prof;
    auto beta = [hL, c0, R](double r) { return r <= R ? hL * r : -c0 * r; };
    prof.beta_upper = beta;

    switch (path) {
        case EulerPath::TvBounded: {
            if (kind == CouplingKind::Mixed) throw Error("tv path uses refined-basic or reflection");
            if (!(m.kappa0 > 0.0) || !std::isfinite(m.kappa0)) throw Error("kappa out of range");
            detail::require(h / g <= m.kappa0 / (2.0 * L * R), "h/g <= kappa0/(2 L R)");
            const double kappa = g * m.kappa0;
            const double J = overlap_J(noise, m.kappa0);
            if (!(J > 0.0)) throw Error("kappa out of range: J_kappa0 = 0");
            const double r0 = kappa / (1.0 + hL);
            const double pw = reflection ? 1.0 : 0.5;  // pi weight
            const double a1 = reflection ? 0.5 : 0.25, a2 = reflection ? 0.125 : 0.0625;
            prof.pi_lower = [pw, J, r0](double r) { return r <= r0 * (1.0 + 1e-12) ? pw * J : 0.0; };
            prof.alpha_lower = [a1, a2, J, kappa, R](double r, double) {
                return r <= R ? std::min(a1 * r * r, a2 * kappa * kappa) * J : 0.0;
            };
            const TvEnvelopes b = tv_bounded_envelopes(h, g, L, R, m.kappa0, J, reflection);
            AssumptionA q{r0, R, c0, prof, b, {}};
            q.notes.push_back(reflection ? "reflection-coupling envelopes assembled into the total-variation constants"
                                         : "refined-basic coupling envelopes with kappa = g kappa0");
            out.tv = q;
            out.kappa = kappa;
            out.J = J;
            break;
        }
        case EulerPath::TvUnbounded: {
            if (kind == CouplingKind::Mixed) throw Error("tv path uses refined-basic or reflection");
            if (!detail::full_support(noise)) throw Error("kappa out of range: unbounded mode needs full-support noise");
            const double pw = reflection ? 1.0 : 0.5;
            const double aw = reflection ? 0.5 : 0.25;
            const NoiseSpec nz = noise;
            // r_hat <= (1 + hL) r bounds the shift of the coalescing branch
            prof.pi_lower = [nz, pw, hL, g](double r) { return pw * detail::overlap_at(nz, (1.0 + hL) * r / g); };
            prof.alpha_lower = [nz, aw, hL, g, R](double r, double) {
                return r <= R ? aw * r * r * detail::overlap_at(nz, (1.0 + hL) * r / g) : 0.0;
            };
            const double J = detail::overlap_at(noise, (1.0 + hL) * R / g);
            if (!(J > 0.0)) throw Error("overlap underflow: J = 0 at (1 + hL) R / g");
            TvEnvelopes b;
            b.inf_pi = pw * J;
            b.inf_alpha = aw * R * R * J;
            b.sup_beta_plus = hL * R;
            b.sup_beta_over_pi = hL * R / (pw * J);
            b.sup_4beta_over_alpha = 4.0 * hL * R / b.inf_alpha;
            b.sup_2beta_over_alpha = 0.5 * b.sup_4beta_over_alpha;
            AssumptionA q{R, R, c0, prof, b, {}};
            q.notes.push_back("unbounded-support mode: kappa = inf, r0 = r1 = R, overlap taken at (1 + hL) R / g");
            out.tv = q;
            out.kappa = kInf;
            out.J = J;
            break;
        }
        case EulerPath::W1:
        case EulerPath::Wp: {
            const bool wp = path == EulerPath::Wp;
            if (wp ? kind != CouplingKind::Mixed : kind != CouplingKind::Reflection)
                throw Error(wp ? "wp path uses the mixed coupling" : "w1 path uses the reflection coupling");
            detail::require(h <= 0.5 / L, "h <= 1/(2L)");
            const auto srch = alpha_search(m, noise);
            if (!srch) throw Error("step size too large: h/g <= eps/(2 L R) and the b2 budget fail for every eps");
            const double kappa = srch->epsilon * g / 4.0;
            const double l0 = srch->gamma * g;
            const double cst = srch->c_alpha;
            double r1 = R;
            if (wp) {
                out.mixed.s = R;
                out.mixed.l_prime = (1.0 + hL) * R / g + 0.5 * srch->gamma + 1.0;
                EulerModel mk = m;
                mk.kappa = kappa;
                out.l = out.mixed.jump_bound(mk);
                r1 = std::max(R, out.l + 1.0);
            }
            prof.pi_lower = [](double) { return 0.0; };
            prof.alpha_lower = [cst, g, kappa, R, l0, c0](double r, double l) {
                if (l < l0) return 0.0;
                if (r <= R) return cst * g * std::min(0.5 * r, kappa);
                return 0.5 * c0 * c0 * r * r;  // synchronous regime: r - r_hat >= c0 r
            };
            W1Envelopes b;
            b.sup_ratio = 2.0 * h * L * R / (cst * g * std::min(0.5 * R, kappa));
            b.inf_alpha_over_r = cst * g * std::min(0.5, kappa / R);
            if (r1 > R) b.inf_alpha_over_r = std::min(b.inf_alpha_over_r, 0.5 * c0 * c0 * R);
            AssumptionB q{prof, ConcavityProfile::identity(), l0, r1, c0, b, {}};
            std::ostringstream os;
            os << "alpha search: eps = " << srch->epsilon << ", gamma = " << srch->gamma << ", c* = " << cst;
            q.notes.push_back(os.str());
            if (wp && r1 > R) q.notes.push_back("r1 enlarged to max(R, l + 1) so that r1 >= l + 1");
            out.w = q;
            out.kappa = kappa;
            out.alpha = srch;
            break;
        }
    }
    return out;
}

// ============================================================================
// Lyapunov drift V(x) = |x|^theta
// ============================================================================

struct LyapunovCheck {
    double x_norm = 0.0;
    double mean = 0.0;
    double se = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct LyapunovCertificate {
    LyapunovData data;
    double theta = 2.0;
    double M1 = 0.0, M2 = 0.0, L0 = 0.0;
    std::vector<LyapunovCheck> checks;
    std::string method;
};

// Monte Carlo check of int V dp <= (1 - lambda) V + C0 at |x| in the grid
// (direction e1), within 3 standard errors.
inline std::vector<LyapunovCheck> check_lyapunov_drift(const EulerModel& m, const NoiseSpec& noise,
                                                       const LyapunovData& lyap, const std::vector<double>& grid,
                                                       std::size_t n, std::uint64_t seed) {
    std::vector<LyapunovCheck> out;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        Vec x(m.d, 0.0);
        x[0] = grid[gi];
        const Vec xh = m.x_hat(x);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            Stream rng(derive_seed(seed, 0x1a7, gi), i);
            v[i] = lyap.V(axpy(xh, m.g, sample_one(noise, rng)));
        }
        const MeanSe ms = mean_se(v);
        LyapunovCheck c{grid[gi], ms.mean, ms.se, (1.0 - lyap.lambda) * lyap.V(x) + lyap.C0, false};
        c.pass = c.mean - 3.0 * c.se <= c.bound;
        out.push_back(c);
    }
    return out;
}

inline LyapunovCertificate lyapunov_drift_certificate(const EulerModel& m, const NoiseSpec& noise, double theta,
                                                      double M1, double M2, double K_threshold = 1.0,
                                                      std::size_t n_check = 100000, std::uint64_t seed = 0x1ab) {
    if (!(theta > 0.0 && theta <= 2.0)) throw Error("theta out of range (0, 2]");
    if (!(M2 > 0.0) || !(M1 >= 0.0)) throw Error("M1 >= 0, M2 > 0 required");
    if ((noise.family == NoiseFamily::Stable || noise.family == NoiseFamily::Cauchy) && theta >= noise.alpha)
        throw Error("moment unavailable");
    verify_lyapunov_drift(m, M1, M2);
    const double b0 = norm(m.b(Vec(m.d, 0.0)));
    const double L0 = 2.0 * std::max(m.L * m.L, b0 * b0);
    const double h = m.h, g = m.g;
    if (!(h < 2.0 * M2 / L0)) throw Error("step size too large: h < 2 M2 / L0");
    LyapunovCertificate cert;
    cert.theta = theta;
    cert.M1 = M1;
    cert.M2 = M2;
    cert.L0 = L0;
    LyapunovData& d = cert.data;
    d.K = K_threshold;
    if (theta == 2.0 && noise.centered()) {
        d.lambda = 2.0 * h * M2 - h * h * L0;
        d.C0 = h * h * L0 + 2.0 * h * M1 + g * g * abs_moment(noise, 2.0);
        cert.method = "closed form (theta = 2, centered noise)";
    } else {
        // q |x|^t + B + D |x|^{t/2} + E, with D |x|^{t/2} <= ((1-q)/2) |x|^t + D^2 / (2(1-q))
        const double t = theta;
        const double q = std::pow(1.0 - 2.0 * h * M2 + h * h * L0, 0.5 * t);
        const double mt = abs_moment(noise, t), mh = abs_moment(noise, 0.5 * t);
        const double B = std::pow(2.0 * h * M1, 0.5 * t) + std::pow(g, t) * mt + std::pow(h * h * L0, 0.5 * t);
        const double D = (std::pow(2.0 * g, 0.5 * t) + std::pow(2.0 * h * g, 0.5 * t) * std::pow(L0, 0.25 * t)) * mh;
        const double E = std::pow(2.0 * h * g, 0.5 * t) * std::pow(b0, 0.5 * t) * mh;
        d.lambda = 0.5 * (1.0 - q);
        d.C0 = B + E + D * D / (2.0 * (1.0 - q));
        cert.method = "analytic moment bound with the |x|^{theta/2} term absorbed, Monte Carlo validated";
    }
    if (!(d.lambda > 0.0 && d.lambda < 1.0)) throw Error("lambda out of range");
    d.V = [theta](const Vec& x) { return std::pow(norm(x), theta); };
    d.v_sum_min = [theta](double r) { return theta >= 1.0 ? std::pow(2.0, 1.0 - theta) * std::pow(r, theta) : std::pow(r, theta); };
    if (n_check > 0) {
        cert.checks = check_lyapunov_drift(m, noise, d, {0.0, 1.0, 10.0, m.R}, n_check, seed);
        for (const auto& c : cert.checks)
            if (!c.pass) throw Error("lyapunov drift inequality fails at |x| = " + std::to_string(c.x_norm));
    }
    return cert;
}

// Sets lyap.r1 from the beta envelope.
inline void attach_lyapunov_r1(LyapunovData& lyap, const CouplingStatsProfile& prof) {
    lyap.r1 = lyapunov_r1(prof.beta_upper, lyap.v_sum_min, lyap.K, lyap.C0, lyap.lambda);
}

// ============================================================================
// Noise comparison (unbounded-support, simplified total-variation constants)
// ============================================================================

struct ComparisonRow {
    std::string noise;
    double alpha = 2.0;
    std::size_t d = 1;
    double h = 0.0, R = 0.0;
    // natural logs; the Gaussian values leave the double range quickly
    double log_J = 0.0, log_a = 0.0, log_c1 = 0.0, log_c3 = 0.0, log_c_star = 0.0;
};

struct ComparisonSlope {
    std::string noise;
    double h = 0.0;
    std::string regressor;  // "log R" or "R^2"
    double slope = 0.0;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    std::vector<ComparisonSlope> slopes;
};

// log of x + y from logs
inline double log_sum(double lx, double ly) { return log_add(lx, ly); }

// One row for reflection coupling, kappa = inf, r0 = r1 = R, c = 1.
inline ComparisonRow comparison_row(const EulerModel& m, const NoiseSpec& noise) {
    const double h = m.h, L = m.L, R = m.R, g = m.g;
    const double c0 = m.c0();
    if (!(c0 > 0.0)) throw Error("not contractive: c0 <= 0");
    ComparisonRow row{noise.key(), noise.alpha, noise.d, h, R};
    row.log_J = log_overlap_mass(noise, (1.0 + h * L) * R / g);
    // a = 2 (1 + e^{-R}) h L R / J + 1
    const double log_lead = std::log(2.0 * (1.0 + std::exp(-R)) * h * L * R) - row.log_J;
    row.log_a = log_sum(log_lead, 0.0);
    // c1 = a J / (2 (a + 1 + R e^{-R}))
    const double log_den = std::log(2.0) + log_sum(row.log_a, std::log(1.0 + R * std::exp(-R)));
    row.log_c1 = row.log_a + row.log_J - log_den;
    // c3 = c0 / (1 + (1 + a) e^R / R)
    row.log_c3 = std::log(c0) - log_sum(0.0, log_sum(0.0, row.log_a) + R - std::log(R));
    row.log_c_star = std::min(row.log_c1, row.log_c3);
    return row;
}

inline ComparisonTable noise_rate_comparison(const EulerModel& base, const std::vector<NoiseSpec>& noises,
                                             const std::vector<double>& R_grid, const std::vector<double>& h_grid) {
    ComparisonTable t;
    for (const auto& noise : noises) {
        for (double h : h_grid) {
            std::vector<double> xs, ys;
            for (double R : R_grid) {
                EulerModel m = base;
                m.h = h;
                m.R = R;
                m.g = noise.natural_scale(h);
                t.rows.push_back(comparison_row(m, noise));
                const bool gauss = noise.family == NoiseFamily::Gaussian;
                xs.push_back(gauss ? R * R : std::log(R));
                ys.push_back(t.rows.back().log_c1);
            }
            if (R_grid.size() >= 2)
                t.slopes.push_back({noise.key(), h, noise.family == NoiseFamily::Gaussian ? "R^2" : "log R",
                                    fit_slope(xs, ys)});
        }
    }
    return t;
}

// Decimal rendering of e^{lx} that survives outside the double range.
inline std::string format_exp(double lx) {
    if (std::isinf(lx)) return lx > 0 ? "inf" : "0";
    const double v = std::exp(lx);
    std::ostringstream os;
    os.precision(10);
    if (v != 0.0 && std::isfinite(v) && std::fpclassify(v) == FP_NORMAL) {
        os << v;
        return os.str();
    }
    const double l10 = lx / std::log(10.0);
    const double e = std::floor(l10);
    os << std::pow(10.0, l10 - e) << "e" << static_cast<long long>(e);
    return os.str();
}

inline std::string comparison_csv(const ComparisonTable& t) {
    std::ostringstream os;
    os << "noise,alpha,d,h,R,J,a,c1,c3,c_star\n";
    os.precision(10);
    for (const auto& r : t.rows)
        os << r.noise << ',' << r.alpha << ',' << r.d << ',' << r.h << ',' << r.R << ',' << format_exp(r.log_J) << ','
           << format_exp(r.log_a) << ',' << format_exp(r.log_c1) << ',' << format_exp(r.log_c3) << ','
           << format_exp(r.log_c_star) << '\n';
    return os.str();
}

}  // namespace kcontract
