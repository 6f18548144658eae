#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kcontract/core.hpp"
#include "kcontract/numeric.hpp"

namespace kcontract {

// ============================================================================
// Concavity profile Psi for the Wasserstein distances
// ============================================================================

struct ConcavityProfile {
    std::function<double(double)> psi;
    std::function<double(double)> psi_prime;
    std::function<double(double)> psi_double_prime;
    std::string name = "identity";
    double width = 0.0;  // sine profile only

    bool is_identity() const { return name == "identity"; }

    static ConcavityProfile identity() {
        return {[](double r) { return r; }, [](double) { return 1.0; }, [](double) { return 0.0; }, "identity"};
    }

    // Psi(r) = 2 w sin(r / (2w)): concave with Psi'' non-increasing on (0, pi w).
    static ConcavityProfile sine(double w) {
        return {[w](double r) { return 2.0 * w * std::sin(r / (2.0 * w)); },
                [w](double r) { return std::cos(r / (2.0 * w)); },
                [w](double r) { return -std::sin(r / (2.0 * w)) / (2.0 * w); }, "sine", w};
    }

    // Checks the sampled-grid invariants on (0, r_max]; throws on violation.
    void validate(double r_max, std::size_t n = 4096) const {
        if (std::fabs(psi(0.0)) > 1e-14) throw Error("invalid concavity profile: psi(0) != 0");
        double prev = kInf;
        for (double r : half_open_grid(0.0, r_max, n)) {
            const double d1 = psi_prime(r), d2 = psi_double_prime(r);
            if (!(d1 > 0.0)) throw Error("invalid concavity profile: psi' <= 0");
            if (!(d2 <= 0.0)) throw Error("invalid concavity profile: psi'' > 0");
            if (d2 > prev + 1e-12 * std::fabs(prev)) throw Error("invalid concavity profile: psi'' increasing");
            prev = d2;
        }
    }
};

// ============================================================================
// Coupling statistics envelopes and the two assumption packages
// ============================================================================

// Radial envelopes: pi_lower(r) <= inf pi, beta_upper(r) >= sup beta and
// alpha_lower(r, l) <= inf alpha_l over pairs at distance r.
struct CouplingStatsProfile {
    std::function<double(double)> pi_lower;
    std::function<double(double)> beta_upper;
    std::function<double(double, double)> alpha_lower;
};

// Scalar summaries of the envelopes over the TV regimes.
struct TvEnvelopes {
    double inf_pi = 0.0;               // over (0, r0]
    double inf_alpha = kInf;           // over (r0, r1]; +inf when r0 = r1
    double sup_beta_plus = 0.0;        // over (0, r0]
    double sup_4beta_over_alpha = 0.0; // over (r0, r1]
    double sup_beta_over_pi = 0.0;     // over (0, r0]
    double sup_2beta_over_alpha = 0.0; // over (r0, r1]
};

struct AssumptionA {
    double r0 = 0.0;
    double r1 = 0.0;
    double c0 = 0.0;
    CouplingStatsProfile profile;
    // Closed-form bounds that dominate the sampled envelopes (e.g. the Euler
    // scheme bounds); used instead of sampled summaries when present.
    std::optional<TvEnvelopes> bounds;
    std::vector<std::string> notes;
};

struct W1Envelopes {
    double sup_ratio = 0.0;          // sup over (0, r1] of 2 beta_+ / (Psi'(r + l0) alpha_{l0})
    double inf_alpha_over_r = 0.0;   // inf over (0, r1] of alpha_{l0}(r) / r
};

struct AssumptionB {
    CouplingStatsProfile profile;
    ConcavityProfile psi = ConcavityProfile::identity();
    double l0 = 0.0;
    double r1 = 0.0;
    double c0 = 0.0;
    std::optional<W1Envelopes> bounds;
    std::vector<std::string> notes;
};

// Geometric drift of V: int V dp <= (1 - lambda) V + C0, with threshold K for r1.
struct LyapunovData {
    std::function<double(const Vec&)> V;
    // Lower envelope of V(x) + V(y) over pairs at distance r.
    std::function<double(double)> v_sum_min;
    double lambda = 0.0;
    double C0 = 0.0;
    double K = 1.0;
    double r1 = 0.0;
};

inline constexpr std::size_t kEnvelopeGrid = 4096;

// Sampled summaries of a profile over the regimes delimited by r0 <= r1.
inline TvEnvelopes sample_tv_envelopes(const CouplingStatsProfile& p, double r0, double r1) {
    TvEnvelopes e;
    e.inf_pi = kInf;
    for (double r : half_open_grid(0.0, r0, kEnvelopeGrid)) {
        const double pi = p.pi_lower(r);
        const double b = std::max(0.0, p.beta_upper(r));
        e.inf_pi = std::min(e.inf_pi, pi);
        e.sup_beta_plus = std::max(e.sup_beta_plus, b);
        e.sup_beta_over_pi = std::max(e.sup_beta_over_pi, pi > 0 ? b / pi : (b > 0 ? kInf : 0.0));
    }
    if (r1 > r0) {
        for (double r : half_open_grid(r0, r1, kEnvelopeGrid)) {
            const double al = p.alpha_lower(r, 0.0);
            const double b = std::max(0.0, p.beta_upper(r));
            e.inf_alpha = std::min(e.inf_alpha, al);
            const double ratio = al > 0 ? b / al : (b > 0 ? kInf : 0.0);
            e.sup_4beta_over_alpha = std::max(e.sup_4beta_over_alpha, 4.0 * ratio);
            e.sup_2beta_over_alpha = std::max(e.sup_2beta_over_alpha, 2.0 * ratio);
        }
    }
    return e;
}

inline W1Envelopes sample_w1_envelopes(const AssumptionB& q) {
    W1Envelopes e;
    e.inf_alpha_over_r = kInf;
    for (double r : half_open_grid(0.0, q.r1, kEnvelopeGrid)) {
        const double al = q.profile.alpha_lower(r, q.l0);
        const double b = std::max(0.0, q.profile.beta_upper(r));
        e.inf_alpha_over_r = std::min(e.inf_alpha_over_r, al / r);
        const double den = q.psi.psi_prime(r + q.l0) * al;
        e.sup_ratio = std::max(e.sup_ratio, den > 0 ? 2.0 * b / den : (b > 0 ? kInf : 0.0));
    }
    return e;
}

// Checks Assumption (A) and returns the labeled flags; throws
// "assumption A violated: <clause>" on the first failure.
inline std::vector<std::pair<std::string, bool>> validate_assumption_a(const AssumptionA& q, bool simplified) {
    std::vector<std::pair<std::string, bool>> flags;
    if (!(q.r0 > 0.0) || !(q.r1 > 0.0) || q.r0 > q.r1) throw Error("assumption A violated: 0 < r0 <= r1");
    flags.emplace_back("0 < r0 <= r1", true);
    const double r0 = simplified ? q.r1 : q.r0;
    const TvEnvelopes s = sample_tv_envelopes(q.profile, r0, q.r1);
    const TvEnvelopes e = q.bounds.value_or(s);
    for (double r : half_open_grid(0.0, q.r1, 512)) {
        const double pi = q.profile.pi_lower(r);
        if (!(pi >= 0.0 && pi <= 1.0)) throw Error("assumption A violated: pi_lower outside [0,1]");
    }
    if (!(s.inf_pi > 0.0) || !(e.inf_pi > 0.0)) throw Error("assumption A violated: a1");
    flags.emplace_back("a1: inf pi_lower > 0 on (0, r0]", true);
    if (!simplified && q.r1 > q.r0) {
        if (!(s.inf_alpha > 0.0) || !(e.inf_alpha > 0.0)) throw Error("assumption A violated: a2");
        flags.emplace_back("a2: inf alpha_lower > 0 on (r0, r1]", true);
    }
    if (!std::isfinite(s.sup_beta_plus) || !std::isfinite(s.sup_beta_over_pi) ||
        !std::isfinite(s.sup_4beta_over_alpha))
        throw Error("assumption A violated: a2");
    flags.emplace_back("a2: sup beta_upper < inf on (0, r1]", true);
    if (!(q.c0 > 0.0)) throw Error("assumption A violated: a3");
    for (double r : log_grid(q.r1 * (1.0 + 1e-9), q.r1 * 1e3, 2048))
        if (q.profile.beta_upper(r) > -q.c0 * r * (1.0 - 1e-12)) throw Error("assumption A violated: a3");
    flags.emplace_back("a3: beta_upper(r) <= -c0 r on (r1, inf) (sampled)", true);
    if (q.bounds) {
        const double tol = 1e-9;
        const bool dom = e.inf_pi <= s.inf_pi * (1 + tol) && e.sup_beta_over_pi >= s.sup_beta_over_pi * (1 - tol) &&
                         (simplified || q.r1 == q.r0 ||
                          (e.inf_alpha <= s.inf_alpha * (1 + tol) &&
                           e.sup_4beta_over_alpha >= s.sup_4beta_over_alpha * (1 - tol)));
        if (!dom) throw Error("assumption A violated: supplied bounds do not dominate the sampled envelopes");
        flags.emplace_back("closed-form bounds dominate sampled envelopes", true);
    }
    return flags;
}

inline std::vector<std::pair<std::string, bool>> validate_assumption_b(const AssumptionB& q) {
    std::vector<std::pair<std::string, bool>> flags;
    if (!(q.r1 > 0.0) || !(q.l0 > 0.0)) throw Error("assumption B violated: r1, l0 > 0");
    q.psi.validate(q.r1 + q.l0);
    flags.emplace_back("psi: concave profile on (0, r1 + l0] (sampled)", true);
    const W1Envelopes s = sample_w1_envelopes(q);
    const W1Envelopes e = q.bounds.value_or(s);
    if (!(s.inf_alpha_over_r > 0.0) || !(e.inf_alpha_over_r > 0.0)) throw Error("assumption B violated: b1");
    flags.emplace_back("b1: inf alpha_l0(r)/r > 0 on (0, r1]", true);
    if (!std::isfinite(s.sup_ratio) || !std::isfinite(e.sup_ratio)) throw Error("assumption B violated: b2");
    if (!(q.c0 > 0.0)) throw Error("not contractive: c0 <= 0");
    for (double r : log_grid(q.r1 * (1.0 + 1e-9), q.r1 * 1e3, 2048))
        if (q.profile.beta_upper(r) > -q.c0 * r * (1.0 - 1e-12)) throw Error("assumption B violated: b3");
    flags.emplace_back("b3: beta_upper(r) <= -c0 r on (r1, inf) (sampled)", true);
    if (q.bounds) {
        const double tol = 1e-9;
        if (!(e.inf_alpha_over_r <= s.inf_alpha_over_r * (1 + tol) && e.sup_ratio >= s.sup_ratio * (1 - tol)))
            throw Error("assumption B violated: supplied bounds do not dominate the sampled envelopes");
        flags.emplace_back("closed-form bounds dominate sampled envelopes", true);
    }
    return flags;
}

// r1 of the weighted-TV construction: sup of distances r at which
// beta_+/(V(x)+V(y)) >= K or V(x)+V(y) <= 4 C0 / lambda can occur.
inline double lyapunov_r1(const std::function<double(double)>& beta_upper,
                          const std::function<double(double)>& v_sum_min, double K, double C0, double lambda,
                          double cap = 1e6) {
    auto hit = [&](double r) {
        const double v = v_sum_min(r);
        return std::max(0.0, beta_upper(r)) >= K * v || v <= 4.0 * C0 / lambda;
    };
    const auto grid = log_grid(1e-9, cap, 4000);
    if (hit(grid.back())) throw Error("r1 unbounded");
    long last = -1;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (hit(grid[i])) last = static_cast<long>(i);
    if (last < 0) return grid.front();
    double lo = grid[static_cast<std::size_t>(last)], hi = grid[static_cast<std::size_t>(last) + 1];
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (hit(mid) ? lo : hi) = mid;
    }
    // report the right end so the returned r1 is an upper bound of the sup
    return hi;
}

}  // namespace kcontract
