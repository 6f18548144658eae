#pragma once

// Distance-like functions rho(x, y) = indicator part + F(|x - y|) + Lyapunov part.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "kcontract/assumptions.hpp"
#include "kcontract/core.hpp"
#include "kcontract/numeric.hpp"
#include "json.hpp"

namespace kcontract {

enum class RhoKind { TV, WeightedTV, W1, Wp };

inline std::string to_string(RhoKind k) {
    switch (k) {
        case RhoKind::TV: return "tv";
        case RhoKind::WeightedTV: return "weighted-tv";
        case RhoKind::W1: return "w1";
        case RhoKind::Wp: return "wp";
    }
    return "?";
}

inline RhoKind rho_kind_from_string(const std::string& s) {
    if (s == "tv") return RhoKind::TV;
    if (s == "weighted-tv") return RhoKind::WeightedTV;
    if (s == "w1") return RhoKind::W1;
    if (s == "wp") return RhoKind::Wp;
    throw Error("unknown rho kind: " + s);
}

// Knot table of F(r) = int_0^r e^{-c Psi(s)} ds on [0, r_max].
struct HeadCache {
    static constexpr int kKnots = 1 << 12;
    double r_max = 0.0;
    std::vector<double> values;  // kKnots + 1 entries, values[0] = 0

    double step() const { return r_max / kKnots; }
};

inline std::shared_ptr<const HeadCache> build_head_cache(const ConcavityProfile& psi, double c, double r_max,
                                                         int knots = HeadCache::kKnots) {
    auto cache = std::make_shared<HeadCache>();
    cache->r_max = r_max;
    cache->values.resize(static_cast<std::size_t>(knots) + 1);
    const std::function<double(double)> f = [&](double s) { return std::exp(-c * psi.psi(s)); };
    const double h = r_max / knots;
    double acc = 0.0;
    for (int i = 0; i < knots; ++i) {
        const double a = i * h, b = (i + 1 == knots) ? r_max : (i + 1) * h;
        acc += adaptive_simpson(f, a, b, 1e-10 / knots, 40);
        cache->values[static_cast<std::size_t>(i) + 1] = acc;
    }
    return cache;
}

struct RhoSpec {
    RhoKind kind = RhoKind::TV;
    double a = 0.0;
    double c = 1.0;
    double epsilon = 0.0;
    double r0 = 0.0;
    double r1 = 0.0;
    double l0 = 0.0;
    double p = 0.0;
    double k = 0.0;
    double A = 0.0;
    bool simplified = false;
    ConcavityProfile profile = ConcavityProfile::identity();
    std::function<double(const Vec&)> lyapunov;
    std::shared_ptr<const HeadCache> head;

    double splice() const { return r1 + l0; }

    // Decay rate c Psi'(r1 + l0) of the Wp tail correction, matching F'' at the splice.
    double tail_rate() const { return c * profile.psi_prime(splice()); }

    // --- concave head int_0^r e^{-c Psi} (W1 / Wp) ---------------------------

    double head_value(double r) const {
        if (profile.is_identity()) return -std::expm1(-c * r) / c;
        const double h = head->step();
        const auto i = std::min<std::size_t>(static_cast<std::size_t>(r / h), head->values.size() - 2);
        const double r_i = static_cast<double>(i) * h;
        const std::function<double(double)> f = [this](double s) { return std::exp(-c * profile.psi(s)); };
        return head->values[i] + (r > r_i ? adaptive_simpson(f, r_i, r, 1e-15, 50) : 0.0);
    }
    double head_d1(double r) const { return std::exp(-c * profile.psi(r)); }
    double head_d2(double r) const { return -c * profile.psi_prime(r) * head_d1(r); }
    double head_d3(double r) const {
        const double pp = profile.psi_prime(r);
        return (c * c * pp * pp - c * profile.psi_double_prime(r)) * head_d1(r);
    }

    // --- radial part F and its derivatives -----------------------------------

    double radial(double r) const {
        switch (kind) {
            case RhoKind::TV: return -std::expm1(-c * r) + c * std::exp(-c * r1) * r;
            case RhoKind::WeightedTV: return -std::expm1(-c * r);
            case RhoKind::W1: {
                const double s0 = splice();
                if (r <= s0) return head_value(r);
                const double d1 = head_d1(s0), q = 2.0 * head_d2(s0) / d1, u = r - s0;
                return head_value(s0) + 0.5 * d1 * (u + std::expm1(q * u) / q);
            }
            case RhoKind::Wp: {
                const double s0 = splice();
                if (r <= s0) return head_value(r);
                const double u = r - s0, q = tail_rate();
                return head_value(s0) + A * std::pow(u, p) - head_d1(s0) * std::expm1(-q * u) / q;
            }
        }
        return 0.0;
    }

    double radial_d1(double r) const {
        switch (kind) {
            case RhoKind::TV: return c * std::exp(-c * r) + c * std::exp(-c * r1);
            case RhoKind::WeightedTV: return c * std::exp(-c * r);
            case RhoKind::W1: {
                const double s0 = splice();
                if (r <= s0) return head_d1(r);
                const double d1 = head_d1(s0), q = 2.0 * head_d2(s0) / d1;
                return 0.5 * d1 * (1.0 + std::exp(q * (r - s0)));
            }
            case RhoKind::Wp: {
                const double s0 = splice();
                if (r <= s0) return head_d1(r);
                const double u = r - s0, q = tail_rate();
                return A * p * std::pow(u, p - 1.0) + head_d1(s0) * std::exp(-q * u);
            }
        }
        return 0.0;
    }

    double radial_d2(double r) const {
        switch (kind) {
            case RhoKind::TV:
            case RhoKind::WeightedTV: return -c * c * std::exp(-c * r);
            case RhoKind::W1: {
                const double s0 = splice();
                if (r <= s0) return head_d2(r);
                const double d1 = head_d1(s0), d2 = head_d2(s0), q = 2.0 * d2 / d1;
                return d2 * std::exp(q * (r - s0));
            }
            case RhoKind::Wp: {
                const double s0 = splice();
                if (r <= s0) return head_d2(r);
                const double u = r - s0, q = tail_rate();
                return A * p * (p - 1.0) * std::pow(u, p - 2.0) - q * head_d1(s0) * std::exp(-q * u);
            }
        }
        return 0.0;
    }

    double radial_d3(double r) const {
        switch (kind) {
            case RhoKind::TV:
            case RhoKind::WeightedTV: return c * c * c * std::exp(-c * r);
            case RhoKind::W1: {
                const double s0 = splice();
                if (r <= s0) return head_d3(r);
                const double d1 = head_d1(s0), d2 = head_d2(s0), q = 2.0 * d2 / d1;
                return q * d2 * std::exp(q * (r - s0));
            }
            case RhoKind::Wp: {
                const double s0 = splice();
                if (r <= s0) return head_d3(r);
                const double u = r - s0, q = tail_rate();
                return A * p * (p - 1.0) * (p - 2.0) * std::pow(u, p - 3.0) + q * q * head_d1(s0) * std::exp(-q * u);
            }
        }
        return 0.0;
    }

    // --- evaluation ----------------------------------------------------------

    bool has_indicator() const { return kind == RhoKind::TV || kind == RhoKind::WeightedTV; }

    double lyapunov_sum(const Vec& x, const Vec& y) const {
        if (!lyapunov) throw Error("weighted TV requires a Lyapunov function");
        const double v = lyapunov(x) + lyapunov(y);
        if (std::isnan(v) || v < 0.0) throw Error("invalid Lyapunov value");
        return v;
    }

    double operator()(const Vec& x, const Vec& y) const {
        const double r = distance(x, y);
        if (std::isnan(r) || r < 0.0) throw Error("negative distance");
        if (r == 0.0) return 0.0;
        double v = radial(r);
        if (has_indicator()) v += a;
        if (kind == RhoKind::WeightedTV) v += epsilon * lyapunov_sum(x, y);
        return v;
    }

    // rho(X, Y) - rho(x, y), computed without cancelling the constant a.
    double increment(const Vec& x, const Vec& y, const Vec& X, const Vec& Y) const {
        const double r = distance(x, y), R = distance(X, Y);
        if (std::isnan(r) || std::isnan(R)) throw Error("negative distance");
        double inc = 0.0;
        if (has_indicator()) inc += a * ((R > 0.0 ? 1.0 : 0.0) - (r > 0.0 ? 1.0 : 0.0));
        if (kind == RhoKind::TV || kind == RhoKind::WeightedTV) {
            // e^{-cr} - e^{-cR}
            const double lo = std::min(r, R), gap = std::fabs(R - r);
            const double diff = -std::exp(-c * lo) * std::expm1(-c * gap);
            inc += R >= r ? diff : -diff;
            if (kind == RhoKind::TV) inc += c * std::exp(-c * r1) * (R - r);
        } else {
            inc += radial(R) - radial(r);
        }
        if (kind == RhoKind::WeightedTV) {
            if (R > 0.0) inc += epsilon * lyapunov_sum(X, Y);
            if (r > 0.0) inc -= epsilon * lyapunov_sum(x, y);
        }
        return inc;
    }
};

// ============================================================================
// Builders
// ============================================================================

inline TvEnvelopes effective_tv_envelopes(const AssumptionA& q, bool simplified) {
    if (q.bounds) return *q.bounds;
    return sample_tv_envelopes(q.profile, simplified ? q.r1 : q.r0, q.r1);
}

inline RhoSpec build_tv_distance(const AssumptionA& q, bool simplified) {
    validate_assumption_a(q, simplified);
    const TvEnvelopes e = effective_tv_envelopes(q, simplified);
    RhoSpec s;
    s.kind = RhoKind::TV;
    s.simplified = simplified;
    s.r1 = q.r1;
    s.r0 = simplified ? q.r1 : q.r0;
    s.c = simplified ? 1.0 : e.sup_4beta_over_alpha + 1.0;
    s.a = 2.0 * s.c * (1.0 + std::exp(-s.c * s.r1)) * e.sup_beta_over_pi + 1.0;
    return s;
}

// eps = c^2 e^{-c r1} inf_alpha / (8 C0)
inline double weighted_tv_epsilon(double c, double r1, double inf_alpha, double C0) {
    return c * c * std::exp(-c * r1) * inf_alpha / (8.0 * C0);
}

// A = 16 K C0 / (lambda inf_alpha)
inline double weighted_tv_A(double K, double C0, double lambda, double inf_alpha) {
    return 16.0 * K * C0 / (lambda * inf_alpha);
}

// q supplies the envelopes; its r1 is replaced by the Lyapunov r1. With
// simplified = true the construction uses r0 = r1 and drops inf alpha.
inline RhoSpec build_weighted_tv_distance(const AssumptionA& q, const LyapunovData& lyap, bool simplified = false) {
    if (!(lyap.lambda > 0.0 && lyap.lambda < 1.0)) throw Error("lambda out of range");
    if (!(lyap.C0 > 0.0)) throw Error("assumption A violated: C0 <= 0");
    if (!(lyap.r1 > 0.0)) throw Error("r1 search failed");
    AssumptionA qq = q;
    qq.r1 = lyap.r1;
    qq.r0 = simplified ? lyap.r1 : std::min(q.r0, lyap.r1);
    if (qq.r1 != q.r1 || qq.r0 != q.r0) qq.bounds.reset();
    // (a1), (a2) only; the tail is handled by the Lyapunov function
    if (!(qq.r0 > 0.0)) throw Error("assumption A violated: 0 < r0 <= r1");
    const TvEnvelopes e = effective_tv_envelopes(qq, simplified);
    if (!(e.inf_pi > 0.0)) throw Error("assumption A violated: a1");
    RhoSpec s;
    s.kind = RhoKind::WeightedTV;
    s.simplified = simplified;
    s.r0 = qq.r0;
    s.r1 = qq.r1;
    s.lyapunov = lyap.V;
    if (simplified) {
        s.c = 16.0 * lyap.K * lyap.C0 / lyap.lambda + 1.0;
        s.epsilon = s.c * s.c * std::exp(-s.c * s.r1) / (8.0 * lyap.C0);
    } else {
        if (!(e.inf_alpha > 0.0) || !std::isfinite(e.inf_alpha)) throw Error("assumption A violated: a2");
        s.c = e.sup_2beta_over_alpha + weighted_tv_A(lyap.K, lyap.C0, lyap.lambda, e.inf_alpha) + 1.0;
        s.epsilon = weighted_tv_epsilon(s.c, s.r1, e.inf_alpha, lyap.C0);
    }
    s.a = 2.0 * (s.c * e.sup_beta_plus + 2.0 * s.epsilon * lyap.C0) / e.inf_pi;
    return s;
}

inline W1Envelopes effective_w1_envelopes(const AssumptionB& q) {
    return q.bounds ? *q.bounds : sample_w1_envelopes(q);
}

namespace detail {

inline RhoSpec concave_head_spec(const AssumptionB& q, RhoKind kind) {
    validate_assumption_b(q);
    const W1Envelopes e = effective_w1_envelopes(q);
    RhoSpec s;
    s.kind = kind;
    s.r1 = q.r1;
    s.l0 = q.l0;
    s.profile = q.psi;
    s.c = e.sup_ratio + 1.0;
    if (!(s.c * q.psi.psi(q.l0) <= std::log(2.0))) throw Error("b2 violated");
    s.head = build_head_cache(q.psi, s.c, s.splice());
    return s;
}

}  // namespace detail

inline RhoSpec build_w1_distance(const AssumptionB& q) { return detail::concave_head_spec(q, RhoKind::W1); }

// A = (p(p-1))^{-1} (k s0)^{2-p} c' e^{-c Psi(s0) - c' k s0} with c' = c Psi'(s0),
// which puts the inflection at (k+1) s0.
inline double wp_A(double p, double k, double s0, double c, double psi_s0, double psi_prime_s0 = 1.0) {
    const double q = c * psi_prime_s0;
    return std::pow(k * s0, 2.0 - p) * q * std::exp(-c * psi_s0 - q * k * s0) / (p * (p - 1.0));
}

// Smallest admissible k.
inline double wp_k_floor(double p, double l, double c, double c0, double s0) {
    return 1.0 + std::max(2.0 * l * std::exp(c * l) / (c0 * s0), std::pow(4.0, p) * l / (c0 * s0));
}

inline RhoSpec build_wp_distance(const AssumptionB& q, double p, double l, double k = 0.0) {
    if (!(p > 2.0)) throw Error("p must exceed 2");
    if (!(l >= 0.0)) throw Error("l must be nonnegative");
    if (q.r1 < l + 1.0) throw Error("r1 too small vs l");
    RhoSpec s = detail::concave_head_spec(q, RhoKind::Wp);
    const double s0 = s.splice();
    const double floor = wp_k_floor(p, l, s.c, q.c0, s0);
    if (k == 0.0) k = floor;
    if (k < floor) throw Error("k below floor: " + std::to_string(floor));
    s.p = p;
    s.k = k;
    s.A = wp_A(p, k, s0, s.c, q.psi.psi(s0), q.psi.psi_prime(s0));
    return s;
}

// ============================================================================
// Comparability and shape checks
// ============================================================================

// c_bar with the kind's sandwich: TV against 1 + r, W1 against r, Wp against
// r v r^p (grid over [1e-6, 1e3]); weighted TV against 1 + V(x) + V(y) (exact).
inline std::pair<double, double> comparability_bounds(const RhoSpec& s) {
    if (s.kind == RhoKind::WeightedTV) {
        if (!(s.a > 0.0 && s.epsilon > 0.0)) return {0.0, kInf};
        const double cb = std::max({s.a + 1.0, s.epsilon, 1.0 / std::min(s.a, s.epsilon)});
        return {1.0 / cb, cb};
    }
    double cb = 1.0;
    for (double r : log_grid(1e-6, 1e3, 10000)) {
        double ref = r;
        double v = s.radial(r);
        if (s.kind == RhoKind::TV) {
            ref = 1.0 + r;
            v += s.a;
        }
        if (s.kind == RhoKind::Wp) ref = std::max(r, std::pow(r, s.p));
        cb = std::max({cb, v / ref, ref / v});
    }
    return {1.0 / cb, cb};
}

struct ShapeCheck {
    std::string name;
    bool pass = true;
    double worst = 0.0;
    std::size_t skipped = 0;
};

// Derivative-sign, monotonicity, finite-difference agreement and splice
// continuity checks on a log grid of n points over [r_lo, r_hi].
inline std::vector<ShapeCheck> check_shape(const RhoSpec& s, std::size_t n = 10000, double r_lo = 1e-6,
                                           double r_hi = 1e3) {
    std::vector<ShapeCheck> out;
    const auto grid = log_grid(r_lo, r_hi, n);
    const double tiny = 1e-290;
    const bool wp = s.kind == RhoKind::Wp;
    const double infl = wp ? (s.k + 1.0) * s.splice() : kInf;

    ShapeCheck mono{"F strictly increasing"}, d1{"F' > 0"}, d2{"F'' sign"}, d3{"F'' non-decreasing (F''' >= 0)"};
    ShapeCheck fd1{"central difference F' agrees (1e-4 rel)"}, fd2{"central difference F'' agrees (1e-4 rel)"},
        fd3{"central difference F''' agrees (1e-4 rel)"};
    double prev = s.radial(0.0);
    ShapeCheck zero{"F(0) = 0"};
    zero.pass = prev == 0.0;
    auto agree = [](ShapeCheck& chk, double num, double ana, double lower, double delta) {
        const double tol = 1e-4 * std::fabs(ana) + 4e-16 * (std::fabs(lower) + 1.0) / delta + 1e-300;
        const double err = std::fabs(num - ana);
        chk.worst = std::max(chk.worst, err / std::max(std::fabs(ana), 1e-300));
        if (err > tol) chk.pass = false;
    };
    double r_prev = 0.0;
    for (double r : grid) {
        const double v = s.radial(r);
        const double a1 = s.radial_d1(r), a2 = s.radial_d2(r), a3 = s.radial_d3(r);
        // a tie only counts when the increase F' dr is resolvable at this magnitude
        if (v < prev || (v == prev && a1 * (r - r_prev) > 4.0 * 2.2e-16 * std::fabs(v))) mono.pass = false;
        prev = v;
        r_prev = r;
        if (std::fabs(a1) < tiny) ++d1.skipped;
        else if (!(a1 > 0.0)) d1.pass = false;
        if (std::fabs(a2) < tiny) ++d2.skipped;
        else {
            const bool neg_expected = s.kind == RhoKind::TV || s.kind == RhoKind::WeightedTV || r < infl;
            if (s.kind == RhoKind::W1 ? !(a2 <= 0.0) : (neg_expected ? !(a2 < 0.0) : !(a2 > 0.0))) d2.pass = false;
        }
        if (std::fabs(a3) < tiny) ++d3.skipped;
        else if (s.kind == RhoKind::TV || s.kind == RhoKind::WeightedTV ? !(a3 > 0.0) : !(a3 >= 0.0)) d3.pass = false;

        const double delta = 1e-6 * std::max(r, 1.0);
        const bool near_splice = (s.kind == RhoKind::W1 || wp) && std::fabs(r - s.splice()) < 2.0 * delta;
        if (r <= delta || near_splice) continue;
        agree(fd1, (s.radial(r + delta) - s.radial(r - delta)) / (2 * delta), a1, v, delta);
        agree(fd2, (s.radial_d1(r + delta) - s.radial_d1(r - delta)) / (2 * delta), a2, a1, delta);
        agree(fd3, (s.radial_d2(r + delta) - s.radial_d2(r - delta)) / (2 * delta), a3, a2, delta);
    }
    out.push_back(zero);
    out.push_back(mono);
    out.push_back(d1);
    out.push_back(d2);
    out.push_back(d3);
    out.push_back(fd1);
    out.push_back(fd2);
    out.push_back(fd3);

    // sandwich on the same grid
    const auto [lo, hi] = comparability_bounds(s);
    ShapeCheck sand{"comparability sandwich"};
    if (s.kind != RhoKind::WeightedTV) {
        for (double r : grid) {
            double v = s.radial(r), ref = r;
            if (s.kind == RhoKind::TV) {
                v += s.a;
                ref = 1.0 + r;
            }
            if (wp) ref = std::max(r, std::pow(r, s.p));
            if (!(lo * ref <= v * (1 + 1e-12) && v <= hi * ref * (1 + 1e-12))) sand.pass = false;
        }
    }
    sand.worst = hi;
    out.push_back(sand);

    if (s.kind == RhoKind::W1 || wp) {
        const double s0 = s.splice();
        const double e = 1e-9 * std::max(1.0, s0);
        ShapeCheck cont{"C0/C1 splice at r1 + l0 (1e-9)"};
        // one-sided differences minus the first-order term leave only a jump
        const double j0 = s.radial(s0 + e) - s.radial(s0) - s.radial_d1(s0) * e;
        const double j1 = s.radial_d1(s0 + e) - s.radial_d1(s0) - s.radial_d2(s0) * e;
        cont.worst = std::max(std::fabs(j0), std::fabs(j1));
        cont.pass = cont.worst < 1e-9;
        out.push_back(cont);
        ShapeCheck c2{"C2 splice at r1 + l0 (1e-9)"};
        c2.worst = std::fabs(s.radial_d2(s0 + e) - s.radial_d2(s0) - s.radial_d3(s0 + e) * e);
        c2.pass = c2.worst < 1e-9;
        out.push_back(c2);
    }
    if (wp) {
        ShapeCheck z{"F''((k+1)(r1+l0)) = 0 (1e-9)"};
        z.worst = std::fabs(s.radial_d2(infl));
        z.pass = z.worst < 1e-9;
        out.push_back(z);
    }
    return out;
}

// ============================================================================
// JSON
// ============================================================================

inline nlohmann::json to_json(const RhoSpec& s) {
    nlohmann::json j;
    j["kind"] = to_string(s.kind);
    j["a"] = s.a;
    j["c"] = s.c;
    j["epsilon"] = s.epsilon;
    j["r0"] = s.r0;
    j["r1"] = s.r1;
    j["l0"] = s.l0;
    j["p"] = s.p;
    j["k"] = s.k;
    j["A"] = s.A;
    j["simplified"] = s.simplified;
    j["profile"] = {{"name", s.profile.name}, {"width", s.profile.width}};
    j["has_lyapunov"] = static_cast<bool>(s.lyapunov);
    if (s.head) j["knots"] = {{"r_max", s.head->r_max}, {"values", s.head->values}};
    return j;
}

// The Lyapunov function is not serializable; reattach it after loading.
inline RhoSpec rho_from_json(const nlohmann::json& j) {
    RhoSpec s;
    s.kind = rho_kind_from_string(j.at("kind").get<std::string>());
    s.a = j.at("a").get<double>();
    s.c = j.at("c").get<double>();
    s.epsilon = j.at("epsilon").get<double>();
    s.r0 = j.at("r0").get<double>();
    s.r1 = j.at("r1").get<double>();
    s.l0 = j.at("l0").get<double>();
    s.p = j.at("p").get<double>();
    s.k = j.at("k").get<double>();
    s.A = j.at("A").get<double>();
    s.simplified = j.at("simplified").get<bool>();
    const auto name = j.at("profile").at("name").get<std::string>();
    if (name == "identity") s.profile = ConcavityProfile::identity();
    else if (name == "sine") s.profile = ConcavityProfile::sine(j.at("profile").at("width").get<double>());
    else throw Error("profile not serializable: " + name);
    if (j.contains("knots")) {
        auto cache = std::make_shared<HeadCache>();
        cache->r_max = j["knots"].at("r_max").get<double>();
        cache->values = j["knots"].at("values").get<std::vector<double>>();
        s.head = cache;
    }
    return s;
}

}  // namespace kcontract
