#pragma once

// Contraction certificates c* for the four distance-like functions.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kcontract/assumptions.hpp"
#include "kcontract/core.hpp"
#include "kcontract/rho.hpp"

namespace kcontract {

using Labeled = std::vector<std::pair<std::string, double>>;
using Flags = std::vector<std::pair<std::string, bool>>;

struct RateCertificate {
    double c_star = 0.0;
    Labeled regime_constants;
    Labeled auxiliary;   // intermediate constants that do not enter the minimum
    Labeled boundaries;  // r0, r1 and any extra knots
    RhoSpec rho;
    Flags checked;
    std::vector<std::string> notes;
    std::string config_hash;
};

// Validates and seals a certificate: every flag true, c* the exact minimum,
// every regime constant inside (0, 1).
inline RateCertificate seal(RateCertificate cert) {
    for (const auto& [name, ok] : cert.checked)
        if (!ok) throw Error("unverified precondition: " + name);
    if (cert.regime_constants.empty()) throw Error("not contractive: no regime constants");
    double m = kInf;
    for (const auto& [name, v] : cert.regime_constants) {
        if (!(v > 0.0 && v < 1.0)) throw Error("not contractive: " + name + " = " + std::to_string(v));
        m = std::min(m, v);
    }
    cert.c_star = m;
    return cert;
}

inline nlohmann::json to_json(const RateCertificate& c) {
    nlohmann::json j;
    j["c_star"] = c.c_star;
    auto labeled = [](const Labeled& l) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& [k, v] : l) a.push_back({{"name", k}, {"value", v}});
        return a;
    };
    j["regime_constants"] = labeled(c.regime_constants);
    j["auxiliary"] = labeled(c.auxiliary);
    j["regime_boundaries"] = labeled(c.boundaries);
    nlohmann::json f = nlohmann::json::array();
    for (const auto& [k, v] : c.checked) f.push_back({{"condition", k}, {"verified", v}});
    j["checked"] = f;
    j["notes"] = c.notes;
    j["rho"] = to_json(c.rho);
    j["config_hash"] = c.config_hash;
    return j;
}

// ============================================================================
// Total variation
// ============================================================================

inline RateCertificate c_star_tv(const AssumptionA& q, const RhoSpec& rho) {
    if (rho.kind != RhoKind::TV) throw Error("rho kind mismatch: expected tv");
    RateCertificate cert;
    cert.checked = validate_assumption_a(q, rho.simplified);
    const TvEnvelopes e = effective_tv_envelopes(q, rho.simplified);
    const double a = rho.a, c = rho.c, r0 = rho.r0, r1 = rho.r1;
    const double t = std::exp(-c * r1);
    const double c1 = a * e.inf_pi / (2.0 * (a + 1.0 + c * r0 * t));
    const double c3 = q.c0 / (1.0 + (1.0 + a) / (r1 * c * t));
    cert.regime_constants.emplace_back("c1", c1);
    if (!rho.simplified && r1 > r0) {
        const double c2 = c * c * t * e.inf_alpha / (2.0 * (a + 1.0 + c * r1 * t));
        cert.regime_constants.emplace_back("c2", c2);
    }
    cert.regime_constants.emplace_back("c3", c3);
    cert.auxiliary = {{"a", a}, {"c", c}, {"inf_pi", e.inf_pi}, {"c0", q.c0}};
    if (!rho.simplified) cert.auxiliary.emplace_back("inf_alpha", e.inf_alpha);
    cert.boundaries = {{"r0", r0}, {"r1", r1}};
    cert.rho = rho;
    cert.notes = q.notes;
    if (rho.simplified) cert.notes.push_back("simplified mode: r0 = r1, c = 1, c* = min(c1, c3)");
    return seal(std::move(cert));
}

// ============================================================================
// Weighted total variation
// ============================================================================

// c4 = min(2 C0 c3 / (lambda (a + 1)), c3 / (2 eps))
inline double weighted_tv_c4(double c3, double C0, double lambda, double a, double eps) {
    return std::min(2.0 * C0 * c3 / (lambda * (a + 1.0)), c3 / (2.0 * eps));
}

inline RateCertificate c_star_weighted_tv(const AssumptionA& q, const LyapunovData& lyap, const RhoSpec& rho) {
    if (rho.kind != RhoKind::WeightedTV) throw Error("rho kind mismatch: expected weighted-tv");
    if (!(lyap.lambda > 0.0 && lyap.lambda < 1.0)) throw Error("lambda out of range");
    if (!(lyap.r1 > 0.0) || lyap.r1 != rho.r1) throw Error("r1 search failed");
    AssumptionA qq = q;
    qq.r1 = rho.r1;
    qq.r0 = rho.r0;
    if (qq.r1 != q.r1 || qq.r0 != q.r0) qq.bounds.reset();
    const TvEnvelopes e = effective_tv_envelopes(qq, rho.simplified);
    RateCertificate cert;
    cert.checked.emplace_back("a1: inf pi_lower > 0 on (0, r0]", e.inf_pi > 0.0);
    if (!rho.simplified) cert.checked.emplace_back("a2: inf alpha_lower > 0 on (r0, r1]", e.inf_alpha > 0.0);
    cert.checked.emplace_back("a3*: lambda in (0,1), C0 > 0", lyap.lambda > 0.0 && lyap.lambda < 1.0 && lyap.C0 > 0.0);
    cert.checked.emplace_back("r1 from the Lyapunov threshold search", true);

    const double a = rho.a, c = rho.c, r1 = rho.r1, eps = rho.epsilon, lam = lyap.lambda;
    const double inf_alpha = rho.simplified ? 1.0 : e.inf_alpha;
    const double ratio = rho.simplified ? 0.0 : e.sup_2beta_over_alpha;
    const double c1 = std::min(a / (2.0 * (a + 1.0)) * e.inf_pi, lam);
    const double c3 = lam * c * std::exp(-c * r1) * inf_alpha * (ratio + 1.0) / (16.0 * lyap.C0);
    const double c4 = weighted_tv_c4(c3, lyap.C0, lam, a, eps);
    cert.regime_constants.emplace_back("c1", c1);
    if (!rho.simplified && r1 > rho.r0) {
        const double c2 = std::min(c * c * std::exp(-c * r1) * inf_alpha / (4.0 * (a + 1.0)), lam);
        cert.regime_constants.emplace_back("c2", c2);
    }
    cert.regime_constants.emplace_back("c4", c4);
    cert.auxiliary = {{"a", a}, {"c", c}, {"epsilon", eps}, {"c3", c3}, {"lambda", lam}, {"C0", lyap.C0}, {"K", lyap.K}};
    cert.boundaries = {{"r0", rho.r0}, {"r1", r1}};
    cert.rho = rho;
    cert.notes = q.notes;
    if (rho.simplified) cert.notes.push_back("simplified mode: r0 = r1, c* = min(c1, c4)");
    return seal(std::move(cert));
}

// ============================================================================
// W1
// ============================================================================

inline RateCertificate c_star_w1(const AssumptionB& q, const RhoSpec& rho) {
    if (rho.kind != RhoKind::W1) throw Error("rho kind mismatch: expected w1");
    if (!(q.c0 > 0.0)) throw Error("not contractive: c0 <= 0");
    RateCertificate cert;
    cert.checked = validate_assumption_b(q);
    cert.checked.emplace_back("b2: c Psi(l0) <= log 2", rho.c * q.psi.psi(q.l0) <= std::log(2.0));
    const W1Envelopes e = effective_w1_envelopes(q);
    const double s0 = rho.splice();
    const double w = std::exp(-rho.c * q.psi.psi(s0));
    const double c1 = q.psi.psi_prime(s0) * w * e.inf_alpha_over_r;
    const double c2 = 0.5 * q.c0 * w / std::max(1.0, rho.radial(s0) / s0);
    cert.regime_constants = {{"c1", c1}, {"c2", c2}};
    cert.auxiliary = {{"c", rho.c}, {"inf_alpha_over_r", e.inf_alpha_over_r}, {"c0", q.c0}};
    cert.boundaries = {{"r1", q.r1}, {"l0", q.l0}, {"r1+l0", s0}};
    cert.rho = rho;
    cert.notes = q.notes;
    if (!q.psi.is_identity())
        cert.notes.push_back("c2 uses e^{-c Psi(r1+l0)} (the value of f3'(r1+l0)) in place of e^{-c (r1+l0)}");
    return seal(std::move(cert));
}

// ============================================================================
// Lp
// ============================================================================

struct WpRegimes {
    double c2 = kInf, c3 = kInf, c4 = kInf;
    bool penalties_hold = true;
};

inline WpRegimes wp_regime_constants(const RhoSpec& rho, double c0, double l, std::size_t grid) {
    WpRegimes out;
    const double s0 = rho.splice(), k = rho.k;
    const double knee = (k + 1.0) * s0, far = 4.0 * k * s0;
    const double f3 = l > 0.0 ? 0.5 * c0 : c0, f4 = l > 0.0 ? 0.25 * c0 : 0.5 * c0;
    const double d_knee = rho.radial_d1(knee);
    for (double r : half_open_grid(rho.r1, knee - l, grid))
        out.c2 = std::min(out.c2, c0 * rho.radial_d1(r) * r / rho.radial(r));
    for (double r : half_open_grid(knee - l, far, grid)) {
        out.c3 = std::min(out.c3, f3 * d_knee * r / rho.radial(r));
        if (l > 0.0 && f3 * d_knee * r < l * (std::max(rho.radial_d1(r), rho.radial_d1(r + l)) - d_knee))
            out.penalties_hold = false;
    }
    for (double r : log_grid(far * (1.0 + 1e-12), far * 1e8, grid)) {
        out.c4 = std::min(out.c4, f4 * rho.radial_d1(0.5 * r) * r / rho.radial(r));
        if (l > 0.0 && f4 * rho.radial_d1(0.5 * r) * r < l * (rho.radial_d1(r + l) - 0.5 * rho.radial_d1(0.5 * r)))
            out.penalties_hold = false;
    }
    // r -> infinity: f'(r/2) r / f(r) -> p 2^{1-p}
    out.c4 = std::min(out.c4, f4 * rho.p * std::pow(2.0, 1.0 - rho.p));
    return out;
}

inline RateCertificate c_star_wp(const AssumptionB& q, const RhoSpec& rho_in, double l, std::size_t grid = 4096) {
    if (rho_in.kind != RhoKind::Wp) throw Error("rho kind mismatch: expected wp");
    if (!(l >= 0.0)) throw Error("l must be nonnegative");
    if (q.r1 < l + 1.0) throw Error("r1 too small vs l");
    RhoSpec rho = rho_in;
    const double floor = wp_k_floor(rho.p, l, rho.c, q.c0, rho.splice());
    if (rho.k < floor) throw Error("k below floor: " + std::to_string(floor));
    RateCertificate cert;
    cert.checked = validate_assumption_b(q);
    WpRegimes reg = wp_regime_constants(rho, q.c0, l, grid);
    int doublings = 0;
    while (!reg.penalties_hold && doublings < 30) {
        rho = build_wp_distance(q, rho.p, l, 2.0 * rho.k);
        reg = wp_regime_constants(rho, q.c0, l, grid);
        ++doublings;
    }
    if (doublings > 0)
        cert.notes.push_back("k doubled " + std::to_string(doublings) + " time(s) until the jump penalties were dominated");
    cert.checked.emplace_back("p > 2", rho.p > 2.0);
    cert.checked.emplace_back("r1 >= l + 1", q.r1 >= l + 1.0);
    cert.checked.emplace_back("k >= floor", rho.k >= floor);
    cert.checked.emplace_back("jump penalties dominated on the regime grids", reg.penalties_hold);
    const double s0 = rho.splice();
    const W1Envelopes e = effective_w1_envelopes(q);
    const double c1 = q.psi.psi_prime(s0) * std::exp(-rho.c * q.psi.psi(s0)) * e.inf_alpha_over_r;
    cert.regime_constants = {{"c1", c1}, {"c2", reg.c2}, {"c3", reg.c3}, {"c4", reg.c4}};
    cert.auxiliary = {{"c", rho.c}, {"A", rho.A}, {"k", rho.k}, {"p", rho.p}, {"l", l}, {"k_floor", floor}};
    cert.boundaries = {{"r1", q.r1},
                       {"r1+l0", s0},
                       {"(k+1)(r1+l0)-l", (rho.k + 1.0) * s0 - l},
                       {"(k+1)(r1+l0)", (rho.k + 1.0) * s0},
                       {"4k(r1+l0)", 4.0 * rho.k * s0}};
    cert.rho = rho;
    for (const auto& n : q.notes) cert.notes.push_back(n);
    cert.notes.push_back("c2, c3, c4 are grid infima of the per-regime drift ratios (" + std::to_string(grid) +
                         " points per regime)");
    return seal(std::move(cert));
}

}  // namespace kcontract
