#pragma once

// Exact one-step statistics of the couplings on a lattice noise, by
// enumerating every (lattice point, branch) pair.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "kcontract/couplings.hpp"
#include "kcontract/noise.hpp"
#include "kcontract/numeric.hpp"
#include "kcontract/rho.hpp"

namespace kcontract {

struct OracleInstance {
    NoiseSpec noise;  // lattice family
    EulerModel model;
    CouplingKind kind = CouplingKind::RefinedBasic;
    MixedParams mixed;
};

struct OracleResult {
    double pi = 0.0;
    double beta = 0.0;
    std::vector<std::pair<double, double>> alpha;  // l -> alpha_l
    double E_rho = 0.0;
    std::map<double, double> r_after_law;          // r_after -> probability
    std::size_t terms = 0;
};

inline constexpr std::size_t kOracleMaxTerms = 10'000'000;

inline OracleResult oracle_exact(const OracleInstance& inst, const Vec& x, const Vec& y, const RhoSpec& rho,
                                 const std::vector<double>& l_values = {}) {
    const NoiseSpec& nz = inst.noise;
    if (nz.family != NoiseFamily::Lattice) throw Error("oracle needs a lattice noise");
    if (std::fabs(pairwise_sum(nz.pmf) - 1.0) > 1e-12) throw Error("lattice pmf does not sum to 1");
    const std::size_t n = nz.pmf.size();
    if (3 * n > kOracleMaxTerms) throw Error("instance too large");
    const EulerModel& m = inst.model;
    if (inst.kind != CouplingKind::RefinedBasic && !nz.satisfies_c4()) throw Error("condition c4 violated");

    const Vec xh = m.x_hat(x), yh = m.x_hat(y);
    const double g = m.g;
    const double r = distance(x, y), r_hat = distance(xh, yh);
    const Vec toward = truncate_kappa(sub(xh, yh), m.kappa);
    const Vec v_minus = scale(-1.0 / g, toward);
    const bool can_coalesce = r_hat <= m.kappa;
    const long half = nz.lattice_half_width();

    struct Term {
        double p;
        Vec X, Y;
        bool coalesced;
    };
    std::vector<Term> terms;
    terms.reserve(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pz = nz.pmf[i];
        if (pz == 0.0) continue;
        const Vec z{static_cast<double>(static_cast<long>(i) - half) * nz.delta};
        const Vec X = axpy(xh, g, z);
        if (r_hat == 0.0) {
            terms.push_back({pz, X, X, true});
            continue;
        }
        auto ratio = [&](const Vec& v) { return std::min(1.0, density(nz, sub(z, v)) / pz); };
        const Vec sync = axpy(yh, g, z);
        auto coalesce_Y = [&] { return can_coalesce ? X : add(sync, toward); };
        switch (inst.kind) {
            case CouplingKind::RefinedBasic: {
                const double p1 = 0.5 * ratio(v_minus), p2 = 0.5 * ratio(scale(-1.0, v_minus));
                terms.push_back({pz * p1, X, coalesce_Y(), can_coalesce});
                terms.push_back({pz * p2, X, sub(sync, toward), false});
                terms.push_back({pz * (1.0 - p1 - p2), X, sync, false});
                break;
            }
            case CouplingKind::Mixed:
                if (r > inst.mixed.s || norm(z) > inst.mixed.l_prime ||
                    norm(axpy(z, 1.0 / g, toward)) > inst.mixed.l_prime) {
                    const bool refl = r <= inst.mixed.s && norm(z) <= inst.mixed.l_prime &&
                                      norm(axpy(z, -1.0 / g, toward)) <= inst.mixed.l_prime;
                    terms.push_back({pz, X, refl ? axpy(yh, g, reflect(xh, yh, z)) : sync, false});
                    break;
                }
                [[fallthrough]];
            case CouplingKind::Reflection: {
                const double p1 = ratio(v_minus);
                terms.push_back({pz * p1, X, coalesce_Y(), can_coalesce});
                terms.push_back({pz * (1.0 - p1), X, axpy(yh, g, reflect(xh, yh, z)), false});
                break;
            }
        }
    }

    OracleResult out;
    out.terms = terms.size();
    std::vector<double> pi_t, beta_t, rho_t;
    std::vector<double> ls = l_values;
    std::sort(ls.begin(), ls.end());
    std::vector<std::vector<double>> alpha_t(ls.size());
    for (const auto& t : terms) {
        if (t.p == 0.0) continue;
        const double ra = t.coalesced ? 0.0 : distance(t.X, t.Y);
        pi_t.push_back(t.coalesced ? t.p : 0.0);
        beta_t.push_back(t.p * (ra - r));
        rho_t.push_back(t.p * rho(t.X, t.Y));
        for (std::size_t k = 0; k < ls.size(); ++k)
            alpha_t[k].push_back(ra - r < ls[k] ? 0.5 * t.p * (ra - r) * (ra - r) : 0.0);
        out.r_after_law[ra] += t.p;
    }
    out.pi = pairwise_sum(pi_t);
    out.beta = pairwise_sum(beta_t);
    out.E_rho = pairwise_sum(rho_t);
    for (std::size_t k = 0; k < ls.size(); ++k) out.alpha.emplace_back(ls[k], pairwise_sum(alpha_t[k]));
    return out;
}

}  // namespace kcontract
