#pragma once

// One-step Markov couplings of the Euler chain, realized by thinning: draw
// z ~ mu, then split into branches with density-ratio acceptance tests.

#include <algorithm>
#include <cmath>
#include <string>

#include "kcontract/core.hpp"
#include "kcontract/model.hpp"
#include "kcontract/noise.hpp"
#include "kcontract/rng.hpp"

namespace kcontract {

enum class CouplingKind { RefinedBasic, Reflection, Mixed };
enum class Branch { CoalesceMove, AntiMove, Reflected, Synchronous };

inline std::string to_string(CouplingKind k) {
    switch (k) {
        case CouplingKind::RefinedBasic: return "refined-basic";
        case CouplingKind::Reflection: return "reflection";
        case CouplingKind::Mixed: return "mixed";
    }
    return "?";
}

inline CouplingKind coupling_kind_from_string(const std::string& s) {
    if (s == "refined-basic") return CouplingKind::RefinedBasic;
    if (s == "reflection") return CouplingKind::Reflection;
    if (s == "mixed") return CouplingKind::Mixed;
    throw Error("unknown coupling kind: " + s);
}

inline std::string to_string(Branch b) {
    switch (b) {
        case Branch::CoalesceMove: return "coalesce-move";
        case Branch::AntiMove: return "anti-move";
        case Branch::Reflected: return "reflected";
        case Branch::Synchronous: return "synchronous";
    }
    return "?";
}

struct CoupledStep {
    Vec X, Y;
    Branch branch = Branch::Synchronous;
    bool coalesced = false;
    double r_before = 0.0;
    double r_hat = 0.0;
    double r_after = 0.0;
};

// (x)_kappa = (1 ^ kappa/|x|) x
inline Vec truncate_kappa(const Vec& x, double kappa) {
    if (std::isinf(kappa)) return x;
    const double n = norm(x);
    if (n <= kappa) return x;
    return scale(kappa / n, x);
}

// Householder reflection of z across the hyperplane orthogonal to x_hat - y_hat.
inline Vec reflect(const Vec& x_hat, const Vec& y_hat, const Vec& z) {
    const Vec e = sub(x_hat, y_hat);
    const double ee = dot(e, e);
    if (ee == 0.0) return z;
    return axpy(z, -2.0 * dot(e, z) / ee, e);
}

struct MixedParams {
    double s = kInf;
    double l_prime = kInf;

    // l = h L s + kappa v (2 g l')
    double jump_bound(const EulerModel& m) const {
        return m.h * m.L * s + std::max(m.kappa, 2.0 * m.g * l_prime);
    }
};

class Coupler {
public:
    Coupler(EulerModel model, NoiseSpec noise, CouplingKind kind, MixedParams mixed = {})
        : model_(std::move(model)), noise_(std::move(noise)), kind_(kind), mixed_(mixed) {
        if (kind_ != CouplingKind::RefinedBasic && !noise_.satisfies_c4()) throw Error("condition c4 violated");
        if (!(model_.kappa > 0.0)) throw Error("kappa out of range");
        if (kind_ == CouplingKind::Mixed && !(mixed_.s > 0.0 && mixed_.l_prime > 0.0))
            throw Error("mixed coupling needs s, l' > 0");
    }

    const EulerModel& model() const { return model_; }
    const NoiseSpec& noise() const { return noise_; }
    CouplingKind kind() const { return kind_; }
    const MixedParams& mixed() const { return mixed_; }

    // Evaluates the coalescence acceptance ratio at the wrong shift. This breaks
    // Y's marginal and exists only as a negative control for the marginal tests.
    void set_corrupt_ratio(bool on) { corrupt_ = on; }

    CoupledStep step(const Vec& x, const Vec& y, Stream& rng) const {
        CoupledStep out;
        const Vec xh = model_.x_hat(x), yh = model_.x_hat(y);
        const double g = model_.g;
        const Vec z = sample_one(noise_, rng);
        const double u = rng.uniform();
        out.r_before = distance(x, y);
        out.r_hat = distance(xh, yh);
        out.X = axpy(xh, g, z);
        if (out.r_hat == 0.0) {
            out.Y = out.X;
            out.coalesced = true;
            out.branch = Branch::Synchronous;
            return out;
        }
        const Vec toward = truncate_kappa(sub(xh, yh), model_.kappa);  // (x_hat - y_hat)_kappa
        const Vec v_minus = scale(-1.0 / g, toward);                    // g^{-1}(y_hat - x_hat)_kappa
        const bool can_coalesce = out.r_hat <= model_.kappa;
        const double m0 = density(noise_, z);
        auto ratio = [&](const Vec& v) { return m0 > 0.0 ? std::min(1.0, density(noise_, sub(z, v)) / m0) : 0.0; };
        auto coalesce = [&] {
            out.branch = Branch::CoalesceMove;
            if (can_coalesce) {
                out.Y = out.X;
                out.coalesced = true;
            } else {
                out.Y = add(axpy(yh, g, z), toward);
            }
        };
        auto synchronous = [&] {
            out.branch = Branch::Synchronous;
            out.Y = axpy(yh, g, z);
        };

        switch (kind_) {
            case CouplingKind::RefinedBasic: {
                const double p1 = 0.5 * ratio(corrupt_ ? scale(-1.0, v_minus) : v_minus);
                const double p2 = 0.5 * ratio(scale(-1.0, v_minus));
                if (u < p1) coalesce();
                else if (u < p1 + p2) {
                    out.branch = Branch::AntiMove;
                    out.Y = sub(axpy(yh, g, z), toward);
                } else synchronous();
                break;
            }
            case CouplingKind::Mixed:
                if (out.r_before > mixed_.s) {
                    synchronous();
                    break;
                }
                if (norm(z) > mixed_.l_prime || norm(axpy(z, 1.0 / g, toward)) > mixed_.l_prime) {
                    // Gate W = {|z| <= l', |z + t| <= l'} sends Y's noise into W + t, so draws
                    // in (W + t) \ W are reflected onto W \ (W + t) to keep Y's law.
                    if (norm(z) <= mixed_.l_prime && norm(axpy(z, -1.0 / g, toward)) <= mixed_.l_prime) {
                        out.branch = Branch::Reflected;
                        out.Y = axpy(yh, g, reflect(xh, yh, z));
                    } else {
                        synchronous();
                    }
                    break;
                }
                [[fallthrough]];
            case CouplingKind::Reflection: {
                if (u < ratio(corrupt_ ? scale(-1.0, v_minus) : v_minus)) coalesce();
                else {
                    out.branch = Branch::Reflected;
                    out.Y = axpy(yh, g, reflect(xh, yh, z));
                }
                break;
            }
        }
        out.r_after = out.coalesced ? 0.0 : distance(out.X, out.Y);
        return out;
    }

private:
    EulerModel model_;
    NoiseSpec noise_;
    CouplingKind kind_;
    MixedParams mixed_;
    bool corrupt_ = false;
};

}  // namespace kcontract
