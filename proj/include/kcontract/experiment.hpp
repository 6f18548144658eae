#pragma once

// Config-driven pipelines behind the command-line subcommands. Each returns
// the artifacts it would write (file name -> bytes) and a pass flag.

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "kcontract/config.hpp"
#include "kcontract/couplings.hpp"
#include "kcontract/euler.hpp"
#include "kcontract/model.hpp"
#include "kcontract/montecarlo.hpp"
#include "kcontract/noise.hpp"
#include "kcontract/numeric.hpp"
#include "kcontract/rates.hpp"
#include "kcontract/rho.hpp"
#include "kcontract/rng.hpp"

namespace kcontract {

struct Artifacts {
    std::map<std::string, std::string> files;
    bool pass = true;
    std::string summary;
};

struct Assembled {
    Drift drift;
    EulerModel model;
    NoiseSpec noise;
    CouplingKind kind = CouplingKind::Reflection;
    double M1 = 0.0, M2 = 0.0;
    std::string hash;
};

struct Certified {
    RateCertificate cert;
    EulerModel model;  // with the truncation the certificate assumes
    MixedParams mixed;
    EulerPath path = EulerPath::TvUnbounded;
};

inline NoiseSpec make_noise(const NoiseConfig& n, std::size_t d) {
    if (n.family == "gaussian") return NoiseSpec::gaussian(d);
    if (n.family == "cauchy") return NoiseSpec::cauchy(d);
    if (n.family == "stable") return NoiseSpec::stable(n.alpha, d);
    return NoiseSpec::nonisotropic(n.alpha, d);
}

// Builds the model and noise; tracked or user constants are sampled-verified.
inline Assembled assemble(const ExperimentConfig& c) {
    const ModelConfig& mc = c.model;
    Assembled a;
    if (mc.drift == "linear") a.drift = drift_linear(mc.theta);
    else if (mc.drift == "linear-tanh") a.drift = drift_linear_tanh(mc.theta, mc.beta, mc.d);
    else if (mc.drift == "linear-bump") a.drift = drift_linear_bump(mc.theta, mc.beta, mc.d);
    else {
        try {
            a.drift = drift_expression(mc.expression, mc.d);
        } catch (const Error& e) {
            throw ConfigError("model.expression", e.what());
        }
    }
    a.noise = make_noise(c.noise, mc.d);
    const double L = mc.L ? *mc.L : a.drift.L;
    const double K = mc.K ? *mc.K : a.drift.K_of_R(mc.R);
    const double g = mc.g ? *mc.g : a.noise.natural_scale(mc.h);
    a.model = {a.drift.b, L, K, mc.R, mc.h, g, mc.kappa, mc.kappa0, mc.d, a.drift.name};
    try {
        verify_model(a.model);
    } catch (const Error& e) {
        const std::string w = e.what();
        const std::string key = w.find(": K") != std::string::npos ? "model.K" : "model.L";
        throw ConfigError(key, w);
    }
    a.M1 = mc.M1 ? *mc.M1 : a.drift.M1;
    a.M2 = mc.M2 ? *mc.M2 : a.drift.M2;
    a.kind = coupling_kind_from_string(c.coupling.kind);
    a.hash = config_hash(c);
    return a;
}

inline MixedParams configured_mixed(const ExperimentConfig& c) { return {c.coupling.s, c.coupling.l_prime}; }

inline Certified certify(const ExperimentConfig& c, const Assembled& a) {
    const RhoConfig& rc = c.rho;
    Certified out;
    if (rc.kind == "tv" || rc.kind == "weighted-tv") {
        out.path = rc.mode == "bounded" ? EulerPath::TvBounded : EulerPath::TvUnbounded;
        const auto q = euler_assumption_quantities(a.model, a.noise, a.kind, out.path);
        if (rc.kind == "tv") {
            out.cert = c_star_tv(*q.tv, build_tv_distance(*q.tv, rc.simplified));
        } else {
            if (a.M2 <= 0.0) throw ConfigError("model.M2", "missing (required for weighted-tv)");
            auto ly = lyapunov_drift_certificate(a.model, a.noise, rc.lyapunov_theta, a.M1, a.M2, rc.K_threshold, 20000,
                                                 derive_seed(c.seed, 0x1ab));
            attach_lyapunov_r1(ly.data, q.tv->profile);
            const RhoSpec rho = build_weighted_tv_distance(*q.tv, ly.data, rc.simplified);
            out.cert = c_star_weighted_tv(*q.tv, ly.data, rho);
            out.cert.notes.push_back("lyapunov: " + ly.method);
        }
        out.model = q.configured(a.model);
        out.mixed = configured_mixed(c);
    } else {
        out.path = rc.kind == "w1" ? EulerPath::W1 : EulerPath::Wp;
        const auto q = euler_assumption_quantities(a.model, a.noise, a.kind, out.path);
        if (rc.kind == "w1") {
            out.cert = c_star_w1(*q.w, build_w1_distance(*q.w));
            out.mixed = configured_mixed(c);
        } else {
            out.cert = c_star_wp(*q.w, build_wp_distance(*q.w, rc.p, q.l), q.l);
            out.mixed = q.mixed;
        }
        out.model = q.configured(a.model);
    }
    out.cert.config_hash = a.hash;
    return out;
}

inline nlohmann::json certificate_json(const Certified& ct) {
    nlohmann::json j = to_json(ct.cert);
    j["path"] = to_string(ct.path);
    j["kappa"] = std::isinf(ct.model.kappa) ? nlohmann::json("inf") : nlohmann::json(ct.model.kappa);
    j["g"] = ct.model.g;
    return j;
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline Artifacts run_certify(const ExperimentConfig& c) {
    const Assembled a = assemble(c);
    const Certified ct = certify(c, a);
    Artifacts out;
    nlohmann::json j;
    j["command"] = "certify";
    j["config_hash"] = a.hash;
    j["certificate"] = certificate_json(ct);
    out.files["certificate.json"] = dump(j);
    out.summary = "c_star = " + format_exp(std::log(ct.cert.c_star));
    return out;
}

inline Artifacts run_audit(const ExperimentConfig& c) {
    const Assembled a = assemble(c);
    const Certified ct = certify(c, a);
    const Coupler cp(ct.model, a.noise, a.kind, ct.mixed);
    const auto pts = symmetric_pairs(log_grid(c.grids.r_min, c.grids.r_max, c.grids.r_points), c.model.d);
    const AuditReport rep =
        contraction_audit(cp, ct.cert.rho, ct.cert.c_star, pts, c.mc.n, derive_seed(c.seed, 0xa0d), c.mc.workers);
    Artifacts out;
    out.files["audit.csv"] = audit_csv(rep);
    nlohmann::json j;
    j["command"] = "audit";
    j["config_hash"] = a.hash;
    j["certificate"] = certificate_json(ct);
    j["audit"] = to_json(rep);
    out.files["audit.json"] = dump(j);
    out.pass = rep.pass;
    out.summary = "audit " + std::string(rep.pass ? "pass" : "FAIL") + ": " +
                  std::to_string(static_cast<int>(std::lround(rep.pass_rate * rep.rows.size()))) + "/" +
                  std::to_string(rep.rows.size()) + " grid points";
    return out;
}

inline Artifacts run_simulate(const ExperimentConfig& c) {
    const Assembled a = assemble(c);
    const Certified ct = certify(c, a);
    const Coupler cp(ct.model, a.noise, a.kind, ct.mixed);
    const Trajectory tr = simulate_coupled_chain(cp, ct.cert.rho, c.mc.x0, c.mc.y0, c.mc.steps, c.mc.chains,
                                                 derive_seed(c.seed, 0x5170), c.mc.workers);
    Artifacts out;
    out.files["trajectory.csv"] = trajectory_csv(tr);
    nlohmann::json j;
    j["command"] = "simulate";
    j["config_hash"] = a.hash;
    j["certificate"] = certificate_json(ct);
    j["w1_is_upper_bound"] = tr.w1_is_upper_bound;
    nlohmann::json times = nlohmann::json::array();
    for (const auto& [t, k] : tr.coalescence_times) times.push_back({{"t", t}, {"chains", k}});
    j["coalescence_times"] = times;
    out.files["trajectory.json"] = dump(j);
    out.summary = "coalesced fraction at t = " + std::to_string(tr.rows.back().t) + ": " +
                  std::to_string(tr.rows.back().coalesced_frac);
    return out;
}

inline Artifacts run_compare_noise(const ExperimentConfig& c) {
    const Assembled a = assemble(c);
    std::vector<NoiseSpec> noises;
    for (double al : c.grids.alpha) noises.push_back(NoiseSpec::stable(al, c.model.d));
    if (c.grids.gaussian) noises.push_back(NoiseSpec::gaussian(c.model.d));
    const auto t =
        noise_rate_comparison(a.model, noises, log_grid(c.grids.R_min, c.grids.R_max, c.grids.R_points), c.grids.h);
    Artifacts out;
    out.files["comparison.csv"] = comparison_csv(t);
    nlohmann::json j;
    j["command"] = "compare-noise";
    j["config_hash"] = a.hash;
    j["slopes"] = nlohmann::json::array();
    for (const auto& s : t.slopes)
        j["slopes"].push_back({{"noise", s.noise}, {"h", s.h}, {"regressor", s.regressor}, {"slope", s.slope}});
    out.files["comparison.json"] = dump(j);
    out.summary = std::to_string(t.rows.size()) + " rows";
    return out;
}

inline Artifacts run_verify_couplings(const ExperimentConfig& c) {
    const Assembled a = assemble(c);
    const auto pts = symmetric_pairs(log_grid(c.grids.r_min, c.grids.r_max, c.grids.r_points), c.model.d);
    std::ostringstream csv;
    csv.precision(17);
    csv << "coupling,point,r,ks_x,p_x,ks_y,p_y,pass\n";
    nlohmann::json j;
    j["command"] = "verify-couplings";
    j["config_hash"] = a.hash;
    j["level"] = 1e-3;
    j["results"] = nlohmann::json::array();
    Artifacts out;
    std::size_t total = 0, passed = 0;
    for (auto kind : {CouplingKind::RefinedBasic, CouplingKind::Reflection, CouplingKind::Mixed}) {
        if (kind != CouplingKind::RefinedBasic && !a.noise.satisfies_c4()) {
            j["skipped"].push_back({{"coupling", to_string(kind)}, {"reason", "condition c4 violated"}});
            continue;
        }
        const Coupler cp(a.model, a.noise, kind, configured_mixed(c));
        for (std::size_t p = 0; p < pts.size(); ++p) {
            const auto rep = verify_marginals(cp, pts[p].first, pts[p].second, c.mc.n,
                                              derive_seed(c.seed, 0x3a5 + static_cast<std::uint64_t>(kind), p),
                                              c.mc.workers);
            const double r = distance(pts[p].first, pts[p].second);
            csv << to_string(kind) << ',' << p << ',' << r << ',' << rep.x.statistic << ',' << rep.x.p_value << ','
                << rep.y.statistic << ',' << rep.y.p_value << ',' << (rep.pass ? "true" : "false") << '\n';
            j["results"].push_back({{"coupling", to_string(kind)},
                                    {"point", p},
                                    {"r", r},
                                    {"x", {{"statistic", rep.x.statistic}, {"p_value", rep.x.p_value}}},
                                    {"y", {{"statistic", rep.y.statistic}, {"p_value", rep.y.p_value}}},
                                    {"pass", rep.pass}});
            ++total;
            passed += rep.pass ? 1 : 0;
        }
    }
    out.pass = passed == total;
    j["pass"] = out.pass;
    out.files["marginals.csv"] = csv.str();
    out.files["marginals.json"] = dump(j);
    out.summary = "marginal KS " + std::to_string(passed) + "/" + std::to_string(total) + " pass";
    return out;
}

inline Artifacts run_subcommand(const std::string& name, const ExperimentConfig& c) {
    if (name == "certify") return run_certify(c);
    if (name == "audit") return run_audit(c);
    if (name == "simulate") return run_simulate(c);
    if (name == "compare-noise") return run_compare_noise(c);
    if (name == "verify-couplings") return run_verify_couplings(c);
    throw Error("unknown subcommand: " + name);
}

}  // namespace kcontract
