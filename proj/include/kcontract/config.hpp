#pragma once

// TOML experiment configuration with strict key checking and a content hash.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kcontract/core.hpp"
#include "toml.hpp"

namespace kcontract {

// Raised for anything the user has to fix in the config file.
class ConfigError : public Error {
public:
    ConfigError(const std::string& path, const std::string& what) : Error("config error: " + path + ": " + what), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct ModelConfig {
    std::string drift;  // linear | linear-tanh | linear-bump | expression
    std::string expression;
    double theta = 1.0;
    double beta = 0.0;
    std::optional<double> L, K, M1, M2, g;
    double R = 0.0;
    double h = 0.0;
    double kappa = kInf;
    double kappa0 = 1.0;
    std::size_t d = 1;
};

struct NoiseConfig {
    std::string family;  // gaussian | cauchy | stable | nonisotropic
    double alpha = 2.0;
};

struct CouplingConfig {
    std::string kind;
    double s = kInf;
    double l_prime = kInf;
};

struct RhoConfig {
    std::string kind;                 // tv | weighted-tv | w1 | wp
    std::string mode = "unbounded";  // tv and weighted-tv: bounded | unbounded
    bool simplified = true;
    double p = 3.0;
    double lyapunov_theta = 2.0;
    double K_threshold = 1.0;
};

struct GridConfig {
    double r_min = 0.01, r_max = 20.0;
    std::size_t r_points = 20;
    std::vector<double> h{0.5};
    double R_min = 5.0, R_max = 50.0;
    std::size_t R_points = 10;
    std::vector<double> alpha{1.2, 1.5, 1.8};
    bool gaussian = true;
};

struct McConfig {
    std::size_t n = 100000;
    unsigned workers = 1;
    std::size_t steps = 50;
    std::size_t chains = 10000;
    std::vector<double> x0, y0;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    ModelConfig model;
    NoiseConfig noise;
    CouplingConfig coupling;
    RhoConfig rho;
    GridConfig grids;
    McConfig mc;
    std::string out_dir = ".";
};

namespace detail {

class TomlReader {
public:
    explicit TomlReader(const toml::table& root) : root_(root) {}

    const toml::table* section(const std::string& name, const std::set<std::string>& keys, bool required) {
        const toml::node* n = root_.get(name);
        if (!n) {
            if (required) throw ConfigError(name, "missing section");
            return nullptr;
        }
        const toml::table* t = n->as_table();
        if (!t) throw ConfigError(name, "expected a table");
        for (auto&& [k, v] : *t)
            if (!keys.count(std::string(k.str()))) throw ConfigError(name + "." + std::string(k.str()), "unknown key");
        return t;
    }

    static const toml::node* get(const toml::table* t, const std::string& key) { return t ? t->get(key) : nullptr; }

    static std::optional<double> number(const toml::table* t, const std::string& path, const std::string& key) {
        const toml::node* n = get(t, key);
        if (!n) return std::nullopt;
        if (auto v = n->value<double>()) return *v;
        throw ConfigError(path + "." + key, "expected a number");
    }

    static std::optional<std::int64_t> integer(const toml::table* t, const std::string& path, const std::string& key) {
        const toml::node* n = get(t, key);
        if (!n) return std::nullopt;
        if (!n->is_integer()) throw ConfigError(path + "." + key, "expected an integer");
        return n->value<std::int64_t>();
    }

    static std::optional<std::string> string(const toml::table* t, const std::string& path, const std::string& key) {
        const toml::node* n = get(t, key);
        if (!n) return std::nullopt;
        if (auto v = n->value<std::string>()) return *v;
        throw ConfigError(path + "." + key, "expected a string");
    }

    static std::optional<bool> boolean(const toml::table* t, const std::string& path, const std::string& key) {
        const toml::node* n = get(t, key);
        if (!n) return std::nullopt;
        if (auto v = n->value<bool>()) return *v;
        throw ConfigError(path + "." + key, "expected a boolean");
    }

    static std::optional<std::vector<double>> numbers(const toml::table* t, const std::string& path,
                                                      const std::string& key) {
        const toml::node* n = get(t, key);
        if (!n) return std::nullopt;
        const toml::array* a = n->as_array();
        if (!a) throw ConfigError(path + "." + key, "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : *a) {
            auto v = e.value<double>();
            if (!v) throw ConfigError(path + "." + key, "expected an array of numbers");
            out.push_back(*v);
        }
        return out;
    }

private:
    const toml::table& root_;
};

inline double positive(std::optional<double> v, const std::string& path) {
    if (!v) throw ConfigError(path, "missing");
    if (!(std::isfinite(*v) && *v > 0.0)) throw ConfigError(path, "must be finite and positive");
    return *v;
}

inline std::size_t count(std::optional<std::int64_t> v, const std::string& path, std::size_t fallback) {
    if (!v) return fallback;
    if (*v < 1) throw ConfigError(path, "must be >= 1");
    return static_cast<std::size_t>(*v);
}

inline void check_positive(const std::optional<double>& v, const std::string& path) {
    if (v) positive(v, path);
}

}  // namespace detail

inline ExperimentConfig parse_config(const toml::table& root) {
    using R = detail::TomlReader;
    R rd(root);
    for (auto&& [k, v] : root) {
        static const std::set<std::string> top{"seed", "model", "noise", "coupling", "rho", "grids", "mc", "output"};
        if (!top.count(std::string(k.str()))) throw ConfigError(std::string(k.str()), "unknown key");
    }
    ExperimentConfig c;
    const toml::node* sd = root.get("seed");
    if (!sd) throw ConfigError("seed", "missing (a seed is mandatory)");
    if (!sd->is_integer() || *sd->value<std::int64_t>() < 0) throw ConfigError("seed", "expected a non-negative integer");
    c.seed = static_cast<std::uint64_t>(*sd->value<std::int64_t>());

    const auto* m = rd.section("model", {"drift", "expression", "theta", "beta", "L", "K", "M1", "M2", "R", "h", "g",
                                         "kappa", "kappa0", "d"},
                               true);
    auto& mc = c.model;
    mc.drift = R::string(m, "model", "drift").value_or("");
    static const std::set<std::string> drifts{"linear", "linear-tanh", "linear-bump", "expression"};
    if (!drifts.count(mc.drift)) throw ConfigError("model.drift", "expected linear, linear-tanh, linear-bump or expression");
    if (mc.drift == "expression") {
        mc.expression = R::string(m, "model", "expression").value_or("");
        if (mc.expression.empty()) throw ConfigError("model.expression", "missing");
        if (!R::get(m, "L")) throw ConfigError("model.L", "missing (required for expression drifts)");
        if (!R::get(m, "K")) throw ConfigError("model.K", "missing (required for expression drifts)");
    } else if (R::get(m, "expression")) {
        throw ConfigError("model.expression", "only valid with drift = \"expression\"");
    }
    if (auto v = R::number(m, "model", "theta")) mc.theta = detail::positive(v, "model.theta");
    if (auto v = R::number(m, "model", "beta")) {
        if (!std::isfinite(*v)) throw ConfigError("model.beta", "must be finite");
        mc.beta = *v;
    }
    mc.L = R::number(m, "model", "L");
    mc.K = R::number(m, "model", "K");
    mc.M1 = R::number(m, "model", "M1");
    mc.M2 = R::number(m, "model", "M2");
    mc.g = R::number(m, "model", "g");
    detail::check_positive(mc.L, "model.L");
    detail::check_positive(mc.K, "model.K");
    detail::check_positive(mc.M2, "model.M2");
    detail::check_positive(mc.g, "model.g");
    if (mc.M1 && !(std::isfinite(*mc.M1) && *mc.M1 >= 0.0)) throw ConfigError("model.M1", "must be finite and >= 0");
    mc.R = detail::positive(R::number(m, "model", "R"), "model.R");
    mc.h = detail::positive(R::number(m, "model", "h"), "model.h");
    if (auto v = R::number(m, "model", "kappa")) {
        if (!(*v > 0.0)) throw ConfigError("model.kappa", "must be positive");
        mc.kappa = *v;
    }
    if (auto v = R::number(m, "model", "kappa0")) mc.kappa0 = detail::positive(v, "model.kappa0");
    mc.d = detail::count(R::integer(m, "model", "d"), "model.d", 1);

    const auto* n = rd.section("noise", {"family", "alpha"}, true);
    c.noise.family = R::string(n, "noise", "family").value_or("");
    static const std::set<std::string> fams{"gaussian", "cauchy", "stable", "nonisotropic"};
    if (!fams.count(c.noise.family)) throw ConfigError("noise.family", "expected gaussian, cauchy, stable or nonisotropic");
    if (c.noise.family == "stable" || c.noise.family == "nonisotropic") {
        const auto a = R::number(n, "noise", "alpha");
        if (!a) throw ConfigError("noise.alpha", "missing");
        if (!(*a > 0.0 && *a < 2.0)) throw ConfigError("noise.alpha", "must lie in (0, 2)");
        c.noise.alpha = *a;
    } else {
        if (R::get(n, "alpha")) throw ConfigError("noise.alpha", "only valid for stable and nonisotropic noise");
        c.noise.alpha = c.noise.family == "cauchy" ? 1.0 : 2.0;
    }

    const auto* cp = rd.section("coupling", {"kind", "s", "l_prime"}, true);
    c.coupling.kind = R::string(cp, "coupling", "kind").value_or("");
    if (c.coupling.kind != "refined-basic" && c.coupling.kind != "reflection" && c.coupling.kind != "mixed")
        throw ConfigError("coupling.kind", "expected refined-basic, reflection or mixed");
    if (auto v = R::number(cp, "coupling", "s")) c.coupling.s = detail::positive(v, "coupling.s");
    if (auto v = R::number(cp, "coupling", "l_prime")) c.coupling.l_prime = detail::positive(v, "coupling.l_prime");

    const auto* rh = rd.section("rho", {"kind", "mode", "simplified", "p", "lyapunov_theta", "K_threshold"}, true);
    auto& rc = c.rho;
    rc.kind = R::string(rh, "rho", "kind").value_or("");
    if (rc.kind != "tv" && rc.kind != "weighted-tv" && rc.kind != "w1" && rc.kind != "wp")
        throw ConfigError("rho.kind", "expected tv, weighted-tv, w1 or wp");
    if (auto v = R::string(rh, "rho", "mode")) {
        if (*v != "bounded" && *v != "unbounded") throw ConfigError("rho.mode", "expected bounded or unbounded");
        rc.mode = *v;
    }
    if (auto v = R::boolean(rh, "rho", "simplified")) rc.simplified = *v;
    if (auto v = R::number(rh, "rho", "p")) {
        if (!(std::isfinite(*v) && *v > 2.0)) throw ConfigError("rho.p", "must be finite and > 2");
        rc.p = *v;
    }
    if (auto v = R::number(rh, "rho", "lyapunov_theta")) {
        if (!(*v > 0.0 && *v <= 2.0)) throw ConfigError("rho.lyapunov_theta", "must lie in (0, 2]");
        rc.lyapunov_theta = *v;
    }
    if (auto v = R::number(rh, "rho", "K_threshold")) rc.K_threshold = detail::positive(v, "rho.K_threshold");

    const auto* gr = rd.section(
        "grids", {"r_min", "r_max", "r_points", "h", "R_min", "R_max", "R_points", "alpha", "gaussian"}, false);
    auto& gc = c.grids;
    if (auto v = R::number(gr, "grids", "r_min")) gc.r_min = detail::positive(v, "grids.r_min");
    if (auto v = R::number(gr, "grids", "r_max")) gc.r_max = detail::positive(v, "grids.r_max");
    gc.r_points = detail::count(R::integer(gr, "grids", "r_points"), "grids.r_points", gc.r_points);
    if (!(gc.r_min < gc.r_max)) throw ConfigError("grids.r_max", "must exceed grids.r_min");
    if (auto v = R::numbers(gr, "grids", "h")) {
        if (v->empty()) throw ConfigError("grids.h", "must be non-empty");
        for (double x : *v) detail::positive(x, "grids.h");
        gc.h = *v;
    }
    if (auto v = R::number(gr, "grids", "R_min")) gc.R_min = detail::positive(v, "grids.R_min");
    if (auto v = R::number(gr, "grids", "R_max")) gc.R_max = detail::positive(v, "grids.R_max");
    gc.R_points = detail::count(R::integer(gr, "grids", "R_points"), "grids.R_points", gc.R_points);
    if (!(gc.R_min < gc.R_max)) throw ConfigError("grids.R_max", "must exceed grids.R_min");
    if (auto v = R::numbers(gr, "grids", "alpha")) {
        for (double a : *v)
            if (!(a > 0.0 && a < 2.0)) throw ConfigError("grids.alpha", "entries must lie in (0, 2)");
        gc.alpha = *v;
    }
    if (auto v = R::boolean(gr, "grids", "gaussian")) gc.gaussian = *v;

    const auto* mm = rd.section("mc", {"n", "workers", "steps", "chains", "x0", "y0"}, false);
    auto& ec = c.mc;
    ec.n = detail::count(R::integer(mm, "mc", "n"), "mc.n", ec.n);
    ec.workers = static_cast<unsigned>(detail::count(R::integer(mm, "mc", "workers"), "mc.workers", 1));
    ec.steps = detail::count(R::integer(mm, "mc", "steps"), "mc.steps", ec.steps);
    ec.chains = detail::count(R::integer(mm, "mc", "chains"), "mc.chains", ec.chains);
    ec.x0 = R::numbers(mm, "mc", "x0").value_or(std::vector<double>(mc.d, 1.0));
    ec.y0 = R::numbers(mm, "mc", "y0").value_or(std::vector<double>(mc.d, -1.0));
    if (ec.x0.size() != mc.d) throw ConfigError("mc.x0", "length must equal model.d");
    if (ec.y0.size() != mc.d) throw ConfigError("mc.y0", "length must equal model.d");

    const auto* o = rd.section("output", {"dir"}, false);
    if (auto v = R::string(o, "output", "dir")) c.out_dir = *v;
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    try {
        return parse_config(toml::parse_file(path));
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e.description() << " (line " << e.source().begin.line << ")";
        throw ConfigError(path, os.str());
    }
}

// Canonical JSON of everything that can change a result. Worker count and
// output directory are excluded: they must not affect any emitted byte.
inline nlohmann::json canonical_json(const ExperimentConfig& c) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    auto num = [](double v) { return std::isinf(v) ? nlohmann::json("inf") : nlohmann::json(v); };
    nlohmann::json j;
    j["seed"] = c.seed;
    const auto& m = c.model;
    j["model"] = {{"drift", m.drift}, {"expression", m.expression}, {"theta", m.theta}, {"beta", m.beta},
                  {"L", opt(m.L)},    {"K", opt(m.K)},                {"M1", opt(m.M1)},  {"M2", opt(m.M2)},
                  {"g", opt(m.g)},    {"R", m.R},                     {"h", m.h},         {"kappa", num(m.kappa)},
                  {"kappa0", m.kappa0}, {"d", m.d}};
    j["noise"] = {{"family", c.noise.family}, {"alpha", c.noise.alpha}};
    j["coupling"] = {{"kind", c.coupling.kind}, {"s", num(c.coupling.s)}, {"l_prime", num(c.coupling.l_prime)}};
    j["rho"] = {{"kind", c.rho.kind},
                {"mode", c.rho.mode},
                {"simplified", c.rho.simplified},
                {"p", c.rho.p},
                {"lyapunov_theta", c.rho.lyapunov_theta},
                {"K_threshold", c.rho.K_threshold}};
    const auto& g = c.grids;
    j["grids"] = {{"r_min", g.r_min}, {"r_max", g.r_max}, {"r_points", g.r_points}, {"h", g.h},
                  {"R_min", g.R_min}, {"R_max", g.R_max}, {"R_points", g.R_points}, {"alpha", g.alpha},
                  {"gaussian", g.gaussian}};
    j["mc"] = {{"n", c.mc.n}, {"steps", c.mc.steps}, {"chains", c.mc.chains}, {"x0", c.mc.x0}, {"y0", c.mc.y0}};
    return j;
}

// 64-bit FNV-1a of the canonical JSON, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
    const std::string s = canonical_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

}  // namespace kcontract
