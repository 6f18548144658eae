#pragma once

// Monte Carlo estimators, marginal tests, contraction audits and coupled-chain
// simulation. Every sample owns a counter-based stream keyed by its index, so
// results do not depend on the number of workers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "kcontract/couplings.hpp"
#include "kcontract/numeric.hpp"
#include "kcontract/rates.hpp"
#include "kcontract/rho.hpp"
#include "kcontract/rng.hpp"
#include "kcontract/stats.hpp"

namespace kcontract {

// Runs f(i) for i in [0, n) on `workers` threads (blocks of 1024 indices).
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& f) {
    if (workers <= 1 || n < 2048) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    constexpr std::size_t kBlock = 1024;
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (;;) {
                    const std::size_t start = next.fetch_add(kBlock);
                    if (start >= n) return;
                    for (std::size_t i = start; i < std::min(n, start + kBlock); ++i) f(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
                next = n;
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

// Mean and standard error with a pairwise (order-fixed) sum.
inline MeanSe mean_se_pairwise(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = pairwise_sum(v) / n;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
    const double var = v.size() > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

// ============================================================================
// Coupling statistics
// ============================================================================

struct StatsEstimate {
    MeanSe pi;
    MeanSe beta;
    std::vector<std::pair<double, MeanSe>> alpha;  // l -> alpha_l
    std::size_t n = 0;
};

inline StatsEstimate estimate_coupling_stats(const Coupler& cp, const Vec& x, const Vec& y,
                                             const std::vector<double>& l_values, std::size_t n, std::uint64_t seed,
                                             unsigned workers = 1) {
    if (n < 1000) throw Error("insufficient samples");
    std::vector<double> pis(n), betas(n), diffs(n);
    parallel_for(n, workers, [&](std::size_t i) {
        Stream rng(seed, i);
        const CoupledStep s = cp.step(x, y, rng);
        pis[i] = s.coalesced ? 1.0 : 0.0;
        betas[i] = s.r_after - s.r_before;
        diffs[i] = s.r_after - s.r_before;
    });
    StatsEstimate out;
    out.n = n;
    out.pi = mean_se_pairwise(pis);
    out.beta = mean_se_pairwise(betas);
    std::vector<double> ls = l_values;
    std::sort(ls.begin(), ls.end());
    for (double l : ls) {
        std::vector<double> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = diffs[i] < l ? 0.5 * diffs[i] * diffs[i] : 0.0;
        out.alpha.emplace_back(l, mean_se_pairwise(a));
    }
    return out;
}

// ============================================================================
// Marginal tests
// ============================================================================

struct MarginalReport {
    KsResult x;
    KsResult y;
    double level = 1e-3;
    bool pass = false;
};

// KS tests of g^{-1}<X - x_hat, e> and g^{-1}<Y - y_hat, e> against the 1D
// marginal of mu, with e the unit vector along x_hat - y_hat (e1 if equal).
inline MarginalReport verify_marginals(const Coupler& cp, const Vec& x, const Vec& y, std::size_t n,
                                       std::uint64_t seed, unsigned workers = 1) {
    if (n < 10000) throw Error("insufficient samples");
    const EulerModel& m = cp.model();
    const Vec xh = m.x_hat(x), yh = m.x_hat(y);
    Vec e = sub(xh, yh);
    const double ne = norm(e);
    e = ne > 0.0 ? scale(1.0 / ne, e) : unit(m.d, 0);
    std::vector<double> px(n), py(n);
    parallel_for(n, workers, [&](std::size_t i) {
        Stream rng(seed, i);
        const CoupledStep s = cp.step(x, y, rng);
        px[i] = dot(sub(s.X, xh), e) / m.g;
        py[i] = dot(sub(s.Y, yh), e) / m.g;
    });
    const NoiseSpec& noise = cp.noise();
    const auto cdf = [&noise](double t) { return marginal_cdf(noise, t); };
    MarginalReport r;
    r.x = ks_test(px, cdf);
    r.y = ks_test(py, cdf);
    r.pass = r.x.p_value > r.level && r.y.p_value > r.level;
    return r;
}

// ============================================================================
// Contraction audit
// ============================================================================

struct AuditRow {
    std::size_t point = 0;
    double r = 0.0;
    double rho = 0.0;
    double E_rho = 0.0;
    double se = 0.0;
    double threshold = 0.0;
    double mean_increment = 0.0;
    bool pass = false;
};

struct AuditReport {
    std::vector<AuditRow> rows;
    double c_star = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double pass_rate = 0.0;
    bool pass = false;
    std::string policy =
        "pass iff mean(rho(X,Y) - rho(x,y)) + 3 SE <= -c* rho(x,y), i.e. E[rho] + 3 SE <= (1 - c*) rho";
};

// Symmetric pairs (r/2, -r/2) along e1 for r on a log grid.
inline std::vector<std::pair<Vec, Vec>> symmetric_pairs(const std::vector<double>& r_grid, std::size_t d) {
    std::vector<std::pair<Vec, Vec>> out;
    for (double r : r_grid) {
        Vec x(d, 0.0), y(d, 0.0);
        x[0] = 0.5 * r;
        y[0] = -0.5 * r;
        out.emplace_back(x, y);
    }
    return out;
}

inline AuditReport contraction_audit(const Coupler& cp, const RhoSpec& rho, double c_star,
                                     const std::vector<std::pair<Vec, Vec>>& points, std::size_t n,
                                     std::uint64_t seed, unsigned workers = 1) {
    AuditReport rep;
    rep.c_star = c_star;
    rep.n = n;
    rep.seed = seed;
    std::size_t passed = 0;
    for (std::size_t p = 0; p < points.size(); ++p) {
        const auto& [x, y] = points[p];
        AuditRow row;
        row.point = p;
        row.r = distance(x, y);
        row.rho = rho(x, y);
        row.threshold = (1.0 - c_star) * row.rho;
        if (row.r == 0.0) {
            row.pass = true;
        } else {
            std::vector<double> inc(n);
            const std::uint64_t s = derive_seed(seed, 0xa0d17, p);
            parallel_for(n, workers, [&](std::size_t i) {
                Stream rng(s, i);
                const CoupledStep st = cp.step(x, y, rng);
                inc[i] = rho.increment(x, y, st.X, st.Y);
            });
            const MeanSe ms = mean_se_pairwise(inc);
            row.mean_increment = ms.mean;
            row.E_rho = row.rho + ms.mean;
            row.se = ms.se;
            row.pass = ms.mean + 3.0 * ms.se <= -c_star * row.rho;
        }
        passed += row.pass ? 1 : 0;
        rep.rows.push_back(row);
    }
    rep.pass_rate = points.empty() ? 1.0 : static_cast<double>(passed) / static_cast<double>(points.size());
    rep.pass = passed == points.size();
    return rep;
}

inline std::string audit_csv(const AuditReport& rep) {
    std::ostringstream os;
    os.precision(17);
    os << "point,r,rho,E_rho,se,threshold,pass\n";
    for (const auto& r : rep.rows)
        os << r.point << ',' << r.r << ',' << r.rho << ',' << r.E_rho << ',' << r.se << ',' << r.threshold << ','
           << (r.pass ? "true" : "false") << '\n';
    return os.str();
}

inline nlohmann::json to_json(const AuditReport& rep) {
    nlohmann::json j;
    j["c_star"] = rep.c_star;
    j["n"] = rep.n;
    j["seed"] = rep.seed;
    j["pass_rate"] = rep.pass_rate;
    j["pass"] = rep.pass;
    j["policy"] = rep.policy;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rep.rows)
        j["rows"].push_back({{"point", r.point},
                             {"r", r.r},
                             {"rho", r.rho},
                             {"E_rho", r.E_rho},
                             {"mean_increment", r.mean_increment},
                             {"se", r.se},
                             {"threshold", r.threshold},
                             {"pass", r.pass}});
    return j;
}

// ============================================================================
// Coupled chains
// ============================================================================

struct TrajectoryRow {
    std::size_t t = 0;
    double E_rho = 0.0;
    double se = 0.0;
    double coalesced_frac = 0.0;
    double W1 = 0.0;  // 1D: sorted-sample distance; d > 1: mean |X - Y| (upper bound)
};

struct Trajectory {
    std::vector<TrajectoryRow> rows;
    std::map<std::size_t, std::size_t> coalescence_times;  // step -> chains coalescing at that step
    bool w1_is_upper_bound = false;
};

inline Trajectory simulate_coupled_chain(const Coupler& cp, const RhoSpec& rho, const Vec& x0, const Vec& y0,
                                         std::size_t steps, std::size_t n_chains, std::uint64_t seed,
                                         unsigned workers = 1) {
    if (steps < 1) throw Error("steps must be >= 1");
    const std::size_t d = x0.size();
    std::vector<Vec> X(n_chains, x0), Y(n_chains, y0);
    std::vector<Stream> streams;
    streams.reserve(n_chains);
    for (std::size_t i = 0; i < n_chains; ++i) streams.emplace_back(seed, i);
    std::vector<std::size_t> hit(n_chains, 0);
    std::vector<char> done(n_chains, 0);
    for (std::size_t i = 0; i < n_chains; ++i) done[i] = distance(x0, y0) == 0.0;
    Trajectory tr;
    tr.w1_is_upper_bound = d > 1;
    std::vector<double> rv(n_chains), dist(n_chains);
    for (std::size_t t = 1; t <= steps; ++t) {
        parallel_for(n_chains, workers, [&](std::size_t i) {
            CoupledStep s = cp.step(X[i], Y[i], streams[i]);
            X[i] = std::move(s.X);
            Y[i] = std::move(s.Y);
            if (!done[i] && distance(X[i], Y[i]) == 0.0) {
                done[i] = 1;
                hit[i] = t;
            }
            rv[i] = rho(X[i], Y[i]);
            dist[i] = distance(X[i], Y[i]);
        });
        TrajectoryRow row;
        row.t = t;
        const MeanSe ms = mean_se_pairwise(rv);
        row.E_rho = ms.mean;
        row.se = ms.se;
        std::size_t c = 0;
        for (char v : done) c += v ? 1 : 0;
        row.coalesced_frac = static_cast<double>(c) / static_cast<double>(n_chains);
        if (d == 1) {
            std::vector<double> a(n_chains), b(n_chains);
            for (std::size_t i = 0; i < n_chains; ++i) {
                a[i] = X[i][0];
                b[i] = Y[i][0];
            }
            row.W1 = empirical_w1(a, b);
        } else {
            row.W1 = pairwise_sum(dist) / static_cast<double>(n_chains);
        }
        tr.rows.push_back(row);
    }
    for (std::size_t i = 0; i < n_chains; ++i)
        if (done[i] && hit[i] > 0) ++tr.coalescence_times[hit[i]];
    return tr;
}

inline std::string trajectory_csv(const Trajectory& tr) {
    std::ostringstream os;
    os.precision(17);
    os << "t,E_rho,se,coalesced_frac,W1\n";
    for (const auto& r : tr.rows) os << r.t << ',' << r.E_rho << ',' << r.se << ',' << r.coalesced_frac << ',' << r.W1 << '\n';
    return os.str();
}

}  // namespace kcontract
