#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "kcontract/core.hpp"
#include "kcontract/numeric.hpp"

namespace kcontract {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

// Mean and standard error (sample sd / sqrt(n)) with deterministic pairwise sums.
inline MeanSe mean_se(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double m = pairwise_sum(v) / n;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
    const double var = v.size() > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
    return {m, std::sqrt(var / n)};
}

// Kolmogorov limiting survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 lambda^2}.
inline double kolmogorov_q(double lambda) {
    if (lambda < 0.2) return 1.0;
    double s = 0.0, sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        s += term;
        if (std::fabs(term) < 1e-18) break;
        sign = -sign;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

// One-sample Kolmogorov-Smirnov test; p-value from the limiting law with
// Stephens' finite-n correction.
inline KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d), samples.size()};
}

// Empirical W1 between two equal-size 1D ensembles via sorted samples.
inline double empirical_w1(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = std::fabs(a[i] - b[i]);
    return pairwise_sum(diff) / static_cast<double>(a.size());
}

}  // namespace kcontract
