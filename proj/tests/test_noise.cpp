#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "kcontract/noise.hpp"

using namespace kcontract;

namespace {

std::vector<double> first_coords(const NoiseSpec& s, std::size_t n, std::uint64_t seed) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Stream rng(seed, i);
        out[i] = sample_one(s, rng)[0];
    }
    return out;
}

}  // namespace

TEST(Sample, GaussianMean) {
    const auto v = first_coords(NoiseSpec::gaussian(), 1'000'000, 11);
    EXPECT_NEAR(pairwise_sum(v) / 1e6, 0.0, 4e-3);
}

TEST(Sample, CauchyMedian) {
    auto v = first_coords(NoiseSpec::cauchy(), 1'000'000, 12);
    std::nth_element(v.begin(), v.begin() + 500000, v.end());
    EXPECT_NEAR(v[500000], 0.0, 0.01);
}

TEST(Sample, Deterministic) {
    for (const auto& s : {NoiseSpec::gaussian(3), NoiseSpec::stable(1.3, 2), NoiseSpec::nonisotropic(1.5, 2)}) {
        Stream a(99, 7), b(99, 7);
        for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_one(s, a), sample_one(s, b));
    }
}

TEST(Sample, AlphaOutOfRange) {
    try {
        NoiseSpec::stable(2.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "alpha out of range");
    }
    EXPECT_THROW(NoiseSpec::stable(0.0), Error);
}

TEST(Sample, KsAgainstMarginalCdf) {
    for (const auto& s : {NoiseSpec::gaussian(), NoiseSpec::cauchy(), NoiseSpec::stable(1.5),
                          NoiseSpec::nonisotropic(1.2)}) {
        const auto v = first_coords(s, 100000, 21);
        const auto r = ks_test(v, [&s](double t) { return marginal_cdf(s, t); });
        EXPECT_GT(r.p_value, 1e-3) << s.key();
    }
}

TEST(Density, ClosedForms) {
    EXPECT_NEAR(density(NoiseSpec::gaussian(), {0.0}), 0.3989422804014327, 1e-15);
    EXPECT_NEAR(density(NoiseSpec::cauchy(), {1.0}), 0.15915494309189535, 1e-15);
}

TEST(Density, FourierInversionMatchesCauchy) {
    for (double r : linear_grid(0.0, 50.0, 101))
        EXPECT_NEAR(stable::density_fourier(1.0, r), 1.0 / (kPi * (1.0 + r * r)), 1e-8) << r;
}

TEST(Density, StableTableMatchesDirect) {
    for (double alpha : {0.7, 1.5, 1.9})
        for (double r : linear_grid(0.0, 100.0, 17))
            EXPECT_NEAR(stable::density(alpha, r), stable::density_direct(alpha, r), 1e-8) << alpha << " " << r;
}

TEST(Distribution, StableTableMatchesDirect) {
    for (double alpha : {0.7, 1.5})
        for (double r : {-120.0, -30.0, -1.0, 0.0, 0.2, 2.5, 9.0, 77.0})
            EXPECT_NEAR(stable::cdf_cached(alpha, r), stable::cdf(alpha, r), 1e-9) << alpha << " " << r;
    // the upper tail keeps relative precision
    for (double alpha : {0.7, 1.5, 1.9})
        for (double r : {0.0, 0.5, 3.0, 20.0, 60.0, 99.0, 150.0}) {
            const double direct = stable::survival(alpha, r);
            EXPECT_NEAR(stable::survival_cached(alpha, r) / direct, 1.0, 1e-8) << alpha << " " << r;
        }
}

TEST(Density, StableDirectMatchesFourier) {
    for (double alpha : {0.8, 1.5})
        for (double r : {0.0, 0.3, 1.0, 3.0, 10.0})
            EXPECT_NEAR(stable::density_direct(alpha, r), stable::density_fourier(alpha, r), 1e-8);
}

TEST(Density, UnavailableForIsotropicStable) {
    try {
        density(NoiseSpec::stable(1.5, 2), {0.0, 1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "density unavailable");
    }
    EXPECT_GT(density(NoiseSpec::cauchy(2), {0.0, 1.0}), 0.0);
    EXPECT_GT(density(NoiseSpec::gaussian(2), {0.0, 1.0}), 0.0);
}

TEST(Overlap, Examples) {
    EXPECT_NEAR(overlap_J(NoiseSpec::gaussian(), 1.0), 0.61707507745197379, 1e-14);
    EXPECT_NEAR(overlap_mass(NoiseSpec::cauchy(), {2.0}), 0.5, 1e-15);
    for (const auto& s : {NoiseSpec::gaussian(2), NoiseSpec::cauchy(), NoiseSpec::stable(1.5)})
        EXPECT_EQ(overlap_mass(s, Vec(s.d, 0.0)), 1.0);
}

TEST(Overlap, NonIsotropicLowerBound) {
    for (std::size_t d : {1, 2}) {
        const auto s = NoiseSpec::nonisotropic(1.5, d);
        const double c = nonisotropic_overlap_constant(s, 32);
        EXPECT_GT(c, 0.0);
        for (double k : {0.1, 0.4, 0.8}) {
            Vec v(d, 0.0);
            v[0] = k;
            EXPECT_GE(overlap_mass(s, v) * (1 + 1e-9), c * (std::pow(1.0 + k, -1.5) - std::pow(2.0, -1.5)));
        }
    }
}

TEST(Overlap, RadialInvariants) {
    for (const auto& s : {NoiseSpec::gaussian(), NoiseSpec::cauchy(), NoiseSpec::stable(1.2)}) {
        double prev = 1.0;
        EXPECT_EQ(overlap_J(s, 0.0), 1.0);
        for (double r : log_grid(1e-3, 1e3, 60)) {
            const double m = overlap_mass(s, {r});
            EXPECT_EQ(m, overlap_mass(s, {-r}));
            EXPECT_LE(m, prev);
            EXPECT_GE(m, 0.0);
            prev = m;
        }
        EXPECT_LT(overlap_J(s, 1e6), 1e-3);
    }
    // depends only on |v| in d = 2
    const auto g2 = NoiseSpec::gaussian(2);
    EXPECT_EQ(overlap_mass(g2, {3.0, 4.0}), overlap_mass(g2, {5.0, 0.0}));
}

TEST(Overlap, MonteCarloAgreesInOneDimension) {
    for (const auto& s : {NoiseSpec::gaussian(), NoiseSpec::cauchy(), NoiseSpec::stable(1.5)}) {
        const Vec v{1.3};
        const MeanSe mc = overlap_mc(s, v, 100000, 5);
        EXPECT_LE(std::fabs(mc.mean - overlap_mass(s, v)), 3.0 * mc.se) << s.key();
    }
}

TEST(Overlap, HighDimensionalBoundIsBelowMonteCarlo) {
    const auto s = NoiseSpec::gaussian(3);
    const Vec v{0.8, 0.0, 0.0};
    const MeanSe mc = overlap_mc(s, v, 100000, 6);
    EXPECT_LE(overlap_lower_bound(s, 0.8), mc.mean);
    // for the Gaussian the exact mass is still the 1D marginal tail
    EXPECT_LE(std::fabs(mc.mean - overlap_mass(s, v)), 3.0 * mc.se);
}

TEST(Overlap, HighVarianceIsRefused) {
    try {
        overlap_mc(NoiseSpec::gaussian(), {8.0}, 2000, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "estimator variance too high");
    }
}

TEST(Moments, Gaussian) {
    EXPECT_NEAR(abs_moment(NoiseSpec::gaussian(), 2.0), 1.0, 1e-14);
    EXPECT_NEAR(abs_moment(NoiseSpec::gaussian(3), 2.0), 3.0, 1e-13);
    EXPECT_THROW(abs_moment(NoiseSpec::stable(1.5), 1.5), Error);
}

TEST(Lattice, DiscretizeIsSymmetricAndNormalized) {
    const auto s = discretize(NoiseSpec::gaussian(), 0.05);
    EXPECT_NEAR(pairwise_sum(s.pmf), 1.0, 1e-12);
    const std::size_t n = s.pmf.size();
    for (std::size_t i = 0; i < n / 2; ++i) EXPECT_EQ(s.pmf[i], s.pmf[n - 1 - i]);
    EXPECT_TRUE(s.satisfies_c4());
    // overlap on the lattice approximates the continuous one
    EXPECT_NEAR(overlap_mass(s, {1.0}), overlap_mass(NoiseSpec::gaussian(), {1.0}), 0.03);
}

TEST(Lattice, ThreePointOverlap) {
    const auto s = NoiseSpec::lattice(0.5, {0.25, 0.5, 0.25});
    EXPECT_EQ(overlap_mass(s, {0.5}), 0.5);
    EXPECT_EQ(overlap_mass(s, {1.0}), 0.25);
    EXPECT_EQ(overlap_mass(s, {0.3}), 0.0);
    EXPECT_EQ(overlap_J(s, 1.0), 0.25);
}
