#include <gtest/gtest.h>

#include "bnpiv/random.hpp"

using bnpiv::Rng;

TEST(Rng, SameSeedSameStream) {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a.normal(), b.normal());
        EXPECT_EQ(a.gamma(2.5, 1.5), b.gamma(2.5, 1.5));
    }
}

TEST(Rng, DerivedStreamsDiffer) {
    auto a = Rng::derive(5, {1, 0});
    auto b = Rng::derive(5, {1, 1});
    auto c = Rng::derive(5, {1, 0});
    const double x = a.uniform();
    EXPECT_NE(x, b.uniform());
    EXPECT_EQ(x, c.uniform());
}

TEST(Rng, DistributionMeans) {
    Rng r(99);
    const int n = 200000;
    double g = 0, be = 0, ig = 0, chi = 0;
    for (int i = 0; i < n; ++i) {
        g += r.gamma(3.0, 2.0);
        be += r.beta(2.0, 6.0);
        ig += r.inverse_gamma(4.0, 6.0);
        chi += r.chi_square(5.0);
    }
    EXPECT_NEAR(g / n, 1.5, 4.0 * std::sqrt(3.0 / 4.0 / n));
    EXPECT_NEAR(be / n, 0.25, 4.0 * std::sqrt(12.0 / (64.0 * 9.0) / n));
    EXPECT_NEAR(ig / n, 2.0, 4.0 * std::sqrt(36.0 / (9.0 * 2.0) / n));
    EXPECT_NEAR(chi / n, 5.0, 4.0 * std::sqrt(10.0 / n));
}
