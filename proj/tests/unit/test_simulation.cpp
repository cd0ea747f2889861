#include <gtest/gtest.h>

#include <numeric>

#include "bnpiv/ingest.hpp"
#include "bnpiv/simulation.hpp"

using namespace bnpiv;
using namespace bnpiv::simulation;

namespace {

SimConfig baselines_only(std::size_t n = 10000) {
    SimConfig cfg;
    cfg.observations = n;
    cfg.estimators = {k2slsQuadratic, k2slsTrue};
    return cfg;
}

}  // namespace

TEST(Dgp, StructuralPolynomial) {
    const SimConfig cfg;
    EXPECT_DOUBLE_EQ(cfg.structural(0.5), 2.5);
    EXPECT_DOUBLE_EQ(cfg.structural(0.0), 0.0);
    EXPECT_DOUBLE_EQ(cfg.structural(1.0), 0.0);
}

TEST(Dgp, GeneratedColumnsFollowTheModel) {
    const auto data = generate_mc_data(baselines_only(20000));
    const auto& s = data.sample;
    const auto& w = data.oracle.confounder;
    ASSERT_EQ(s.size(), 20000u);
    ASSERT_EQ(w.size(), 20000u);
    double omitted = 0, r1 = 0, r1sq = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_GE(s.instrument[i], 0.0);
        EXPECT_LT(s.instrument[i], 1.0);
        EXPECT_GE(w[i], 0.0);
        EXPECT_LT(w[i], 1.0);
        omitted += 30.0 * std::pow(w[i], 4);
        const double e1 = s.occupancy[i] - 3.5 * s.instrument[i] - 2.1 * w[i];
        r1 += e1;
        r1sq += e1 * e1;
    }
    const double n = 20000.0;
    // E[30 w^4] = 6, Var[30 w^4] = 900 (1/9 - 1/25)
    EXPECT_NEAR(omitted / n, 6.0, 4.0 * std::sqrt(900.0 * (1.0 / 9 - 1.0 / 25) / n));
    EXPECT_NEAR(r1 / n, 0.0, 4.0 * std::sqrt(0.5 / n));
    EXPECT_NEAR(r1sq / n, 0.5, 4.0 * 0.5 * std::sqrt(2.0 / n));
}

TEST(Dgp, DeterministicForSeed) {
    const auto a = generate_mc_data(baselines_only(500));
    const auto b = generate_mc_data(baselines_only(500));
    EXPECT_EQ(a.sample.flow, b.sample.flow);
    auto other = baselines_only(500);
    other.seed += 1;
    EXPECT_NE(generate_mc_data(other).sample.flow, a.sample.flow);
}

TEST(Dgp, ConfigValidation) {
    auto cfg = baselines_only(50);
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = baselines_only();
    cfg.estimators = {"ols"};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = baselines_only();
    cfg.error_variance = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(CenteredRmse, IgnoresConstantOffsets) {
    const std::vector<double> a{1, 2, 3, 4}, b{11, 12, 13, 14};
    EXPECT_NEAR(centered_rmse(a, b), 0.0, 1e-14);
    const std::vector<double> c{0, 0, 0, 0}, d{1, -1, 1, -1};
    EXPECT_NEAR(centered_rmse(c, d), 1.0, 1e-14);
    EXPECT_THROW((void)centered_rmse(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Comparison, TwoStageOrderingAndCoefficientRecovery) {
    const auto r = run_mc_comparison(baselines_only());
    ASSERT_EQ(r.estimators.size(), 2u);
    ASSERT_EQ(r.grid.size(), 200u);
    const auto* quad = r.find(k2slsQuadratic);
    const auto* truth = r.find(k2slsTrue);
    ASSERT_TRUE(quad && truth);
    EXPECT_FALSE(quad->failed || truth->failed);
    EXPECT_LT(truth->rmse, 0.2 * quad->rmse);
    ASSERT_TRUE(truth->parametric.has_value());
    const auto& p = *truth->parametric;
    EXPECT_NEAR(p.coefficient_of(3), 40.0, 3.0 * p.standard_error_of(3));
    EXPECT_NEAR(p.coefficient_of(4), -40.0, 3.0 * p.standard_error_of(4));

    // Grid spans the central 98% of x; truth is centred.
    const double mean_truth = std::accumulate(r.truth.begin(), r.truth.end(), 0.0) / r.truth.size();
    EXPECT_NEAR(mean_truth, 0.0, 1e-9);
    const SimConfig cfg;
    const double offset = cfg.structural(r.grid[0]) - r.truth[0];
    for (std::size_t j = 0; j < r.grid.size(); ++j) EXPECT_NEAR(cfg.structural(r.grid[j]) - r.truth[j], offset, 1e-9);
}

TEST(Comparison, EstimatorsNeverReadTheConfounder) {
    const auto cfg = baselines_only(3000);
    auto data = generate_mc_data(cfg);
    const auto a = run_mc_comparison(cfg, data);
    for (auto& w : data.oracle.confounder) w = -1e9;
    const auto b = run_mc_comparison(cfg, data);
    for (std::size_t k = 0; k < a.estimators.size(); ++k) EXPECT_EQ(a.estimators[k].fitted, b.estimators[k].fitted);
}

TEST(Comparison, FailuresAreRecordedNotThrown) {
    auto cfg = baselines_only(500);
    cfg.estimators = {kBayesNp, k2slsTrue};
    npiv::McmcConfig bad;
    bad.total = 50;
    bad.burnin = 10;
    bad.thin = 1;
    cfg.mcmc = bad;
    const auto r = run_mc_comparison(cfg);
    ASSERT_EQ(r.estimators.size(), 2u);
    EXPECT_TRUE(r.find(kBayesNp)->failed);
    EXPECT_FALSE(r.find(kBayesNp)->error.empty());
    EXPECT_FALSE(r.find(k2slsTrue)->failed);
}

TEST(Comparison, WithoutConfoundingCorrectlySpecifiedEstimatorsAgree) {
    SimConfig cfg;
    cfg.observations = 3000;
    cfg.confounder_loading = 0.0;
    cfg.estimators = {k2slsTrue, kBayesNp, kBayesNpiv};
    npiv::McmcConfig m;
    m.total = 1500;
    m.burnin = 500;
    m.thin = 5;
    cfg.mcmc = m;
    const auto r = run_mc_comparison(cfg);
    for (const auto& e : r.estimators) {
        EXPECT_FALSE(e.failed) << e.name << ": " << e.error;
        EXPECT_LT(e.rmse, 0.5) << e.name;
    }
    EXPECT_LT(std::abs(r.find(kBayesNp)->rmse - r.find(kBayesNpiv)->rmse), 0.4);
}

TEST(Ovb, PredictedProbabilityLimit) {
    const auto r = ovb_demo(200000, 3.0, 2.0, 0.8, 1);
    EXPECT_DOUBLE_EQ(r.predicted_plim, 4.6);
    EXPECT_NEAR(r.empirical_slope, 4.6, 3.0 * r.slope_se);
    EXPECT_NEAR(r.empirical_delta, 0.8, 0.02);

    const auto none = ovb_demo(200000, 3.0, 0.0, 0.8, 2);
    EXPECT_NEAR(none.empirical_slope, 3.0, 3.0 * none.slope_se);

    const auto neg = ovb_demo(200000, 3.0, 2.0, -0.8, 3);
    EXPECT_LT(neg.empirical_slope, 3.0);
    EXPECT_THROW((void)ovb_demo(100, 1, 1, 1, 1), std::invalid_argument);
}

TEST(ReverseCausality, AnalyticCovariance) {
    const auto r = reverse_causality_demo(200000, 0.5, 0.5, 4);
    EXPECT_NEAR(r.analytic_cov, 0.5 / 0.75, 1e-15);
    EXPECT_NEAR(r.empirical_cov, r.analytic_cov, 3.0 * r.cov_se);
    EXPECT_GT(r.empirical_cov, 0.0);
    EXPECT_NEAR(r.ols_slope, r.analytic_plim, 4.0 * r.ols_slope_se);
    EXPECT_GT(r.bias, 0.0);

    const auto nofb = reverse_causality_demo(200000, 0.5, 0.0, 5);
    EXPECT_DOUBLE_EQ(nofb.analytic_cov, 0.0);
    EXPECT_NEAR(nofb.empirical_cov, 0.0, 3.0 * nofb.cov_se);
    EXPECT_NEAR(nofb.ols_slope, 0.5, 3.0 * nofb.ols_slope_se);

    EXPECT_THROW((void)reverse_causality_demo(1000, 2.0, 0.5, 1), std::invalid_argument);
}

TEST(Fixture, ProducesValidDetectorDays) {
    FixtureConfig cfg;
    cfg.days = 7;
    const auto recs = synthetic_detector_data(cfg);
    ASSERT_EQ(recs.size(), 7u * 288u);
    for (const auto& r : recs) {
        EXPECT_GE(r.flow, 0.0);
        EXPECT_GE(r.occupancy, 0.0);
        EXPECT_LE(r.occupancy, 100.0);
    }
    const auto built = ingest::build_lagged_instrument(recs, ingest::SiteConfig{});
    EXPECT_EQ(built.sample.size(), 4u * 144u);  // Tuesday to Friday have a previous workday
}
