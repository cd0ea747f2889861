#include <gtest/gtest.h>

#include <numeric>

#include "bnpiv/mixture.hpp"
#include "bnpiv/random.hpp"
#include "oracles.hpp"

using namespace bnpiv;
using namespace bnpiv::mixture;

namespace {

Component make_component(double m1, double m2, double s11, double s12, double s22) {
    Component c;
    c.mean = Eigen::Vector2d(m1, m2);
    c.cov.resize(2, 2);
    c.cov << s11, s12, s12, s22;
    return c;
}

MixtureState two_state(const Component& a, const Component& b, double wa) {
    MixtureState s;
    s.components = {a, b};
    s.sticks = {wa, 1.0};
    s.weights = stick_breaking(s.sticks);
    s.assignments = {0};
    return s;
}

MixturePrior test_prior() {
    MixturePrior p;
    p.mean0 = Eigen::Vector2d(1.0, -1.0);
    p.precision_scale = 0.5;
    p.dof = 8.0;
    p.scale.resize(2, 2);
    p.scale << 2.0, 0.3, 0.3, 1.0;
    return p;
}

}  // namespace

TEST(StickBreaking, KnownWeights) {
    EXPECT_EQ(stick_breaking(std::vector<double>{1.0}), (std::vector<double>{1.0}));
    const auto w = stick_breaking(std::vector<double>{0.5, 0.5, 1.0});
    EXPECT_DOUBLE_EQ(w[0], 0.5);
    EXPECT_DOUBLE_EQ(w[1], 0.25);
    EXPECT_DOUBLE_EQ(w[2], 0.25);
    const auto w3 = stick_breaking(std::vector<double>{0.3, 0.3, 1.0});
    EXPECT_NEAR(w3[0], 0.3, 1e-15);
    EXPECT_NEAR(w3[1], 0.21, 1e-15);
    EXPECT_NEAR(w3[2], 0.49, 1e-15);
}

TEST(StickBreaking, WeightsSumToExactlyOne) {
    Rng rng(42);
    for (int rep = 0; rep < 2000; ++rep) {
        std::vector<double> v(25);
        for (auto& x : v) x = std::max(1e-12, rng.beta(1.0, 0.2 + 5.0 * rng.uniform()));
        v.back() = 1.0;
        const auto w = stick_breaking(v);
        EXPECT_EQ(std::accumulate(w.begin(), w.end(), 0.0), 1.0);
        for (double x : w) EXPECT_GE(x, 0.0);
    }
}

TEST(StickBreaking, RejectsOutOfRangeFractions) {
    EXPECT_THROW((void)stick_breaking(std::vector<double>{0.0, 1.0}), std::invalid_argument);
    EXPECT_THROW((void)stick_breaking(std::vector<double>{1.2, 1.0}), std::invalid_argument);
    EXPECT_THROW((void)stick_breaking(std::vector<double>{-0.1, 1.0}), std::invalid_argument);
}

TEST(Assignments, SeparatedComponents) {
    const auto s = two_state(make_component(-10, -10, 1, 0, 1), make_component(10, 10, 1, 0, 1), 0.5);
    const std::vector<double> point{10.0, 10.0};
    const auto p = assignment_probabilities(s, point);
    EXPECT_GT(p[1], 0.999);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
}

TEST(Assignments, EqualComponentsAreUniform) {
    MixtureState s;
    for (int c = 0; c < 4; ++c) s.components.push_back(make_component(0, 0, 1, 0.2, 1));
    s.weights = {0.25, 0.25, 0.25, 0.25};
    const std::vector<double> point{0.7, -1.3};
    for (double p : assignment_probabilities(s, point)) EXPECT_NEAR(p, 0.25, 1e-14);
}

TEST(Assignments, FarPointsDoNotUnderflow) {
    const auto s = two_state(make_component(0, 0, 1e-4, 0, 1e-4), make_component(1, 1, 1e-4, 0, 1e-4), 0.5);
    const std::vector<double> point{1e3, -1e3};
    const auto p = assignment_probabilities(s, point);
    EXPECT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
}

TEST(Assignments, SingleComponentAssignsEverything) {
    Rng rng(1);
    auto s = initial_state(50, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), 1, 1.0);
    Eigen::MatrixXd res = Eigen::MatrixXd::Random(50, 2) * 5.0;
    update_assignments(res, s, rng);
    for (int a : s.assignments) EXPECT_EQ(a, 0);
}

TEST(Assignments, EmpiricalFrequenciesMatchProbabilities) {
    auto s = two_state(make_component(0, 0, 1, 0, 1), make_component(1, 0, 1, 0, 1), 0.3);
    const int n = 20000;
    Eigen::MatrixXd res = Eigen::MatrixXd::Zero(n, 2);
    res.col(0).setConstant(0.5);
    s.assignments.assign(n, 0);
    Rng rng(3);
    update_assignments(res, s, rng);
    const std::vector<double> point{0.5, 0.0};
    const double p1 = assignment_probabilities(s, point)[1];
    const double freq = static_cast<double>(std::count(s.assignments.begin(), s.assignments.end(), 1)) / n;
    EXPECT_NEAR(p1, 0.7, 1e-12);  // equal densities at the midpoint
    EXPECT_NEAR(freq, p1, 4.0 * std::sqrt(p1 * (1 - p1) / n));
}

TEST(ConditionalShift, KnownValues) {
    auto c = conditional_shift(make_component(0, 0, 1, 0.5, 1), 1.0);
    EXPECT_NEAR(c.mean, 0.5, 1e-15);
    EXPECT_NEAR(c.variance, 0.75, 1e-15);
    c = conditional_shift(make_component(1, 2, 4, 2, 4), 3.0);
    EXPECT_NEAR(c.mean, 3.0, 1e-15);
    EXPECT_NEAR(c.variance, 3.0, 1e-15);
    for (double e1 : {-5.0, 0.0, 12.0}) EXPECT_DOUBLE_EQ(conditional_shift(make_component(0.3, -2, 2, 0, 3), e1).mean, -2.0);
}

TEST(ConditionalShift, MatchesGridConditioning) {
    Rng rng(17);
    for (int rep = 0; rep < 25; ++rep) {
        const double s11 = 0.2 + 3.0 * rng.uniform();
        const double s22 = 0.2 + 3.0 * rng.uniform();
        const double rho = -0.95 + 1.9 * rng.uniform();
        const auto comp = make_component(rng.normal(0, 2), rng.normal(0, 2), s11, rho * std::sqrt(s11 * s22), s22);
        const double e1 = comp.mean(0) + rng.normal(0, 2) * std::sqrt(s11);
        const auto got = conditional_shift(comp, e1);
        const auto ref = oracle::grid_conditional(comp.mean, comp.cov, e1);
        EXPECT_NEAR(got.mean, ref.mean, 1e-6);
        EXPECT_NEAR(got.variance, ref.variance, 1e-6);

        // Swapping the coordinates turns conditional_first into conditional_shift.
        const auto swapped = make_component(comp.mean(1), comp.mean(0), s22, comp.cov(0, 1), s11);
        const auto first = conditional_first(comp, e1);
        const auto viaswap = conditional_shift(swapped, e1);
        EXPECT_NEAR(first.mean, viaswap.mean, 1e-12);
        EXPECT_NEAR(first.variance, viaswap.variance, 1e-12);
    }
}

TEST(NiwPosterior, MatchesSequentialUpdates) {
    Rng rng(5);
    const auto prior = test_prior();
    for (int n : {1, 2, 7, 500}) {
        Eigen::MatrixXd pts(n, 2);
        for (int i = 0; i < n; ++i) pts.row(i) << rng.normal(3, 1), rng.normal(-2, 0.5);
        const auto post = niw_posterior(pts, prior);
        const auto ref = oracle::sequential_niw({prior.mean0, prior.precision_scale, prior.dof, prior.scale}, pts);
        EXPECT_NEAR(post.precision_scale, ref.kappa, 1e-12);
        EXPECT_NEAR(post.dof, ref.nu, 1e-12);
        EXPECT_LT((post.mean - ref.mean).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((post.scale - ref.psi).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + ref.psi.norm()));
    }
}

TEST(NiwPosterior, EmptyDataReturnsPrior) {
    const auto prior = test_prior();
    const auto post = niw_posterior(Eigen::MatrixXd(0, 2), prior);
    EXPECT_EQ(post.mean, prior.mean0);
    EXPECT_EQ(post.scale, prior.scale);
    EXPECT_EQ(post.dof, prior.dof);
}

TEST(NiwPosterior, StrongPriorDominatesSinglePoint) {
    auto prior = test_prior();
    prior.precision_scale = 1e12;
    Eigen::MatrixXd pt(1, 2);
    pt << 50.0, 60.0;
    const auto post = niw_posterior(pt, prior);
    EXPECT_LT((post.mean - prior.mean0).norm(), 1e-9);
}

TEST(DrawNiw, MomentsMatchClosedForm) {
    const auto prior = test_prior();
    const NiwPosterior p{prior.mean0, prior.precision_scale, prior.dof, prior.scale};
    Rng rng(9);
    const int n = 40000;
    Eigen::Vector2d mu_sum = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov_sum = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d cov_sq = Eigen::Matrix2d::Zero();
    for (int i = 0; i < n; ++i) {
        const auto c = draw_niw(p, rng);
        mu_sum += c.mean;
        cov_sum += c.cov;
        cov_sq += c.cov.cwiseProduct(c.cov);
        EXPECT_GT(c.cov.determinant(), 0.0);
    }
    const Eigen::Matrix2d e_cov = prior.scale / (prior.dof - 3.0);
    const Eigen::Matrix2d mean_cov = cov_sum / n;
    const Eigen::Matrix2d sd_cov = (cov_sq / n - mean_cov.cwiseProduct(mean_cov)).cwiseSqrt();
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) EXPECT_NEAR(mean_cov(a, b), e_cov(a, b), 4.0 * sd_cov(a, b) / std::sqrt(n));
    const Eigen::Matrix2d var_mu = e_cov / prior.precision_scale;
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(mu_sum(a) / n, prior.mean0(a), 4.0 * std::sqrt(var_mu(a, a) / n));
}

TEST(UpdateComponents, EmptyComponentsFollowBaseMeasure) {
    const auto prior = test_prior();
    const int h = 4;
    auto s = initial_state(0, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), h, 1.0);
    Rng rng(21);
    const int reps = 10000;
    Eigen::Vector2d mu_sum = Eigen::Vector2d::Zero();
    double s11_sum = 0.0;
    for (int r = 0; r < reps; ++r) {
        update_components(Eigen::MatrixXd(0, 2), s, prior, rng);
        for (const auto& c : s.components) {
            mu_sum += c.mean;
            s11_sum += c.cov(0, 0);
        }
    }
    const double m = reps * h;
    const double e11 = prior.scale(0, 0) / (prior.dof - 3.0);
    // Var(Sigma_11) for an inverse-Wishart diagonal entry.
    const double nu = prior.dof, p = 2.0;
    const double var11 = 2.0 * prior.scale(0, 0) * prior.scale(0, 0) / ((nu - p - 1) * (nu - p - 1) * (nu - p - 3));
    EXPECT_NEAR(s11_sum / m, e11, 4.0 * std::sqrt(var11 / m));
    EXPECT_NEAR(mu_sum(0) / m, prior.mean0(0), 4.0 * std::sqrt(e11 / prior.precision_scale / m));
}

TEST(UpdateComponents, LargeSampleRecoversMoments) {
    auto prior = test_prior();
    prior.precision_scale = 1e-3;
    prior.dof = 4.0;
    prior.scale = Eigen::Matrix2d::Identity() * 1e-3;
    const int n = 10000;
    Rng data_rng(2);
    Eigen::MatrixXd res(n, 2);
    for (int i = 0; i < n; ++i) {
        const double a = data_rng.normal(), b = data_rng.normal();
        res.row(i) << 2.0 + 1.5 * a, -1.0 + 0.9 * a + 0.6 * b;  // cov [[2.25, 1.35], [1.35, 1.17]]
    }
    auto s = initial_state(n, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), 1, 1.0);
    Rng rng(4);
    Eigen::Vector2d mu = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    const int draws = 400;
    for (int d = 0; d < draws; ++d) {
        update_components(res, s, prior, rng);
        mu += s.components[0].mean;
        cov += s.components[0].cov;
    }
    mu /= draws;
    cov /= draws;
    const Eigen::RowVector2d sm = res.colwise().mean();
    const Eigen::MatrixXd centred = res.rowwise() - sm;
    const Eigen::Matrix2d sc = centred.transpose() * centred / n;
    EXPECT_NEAR(mu(0), sm(0), 3.0 * std::sqrt(sc(0, 0) / n));
    EXPECT_NEAR(mu(1), sm(1), 3.0 * std::sqrt(sc(1, 1) / n));
    EXPECT_NEAR(mu(0), 2.0, 4.0 * std::sqrt(2.25 / n));
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) EXPECT_NEAR(cov(a, b), sc(a, b), 3.0 * std::sqrt(2.0 / n) * std::sqrt(sc(a, a) * sc(b, b)));
}

TEST(Sticks, CountingPosterior) {
    Rng rng(8);
    const std::vector<int> counts{5, 5, 0};
    const int reps = 40000;
    double s1 = 0, s1sq = 0, s2 = 0;
    for (int r = 0; r < reps; ++r) {
        const auto v = draw_sticks(counts, 1.0, rng);
        ASSERT_EQ(v.size(), 3u);
        EXPECT_EQ(v[2], 1.0);
        s1 += v[0];
        s1sq += v[0] * v[0];
        s2 += v[1];
    }
    // v1 ~ Beta(6, 6), v2 ~ Beta(6, 1)
    EXPECT_NEAR(s1 / reps, 0.5, 4.0 * std::sqrt(36.0 / (144.0 * 13.0) / reps));
    EXPECT_NEAR(s1sq / reps - (s1 / reps) * (s1 / reps), 36.0 / (144.0 * 13.0), 2e-3);
    EXPECT_NEAR(s2 / reps, 6.0 / 7.0, 4.0 * std::sqrt(6.0 / (49.0 * 8.0) / reps));
}

TEST(Sticks, PriorWhenEmptyAndConcentratedWhenFull) {
    Rng rng(10);
    const int reps = 20000;
    double sum = 0;
    for (int r = 0; r < reps; ++r) sum += draw_sticks(std::vector<int>{0, 0, 0, 0}, 3.0, rng)[1];
    EXPECT_NEAR(sum / reps, 0.25, 4.0 * std::sqrt(3.0 / (16.0 * 5.0) / reps));

    double full = 0;
    for (int r = 0; r < 2000; ++r) full += draw_sticks(std::vector<int>{1000, 0, 0}, 1e-9, rng)[0];
    EXPECT_GT(full / 2000, 0.998);
}

TEST(Concentration, ConjugateGammaMean) {
    MixturePrior prior;
    prior.concentration_shape = 2.0;
    prior.concentration_rate = 2.0;
    const std::vector<double> v{0.4, 0.3, 0.6, 1.0};
    const double rate = 2.0 - (std::log(0.6) + std::log(0.7) + std::log(0.4));
    const double shape = 2.0 + 3.0;
    Rng rng(12);
    const int reps = 40000;
    double sum = 0;
    for (int r = 0; r < reps; ++r) sum += draw_concentration(v, prior, rng);
    EXPECT_NEAR(sum / reps, shape / rate, 4.0 * std::sqrt(shape) / rate / std::sqrt(reps));
}

TEST(Mixture, UpdatesAreDeterministicGivenSeed) {
    auto run = [] {
        Rng rng(77);
        const auto prior = MixturePrior::data_scaled(std::vector<double>{1.0, 2.0}, 6);
        auto s = initial_state(200, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), 6, 1.0);
        Rng data(1);
        Eigen::MatrixXd res(200, 2);
        for (int i = 0; i < 200; ++i) res.row(i) << data.normal(i % 2 ? 3 : -3, 1), data.normal();
        for (int it = 0; it < 20; ++it) {
            update_assignments(res, s, rng);
            update_components(res, s, prior, rng);
            update_sticks_and_concentration(s, prior, rng);
        }
        return s;
    };
    const auto a = run(), b = run();
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.concentration, b.concentration);
    for (std::size_t c = 0; c < a.components.size(); ++c) EXPECT_EQ(a.components[c].cov, b.components[c].cov);
    EXPECT_EQ(std::accumulate(a.weights.begin(), a.weights.end(), 0.0), 1.0);
}

TEST(MixturePrior, Validation) {
    auto p = test_prior();
    EXPECT_NO_THROW(p.validate());
    p.dof = 1.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = test_prior();
    p.scale << 1, 2, 2, 1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = test_prior();
    p.truncation = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = test_prior();
    p.precision_scale = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(MixturePrior, DataScaledDefaults) {
    const auto p = MixturePrior::data_scaled(std::vector<double>{4.0, 9.0});
    EXPECT_EQ(p.truncation, 25);
    EXPECT_DOUBLE_EQ(p.precision_scale, 0.01);
    EXPECT_DOUBLE_EQ(p.dof, 4.0);
    EXPECT_DOUBLE_EQ(p.scale(0, 0), 4.0);
    EXPECT_DOUBLE_EQ(p.scale(1, 1), 9.0);
    EXPECT_DOUBLE_EQ(p.scale(0, 1), 0.0);
    EXPECT_EQ(p.mean0, Eigen::Vector2d::Zero());
}

TEST(MixtureState, MarginalMeanAndDensity) {
    const auto s = two_state(make_component(-2, 0, 1, 0, 1), make_component(4, 1, 1, 0, 1), 0.25);
    const Eigen::VectorXd m = s.marginal_mean();
    EXPECT_NEAR(m(0), 0.25 * -2 + 0.75 * 4, 1e-15);
    EXPECT_NEAR(m(1), 0.75, 1e-15);
    const std::vector<double> pt{0.3, 0.2};
    const double ref = 0.25 * oracle::bivariate_normal({-2, 0}, Eigen::Matrix2d::Identity(), 0.3, 0.2) +
                       0.75 * oracle::bivariate_normal({4, 1}, Eigen::Matrix2d::Identity(), 0.3, 0.2);
    EXPECT_NEAR(mixture_density(s, pt), ref, 1e-15);
}
