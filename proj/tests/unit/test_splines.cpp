#include <gtest/gtest.h>

#include <random>

#include "bnpiv/log.hpp"
#include "bnpiv/splines.hpp"
#include "oracles.hpp"

using namespace bnpiv::splines;

namespace {

std::vector<double> uniform_points(std::size_t n, double lo, double hi, unsigned seed) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> x(n);
    for (auto& v : x) v = u(eng);
    return x;
}

}  // namespace

TEST(MakeKnots, InteriorKnotsAreEquidistant) {
    const std::vector<double> x{0.0, 3.0, 10.0};
    const auto kv = make_knots(x, 4, 3);
    EXPECT_EQ(kv.dimension(), 8);
    const auto in = kv.interior_knots();
    ASSERT_EQ(in.size(), 4u);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(in[j], 2.0 * (j + 1), 1e-12);
    EXPECT_EQ(kv.knots.size(), 12u);
}

TEST(MakeKnots, LinearWithOneInteriorKnot) {
    const std::vector<double> x{0.0, 1.0};
    const auto kv = make_knots(x, 1, 1);
    EXPECT_EQ(kv.knots, (std::vector<double>{0.0, 0.0, 0.5, 1.0, 1.0}));
    EXPECT_EQ(kv.dimension(), 3);
}

TEST(MakeKnots, DefaultDimension) {
    const std::vector<double> x{0.0, 75.0};
    EXPECT_EQ(make_knots(x, 20, 3).dimension(), 24);
}

TEST(MakeKnots, RejectsDegenerateInput) {
    const std::vector<double> constant{2.0, 2.0, 2.0};
    EXPECT_THROW((void)make_knots(constant, 4, 3), std::invalid_argument);
    const std::vector<double> x{0.0, 1.0};
    EXPECT_THROW((void)make_knots(x, 0, 3), std::invalid_argument);
    EXPECT_THROW((void)make_knots(x, 3, 0), std::invalid_argument);
}

TEST(DesignMatrix, PartitionOfUnityAndLocalSupport) {
    const auto x = uniform_points(2000, -3.0, 7.0, 11);
    const auto kv = make_knots(x, 20, 3);
    const auto b = design_matrix(kv, x);
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
        EXPECT_NEAR(b.row(i).sum(), 1.0, 1e-10);
        EXPECT_GE(b.row(i).minCoeff(), 0.0);
        EXPECT_LE((b.row(i).array() != 0.0).count(), kv.degree + 1);
    }
}

TEST(DesignMatrix, MatchesCoxDeBoorRecursion) {
    for (int degree : {1, 2, 3, 4}) {
        const auto kv = make_knots_on(-1.0, 2.0, 7, degree);
        const auto t = oracle::open_uniform(-1.0, 2.0, 7, degree);
        ASSERT_EQ(kv.knots.size(), t.size());
        auto x = uniform_points(200, -1.0, 2.0, 5 + degree);
        x.push_back(-1.0);
        x.push_back(2.0);
        x.push_back(0.5);
        const auto b = design_matrix(kv, x);
        for (std::size_t r = 0; r < x.size(); ++r)
            for (int j = 0; j < kv.dimension(); ++j)
                EXPECT_NEAR(b(static_cast<Eigen::Index>(r), j), oracle::cox_de_boor(t, j, degree, x[r]), 1e-12)
                    << "degree " << degree << " x " << x[r] << " basis " << j;
    }
}

TEST(DesignMatrix, CubicValuesAtInteriorKnot) {
    // Far from the boundary the open basis is the uniform cubic: 1/6, 2/3, 1/6.
    const auto kv = make_knots_on(0.0, 10.0, 9, 3);
    const std::vector<double> x{5.0};
    const auto b = design_matrix(kv, x);
    const auto t = oracle::open_uniform(0.0, 10.0, 9, 3);
    int centre = -1;
    for (int j = 0; j < kv.dimension(); ++j)
        if (std::abs(b(0, j) - 2.0 / 3.0) < 1e-12) centre = j;
    ASSERT_GE(centre, 1);
    EXPECT_NEAR(b(0, centre - 1), 1.0 / 6.0, 1e-12);
    EXPECT_NEAR(b(0, centre + 1), 1.0 / 6.0, 1e-12);
    EXPECT_NEAR(oracle::cox_de_boor(t, centre, 3, 5.0), 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(oracle::cox_de_boor(t, centre - 1, 3, 5.0), 1.0 / 6.0, 1e-12);
}

TEST(DesignMatrix, BoundaryEvaluatesToSingleBasis) {
    const auto kv = make_knots_on(0.0, 1.0, 5, 3);
    const std::vector<double> x{0.0, 1.0};
    const auto b = design_matrix(kv, x);
    EXPECT_DOUBLE_EQ(b(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(b.row(0).sum(), 1.0);
    EXPECT_DOUBLE_EQ(b(1, kv.dimension() - 1), 1.0);
    EXPECT_DOUBLE_EQ(b.row(1).sum(), 1.0);
}

TEST(DesignMatrix, ClampsOutOfRangeWithWarning) {
    const auto kv = make_knots_on(0.0, 1.0, 5, 3);
    const std::vector<double> x{-0.5, 1.5};
    bnpiv::log::reset_warning_count();
    const auto b = design_matrix(kv, x);
    EXPECT_GE(bnpiv::log::warning_count(), 1u);
    EXPECT_EQ(count_out_of_range(kv, x), 2u);
    EXPECT_DOUBLE_EQ(b(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(b(1, kv.dimension() - 1), 1.0);
}

TEST(DesignMatrix, OrderIndependentAndDeterministic) {
    auto x = uniform_points(300, 0.0, 5.0, 3);
    const auto kv = make_knots(x, 10, 3);
    const auto b1 = design_matrix(kv, x);
    std::vector<double> rev(x.rbegin(), x.rend());
    const auto b2 = design_matrix(kv, rev);
    for (Eigen::Index i = 0; i < b1.rows(); ++i) EXPECT_EQ(b1.row(i), b2.row(b1.rows() - 1 - i));
    EXPECT_EQ(b1, design_matrix(kv, x));
}

TEST(BandedDesign, AgreesWithDenseDesign) {
    const auto x = uniform_points(500, 10.0, 60.0, 9);
    const auto kv = make_knots(x, 20, 3);
    const auto banded = banded_design(kv, x);
    EXPECT_EQ(banded.width(), 4);
    EXPECT_EQ(banded.dimension, 24);
    EXPECT_LT((banded.to_dense() - design_matrix(kv, x)).cwiseAbs().maxCoeff(), 1e-14);

    Eigen::VectorXd coef = Eigen::VectorXd::LinSpaced(24, -2.0, 3.0);
    EXPECT_LT((banded.multiply(coef) - design_matrix(kv, x) * coef).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BandedDesign, FromDenseRoundTrip) {
    Eigen::MatrixXd d(3, 5);
    d << 1, 2, 0, 0, 0,
         0, 0, 3, 4, 0,
         0, 0, 0, 0, 5;
    const auto b = BandedDesign::from_dense(d);
    EXPECT_EQ(b.to_dense(), d);
}

TEST(Penalty, NullSpaceContainsLowOrderPolynomials) {
    for (int order = 1; order <= 3; ++order) {
        const auto k = penalty(24, order);
        for (int deg = 0; deg < order; ++deg) {
            Eigen::VectorXd c(24);
            for (int j = 0; j < 24; ++j) c(j) = std::pow(0.3 * j - 2.0, deg) + 1.5;
            if (deg == 0) c.setConstant(3.7);
            EXPECT_NEAR(c.dot(k.matrix * c), 0.0, 1e-10) << "order " << order << " degree " << deg;
        }
    }
}

TEST(Penalty, QuadraticFormPositiveOutsideNullSpace) {
    const auto k = penalty(10, 2);
    Eigen::VectorXd c(10);
    for (int j = 0; j < 10; ++j) c(j) = j * j;
    EXPECT_GT(c.dot(k.matrix * c), 0.0);
}

TEST(Penalty, RankMatchesEigenDecomposition) {
    const auto k = penalty(4, 2);
    EXPECT_EQ(oracle::eigen_rank(k.matrix), 2);
    EXPECT_EQ(k.rank, 2);
    for (int dim : {5, 12, 24})
        for (int order : {1, 2, 3}) {
            const auto p = penalty(dim, order);
            EXPECT_EQ(p.rank, dim - order);
            EXPECT_EQ(oracle::eigen_rank(p.matrix), dim - order);
            const auto d = oracle::difference_matrix(dim, order);
            EXPECT_LT((p.matrix - d.transpose() * d).cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_LT((p.matrix - p.matrix.transpose()).cwiseAbs().maxCoeff(), 1e-15);
        }
}

TEST(Penalty, RejectsTooSmallDimension) {
    EXPECT_THROW((void)penalty(2, 2), std::invalid_argument);
    EXPECT_THROW((void)penalty(5, 0), std::invalid_argument);
}
