#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

// B-spline bases on equidistant knots and difference penalties (P-splines).
namespace bnpiv::splines {

/// Open knot sequence: boundary knots repeated degree+1 times, equidistant
/// interior knots strictly between them.
struct KnotVector {
    int interior = 0;
    int degree = 0;
    double lower = 0.0;
    double upper = 0.0;
    std::vector<double> knots;

    [[nodiscard]] int dimension() const noexcept { return interior + degree + 1; }
    [[nodiscard]] std::vector<double> interior_knots() const;
};

struct PenaltyMatrix {
    int order = 0;
    Eigen::MatrixXd matrix;  // D^T D, D the order-th difference operator
    int rank = 0;
};

/// Row-compressed design: row i has nonzeros in columns [first[i], first[i] + width).
/// B-spline rows have width degree + 1, which keeps cross products O(N * width^2).
struct BandedDesign {
    using Values = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    std::vector<int> first;
    Values values;  // rows x width
    int dimension = 0;

    [[nodiscard]] std::size_t rows() const noexcept { return first.size(); }
    [[nodiscard]] int width() const noexcept { return static_cast<int>(values.cols()); }

    /// Row i times coefficients.
    [[nodiscard]] double row_dot(std::size_t i, const Eigen::VectorXd& coefficients) const;
    [[nodiscard]] Eigen::VectorXd multiply(const Eigen::VectorXd& coefficients) const;
    [[nodiscard]] Eigen::MatrixXd to_dense() const;

    /// Compress an arbitrary dense design (width = widest nonzero span).
    [[nodiscard]] static BandedDesign from_dense(const Eigen::MatrixXd& dense);
};

/// Equidistant knots over [min x, max x]. Throws std::invalid_argument when
/// interior < 1, degree < 1, or x has fewer than two distinct values.
[[nodiscard]] KnotVector make_knots(std::span<const double> x, int interior, int degree);

/// Same construction on an explicit support.
[[nodiscard]] KnotVector make_knots_on(double lower, double upper, int interior, int degree);

/// Dense N x dimension B-spline design. Values outside the support are clamped
/// to the nearest boundary and reported with a warning.
[[nodiscard]] Eigen::MatrixXd design_matrix(const KnotVector& kv, std::span<const double> x);

[[nodiscard]] BandedDesign banded_design(const KnotVector& kv, std::span<const double> x);

/// Nonzero basis values at x (degree + 1 entries) and the index of the first one.
/// x must lie inside the support.
int basis_at(const KnotVector& kv, double x, std::span<double> out);

[[nodiscard]] std::size_t count_out_of_range(const KnotVector& kv, std::span<const double> x);

/// K = D^T D for the order-th difference matrix D ((dimension - order) x dimension).
[[nodiscard]] PenaltyMatrix penalty(int dimension, int order);

}  // namespace bnpiv::splines
