#include "bnpiv/splines.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "bnpiv/log.hpp"

namespace bnpiv::splines {

std::vector<double> KnotVector::interior_knots() const {
    const auto first = knots.begin() + degree + 1;
    return {first, first + interior};
}

KnotVector make_knots(std::span<const double> x, int interior, int degree) {
    if (x.empty()) throw std::invalid_argument("make_knots: empty sample");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (!(*hi > *lo)) throw std::invalid_argument("make_knots: degenerate support (constant sample)");
    return make_knots_on(*lo, *hi, interior, degree);
}

KnotVector make_knots_on(double lower, double upper, int interior, int degree) {
    if (interior < 1) throw std::invalid_argument("make_knots: interior knot count must be >= 1");
    if (degree < 1) throw std::invalid_argument("make_knots: degree must be >= 1");
    if (!(upper > lower)) throw std::invalid_argument("make_knots: degenerate support");

    KnotVector kv;
    kv.interior = interior;
    kv.degree = degree;
    kv.lower = lower;
    kv.upper = upper;
    kv.knots.reserve(static_cast<std::size_t>(interior + 2 * (degree + 1)));
    kv.knots.insert(kv.knots.end(), static_cast<std::size_t>(degree + 1), lower);
    const double step = (upper - lower) / (interior + 1);
    for (int k = 1; k <= interior; ++k) kv.knots.push_back(lower + k * step);
    kv.knots.insert(kv.knots.end(), static_cast<std::size_t>(degree + 1), upper);
    return kv;
}

namespace {

int find_span(const KnotVector& kv, double x) {
    const int n = kv.dimension();
    if (x >= kv.upper) return n - 1;
    // Last index i in [degree, n-1] with knots[i] <= x.
    const auto begin = kv.knots.begin() + kv.degree;
    const auto end = kv.knots.begin() + n;
    const auto it = std::upper_bound(begin, end, x);
    return static_cast<int>(it - kv.knots.begin()) - 1;
}

double clamp_to(const KnotVector& kv, double x) { return std::clamp(x, kv.lower, kv.upper); }

void warn_clamped(std::size_t clamped, std::size_t total) {
    if (clamped == 0) return;
    log::warn("spline evaluation clamped " + std::to_string(clamped) + " of " + std::to_string(total) +
              " values to the basis support");
}

}  // namespace

int basis_at(const KnotVector& kv, double x, std::span<double> out) {
    const int p = kv.degree;
    if (out.size() < static_cast<std::size_t>(p + 1)) throw std::invalid_argument("basis_at: output too small");
    const int span = find_span(kv, x);
    const auto& t = kv.knots;

    // Local triangular evaluation of the p+1 nonzero functions on this span.
    double left[32];
    double right[32];
    if (p >= 32) throw std::invalid_argument("basis_at: degree too large");
    out[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - t[static_cast<std::size_t>(span + 1 - j)];
        right[j] = t[static_cast<std::size_t>(span + j)] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = out[static_cast<std::size_t>(r)] / (right[r + 1] + left[j - r]);
            out[static_cast<std::size_t>(r)] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[static_cast<std::size_t>(j)] = saved;
    }
    return span - p;
}

std::size_t count_out_of_range(const KnotVector& kv, std::span<const double> x) {
    return static_cast<std::size_t>(
        std::count_if(x.begin(), x.end(), [&kv](double v) { return v < kv.lower || v > kv.upper; }));
}

Eigen::MatrixXd design_matrix(const KnotVector& kv, std::span<const double> x) {
    return banded_design(kv, x).to_dense();
}

BandedDesign banded_design(const KnotVector& kv, std::span<const double> x) {
    const int width = kv.degree + 1;
    BandedDesign out;
    out.dimension = kv.dimension();
    out.first.resize(x.size());
    out.values.resize(static_cast<Eigen::Index>(x.size()), width);
    std::vector<double> row(static_cast<std::size_t>(width));
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.first[i] = basis_at(kv, clamp_to(kv, x[i]), row);
        for (int k = 0; k < width; ++k) out.values(static_cast<Eigen::Index>(i), k) = row[static_cast<std::size_t>(k)];
    }
    warn_clamped(count_out_of_range(kv, x), x.size());
    return out;
}

double BandedDesign::row_dot(std::size_t i, const Eigen::VectorXd& coefficients) const {
    const auto r = static_cast<Eigen::Index>(i);
    return values.row(r).dot(coefficients.segment(first[i], values.cols()));
}

Eigen::VectorXd BandedDesign::multiply(const Eigen::VectorXd& coefficients) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows()));
    for (std::size_t i = 0; i < rows(); ++i) out(static_cast<Eigen::Index>(i)) = row_dot(i, coefficients);
    return out;
}

Eigen::MatrixXd BandedDesign::to_dense() const {
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()), dimension);
    for (std::size_t i = 0; i < rows(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        dense.block(r, first[i], 1, values.cols()) = values.row(r);
    }
    return dense;
}

BandedDesign BandedDesign::from_dense(const Eigen::MatrixXd& dense) {
    const Eigen::Index n = dense.rows();
    const Eigen::Index p = dense.cols();
    BandedDesign out;
    out.dimension = static_cast<int>(p);
    out.first.assign(static_cast<std::size_t>(n), 0);
    Eigen::Index width = 1;
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index lo = p;
        Eigen::Index hi = -1;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (dense(i, j) != 0.0) {
                lo = std::min(lo, j);
                hi = std::max(hi, j);
            }
        }
        if (hi < 0) lo = hi = 0;
        out.first[static_cast<std::size_t>(i)] = static_cast<int>(lo);
        width = std::max(width, hi - lo + 1);
    }
    out.values.resize(n, width);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto& start = out.first[static_cast<std::size_t>(i)];
        start = static_cast<int>(std::min<Eigen::Index>(start, p - width));
        out.values.row(i) = dense.block(i, start, 1, width);
    }
    return out;
}

PenaltyMatrix penalty(int dimension, int order) {
    if (order < 1) throw std::invalid_argument("penalty: order must be >= 1");
    if (dimension <= order) throw std::invalid_argument("penalty: dimension must exceed the difference order");
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(dimension, dimension);
    for (int k = 0; k < order; ++k) {
        const Eigen::Index rows = d.rows() - 1;
        d = (d.bottomRows(rows) - d.topRows(rows)).eval();
    }
    PenaltyMatrix out;
    out.order = order;
    out.matrix = d.transpose() * d;
    out.rank = dimension - order;
    return out;
}

}  // namespace bnpiv::splines
