#include "bnpiv/summary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "bnpiv/log.hpp"

namespace bnpiv::summary {
namespace {

constexpr long kMinDraws = 100;
constexpr double kResolution = 1e-4;

void check_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("band level delta must be in (0, 1)");
}

std::vector<double> axis(double lo, double hi, int n) {
    if (n < 2 || !(hi > lo)) throw std::invalid_argument("density grid: need >= 2 points on a nondegenerate range");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
    return out;
}

}  // namespace

double empirical_quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("empirical_quantile: no values");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    const double h = n * p + 0.5;  // 1-based fractional order statistic
    if (h <= 1.0) return values.front();
    if (h >= n) return values.back();
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    return values[lo - 1] + frac * (values[lo] - values[lo - 1]);
}

PointwiseSummary pointwise_summary(const Eigen::MatrixXd& curves, double delta) {
    check_delta(delta);
    if (curves.rows() < kMinDraws) throw std::invalid_argument("pointwise_summary: fewer than 100 retained draws");
    const auto g = static_cast<std::size_t>(curves.cols());
    PointwiseSummary out;
    out.mean.resize(g);
    out.lower.resize(g);
    out.upper.resize(g);
    std::vector<double> column(static_cast<std::size_t>(curves.rows()));
    for (std::size_t j = 0; j < g; ++j) {
        const auto c = static_cast<Eigen::Index>(j);
        for (Eigen::Index i = 0; i < curves.rows(); ++i) column[static_cast<std::size_t>(i)] = curves(i, c);
        out.mean[j] = curves.col(c).mean();
        out.lower[j] = std::min(empirical_quantile(column, delta / 2.0), out.mean[j]);
        out.upper[j] = std::max(empirical_quantile(column, 1.0 - delta / 2.0), out.mean[j]);
    }
    return out;
}

double containment(const Eigen::MatrixXd& curves, const PointwiseSummary& pw, double inflation) {
    const Eigen::Index m = curves.rows();
    const auto g = static_cast<std::size_t>(curves.cols());
    long inside = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        bool ok = true;
        for (std::size_t j = 0; j < g && ok; ++j) {
            const double v = curves(i, static_cast<Eigen::Index>(j));
            const double lo = pw.mean[j] - inflation * (pw.mean[j] - pw.lower[j]);
            const double hi = pw.mean[j] + inflation * (pw.upper[j] - pw.mean[j]);
            ok = v >= lo && v <= hi;
        }
        inside += ok ? 1 : 0;
    }
    return static_cast<double>(inside) / static_cast<double>(m);
}

CurveBand simultaneous_band(const Eigen::MatrixXd& curves, std::span<const double> grid, double delta) {
    if (static_cast<Eigen::Index>(grid.size()) != curves.cols())
        throw std::invalid_argument("simultaneous_band: grid does not match curve columns");
    const PointwiseSummary pw = pointwise_summary(curves, delta);
    const double target = 1.0 - delta;

    CurveBand band;
    band.grid.assign(grid.begin(), grid.end());
    band.mean = pw.mean;
    band.pointwise_lower = pw.lower;
    band.pointwise_upper = pw.upper;
    band.level = delta;

    const bool identical = (curves.rowwise() - curves.row(0)).cwiseAbs().maxCoeff() == 0.0;
    double lambda = 1.0;
    if (!identical && containment(curves, pw, 1.0) < target) {
        double zero_width = 0.0;
        for (std::size_t j = 0; j < pw.mean.size(); ++j) zero_width = std::max(zero_width, pw.upper[j] - pw.lower[j]);
        if (zero_width == 0.0) throw std::invalid_argument("simultaneous_band: zero-width pointwise band with non-identical draws");

        double lo = 1.0;
        double hi = 2.0;
        while (containment(curves, pw, hi) < target) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e12) throw std::invalid_argument("simultaneous_band: containment target unreachable");
        }
        while (hi - lo > kResolution) {
            const double mid = 0.5 * (lo + hi);
            (containment(curves, pw, mid) >= target ? hi : lo) = mid;
        }
        lambda = hi;
    }
    band.inflation = lambda;
    band.simultaneous_lower.resize(pw.mean.size());
    band.simultaneous_upper.resize(pw.mean.size());
    for (std::size_t j = 0; j < pw.mean.size(); ++j) {
        band.simultaneous_lower[j] = pw.mean[j] - lambda * (pw.mean[j] - pw.lower[j]);
        band.simultaneous_upper[j] = pw.mean[j] + lambda * (pw.upper[j] - pw.mean[j]);
    }
    return band;
}

CurveBand simultaneous_band(const npiv::PosteriorDraws& draws, double delta) {
    return simultaneous_band(draws.second_curves, draws.grid, delta);
}

CurveBand first_stage_band(const npiv::PosteriorDraws& draws, double delta) {
    if (draws.first_curves.rows() == 0) throw std::invalid_argument("first_stage_band: no first-stage draws (non-IV fit)");
    return simultaneous_band(draws.first_curves, draws.first_grid, delta);
}

double DensityGrid::mass() const {
    if (first_axis.size() < 2 || second_axis.size() < 2) return 0.0;
    const double cell = (first_axis[1] - first_axis[0]) * (second_axis[1] - second_axis[0]);
    return density.sum() * cell;
}

std::vector<std::pair<int, int>> DensityGrid::local_maxima(double relative_floor) const {
    std::vector<std::pair<int, int>> out;
    const double floor = relative_floor * density.maxCoeff();
    for (Eigen::Index i = 1; i + 1 < density.rows(); ++i) {
        for (Eigen::Index j = 1; j + 1 < density.cols(); ++j) {
            const double v = density(i, j);
            if (v < floor) continue;
            bool peak = true;
            for (int di = -1; di <= 1 && peak; ++di)
                for (int dj = -1; dj <= 1 && peak; ++dj)
                    if ((di || dj) && density(i + di, j + dj) >= v) peak = false;
            if (peak) out.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
    }
    return out;
}

DensityGridSpec default_density_spec(const npiv::PosteriorDraws& draws, int points) {
    if (draws.mean_residuals.cols() != 2) throw std::invalid_argument("default_density_spec: bivariate residuals required");
    DensityGridSpec spec;
    spec.first_points = spec.second_points = points;
    double* bounds[2][2] = {{&spec.first_lower, &spec.first_upper}, {&spec.second_lower, &spec.second_upper}};
    for (Eigen::Index c = 0; c < 2; ++c) {
        const auto col = draws.mean_residuals.col(c);
        const double m = col.mean();
        double sd = std::sqrt((col.array() - m).square().sum() / std::max<Eigen::Index>(1, col.size() - 1));
        if (!(sd > 0.0)) sd = 1.0;
        *bounds[c][0] = m - 6.0 * sd;
        *bounds[c][1] = m + 6.0 * sd;
    }
    return spec;
}

DensityGrid mixture_density_grid(std::span<const npiv::MixtureSnapshot> snapshots, const DensityGridSpec& spec) {
    if (snapshots.empty()) throw std::invalid_argument("error_density_grid: no mixture draws");
    DensityGrid grid;
    grid.first_axis = axis(spec.first_lower, spec.first_upper, spec.first_points);
    grid.second_axis = axis(spec.second_lower, spec.second_upper, spec.second_points);
    grid.density = Eigen::MatrixXd::Zero(spec.first_points, spec.second_points);
    for (const auto& snap : snapshots) {
        for (std::size_t c = 0; c < snap.components.size(); ++c) {
            const double w = snap.weights[c];
            if (w <= 0.0) continue;
            const auto& comp = snap.components[c];
            if (comp.mean.size() != 2) throw std::invalid_argument("error_density_grid: bivariate mixture required");
            const double a = comp.cov(0, 0), b = comp.cov(0, 1), d = comp.cov(1, 1);
            const double det = a * d - b * b;
            const double scale = w / (2.0 * std::numbers::pi * std::sqrt(det));
            for (std::size_t i = 0; i < grid.first_axis.size(); ++i) {
                const double x = grid.first_axis[i] - comp.mean(0);
                for (std::size_t j = 0; j < grid.second_axis.size(); ++j) {
                    const double y = grid.second_axis[j] - comp.mean(1);
                    const double quad = (d * x * x - 2.0 * b * x * y + a * y * y) / det;
                    grid.density(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += scale * std::exp(-0.5 * quad);
                }
            }
        }
    }
    grid.density /= static_cast<double>(snapshots.size());
    return grid;
}

DensityGrid error_density_grid(const npiv::PosteriorDraws& draws, const DensityGridSpec& spec) {
    DensityGrid grid = mixture_density_grid(draws.mixtures, spec);
    const auto& r = draws.mean_residuals;
    if (r.cols() == 2 && r.rows() > 0) {
        long inside = 0;
        for (Eigen::Index i = 0; i < r.rows(); ++i) {
            inside += r(i, 0) >= spec.first_lower && r(i, 0) <= spec.first_upper && r(i, 1) >= spec.second_lower &&
                      r(i, 1) <= spec.second_upper;
        }
        grid.residual_coverage = static_cast<double>(inside) / static_cast<double>(r.rows());
        if (grid.residual_coverage < 0.95) {
            log::warn("error density grid covers only " + std::to_string(100.0 * grid.residual_coverage) +
                      "% of posterior residual mass");
        }
    }
    return grid;
}

}  // namespace bnpiv::summary
