#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bnpiv/npiv.hpp"

namespace bnpiv::summary {

struct PointwiseSummary {
    std::vector<double> mean;
    std::vector<double> lower;  // delta/2 quantile
    std::vector<double> upper;  // 1 - delta/2 quantile
};

/// Posterior mean plus pointwise and simultaneous (1 - delta) bands.
struct CurveBand {
    std::vector<double> grid;
    std::vector<double> mean;
    std::vector<double> pointwise_lower;
    std::vector<double> pointwise_upper;
    std::vector<double> simultaneous_lower;
    std::vector<double> simultaneous_upper;
    double level = 0.05;
    double inflation = 1.0;  // common factor applied to the pointwise half-widths

    [[nodiscard]] std::size_t size() const noexcept { return grid.size(); }
};

struct DensityGridSpec {
    double first_lower = -1.0, first_upper = 1.0;
    double second_lower = -1.0, second_upper = 1.0;
    int first_points = 101;
    int second_points = 101;
};

struct DensityGrid {
    std::vector<double> first_axis;   // e1
    std::vector<double> second_axis;  // e2
    Eigen::MatrixXd density;          // first_axis.size() x second_axis.size()
    double residual_coverage = 1.0;   // share of posterior-mean residuals inside the grid

    /// Riemann sum of density times cell area.
    [[nodiscard]] double mass() const;
    /// Interior strict local maxima (8-neighbourhood) as (i, j) indices.
    [[nodiscard]] std::vector<std::pair<int, int>> local_maxima(double relative_floor = 1e-3) const;
};

/// Empirical quantile with linear interpolation between order statistics at
/// plotting positions (k - 0.5) / n (clamped to the extremes).
[[nodiscard]] double empirical_quantile(std::vector<double> values, double p);

/// Per-column summaries of a draws x grid matrix. Requires >= 100 rows.
[[nodiscard]] PointwiseSummary pointwise_summary(const Eigen::MatrixXd& curves, double delta);

/// Fraction of curves (rows) lying inside [mean - s*lw, mean + s*uw] at every grid point.
[[nodiscard]] double containment(const Eigen::MatrixXd& curves, const PointwiseSummary& pointwise, double inflation);

/// Smallest common inflation >= 1 of the pointwise half-widths (bisection to 1e-4)
/// such that at least 1 - delta of the curves lie entirely inside the band.
[[nodiscard]] CurveBand simultaneous_band(const Eigen::MatrixXd& curves, std::span<const double> grid, double delta);
[[nodiscard]] CurveBand simultaneous_band(const npiv::PosteriorDraws& draws, double delta);

/// First-stage (h) band on the instrument grid.
[[nodiscard]] CurveBand first_stage_band(const npiv::PosteriorDraws& draws, double delta);

/// +-6 posterior-mean-residual standard deviations around the residual means.
[[nodiscard]] DensityGridSpec default_density_spec(const npiv::PosteriorDraws& draws, int points = 101);

/// Average over retained draws of the bivariate mixture density on the grid.
[[nodiscard]] DensityGrid error_density_grid(const npiv::PosteriorDraws& draws, const DensityGridSpec& spec);

/// Density of explicit mixture snapshots (useful for fixtures).
[[nodiscard]] DensityGrid mixture_density_grid(std::span<const npiv::MixtureSnapshot> snapshots, const DensityGridSpec& spec);

}  // namespace bnpiv::summary
