#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bnpiv/mixture.hpp"
#include "bnpiv/sample.hpp"
#include "bnpiv/splines.hpp"

// Bayesian nonparametric IV regression:
//
//   flow = S(occupancy) + e2,   occupancy = h(instrument) + e1,
//   (e1, e2) ~ truncated DP mixture of bivariate Gaussians,
//
// with S and h penalized splines whose smoothing variances are sampled.
// fit_np is the non-IV special case (h = identity, e1 = 0).
namespace bnpiv::npiv {

struct McmcConfig {
    long total = 50000;
    long burnin = 15000;
    long thin = 10;
    std::uint64_t seed = 1;
    double delta = 0.05;

    /// floor((total - burnin) / thin)
    [[nodiscard]] long retained() const noexcept;
    /// Throws std::invalid_argument unless burnin < total, thin >= 1,
    /// retained() >= 100 and delta in (0, 1).
    void validate() const;

    /// 50,000 draws, 15,000 burn-in, every 10th kept (3,500 retained).
    [[nodiscard]] static McmcConfig full(std::uint64_t seed = 1);
    /// 5,000 draws, 1,000 burn-in, every 4th kept (1,000 retained).
    [[nodiscard]] static McmcConfig desk(std::uint64_t seed = 1);
    /// 40,000 draws, 10,000 burn-in, every 40th kept (750 retained).
    [[nodiscard]] static McmcConfig monte_carlo(std::uint64_t seed = 1);
};

/// tau^2 ~ Inverse-Gamma(shape, scale); the intercept direction
/// gets a diffuse Gaussian prior.
struct SplinePriors {
    double shape = 1.0;
    double scale = 0.005;
    double intercept_variance = 1e10;

    void validate() const;
};

/// Basis plus difference penalty for one function. Either a B-spline basis
/// or the two-column linear basis [1, x] (no penalty).
class Basis {
public:
    [[nodiscard]] static Basis bspline(splines::KnotVector knots, int penalty_order = 2);
    [[nodiscard]] static Basis linear(double lower, double upper);

    [[nodiscard]] bool is_linear() const noexcept { return !knots_.has_value(); }
    [[nodiscard]] int dimension() const noexcept { return static_cast<int>(penalty_.rows()); }
    [[nodiscard]] double lower() const noexcept { return lower_; }
    [[nodiscard]] double upper() const noexcept { return upper_; }
    [[nodiscard]] const std::optional<splines::KnotVector>& knots() const noexcept { return knots_; }
    [[nodiscard]] const Eigen::MatrixXd& penalty() const noexcept { return penalty_; }
    [[nodiscard]] int penalty_rank() const noexcept { return penalty_rank_; }
    [[nodiscard]] int penalty_order() const noexcept { return penalty_order_; }

    /// Coefficients reproducing the constant function 1.
    [[nodiscard]] Eigen::VectorXd constant_coefficients() const;

    [[nodiscard]] splines::BandedDesign design(std::span<const double> x) const;
    [[nodiscard]] Eigen::MatrixXd dense_design(std::span<const double> x) const;

private:
    Basis() = default;

    std::optional<splines::KnotVector> knots_;
    double lower_ = 0.0;
    double upper_ = 1.0;
    Eigen::MatrixXd penalty_;
    int penalty_rank_ = 0;
    int penalty_order_ = 0;
};

/// Cubic B-spline basis with 20 interior knots and second-order penalty over the support of x.
[[nodiscard]] Basis default_basis(std::span<const double> x, int interior = 20, int degree = 3, int penalty_order = 2);

enum class Estimator { npiv, np };
[[nodiscard]] std::string to_string(Estimator e);

struct MixtureSnapshot {
    std::vector<double> weights;
    std::vector<mixture::Component> components;
};

/// Read-only view of the chain after each complete sweep.
struct SweepView {
    long iteration = 0;
    const RegressionSample* sample = nullptr;
    const Eigen::VectorXd* second_fit = nullptr;  // S(occupancy)
    const Eigen::VectorXd* first_fit = nullptr;   // h(instrument); identity for fit_np
    const Eigen::MatrixXd* residuals = nullptr;   // N x 2 (e1, e2) or N x 1 (e2)
    const mixture::MixtureState* mixture = nullptr;
};

struct FitOptions {
    int grid_points = 200;
    /// Explicit evaluation grid for S; empty means grid_points equally spaced
    /// points over the observed occupancy support.
    std::vector<double> grid;
    /// Mixture prior; unset means data-scaled defaults from an initial
    /// least-squares pass.
    std::optional<mixture::MixturePrior> mixture_prior;
    int truncation = 25;
    /// Applied to the prior (given or data-scaled) before sampling starts.
    std::function<void(mixture::MixturePrior&)> adjust_prior;
    std::function<void(const SweepView&)> observer;
};

struct PosteriorDraws {
    Estimator estimator = Estimator::npiv;
    McmcConfig config;
    std::optional<Basis> second_basis;
    std::optional<Basis> first_basis;  // unset for fit_np

    Eigen::MatrixXd second_coefficients;  // draws x dim(S)
    Eigen::MatrixXd first_coefficients;   // draws x dim(h)
    std::vector<double> second_smoothing;
    std::vector<double> first_smoothing;
    std::vector<double> concentration;
    std::vector<int> occupied;
    std::vector<MixtureSnapshot> mixtures;

    Eigen::MatrixXd mean_residuals;  // posterior mean of (e1, e2) per observation, or e2 only

    std::vector<double> grid;
    Eigen::MatrixXd second_curves;  // draws x grid
    std::vector<double> first_grid;
    Eigen::MatrixXd first_curves;   // draws x first_grid

    [[nodiscard]] std::size_t draw_count() const noexcept { return static_cast<std::size_t>(second_coefficients.rows()); }
    /// S evaluated on an arbitrary grid, one row per retained draw.
    [[nodiscard]] Eigen::MatrixXd evaluate_second(std::span<const double> at) const;
};

/// Gaussian full conditional of a coefficient block:
/// precision = sum_i w_i b_i b_i^T + prior, mean = precision^{-1} sum_i w_i b_i t_i.
struct GaussianBlock {
    Eigen::VectorXd mean;
    Eigen::MatrixXd precision;
};

[[nodiscard]] GaussianBlock coefficient_conditional(const splines::BandedDesign& design, std::span<const double> target,
                                                    std::span<const double> weights, const Eigen::MatrixXd& prior_precision);

/// penalty / tau^2 plus the diffuse intercept term.
[[nodiscard]] Eigen::MatrixXd prior_precision(const Basis& basis, double smoothing_variance, double intercept_variance);

[[nodiscard]] PosteriorDraws fit_npiv(const RegressionSample& sample, const Basis& second, const Basis& first,
                                      const SplinePriors& priors, const McmcConfig& config, const FitOptions& options = {});

[[nodiscard]] PosteriorDraws fit_np(const RegressionSample& sample, const Basis& second, const SplinePriors& priors,
                                    const McmcConfig& config, const FitOptions& options = {});

}  // namespace bnpiv::npiv
