#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bnpiv/random.hpp"

// Truncated Dirichlet-process mixture of Gaussians for the error pair
// (first-stage, second-stage). Blocked Gibbs updates with a conjugate
// normal-inverse-Wishart base measure. Dimension 2 for the IV model;
// dimension 1 is used by the non-IV estimator, which only models the
// second-stage error.
namespace bnpiv::mixture {

/// Base measure G0 = N(mu | mean0, Sigma / precision_scale) x IW(Sigma | dof, scale)
/// plus a Gamma(shape, rate) prior on the DP concentration.
struct MixturePrior {
    Eigen::VectorXd mean0 = Eigen::VectorXd::Zero(2);
    double precision_scale = 0.01;
    double dof = 4.0;
    Eigen::MatrixXd scale = Eigen::MatrixXd::Identity(2, 2);
    double concentration_shape = 2.0;
    double concentration_rate = 2.0;
    int truncation = 25;

    [[nodiscard]] int dimension() const noexcept { return static_cast<int>(mean0.size()); }
    void validate() const;

    /// Weakly informative defaults with scale = diag(residual variances).
    [[nodiscard]] static MixturePrior data_scaled(std::span<const double> residual_variances, int truncation = 25);
};

struct Component {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Sampler state. Assignments are zero-based component indices.
struct MixtureState {
    std::vector<Component> components;
    std::vector<double> sticks;
    std::vector<double> weights;
    std::vector<int> assignments;
    double concentration = 1.0;

    [[nodiscard]] int truncation() const noexcept { return static_cast<int>(components.size()); }
    [[nodiscard]] std::vector<int> counts() const;
    [[nodiscard]] int occupied() const;
    /// Marginal mean sum_c pi_c mu_c.
    [[nodiscard]] Eigen::VectorXd marginal_mean() const;
};

/// Parameters of the normal-inverse-Wishart posterior for one component.
struct NiwPosterior {
    Eigen::VectorXd mean;
    double precision_scale = 0.0;
    double dof = 0.0;
    Eigen::MatrixXd scale;
};

/// Gaussian conditional of one coordinate given the other.
struct Conditional {
    double mean = 0.0;
    double variance = 0.0;
};

/// Weights pi_c = v_c prod_{j<c} (1 - v_j). The last stick is forced to 1 so the
/// weights sum to exactly 1. Throws std::invalid_argument for v outside (0, 1].
[[nodiscard]] std::vector<double> stick_breaking(std::span<const double> sticks);

/// Initial state: every observation in component 0, all components equal to
/// (mean0, cov), sticks at their prior mean.
[[nodiscard]] MixtureState initial_state(std::size_t observations, const Eigen::VectorXd& mean,
                                         const Eigen::MatrixXd& cov, int truncation, double concentration);

[[nodiscard]] double log_density(const Component& component, std::span<const double> point);
[[nodiscard]] double mixture_density(const MixtureState& state, std::span<const double> point);

/// Posterior assignment probabilities of a single point (log-sum-exp normalised).
[[nodiscard]] std::vector<double> assignment_probabilities(const MixtureState& state, std::span<const double> point);

/// Draws every assignment from its full conditional. residuals is N x dimension.
void update_assignments(const Eigen::MatrixXd& residuals, MixtureState& state, Rng& rng);

[[nodiscard]] NiwPosterior niw_posterior(const Eigen::MatrixXd& points, const MixturePrior& prior);

/// Draws (mu, Sigma) from a normal-inverse-Wishart distribution.
[[nodiscard]] Component draw_niw(const NiwPosterior& params, Rng& rng);

/// Occupied components from their conjugate posterior, empty ones from G0.
void update_components(const Eigen::MatrixXd& residuals, MixtureState& state, const MixturePrior& prior, Rng& rng);

/// v_c ~ Be(1 + n_c, zeta + sum_{j>c} n_j), v_H = 1.
[[nodiscard]] std::vector<double> draw_sticks(std::span<const int> counts, double concentration, Rng& rng);

/// zeta | v ~ Gamma(a + H - 1, b - sum_{c<H} log(1 - v_c)).
[[nodiscard]] double draw_concentration(std::span<const double> sticks, const MixturePrior& prior, Rng& rng);

/// Sticks from the current counts, then weights and concentration.
void update_sticks_and_concentration(MixtureState& state, const MixturePrior& prior, Rng& rng);

/// Distribution of the second coordinate given the first under one bivariate component.
[[nodiscard]] Conditional conditional_shift(const Component& component, double first);

/// Distribution of the first coordinate given the second under one bivariate component.
[[nodiscard]] Conditional conditional_first(const Component& component, double second);

}  // namespace bnpiv::mixture
