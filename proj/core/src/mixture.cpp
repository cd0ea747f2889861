#include "bnpiv/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "bnpiv/error.hpp"

namespace bnpiv::mixture {
namespace {

constexpr double kJitter = 1e-8;

bool is_spd(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || !m.isApprox(m.transpose(), 1e-10)) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    return llt.info() == Eigen::Success;
}

// Precomputed Gaussian log-density for dimension <= 2.
struct DensityKernel {
    int dim = 0;
    double m0 = 0.0, m1 = 0.0;
    double p00 = 0.0, p01 = 0.0, p11 = 0.0;  // precision entries
    double log_norm = 0.0;

    explicit DensityKernel(const Component& c) : dim(static_cast<int>(c.mean.size())) {
        constexpr double log_two_pi = 1.8378770664093453;
        if (dim == 1) {
            m0 = c.mean(0);
            p00 = 1.0 / c.cov(0, 0);
            log_norm = -0.5 * (log_two_pi + std::log(c.cov(0, 0)));
        } else {
            m0 = c.mean(0);
            m1 = c.mean(1);
            const double a = c.cov(0, 0), b = c.cov(0, 1), d = c.cov(1, 1);
            const double det = a * d - b * b;
            p00 = d / det;
            p01 = -b / det;
            p11 = a / det;
            log_norm = -(log_two_pi + 0.5 * std::log(det));
        }
    }

    [[nodiscard]] double operator()(double x0, double x1) const {
        const double d0 = x0 - m0;
        if (dim == 1) return log_norm - 0.5 * p00 * d0 * d0;
        const double d1 = x1 - m1;
        return log_norm - 0.5 * (p00 * d0 * d0 + 2.0 * p01 * d0 * d1 + p11 * d1 * d1);
    }
};

void check_dimension(int dim) {
    if (dim < 1 || dim > 2) throw std::invalid_argument("mixture: only dimension 1 or 2 is supported");
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Sigma ~ IW(dof, scale) via a Bartlett draw of Sigma^{-1} ~ Wishart(dof, scale^{-1}).
Eigen::MatrixXd draw_inverse_wishart(double dof, const Eigen::MatrixXd& scale, Rng& rng) {
    const Eigen::Index d = scale.rows();
    const Eigen::MatrixXd scale_inv = symmetrize(scale.inverse());
    Eigen::LLT<Eigen::MatrixXd> llt(scale_inv);
    if (llt.info() != Eigen::Success) throw NumericalError("inverse-Wishart: scale matrix is not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        a(i, i) = std::sqrt(rng.chi_square(dof - static_cast<double>(i)));
        for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
    }
    const Eigen::MatrixXd la = l * a;
    const Eigen::MatrixXd wishart = la * la.transpose();
    return symmetrize(wishart.inverse());
}

}  // namespace

void MixturePrior::validate() const {
    const int d = dimension();
    check_dimension(d);
    if (scale.rows() != d || scale.cols() != d) throw std::invalid_argument("MixturePrior: scale has wrong shape");
    if (!(precision_scale > 0.0)) throw std::invalid_argument("MixturePrior: precision scale must be positive");
    if (!(dof > static_cast<double>(d) - 1.0)) throw std::invalid_argument("MixturePrior: dof must exceed dimension - 1");
    if (!is_spd(scale)) throw std::invalid_argument("MixturePrior: scale must be symmetric positive definite");
    if (!(concentration_shape > 0.0) || !(concentration_rate > 0.0))
        throw std::invalid_argument("MixturePrior: concentration prior parameters must be positive");
    if (truncation < 1) throw std::invalid_argument("MixturePrior: truncation must be >= 1");
}

MixturePrior MixturePrior::data_scaled(std::span<const double> residual_variances, int truncation) {
    const auto d = static_cast<Eigen::Index>(residual_variances.size());
    check_dimension(static_cast<int>(d));
    MixturePrior prior;
    prior.mean0 = Eigen::VectorXd::Zero(d);
    prior.scale = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double v = residual_variances[static_cast<std::size_t>(i)];
        prior.scale(i, i) = v > 0.0 && std::isfinite(v) ? v : 1.0;
    }
    prior.truncation = truncation;
    return prior;
}

std::vector<int> MixtureState::counts() const {
    std::vector<int> n(components.size(), 0);
    for (int a : assignments) ++n[static_cast<std::size_t>(a)];
    return n;
}

int MixtureState::occupied() const {
    const auto n = counts();
    return static_cast<int>(std::count_if(n.begin(), n.end(), [](int c) { return c > 0; }));
}

Eigen::VectorXd MixtureState::marginal_mean() const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(components.front().mean.size());
    for (std::size_t c = 0; c < components.size(); ++c) m += weights[c] * components[c].mean;
    return m;
}

std::vector<double> stick_breaking(std::span<const double> sticks) {
    if (sticks.empty()) throw std::invalid_argument("stick_breaking: no sticks");
    for (double v : sticks) {
        if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("stick_breaking: stick fraction outside (0, 1]");
    }
    std::vector<double> weights(sticks.size());
    double remaining = 1.0;
    double assigned = 0.0;
    for (std::size_t c = 0; c + 1 < sticks.size(); ++c) {
        // Capping at 1 - assigned keeps the running sum <= 1 under rounding.
        weights[c] = std::min(sticks[c] * remaining, 1.0 - assigned);
        remaining *= 1.0 - sticks[c];
        assigned += weights[c];
    }
    // Truncation: the last component takes whatever is left; a + (1 - a)
    // rounds to exactly 1 for a in [0, 1].
    weights.back() = 1.0 - assigned;
    return weights;
}

MixtureState initial_state(std::size_t observations, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           int truncation, double concentration) {
    if (truncation < 1) throw std::invalid_argument("initial_state: truncation must be >= 1");
    MixtureState state;
    state.components.assign(static_cast<std::size_t>(truncation), Component{mean, cov});
    state.sticks.assign(static_cast<std::size_t>(truncation), 1.0 / (1.0 + concentration));
    state.sticks.back() = 1.0;
    state.weights = stick_breaking(state.sticks);
    state.assignments.assign(observations, 0);
    state.concentration = concentration;
    return state;
}

double log_density(const Component& component, std::span<const double> point) {
    check_dimension(static_cast<int>(component.mean.size()));
    const DensityKernel k(component);
    return k(point[0], point.size() > 1 ? point[1] : 0.0);
}

double mixture_density(const MixtureState& state, std::span<const double> point) {
    double total = 0.0;
    for (std::size_t c = 0; c < state.components.size(); ++c) {
        if (state.weights[c] <= 0.0) continue;
        total += state.weights[c] * std::exp(log_density(state.components[c], point));
    }
    return total;
}

std::vector<double> assignment_probabilities(const MixtureState& state, std::span<const double> point) {
    const std::size_t h = state.components.size();
    std::vector<double> logp(h, -std::numeric_limits<double>::infinity());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < h; ++c) {
        if (state.weights[c] <= 0.0) continue;
        logp[c] = std::log(state.weights[c]) + log_density(state.components[c], point);
        top = std::max(top, logp[c]);
    }
    std::vector<double> p(h, 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < h; ++c) {
        if (std::isfinite(logp[c])) {
            p[c] = std::exp(logp[c] - top);
            total += p[c];
        }
    }
    for (double& v : p) v /= total;
    return p;
}

void update_assignments(const Eigen::MatrixXd& residuals, MixtureState& state, Rng& rng) {
    const std::size_t h = state.components.size();
    const auto n = static_cast<std::size_t>(residuals.rows());
    const bool bivariate = residuals.cols() == 2;
    state.assignments.resize(n);
    if (h == 1) {
        std::fill(state.assignments.begin(), state.assignments.end(), 0);
        return;
    }

    std::vector<DensityKernel> kernels;
    std::vector<double> log_weights;
    std::vector<int> index;
    kernels.reserve(h);
    for (std::size_t c = 0; c < h; ++c) {
        if (state.weights[c] <= 0.0) continue;
        kernels.emplace_back(state.components[c]);
        log_weights.push_back(std::log(state.weights[c]));
        index.push_back(static_cast<int>(c));
    }
    const std::size_t live = kernels.size();
    std::vector<double> logp(live);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const double x0 = residuals(r, 0);
        const double x1 = bivariate ? residuals(r, 1) : 0.0;
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < live; ++k) {
            logp[k] = log_weights[k] + kernels[k](x0, x1);
            top = std::max(top, logp[k]);
        }
        double total = 0.0;
        for (std::size_t k = 0; k < live; ++k) {
            logp[k] = std::exp(logp[k] - top);
            total += logp[k];
        }
        double u = rng.uniform() * total;
        std::size_t pick = live - 1;
        for (std::size_t k = 0; k < live; ++k) {
            u -= logp[k];
            if (u < 0.0) {
                pick = k;
                break;
            }
        }
        state.assignments[i] = index[pick];
    }
}

NiwPosterior niw_posterior(const Eigen::MatrixXd& points, const MixturePrior& prior) {
    const double n = static_cast<double>(points.rows());
    NiwPosterior post;
    post.precision_scale = prior.precision_scale + n;
    post.dof = prior.dof + n;
    if (points.rows() == 0) {
        post.mean = prior.mean0;
        post.scale = prior.scale;
        return post;
    }
    const Eigen::VectorXd ybar = points.colwise().mean().transpose();
    const Eigen::MatrixXd centered = points.rowwise() - ybar.transpose();
    const Eigen::MatrixXd scatter = centered.transpose() * centered;
    const Eigen::VectorXd diff = ybar - prior.mean0;
    post.mean = (prior.precision_scale * prior.mean0 + n * ybar) / post.precision_scale;
    post.scale = symmetrize(prior.scale + scatter + (prior.precision_scale * n / post.precision_scale) * diff * diff.transpose());
    return post;
}

Component draw_niw(const NiwPosterior& params, Rng& rng) {
    Component c;
    c.cov = draw_inverse_wishart(params.dof, params.scale, rng);
    if (!is_spd(c.cov)) {
        c.cov.diagonal().array() += kJitter;
        if (!is_spd(c.cov)) throw NumericalError("normal-inverse-Wishart draw is not positive definite");
    }
    const Eigen::MatrixXd mean_cov = c.cov / params.precision_scale;
    Eigen::LLT<Eigen::MatrixXd> llt(mean_cov);
    Eigen::VectorXd z(params.mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    c.mean = params.mean + llt.matrixL() * z;
    return c;
}

void update_components(const Eigen::MatrixXd& residuals, MixtureState& state, const MixturePrior& prior, Rng& rng) {
    const std::size_t h = state.components.size();
    const auto counts = state.counts();
    std::vector<Eigen::MatrixXd> members(h);
    std::vector<Eigen::Index> fill(h, 0);
    for (std::size_t c = 0; c < h; ++c) members[c].resize(counts[c], residuals.cols());
    for (std::size_t i = 0; i < state.assignments.size(); ++i) {
        const auto c = static_cast<std::size_t>(state.assignments[i]);
        members[c].row(fill[c]++) = residuals.row(static_cast<Eigen::Index>(i));
    }
    for (std::size_t c = 0; c < h; ++c) state.components[c] = draw_niw(niw_posterior(members[c], prior), rng);
}

std::vector<double> draw_sticks(std::span<const int> counts, double concentration, Rng& rng) {
    const std::size_t h = counts.size();
    std::vector<double> sticks(h, 1.0);
    long tail = 0;
    for (int n : counts) tail += n;
    for (std::size_t c = 0; c + 1 < h; ++c) {
        tail -= counts[c];
        double v = rng.beta(1.0 + counts[c], concentration + static_cast<double>(tail));
        // Keep v inside (0, 1]; an exact zero can only come from underflow.
        if (v <= 0.0) v = std::numeric_limits<double>::min();
        sticks[c] = v;
    }
    return sticks;
}

double draw_concentration(std::span<const double> sticks, const MixturePrior& prior, Rng& rng) {
    const std::size_t h = sticks.size();
    if (h < 2) return prior.concentration_shape / prior.concentration_rate;
    double log_remaining = 0.0;
    for (std::size_t c = 0; c + 1 < h; ++c) {
        const double v = std::min(sticks[c], 1.0 - 1e-12);
        log_remaining += std::log1p(-v);
    }
    const double shape = prior.concentration_shape + static_cast<double>(h - 1);
    const double rate = prior.concentration_rate - log_remaining;
    return std::max(rng.gamma(shape, rate), 1e-10);
}

void update_sticks_and_concentration(MixtureState& state, const MixturePrior& prior, Rng& rng) {
    const auto counts = state.counts();
    state.sticks = draw_sticks(counts, state.concentration, rng);
    state.weights = stick_breaking(state.sticks);
    state.concentration = draw_concentration(state.sticks, prior, rng);
}

Conditional conditional_shift(const Component& component, double first) {
    if (component.mean.size() != 2) throw std::invalid_argument("conditional_shift: bivariate component required");
    const double s11 = component.cov(0, 0);
    const double s12 = component.cov(0, 1);
    const double s22 = component.cov(1, 1);
    const double slope = s12 / s11;
    return {component.mean(1) + slope * (first - component.mean(0)), s22 - s12 * slope};
}

Conditional conditional_first(const Component& component, double second) {
    if (component.mean.size() != 2) throw std::invalid_argument("conditional_first: bivariate component required");
    const double s11 = component.cov(0, 0);
    const double s12 = component.cov(0, 1);
    const double s22 = component.cov(1, 1);
    const double slope = s12 / s22;
    return {component.mean(0) + slope * (second - component.mean(1)), s11 - s12 * slope};
}

}  // namespace bnpiv::mixture
