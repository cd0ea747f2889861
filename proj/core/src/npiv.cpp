#include "bnpiv/npiv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bnpiv/error.hpp"
#include "bnpiv/log.hpp"
#include "bnpiv/random.hpp"

namespace bnpiv::npiv {

long McmcConfig::retained() const noexcept {
    if (thin < 1 || total <= burnin) return 0;
    return (total - burnin) / thin;
}

void McmcConfig::validate() const {
    if (burnin < 0 || burnin >= total) throw std::invalid_argument("McmcConfig: burn-in must be in [0, total)");
    if (thin < 1) throw std::invalid_argument("McmcConfig: thinning must be >= 1");
    if (retained() < 100) throw std::invalid_argument("McmcConfig: fewer than 100 retained draws");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("McmcConfig: band level must be in (0, 1)");
}

McmcConfig McmcConfig::full(std::uint64_t seed) { return {50000, 15000, 10, seed, 0.05}; }
McmcConfig McmcConfig::desk(std::uint64_t seed) { return {5000, 1000, 4, seed, 0.05}; }
McmcConfig McmcConfig::monte_carlo(std::uint64_t seed) { return {40000, 10000, 40, seed, 0.05}; }

void SplinePriors::validate() const {
    if (!(shape > 0.0) || !(scale > 0.0)) throw std::invalid_argument("SplinePriors: inverse-gamma parameters must be positive");
    if (!(intercept_variance > 0.0)) throw std::invalid_argument("SplinePriors: intercept variance must be positive");
}

Basis Basis::bspline(splines::KnotVector knots, int penalty_order) {
    Basis b;
    const auto pen = splines::penalty(knots.dimension(), penalty_order);
    b.lower_ = knots.lower;
    b.upper_ = knots.upper;
    b.knots_ = std::move(knots);
    b.penalty_ = pen.matrix;
    b.penalty_rank_ = pen.rank;
    b.penalty_order_ = pen.order;
    return b;
}

Basis Basis::linear(double lower, double upper) {
    if (!(upper > lower)) throw std::invalid_argument("Basis::linear: degenerate support");
    Basis b;
    b.lower_ = lower;
    b.upper_ = upper;
    b.penalty_ = Eigen::MatrixXd::Zero(2, 2);
    return b;
}

Eigen::VectorXd Basis::constant_coefficients() const {
    if (is_linear()) return Eigen::Vector2d(1.0, 0.0);
    return Eigen::VectorXd::Ones(dimension());
}

splines::BandedDesign Basis::design(std::span<const double> x) const {
    if (knots_) return splines::banded_design(*knots_, x);
    splines::BandedDesign out;
    out.dimension = 2;
    out.first.assign(x.size(), 0);
    out.values.resize(static_cast<Eigen::Index>(x.size()), 2);
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.values(static_cast<Eigen::Index>(i), 0) = 1.0;
        out.values(static_cast<Eigen::Index>(i), 1) = x[i];
    }
    return out;
}

Eigen::MatrixXd Basis::dense_design(std::span<const double> x) const { return design(x).to_dense(); }

Basis default_basis(std::span<const double> x, int interior, int degree, int penalty_order) {
    return Basis::bspline(splines::make_knots(x, interior, degree), penalty_order);
}

std::string to_string(Estimator e) { return e == Estimator::npiv ? "bayes-npiv" : "bayes-np"; }

Eigen::MatrixXd PosteriorDraws::evaluate_second(std::span<const double> at) const {
    if (!second_basis) throw std::logic_error("PosteriorDraws: no basis recorded");
    const Eigen::MatrixXd design = second_basis->dense_design(at);
    return second_coefficients * design.transpose();
}

GaussianBlock coefficient_conditional(const splines::BandedDesign& design, std::span<const double> target,
                                      std::span<const double> weights, const Eigen::MatrixXd& prior_precision) {
    const std::size_t n = design.rows();
    const int p = design.dimension;
    const int w = design.width();
    if (target.size() != n || weights.size() != n) throw std::invalid_argument("coefficient_conditional: size mismatch");
    if (prior_precision.rows() != p || prior_precision.cols() != p)
        throw std::invalid_argument("coefficient_conditional: prior precision has wrong shape");

    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
    const double* values = design.values.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = values + i * static_cast<std::size_t>(w);
        const int f = design.first[i];
        const double wi = weights[i];
        const double wt = wi * target[i];
        for (int a = 0; a < w; ++a) {
            const double wa = wi * row[a];
            xty(f + a) += row[a] * wt;
            for (int b = a; b < w; ++b) xtx(f + a, f + b) += wa * row[b];
        }
    }
    xtx.triangularView<Eigen::StrictlyLower>() = xtx.transpose().triangularView<Eigen::StrictlyLower>();

    GaussianBlock block;
    block.precision = xtx + prior_precision;
    Eigen::LLT<Eigen::MatrixXd> llt(block.precision);
    if (llt.info() != Eigen::Success) {
        log::warn("singular penalized cross-product; adding ridge 1e-8");
        block.precision.diagonal().array() += 1e-8;
        llt.compute(block.precision);
        if (llt.info() != Eigen::Success) throw NumericalError("coefficient_conditional: precision not positive definite");
    }
    block.mean = llt.solve(xty);
    return block;
}

Eigen::MatrixXd prior_precision(const Basis& basis, double smoothing_variance, double intercept_variance) {
    const Eigen::VectorXd u = basis.constant_coefficients();
    const double uu = u.squaredNorm();
    return basis.penalty() / smoothing_variance + (u * u.transpose()) / (uu * uu * intercept_variance);
}

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
    return out;
}

double variance(const Eigen::VectorXd& v) {
    const double m = v.mean();
    return (v.array() - m).square().sum() / std::max<Eigen::Index>(1, v.size() - 1);
}

// Per-component Gaussian conditional of one error given the other:
// mean = mu_t + slope (given - mu_g), variance fixed per component.
struct ConditionalCoefficients {
    double target_mean = 0.0;
    double given_mean = 0.0;
    double slope = 0.0;
    double variance = 1.0;
};

class GibbsSampler {
public:
    GibbsSampler(const RegressionSample& sample, const Basis& second, const Basis* first, const SplinePriors& priors,
                 const McmcConfig& config, const FitOptions& options)
        : sample_(sample),
          second_(second),
          first_(first),
          priors_(priors),
          config_(config),
          options_(options),
          rng_(config.seed),
          n_(sample.size()),
          dim_(first ? 2 : 1) {}

    PosteriorDraws run() {
        initialise();
        PosteriorDraws out = allocate();
        long kept = 0;
        for (long it = 1; it <= config_.total; ++it) {
            iteration_ = it;
            sweep();
            if (options_.observer) {
                SweepView view{it, &sample_, &second_fit_, &first_fit_, &residuals_, &state_};
                options_.observer(view);
            }
            if (it > config_.burnin && (it - config_.burnin) % config_.thin == 0 && kept < config_.retained()) {
                store(out, kept++);
            }
        }
        if (kept > 0) out.mean_residuals /= static_cast<double>(kept);
        return out;
    }

private:
    [[nodiscard]] bool iv() const noexcept { return first_ != nullptr; }
    [[nodiscard]] Eigen::Index e2_col() const noexcept { return dim_ - 1; }

    void initialise() {
        second_design_ = second_.design(sample_.occupancy);
        const std::vector<double> unit(n_, 1.0);
        second_smoothing_ = 1.0;
        beta_ = coefficient_conditional(second_design_, sample_.flow, unit,
                                        prior_precision(second_, 1.0, priors_.intercept_variance))
                    .mean;
        second_fit_ = second_design_.multiply(beta_);

        residuals_.resize(static_cast<Eigen::Index>(n_), dim_);
        if (iv()) {
            first_design_ = first_->design(sample_.instrument);
            first_smoothing_ = 1.0;
            gamma_ = coefficient_conditional(first_design_, sample_.occupancy, unit,
                                             prior_precision(*first_, 1.0, priors_.intercept_variance))
                         .mean;
            first_fit_ = first_design_.multiply(gamma_);
        } else {
            first_fit_ = Eigen::Map<const Eigen::VectorXd>(sample_.occupancy.data(), static_cast<Eigen::Index>(n_));
        }
        recompute_residuals();

        std::vector<double> variances;
        for (Eigen::Index c = 0; c < dim_; ++c) variances.push_back(variance(residuals_.col(c)));
        prior_ = options_.mixture_prior ? *options_.mixture_prior
                                        : mixture::MixturePrior::data_scaled(variances, options_.truncation);
        if (options_.adjust_prior) options_.adjust_prior(prior_);
        if (prior_.dimension() != dim_) throw std::invalid_argument("fit: mixture prior dimension does not match the model");
        prior_.validate();

        const Eigen::RowVectorXd mean = residuals_.colwise().mean();
        const Eigen::MatrixXd centered = residuals_.rowwise() - mean;
        Eigen::MatrixXd cov = centered.transpose() * centered / std::max<double>(1.0, static_cast<double>(n_) - 1.0);
        cov.diagonal().array() += 1e-8 * (1.0 + cov.diagonal().array().abs());
        state_ = mixture::initial_state(n_, Eigen::VectorXd::Zero(dim_), cov, prior_.truncation, 1.0);

        grid_ = options_.grid;
        if (grid_.empty()) {
            const auto [lo, hi] = std::minmax_element(sample_.occupancy.begin(), sample_.occupancy.end());
            grid_ = linspace(*lo, *hi, options_.grid_points);
        }
        grid_design_ = second_.dense_design(grid_);
        if (iv()) {
            const auto [lo, hi] = std::minmax_element(sample_.instrument.begin(), sample_.instrument.end());
            first_grid_ = linspace(*lo, *hi, options_.grid_points);
            first_grid_design_ = first_->dense_design(first_grid_);
        }
        target_.resize(n_);
        weights_.resize(n_);
    }

    PosteriorDraws allocate() const {
        const auto r = static_cast<Eigen::Index>(config_.retained());
        PosteriorDraws out;
        out.estimator = iv() ? Estimator::npiv : Estimator::np;
        out.config = config_;
        out.second_basis = second_;
        if (iv()) out.first_basis = *first_;
        out.second_coefficients.resize(r, second_.dimension());
        out.first_coefficients.resize(iv() ? r : 0, iv() ? first_->dimension() : 0);
        out.mean_residuals = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), dim_);
        out.grid = grid_;
        out.second_curves.resize(r, static_cast<Eigen::Index>(grid_.size()));
        out.first_grid = first_grid_;
        out.first_curves.resize(iv() ? r : 0, static_cast<Eigen::Index>(first_grid_.size()));
        return out;
    }

    void recompute_residuals() {
        const Eigen::Map<const Eigen::VectorXd> q(sample_.flow.data(), static_cast<Eigen::Index>(n_));
        const Eigen::Map<const Eigen::VectorXd> o(sample_.occupancy.data(), static_cast<Eigen::Index>(n_));
        if (iv()) residuals_.col(0) = o - first_fit_;
        residuals_.col(e2_col()) = q - second_fit_;
    }

    // Conditional of error `target` given error `given` for every component.
    std::vector<ConditionalCoefficients> conditionals(Eigen::Index target, Eigen::Index given) const {
        std::vector<ConditionalCoefficients> out;
        out.reserve(state_.components.size());
        for (const auto& c : state_.components) {
            ConditionalCoefficients k;
            k.target_mean = c.mean(target);
            if (dim_ == 1) {
                k.variance = c.cov(0, 0);
            } else {
                k.given_mean = c.mean(given);
                k.slope = c.cov(target, given) / c.cov(given, given);
                k.variance = c.cov(target, target) - k.slope * c.cov(target, given);
            }
            out.push_back(k);
        }
        return out;
    }

    Eigen::VectorXd draw_block(const splines::BandedDesign& design, const Eigen::MatrixXd& prior, const char* block) {
        const GaussianBlock g = coefficient_conditional(design, target_, weights_, prior);
        Eigen::LLT<Eigen::MatrixXd> llt(g.precision);
        Eigen::VectorXd z(g.mean.size());
        for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng_.normal();
        Eigen::VectorXd draw = g.mean + llt.matrixU().solve(z);
        if (!draw.allFinite()) throw SamplerError("non-finite coefficient draw", iteration_, block);
        return draw;
    }

    void update_first_stage() {
        // o_i - E[e1 | e2, c_i] = h(z_i) + N(0, Var[e1 | e2, c_i])
        const auto cond = conditionals(0, 1);
        for (std::size_t i = 0; i < n_; ++i) {
            const auto& k = cond[static_cast<std::size_t>(state_.assignments[i])];
            const double e2 = residuals_(static_cast<Eigen::Index>(i), 1);
            target_[i] = sample_.occupancy[i] - (k.target_mean + k.slope * (e2 - k.given_mean));
            weights_[i] = 1.0 / k.variance;
        }
        gamma_ = draw_block(first_design_, prior_precision(*first_, first_smoothing_, priors_.intercept_variance), "first-stage");
        first_fit_ = first_design_.multiply(gamma_);
        recompute_residuals();
    }

    void update_second_stage() {
        // q_i - E[e2 | e1, c_i] = S(o_i) + N(0, Var[e2 | e1, c_i])
        const auto cond = conditionals(e2_col(), 0);
        for (std::size_t i = 0; i < n_; ++i) {
            const auto& k = cond[static_cast<std::size_t>(state_.assignments[i])];
            const double shift =
                iv() ? k.target_mean + k.slope * (residuals_(static_cast<Eigen::Index>(i), 0) - k.given_mean) : k.target_mean;
            target_[i] = sample_.flow[i] - shift;
            weights_[i] = 1.0 / k.variance;
        }
        beta_ = draw_block(second_design_, prior_precision(second_, second_smoothing_, priors_.intercept_variance),
                           "second-stage");
        second_fit_ = second_design_.multiply(beta_);
        recompute_residuals();
    }

    double draw_smoothing(const Basis& basis, const Eigen::VectorXd& coefficients) {
        const double quad = coefficients.dot(basis.penalty() * coefficients);
        const double shape = priors_.shape + 0.5 * basis.penalty_rank();
        const double scale = priors_.scale + 0.5 * quad;
        const double v = rng_.inverse_gamma(shape, scale);
        if (!std::isfinite(v) || v <= 0.0) throw SamplerError("invalid smoothing variance", iteration_, "smoothing");
        return v;
    }

    void recenter() {
        const Eigen::VectorXd m = state_.marginal_mean();
        for (auto& c : state_.components) c.mean -= m;
        beta_ += m(e2_col()) * second_.constant_coefficients();
        second_fit_.array() += m(e2_col());
        if (iv()) {
            gamma_ += m(0) * first_->constant_coefficients();
            first_fit_.array() += m(0);
        }
        recompute_residuals();
    }

    void sweep() {
        if (iv()) update_first_stage();
        update_second_stage();
        if (!residuals_.allFinite()) throw SamplerError("non-finite residuals", iteration_, "residuals");

        mixture::update_assignments(residuals_, state_, rng_);
        mixture::update_components(residuals_, state_, prior_, rng_);
        mixture::update_sticks_and_concentration(state_, prior_, rng_);

        second_smoothing_ = draw_smoothing(second_, beta_);
        if (iv()) first_smoothing_ = draw_smoothing(*first_, gamma_);

        recenter();
    }

    void store(PosteriorDraws& out, long index) const {
        const auto r = static_cast<Eigen::Index>(index);
        out.second_coefficients.row(r) = beta_.transpose();
        out.second_curves.row(r) = (grid_design_ * beta_).transpose();
        out.second_smoothing.push_back(second_smoothing_);
        if (iv()) {
            out.first_coefficients.row(r) = gamma_.transpose();
            out.first_curves.row(r) = (first_grid_design_ * gamma_).transpose();
            out.first_smoothing.push_back(first_smoothing_);
        }
        out.concentration.push_back(state_.concentration);
        out.occupied.push_back(state_.occupied());
        out.mixtures.push_back({state_.weights, state_.components});
        out.mean_residuals += residuals_;
    }

    const RegressionSample& sample_;
    const Basis& second_;
    const Basis* first_;
    SplinePriors priors_;
    McmcConfig config_;
    const FitOptions& options_;
    Rng rng_;
    std::size_t n_;
    Eigen::Index dim_;
    long iteration_ = 0;

    mixture::MixturePrior prior_;
    mixture::MixtureState state_;
    splines::BandedDesign second_design_;
    splines::BandedDesign first_design_;
    Eigen::VectorXd beta_;
    Eigen::VectorXd gamma_;
    Eigen::VectorXd second_fit_;
    Eigen::VectorXd first_fit_;
    Eigen::MatrixXd residuals_;
    double second_smoothing_ = 1.0;
    double first_smoothing_ = 1.0;
    std::vector<double> target_;
    std::vector<double> weights_;
    std::vector<double> grid_;
    std::vector<double> first_grid_;
    Eigen::MatrixXd grid_design_;
    Eigen::MatrixXd first_grid_design_;
};

void check_inputs(const RegressionSample& sample, const SplinePriors& priors, const McmcConfig& config, int total_dim) {
    sample.validate();
    priors.validate();
    config.validate();
    if (sample.size() < 10 * static_cast<std::size_t>(total_dim)) {
        log::warn("sample size " + std::to_string(sample.size()) + " is below 10x the total basis dimension (" +
                  std::to_string(total_dim) + ")");
    }
}

}  // namespace

PosteriorDraws fit_npiv(const RegressionSample& sample, const Basis& second, const Basis& first, const SplinePriors& priors,
                        const McmcConfig& config, const FitOptions& options) {
    check_inputs(sample, priors, config, second.dimension() + first.dimension());
    GibbsSampler sampler(sample, second, &first, priors, config, options);
    return sampler.run();
}

PosteriorDraws fit_np(const RegressionSample& sample, const Basis& second, const SplinePriors& priors,
                      const McmcConfig& config, const FitOptions& options) {
    check_inputs(sample, priors, config, second.dimension());
    GibbsSampler sampler(sample, second, nullptr, priors, config, options);
    return sampler.run();
}

}  // namespace bnpiv::npiv
