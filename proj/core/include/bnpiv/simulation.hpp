#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bnpiv/baselines.hpp"
#include "bnpiv/ingest.hpp"
#include "bnpiv/npiv.hpp"
#include "bnpiv/sample.hpp"

// Monte Carlo benchmark with a confounded quartic curve:
//
//   y = a4 x^4 + a3 x^3 + aw w^4 + e2,   x = bz z + bw w + e1,
//   z, w ~ U[0, 1],  e1, e2 ~ N(0, error_variance),
//
// where w is unobserved by every estimator.
namespace bnpiv::simulation {

inline const std::string k2slsQuadratic = "2sls-quadratic";
inline const std::string k2slsTrue = "2sls-true";
inline const std::string kBayesNp = "bayes-np";
inline const std::string kBayesNpiv = "bayes-npiv";

[[nodiscard]] std::vector<std::string> all_estimators();

struct SimConfig {
    std::size_t observations = 10000;
    std::uint64_t seed = 20240601;
    double error_variance = 0.5;
    double quartic = -40.0;
    double cubic = 40.0;
    double omitted = 30.0;
    double instrument_loading = 3.5;
    double confounder_loading = 2.1;
    std::vector<std::string> estimators = all_estimators();
    /// 5,000 / 1,000 / 4 when true, 40,000 / 10,000 / 40 otherwise.
    bool desk_profile = true;
    /// Overrides the profile when set (its seed is replaced per estimator).
    std::optional<npiv::McmcConfig> mcmc;
    int knots = 20;
    int grid_points = 200;
    double grid_tail = 0.01;  // grid spans the [tail, 1 - tail] quantiles of x

    void validate() const;
    [[nodiscard]] double structural(double x) const noexcept { return quartic * x * x * x * x + cubic * x * x * x; }
};

/// Values only the oracle may read.
struct Oracle {
    std::vector<double> confounder;  // w
};

struct McData {
    RegressionSample sample;  // flow = y, occupancy = x, instrument = z
    Oracle oracle;
};

[[nodiscard]] McData generate_mc_data(const SimConfig& cfg);

struct EstimatorResult {
    std::string name;
    std::vector<double> fitted;  // centered on the grid
    double rmse = 0.0;
    double runtime_seconds = 0.0;
    bool failed = false;
    std::string error;
    std::optional<baselines::PolyFit> parametric;
};

struct ComparisonResult {
    std::vector<double> grid;
    std::vector<double> truth;  // centered structural curve
    std::vector<EstimatorResult> estimators;

    [[nodiscard]] const EstimatorResult* find(const std::string& name) const;
};

/// Fits every requested estimator to one simulated sample; curves and truth are
/// mean-centered on the grid before computing RMSE. Estimator failures are
/// recorded, not thrown.
[[nodiscard]] ComparisonResult run_mc_comparison(const SimConfig& cfg);
[[nodiscard]] ComparisonResult run_mc_comparison(const SimConfig& cfg, const McData& data);

/// Centered root-mean-square difference of two curves on the same grid.
[[nodiscard]] double centered_rmse(const std::vector<double>& fitted, const std::vector<double>& truth);

struct OvbResult {
    double empirical_slope = 0.0;
    double slope_se = 0.0;
    double empirical_delta = 0.0;   // slope of w on o
    double predicted_plim = 0.0;    // beta + loading * alpha
    double difference = 0.0;        // empirical - predicted
};

/// q = o beta + w alpha + xi with o ~ N(0,1), w = loading o + e; OLS of q on o alone.
[[nodiscard]] OvbResult ovb_demo(std::size_t n, double beta, double alpha, double loading, std::uint64_t seed);

struct ReverseCausalityResult {
    double empirical_cov = 0.0;   // Cov(xi, o)
    double cov_se = 0.0;
    double analytic_cov = 0.0;    // gamma Var(xi) / (1 - beta gamma)
    double ols_slope = 0.0;
    double ols_slope_se = 0.0;
    double analytic_plim = 0.0;
    double bias = 0.0;            // ols_slope - beta
};

/// Simultaneous pair q = o beta + xi, o = q gamma + psi solved jointly.
/// Throws std::invalid_argument when |beta gamma| >= 1.
[[nodiscard]] ReverseCausalityResult reverse_causality_demo(std::size_t n, double beta, double gamma, std::uint64_t seed,
                                                            double var_xi = 1.0, double var_psi = 1.0);

/// Synthetic detector days with a triangular flow-occupancy relation and a
/// capacity drop, used for fixtures and CLI smoke runs.
struct FixtureConfig {
    std::string detector_id = "D1";
    Date start{std::chrono::year{2009}, std::chrono::June, std::chrono::day{1}};
    int days = 28;
    std::uint64_t seed = 7;
    double critical_occupancy = 17.0;
    double capacity = 500.0;
    double drop_fraction = 0.08;
};

[[nodiscard]] std::vector<ingest::DetectorRecord> synthetic_detector_data(const FixtureConfig& cfg);

}  // namespace bnpiv::simulation
