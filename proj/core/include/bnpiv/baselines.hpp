#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bnpiv/sample.hpp"

// Parametric comparators and instrument-relevance diagnostics.
namespace bnpiv::baselines {

/// Polynomial in the regressor: an optional intercept plus the listed powers.
struct PolySpec {
    std::vector<int> powers{1, 2};
    bool intercept = true;

    [[nodiscard]] static PolySpec full(int degree, bool intercept = true);
    [[nodiscard]] static PolySpec terms(std::vector<int> powers, bool intercept = true);

    [[nodiscard]] int degree() const;
    [[nodiscard]] std::size_t columns() const noexcept { return powers.size() + (intercept ? 1 : 0); }
    /// Powers must be distinct, in [1, 6].
    void validate() const;
    [[nodiscard]] Eigen::MatrixXd design(std::span<const double> x) const;
};

struct PolyFit {
    PolySpec spec;
    Eigen::VectorXd coefficients;     // intercept first (if any), then powers in spec order
    Eigen::VectorXd standard_errors;
    double residual_variance = 0.0;
    std::size_t observations = 0;
    // 2SLS only: first-stage F per endogenous term and the weak-instrument flag.
    std::vector<double> first_stage_f;
    bool weak_instrument = false;

    [[nodiscard]] double evaluate(double x) const;
    [[nodiscard]] std::vector<double> evaluate(std::span<const double> grid) const;
    /// Coefficient on x^power; throws if the power is not in the PolySpec.
    [[nodiscard]] double coefficient_of(int power) const;
    [[nodiscard]] double standard_error_of(int power) const;
};

/// Least-squares polynomial fit of flow on occupancy. Throws NumericalError
/// (with the condition number) on a rank-deficient design.
[[nodiscard]] PolyFit fit_pols(std::span<const double> response, std::span<const double> regressor, const PolySpec& spec);
[[nodiscard]] PolyFit fit_pols(const RegressionSample& sample, const PolySpec& spec);

/// Two-stage least squares: every term of the regressor is projected on
/// [1, z, ..., z^degree], then the response is regressed on the fitted terms.
/// Conventional (homoskedastic) standard errors.
[[nodiscard]] PolyFit fit_2sls(std::span<const double> response, std::span<const double> regressor,
                               std::span<const double> instrument, const PolySpec& spec, double critical_f = 10.0);
[[nodiscard]] PolyFit fit_2sls(const RegressionSample& sample, const PolySpec& spec, double critical_f = 10.0);

/// Simple regression y = a + b x with classical standard errors.
struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
    double r_squared = 0.0;
    std::size_t observations = 0;
};
[[nodiscard]] LinearFit ols_line(std::span<const double> y, std::span<const double> x);

struct InstrumentBin {
    std::string label;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool lower_inclusive = false;
    bool upper_inclusive = true;

    [[nodiscard]] bool contains(double z) const noexcept;
};

/// Full support plus the partition induced by sorted cut points:
/// (-inf, c1], (c1, c2], ..., (ck, inf).
[[nodiscard]] std::vector<InstrumentBin> bins_from_cuts(std::vector<double> cuts);
/// Full support, z <= 15, z > 15.
[[nodiscard]] std::vector<InstrumentBin> default_bins();

struct FTestRow {
    InstrumentBin bin;
    std::size_t observations = 0;
    double f_statistic = 0.0;
    double r_squared = 0.0;
    bool skipped = false;
    std::string note;
};

struct FTestReport {
    std::vector<FTestRow> rows;
    double critical_value = 10.0;

    [[nodiscard]] bool all_above_critical() const;
};

/// First-stage F test (occupancy on a linear function of the instrument) in each bin.
/// Bins with fewer than min_rows observations are skipped; throws if all are.
[[nodiscard]] FTestReport weak_instrument_ftest(const RegressionSample& sample, std::span<const InstrumentBin> bins,
                                                double critical_value = 10.0, std::size_t min_rows = 30);

}  // namespace bnpiv::baselines
