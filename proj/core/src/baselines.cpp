#include "bnpiv/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bnpiv/error.hpp"
#include "bnpiv/log.hpp"

namespace bnpiv::baselines {
namespace {

constexpr int kMaxDegree = 6;

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

double condition_number(const Eigen::MatrixXd& x) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
    const auto& s = svd.singularValues();
    return s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

Eigen::ColPivHouseholderQR<Eigen::MatrixXd> checked_qr(const Eigen::MatrixXd& x, const char* what) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols()) {
        std::ostringstream msg;
        msg << what << ": rank-deficient design (condition number " << condition_number(x) << ")";
        throw NumericalError(msg.str());
    }
    return qr;
}

// Residual sum of squares of y regressed on x.
double rss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const auto qr = checked_qr(x, "first stage");
    const Eigen::VectorXd b = qr.solve(y);
    return (y - x * b).squaredNorm();
}

std::string format_bound(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

}  // namespace

PolySpec PolySpec::full(int degree, bool intercept) {
    PolySpec s;
    s.powers.clear();
    for (int p = 1; p <= degree; ++p) s.powers.push_back(p);
    s.intercept = intercept;
    s.validate();
    return s;
}

PolySpec PolySpec::terms(std::vector<int> powers, bool intercept) {
    PolySpec s;
    s.powers = std::move(powers);
    s.intercept = intercept;
    s.validate();
    return s;
}

int PolySpec::degree() const { return powers.empty() ? 0 : *std::max_element(powers.begin(), powers.end()); }

void PolySpec::validate() const {
    if (powers.empty() && !intercept) throw std::invalid_argument("PolySpec: no terms");
    std::set<int> seen;
    for (int p : powers) {
        if (p < 1 || p > kMaxDegree) throw std::invalid_argument("PolySpec: powers must be in [1, 6]");
        if (!seen.insert(p).second) throw std::invalid_argument("PolySpec: repeated power");
    }
}

Eigen::MatrixXd PolySpec::design(std::span<const double> x) const {
    Eigen::MatrixXd d(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(columns()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        Eigen::Index c = 0;
        const auto r = static_cast<Eigen::Index>(i);
        if (intercept) d(r, c++) = 1.0;
        for (int p : powers) d(r, c++) = std::pow(x[i], p);
    }
    return d;
}

double PolyFit::evaluate(double x) const {
    double y = 0.0;
    Eigen::Index c = 0;
    if (spec.intercept) y += coefficients(c++);
    for (int p : spec.powers) y += coefficients(c++) * std::pow(x, p);
    return y;
}

std::vector<double> PolyFit::evaluate(std::span<const double> grid) const {
    std::vector<double> out(grid.size());
    std::transform(grid.begin(), grid.end(), out.begin(), [this](double x) { return evaluate(x); });
    return out;
}

namespace {
Eigen::Index column_of(const PolySpec& spec, int power) {
    const auto it = std::find(spec.powers.begin(), spec.powers.end(), power);
    if (it == spec.powers.end()) throw std::invalid_argument("PolyFit: power not in PolySpec");
    return static_cast<Eigen::Index>(it - spec.powers.begin()) + (spec.intercept ? 1 : 0);
}
}  // namespace

double PolyFit::coefficient_of(int power) const { return coefficients(column_of(spec, power)); }
double PolyFit::standard_error_of(int power) const { return standard_errors(column_of(spec, power)); }

PolyFit fit_pols(std::span<const double> response, std::span<const double> regressor, const PolySpec& spec) {
    spec.validate();
    if (response.size() != regressor.size()) throw std::invalid_argument("fit_pols: size mismatch");
    const std::size_t n = response.size();
    if (n <= spec.columns()) throw std::invalid_argument("fit_pols: need more observations than coefficients");

    const Eigen::MatrixXd x = spec.design(regressor);
    const auto y = as_vector(response);
    const auto qr = checked_qr(x, "fit_pols");

    PolyFit fit;
    fit.spec = spec;
    fit.observations = n;
    fit.coefficients = qr.solve(Eigen::VectorXd(y));
    const Eigen::VectorXd resid = y - x * fit.coefficients;
    fit.residual_variance = resid.squaredNorm() / static_cast<double>(n - spec.columns());
    const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
    fit.standard_errors = (fit.residual_variance * xtx_inv.diagonal()).cwiseSqrt();
    return fit;
}

PolyFit fit_pols(const RegressionSample& sample, const PolySpec& spec) {
    return fit_pols(sample.flow, sample.occupancy, spec);
}

PolyFit fit_2sls(std::span<const double> response, std::span<const double> regressor, std::span<const double> instrument,
                 const PolySpec& spec, double critical_f) {
    spec.validate();
    const std::size_t n = response.size();
    if (regressor.size() != n || instrument.size() != n) throw std::invalid_argument("fit_2sls: size mismatch");
    const PolySpec inst_spec = PolySpec::full(spec.degree(), true);
    if (n <= 2 * (static_cast<std::size_t>(spec.degree()) + 1))
        throw std::invalid_argument("fit_2sls: need more than 2 (degree + 1) observations");
    if (inst_spec.columns() < spec.columns()) throw std::invalid_argument("fit_2sls: under-identified model");

    const Eigen::MatrixXd x = spec.design(regressor);
    const Eigen::MatrixXd z = inst_spec.design(instrument);
    const Eigen::VectorXd y = as_vector(response);

    // Stage 1: project every regressor column on the instrument space.
    const auto zqr = checked_qr(z, "fit_2sls first stage");
    const Eigen::MatrixXd x_hat = z * zqr.solve(x);

    // Stage 2.
    const auto xqr = checked_qr(x_hat, "fit_2sls second stage");
    PolyFit fit;
    fit.spec = spec;
    fit.observations = n;
    fit.coefficients = xqr.solve(y);
    const Eigen::VectorXd resid = y - x * fit.coefficients;
    fit.residual_variance = resid.squaredNorm() / static_cast<double>(n - spec.columns());
    const Eigen::MatrixXd xtx_inv = (x_hat.transpose() * x_hat).inverse();
    fit.standard_errors = (fit.residual_variance * xtx_inv.diagonal()).cwiseSqrt();

    // Relevance of the excluded instruments for each endogenous term.
    const Eigen::MatrixXd restricted = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
    const double q = static_cast<double>(z.cols() - 1);
    const double dof = static_cast<double>(n) - static_cast<double>(z.cols());
    for (Eigen::Index c = spec.intercept ? 1 : 0; c < x.cols(); ++c) {
        const Eigen::VectorXd col = x.col(c);
        const double rss_u = rss(z, col);
        const double rss_r = rss(restricted, col);
        const double f = rss_u > 0.0 ? ((rss_r - rss_u) / q) / (rss_u / dof) : std::numeric_limits<double>::infinity();
        fit.first_stage_f.push_back(f);
        if (f < critical_f) fit.weak_instrument = true;
    }
    if (fit.weak_instrument) log::warn("fit_2sls: WEAK INSTRUMENT - first-stage F below the critical value");
    return fit;
}

PolyFit fit_2sls(const RegressionSample& sample, const PolySpec& spec, double critical_f) {
    return fit_2sls(sample.flow, sample.occupancy, sample.instrument, spec, critical_f);
}

LinearFit ols_line(std::span<const double> y, std::span<const double> x) {
    if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("ols_line: need >= 3 aligned observations");
    const auto n = static_cast<double>(x.size());
    const auto xv = as_vector(x);
    const auto yv = as_vector(y);
    const double mx = xv.mean();
    const double my = yv.mean();
    const double sxx = (xv.array() - mx).square().sum();
    const double sxy = ((xv.array() - mx) * (yv.array() - my)).sum();
    const double syy = (yv.array() - my).square().sum();
    if (!(sxx > 0.0)) throw NumericalError("ols_line: regressor has no variation");
    LinearFit fit;
    fit.observations = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double sse = std::max(0.0, syy - fit.slope * sxy);
    fit.slope_se = std::sqrt(sse / (n - 2.0) / sxx);
    fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return fit;
}

bool InstrumentBin::contains(double z) const noexcept {
    const bool above = lower_inclusive ? z >= lower : z > lower;
    const bool below = upper_inclusive ? z <= upper : z < upper;
    return above && below;
}

std::vector<InstrumentBin> bins_from_cuts(std::vector<double> cuts) {
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<InstrumentBin> bins;
    bins.push_back({"full", -inf, inf, true, true});
    if (cuts.empty()) return bins;
    bins.push_back({"IV <= " + format_bound(cuts.front()), -inf, cuts.front(), true, true});
    for (std::size_t k = 1; k < cuts.size(); ++k) {
        bins.push_back({format_bound(cuts[k - 1]) + " < IV <= " + format_bound(cuts[k]), cuts[k - 1], cuts[k], false, true});
    }
    bins.push_back({"IV > " + format_bound(cuts.back()), cuts.back(), inf, false, true});
    return bins;
}

std::vector<InstrumentBin> default_bins() { return bins_from_cuts({15.0}); }

bool FTestReport::all_above_critical() const {
    return std::all_of(rows.begin(), rows.end(),
                       [this](const FTestRow& r) { return r.skipped || r.f_statistic > critical_value; });
}

FTestReport weak_instrument_ftest(const RegressionSample& sample, std::span<const InstrumentBin> bins, double critical_value,
                                  std::size_t min_rows) {
    sample.validate();
    if (bins.empty()) throw std::invalid_argument("weak_instrument_ftest: no bins");
    FTestReport report;
    report.critical_value = critical_value;
    std::vector<double> o;
    std::vector<double> z;
    for (const auto& bin : bins) {
        o.clear();
        z.clear();
        for (std::size_t i = 0; i < sample.size(); ++i) {
            if (bin.contains(sample.instrument[i])) {
                o.push_back(sample.occupancy[i]);
                z.push_back(sample.instrument[i]);
            }
        }
        FTestRow row;
        row.bin = bin;
        row.observations = o.size();
        if (o.size() < std::max<std::size_t>(min_rows, 3)) {
            row.skipped = true;
            row.note = "fewer than " + std::to_string(min_rows) + " rows";
        } else {
            try {
                const LinearFit fit = ols_line(o, z);
                const double t = fit.slope_se > 0.0 ? fit.slope / fit.slope_se : std::numeric_limits<double>::infinity();
                row.f_statistic = t * t;
                row.r_squared = fit.r_squared;
            } catch (const NumericalError& e) {
                row.skipped = true;
                row.note = e.what();
            }
        }
        report.rows.push_back(std::move(row));
    }
    if (std::all_of(report.rows.begin(), report.rows.end(), [](const FTestRow& r) { return r.skipped; }))
        throw EmptySampleError("weak_instrument_ftest: every bin was skipped");
    return report;
}

}  // namespace bnpiv::baselines
