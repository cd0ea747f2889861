#include "bnpiv/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bnpiv/log.hpp"
#include "bnpiv/random.hpp"

namespace bnpiv::simulation {

std::vector<std::string> all_estimators() { return {k2slsQuadratic, k2slsTrue, kBayesNp, kBayesNpiv}; }

void SimConfig::validate() const {
    if (observations < 100) throw std::invalid_argument("SimConfig: need at least 100 observations");
    if (!(error_variance > 0.0)) throw std::invalid_argument("SimConfig: error variance must be positive");
    if (!(grid_tail >= 0.0 && grid_tail < 0.5)) throw std::invalid_argument("SimConfig: grid tail must be in [0, 0.5)");
    if (grid_points < 2) throw std::invalid_argument("SimConfig: need at least 2 grid points");
    const auto known = all_estimators();
    for (const auto& e : estimators) {
        if (std::find(known.begin(), known.end(), e) == known.end())
            throw std::invalid_argument("SimConfig: unknown estimator '" + e + "'");
    }
}

McData generate_mc_data(const SimConfig& cfg) {
    cfg.validate();
    Rng rng = Rng::derive(cfg.seed, {0});
    const double sd = std::sqrt(cfg.error_variance);
    McData data;
    auto& s = data.sample;
    const std::size_t n = cfg.observations;
    s.flow.resize(n);
    s.occupancy.resize(n);
    s.instrument.resize(n);
    data.oracle.confounder.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = rng.uniform();
        const double w = rng.uniform();
        const double e1 = sd * rng.normal();
        const double e2 = sd * rng.normal();
        const double x = cfg.instrument_loading * z + cfg.confounder_loading * w + e1;
        s.instrument[i] = z;
        s.occupancy[i] = x;
        s.flow[i] = cfg.structural(x) + cfg.omitted * w * w * w * w + e2;
        data.oracle.confounder[i] = w;
    }
    return data;
}

const EstimatorResult* ComparisonResult::find(const std::string& name) const {
    const auto it = std::find_if(estimators.begin(), estimators.end(), [&](const EstimatorResult& r) { return r.name == name; });
    return it == estimators.end() ? nullptr : &*it;
}

namespace {

std::vector<double> centered(std::vector<double> v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    for (double& x : v) x -= m;
    return v;
}

double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

double centered_rmse(const std::vector<double>& fitted, const std::vector<double>& truth) {
    if (fitted.size() != truth.size() || fitted.empty()) throw std::invalid_argument("centered_rmse: size mismatch");
    const auto a = centered(fitted);
    const auto b = centered(truth);
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(ss / static_cast<double>(a.size()));
}

ComparisonResult run_mc_comparison(const SimConfig& cfg) { return run_mc_comparison(cfg, generate_mc_data(cfg)); }

ComparisonResult run_mc_comparison(const SimConfig& cfg, const McData& data) {
    cfg.validate();
    const auto& s = data.sample;
    ComparisonResult out;
    const double lo = quantile(s.occupancy, cfg.grid_tail);
    const double hi = quantile(s.occupancy, 1.0 - cfg.grid_tail);
    out.grid.resize(static_cast<std::size_t>(cfg.grid_points));
    for (int k = 0; k < cfg.grid_points; ++k)
        out.grid[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (cfg.grid_points - 1);
    std::vector<double> truth(out.grid.size());
    std::transform(out.grid.begin(), out.grid.end(), truth.begin(), [&cfg](double x) { return cfg.structural(x); });
    out.truth = centered(truth);

    const auto known = all_estimators();
    for (const auto& name : cfg.estimators) {
        EstimatorResult r;
        r.name = name;
        const auto estimator_index = static_cast<std::uint64_t>(std::find(known.begin(), known.end(), name) - known.begin());
        const auto start = std::chrono::steady_clock::now();
        try {
            std::vector<double> curve;
            if (name == k2slsQuadratic || name == k2slsTrue) {
                const auto spec = name == k2slsTrue ? baselines::PolySpec::terms({3, 4}) : baselines::PolySpec::full(2);
                r.parametric = baselines::fit_2sls(s, spec);
                curve = r.parametric->evaluate(out.grid);
            } else {
                npiv::McmcConfig mcmc = cfg.mcmc.value_or(cfg.desk_profile ? npiv::McmcConfig::desk() : npiv::McmcConfig::monte_carlo());
                mcmc.seed = Rng::derive(cfg.seed, {1, estimator_index}).engine()();
                npiv::FitOptions options;
                options.grid = out.grid;
                const npiv::Basis second = npiv::default_basis(s.occupancy, cfg.knots);
                npiv::PosteriorDraws draws;
                if (name == kBayesNpiv) {
                    const npiv::Basis first = npiv::default_basis(s.instrument, cfg.knots);
                    draws = npiv::fit_npiv(s, second, first, {}, mcmc, options);
                } else {
                    draws = npiv::fit_np(s, second, {}, mcmc, options);
                }
                const Eigen::VectorXd mean = draws.second_curves.colwise().mean().transpose();
                curve.assign(mean.data(), mean.data() + mean.size());
            }
            r.fitted = centered(curve);
            r.rmse = centered_rmse(r.fitted, out.truth);
        } catch (const std::exception& e) {
            r.failed = true;
            r.error = e.what();
            log::warn("estimator " + name + " failed: " + r.error);
        }
        r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.estimators.push_back(std::move(r));
    }
    return out;
}

OvbResult ovb_demo(std::size_t n, double beta, double alpha, double loading, std::uint64_t seed) {
    if (n < 10000) throw std::invalid_argument("ovb_demo: need at least 10^4 observations");
    Rng rng = Rng::derive(seed, {2});
    std::vector<double> o(n), w(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
        o[i] = rng.normal();
        w[i] = loading * o[i] + rng.normal();
        q[i] = o[i] * beta + w[i] * alpha + rng.normal();
    }
    const auto fit = baselines::ols_line(q, o);
    OvbResult r;
    r.empirical_slope = fit.slope;
    r.slope_se = fit.slope_se;
    r.empirical_delta = baselines::ols_line(w, o).slope;
    r.predicted_plim = beta + loading * alpha;
    r.difference = r.empirical_slope - r.predicted_plim;
    return r;
}

ReverseCausalityResult reverse_causality_demo(std::size_t n, double beta, double gamma, std::uint64_t seed, double var_xi,
                                              double var_psi) {
    if (!(std::abs(beta * gamma) < 1.0)) throw std::invalid_argument("reverse_causality_demo: unstable system (|beta gamma| >= 1)");
    if (n < 3) throw std::invalid_argument("reverse_causality_demo: need at least 3 observations");
    Rng rng = Rng::derive(seed, {3});
    const double det = 1.0 - beta * gamma;
    std::vector<double> xi(n), o(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
        xi[i] = std::sqrt(var_xi) * rng.normal();
        const double psi = std::sqrt(var_psi) * rng.normal();
        o[i] = (gamma * xi[i] + psi) / det;
        q[i] = (xi[i] + beta * psi) / det;
    }
    const double nd = static_cast<double>(n);
    const double mx = std::accumulate(xi.begin(), xi.end(), 0.0) / nd;
    const double mo = std::accumulate(o.begin(), o.end(), 0.0) / nd;
    double cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) cov += (xi[i] - mx) * (o[i] - mo);
    cov /= nd - 1.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (xi[i] - mx) * (o[i] - mo) - cov;
        ss += d * d;
    }
    ReverseCausalityResult r;
    r.empirical_cov = cov;
    r.cov_se = std::sqrt(ss / (nd - 1.0) / nd);
    r.analytic_cov = gamma * var_xi / det;
    const auto fit = baselines::ols_line(q, o);
    r.ols_slope = fit.slope;
    r.ols_slope_se = fit.slope_se;
    r.analytic_plim = (gamma * var_xi + beta * var_psi) / (gamma * gamma * var_xi + var_psi);
    r.bias = r.ols_slope - beta;
    return r;
}

std::vector<ingest::DetectorRecord> synthetic_detector_data(const FixtureConfig& cfg) {
    if (cfg.days < 2) throw std::invalid_argument("synthetic_detector_data: need at least two days");
    Rng rng = Rng::derive(cfg.seed, {4});
    const double free_speed = cfg.capacity / cfg.critical_occupancy;
    const double discharge = cfg.capacity * (1.0 - cfg.drop_fraction);
    std::vector<ingest::DetectorRecord> out;
    std::chrono::sys_days day{cfg.start};
    for (int d = 0; d < cfg.days; ++d, day += std::chrono::days{1}) {
        const std::chrono::weekday wd{day};
        const bool weekend = wd == std::chrono::Saturday || wd == std::chrono::Sunday;
        const double day_level = (weekend ? 0.6 : 1.0) * (1.0 + 0.08 * rng.normal());
        double ar = 0.0;
        for (int slot = 0; slot < kSlotsPerDay; ++slot) {
            ar = 0.85 * ar + 1.6 * rng.normal();
            const double peak = std::exp(-std::pow((slot - 204.0) / 28.0, 2.0));
            const double base = 3.0 + 6.0 * std::exp(-std::pow((slot - 96.0) / 30.0, 2.0)) + 30.0 * peak;
            const double occ = std::clamp(base * day_level + ar, 0.5, 75.0);
            double flow = occ <= cfg.critical_occupancy
                              ? free_speed * occ
                              : discharge - 6.0 * (occ - cfg.critical_occupancy);
            flow = std::max(0.0, flow + 12.0 * rng.normal());
            out.push_back({cfg.detector_id, Date{day}, slot, std::round(flow), std::round(occ * 100.0) / 100.0});
        }
    }
    return out;
}

}  // namespace bnpiv::simulation
