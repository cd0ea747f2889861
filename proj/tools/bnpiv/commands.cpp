#include "bnpiv/commands.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "bnpiv/analysis.hpp"
#include "bnpiv/baselines.hpp"
#include "bnpiv/error.hpp"
#include "bnpiv/log.hpp"
#include "bnpiv/random.hpp"
#include "bnpiv/simulation.hpp"
#include "bnpiv/summary.hpp"

namespace bnpiv::cli {
namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

ordered_json software() {
    return {{"name", "bnpiv"}, {"version", BNPIV_VERSION_STRING}};
}

ordered_json mcmc_json(const npiv::McmcConfig& m) {
    return {{"total", m.total}, {"burnin", m.burnin}, {"thin", m.thin}, {"retained", m.retained()}, {"delta", m.delta}};
}

ordered_json site_json(const ingest::SiteConfig& s) {
    ordered_json j{{"name", s.name},
                   {"detectors", s.detector_ids},
                   {"window_start", s.window_start},
                   {"window_end", s.window_end},
                   {"workdays_only", s.workdays_only}};
    if (s.date_range) {
        j["start_date"] = format_date(s.date_range->first);
        j["end_date"] = format_date(s.date_range->second);
    }
    return j;
}

ordered_json capacity_json(const analysis::CapacityReport& r) {
    return {{"critical_occupancy", r.critical_occupancy},
            {"capacity_veh_per_5min", r.capacity},
            {"capacity_veh_per_hour", r.capacity_hourly},
            {"post_drop_occupancy", r.post_drop_occupancy},
            {"post_drop_flow_veh_per_5min", r.post_drop_flow},
            {"drop_percent", r.drop_percent},
            {"drop_significance", analysis::to_string(r.significance)},
            {"backward_bend", r.backward_bend},
            {"boundary_capacity", r.boundary_capacity},
            {"grid_resolution", r.grid_resolution}};
}

ordered_json ftest_json(const baselines::FTestReport& report) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : report.rows) {
        ordered_json row{{"bin", r.bin.label}, {"observations", r.observations}, {"skipped", r.skipped}};
        if (!r.skipped) {
            row["f_statistic"] = r.f_statistic;
            row["r_squared"] = r.r_squared;
            row["above_critical"] = r.f_statistic > report.critical_value;
        }
        if (!r.note.empty()) row["note"] = r.note;
        rows.push_back(row);
    }
    return {{"critical_value", report.critical_value}, {"all_above_critical", report.all_above_critical()}, {"bins", rows}};
}

ordered_json poly_json(const baselines::PolyFit& fit) {
    ordered_json terms = ordered_json::array();
    Eigen::Index k = 0;
    if (fit.spec.intercept) {
        terms.push_back({{"power", 0}, {"estimate", fit.coefficients(0)}, {"std_error", fit.standard_errors(0)}});
        ++k;
    }
    for (int p : fit.spec.powers) {
        terms.push_back({{"power", p}, {"estimate", fit.coefficients(k)}, {"std_error", fit.standard_errors(k)}});
        ++k;
    }
    ordered_json j{{"terms", terms}, {"residual_variance", fit.residual_variance}, {"observations", fit.observations}};
    if (!fit.first_stage_f.empty()) {
        j["first_stage_f"] = fit.first_stage_f;
        j["weak_instrument"] = fit.weak_instrument;
    }
    return j;
}

void append_curve_rows(std::ostringstream& os, const std::string& name, const std::string& curve,
                       const summary::CurveBand& band) {
    for (std::size_t i = 0; i < band.size(); ++i) {
        os << name << ',' << curve << ',' << fmt(band.grid[i]) << ',' << fmt(band.mean[i]) << ','
           << fmt(band.pointwise_lower[i]) << ',' << fmt(band.pointwise_upper[i]) << ','
           << fmt(band.simultaneous_lower[i]) << ',' << fmt(band.simultaneous_upper[i]) << '\n';
    }
}

RegressionSample load_sample(const RunConfig& cfg, ordered_json& sample_info) {
    const auto csv = stage("ingest", [&] { return ingest::read_detector_csv(cfg.input, cfg.schema); });
    if (!csv.rejected.empty())
        log::warn("ingest: rejected " + std::to_string(csv.rejected.size()) + " row(s); first at line " +
                  std::to_string(csv.rejected.front().line) + " (" + csv.rejected.front().reason + ")");
    const auto built = stage("instrument", [&] { return ingest::build_lagged_instrument(csv.records, cfg.site, cfg.instrument); });
    sample_info = {{"records", csv.records.size()},
                   {"rejected_rows", csv.rejected.size()},
                   {"observations", built.sample.size()},
                   {"dropped_no_lag", built.dropped_no_lag},
                   {"dropped_missing", built.dropped_missing}};
    log::info("ingest: " + std::to_string(built.sample.size()) + " observations");
    return built.sample;
}

npiv::FitOptions fit_options(const RunConfig& cfg) {
    npiv::FitOptions opt;
    opt.truncation = cfg.truncation;
    opt.adjust_prior = [cfg](mixture::MixturePrior& p) {
        p.concentration_shape = cfg.concentration_shape;
        p.concentration_rate = cfg.concentration_rate;
        p.precision_scale = cfg.precision_scale;
        p.dof = cfg.iw_dof;
    };
    return opt;
}

int report_failure(const std::exception& e) {
    log::warn(std::string("error: ") + e.what());
    return 1;
}

}  // namespace

void OutputSet::add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

std::vector<fs::path> OutputSet::commit() {
    std::vector<fs::path> done;
    try {
        fs::create_directories(dir_);
        for (const auto& [name, content] : files_) {
            const fs::path target = dir_ / name;
            const fs::path tmp = dir_ / ("." + name + ".tmp");
            {
                std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
                out << content;
                out.flush();
                if (!out) {
                    std::error_code ec;
                    fs::remove(tmp, ec);
                    throw std::runtime_error("cannot write " + tmp.string());
                }
            }
            fs::rename(tmp, target);
            done.push_back(target);
        }
    } catch (const std::exception& e) {
        for (const auto& p : done) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        throw StageError("write", e.what());
    }
    return done;
}

int cmd_fit(const RunConfig& cfg) {
    const long warnings_before = log::warning_count();
    try {
        ordered_json sample_info;
        const RegressionSample sample = load_sample(cfg, sample_info);

        const npiv::McmcConfig mcmc = cfg.mcmc();
        npiv::SplinePriors priors;
        const auto opt = fit_options(cfg);

        const auto second = stage("basis", [&] {
            return npiv::default_basis(sample.occupancy, cfg.knots, cfg.degree, cfg.penalty_order);
        });
        const auto first = stage("basis", [&] {
            return npiv::default_basis(sample.instrument, cfg.knots, cfg.degree, cfg.penalty_order);
        });

        npiv::McmcConfig m_iv = mcmc;
        m_iv.seed = Rng::derive(cfg.seed, {10}).engine()();
        npiv::McmcConfig m_np = mcmc;
        m_np.seed = Rng::derive(cfg.seed, {11}).engine()();

        const auto iv = stage("fit bayes-npiv", [&] { return npiv::fit_npiv(sample, second, first, priors, m_iv, opt); });
        const auto np = stage("fit bayes-np", [&] { return npiv::fit_np(sample, second, priors, m_np, opt); });

        const auto iv_band = stage("summary", [&] { return summary::simultaneous_band(iv, cfg.delta); });
        const auto iv_first = stage("summary", [&] { return summary::first_stage_band(iv, cfg.delta); });
        const auto np_band = stage("summary", [&] { return summary::simultaneous_band(np, cfg.delta); });
        const auto density = stage("summary", [&] {
            return summary::error_density_grid(iv, summary::default_density_spec(iv));
        });

        const auto iv_cap = stage("analysis", [&] { return analysis::analyse(iv_band, sample.occupancy, cfg.capacity); });
        const auto np_cap = stage("analysis", [&] { return analysis::analyse(np_band, sample.occupancy, cfg.capacity); });

        const auto bins = stage("ftest", [&] { return baselines::bins_from_cuts(cfg.bin_cuts); });
        const auto ftest = stage("ftest", [&] { return baselines::weak_instrument_ftest(sample, bins, cfg.critical_f); });
        const auto pols = stage("pols", [&] { return baselines::fit_pols(sample, baselines::PolySpec::full(2)); });

        std::ostringstream curves;
        curves << "estimator,curve,grid,mean,pointwise_lower,pointwise_upper,simultaneous_lower,simultaneous_upper\n";
        append_curve_rows(curves, npiv::to_string(iv.estimator), "flow", iv_band);
        append_curve_rows(curves, npiv::to_string(iv.estimator), "first_stage", iv_first);
        append_curve_rows(curves, npiv::to_string(np.estimator), "flow", np_band);

        std::ostringstream dens;
        dens << "e1,e2,density\n";
        for (std::size_t i = 0; i < density.first_axis.size(); ++i)
            for (std::size_t j = 0; j < density.second_axis.size(); ++j)
                dens << fmt(density.first_axis[i]) << ',' << fmt(density.second_axis[j]) << ','
                     << fmt(density.density(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';

        auto estimator_json = [&](const npiv::PosteriorDraws& d, const summary::CurveBand& band,
                                  const analysis::CapacityReport& cap, const npiv::McmcConfig& m) {
            double occ = 0.0;
            for (int k : d.occupied) occ += k;
            return ordered_json{{"seed", m.seed},
                                {"draws", d.draw_count()},
                                {"band_inflation", band.inflation},
                                {"mean_occupied_components", d.occupied.empty() ? 0.0 : occ / static_cast<double>(d.occupied.size())},
                                {"capacity", capacity_json(cap)}};
        };

        ordered_json report{{"schema_version", kReportSchemaVersion},
                            {"command", "fit"},
                            {"software", software()},
                            {"seed", cfg.seed},
                            {"mcmc", mcmc_json(mcmc)},
                            {"site", site_json(cfg.site)},
                            {"splines", {{"interior_knots", cfg.knots}, {"degree", cfg.degree}, {"penalty_order", cfg.penalty_order}}},
                            {"sample", sample_info},
                            {"estimators",
                             {{npiv::to_string(iv.estimator), estimator_json(iv, iv_band, iv_cap, m_iv)},
                              {npiv::to_string(np.estimator), estimator_json(np, np_band, np_cap, m_np)}}},
                            {"error_density", {{"grid_mass", density.mass()}, {"residual_coverage", density.residual_coverage}}},
                            {"first_stage_f", ftest_json(ftest)},
                            {"pols_quadratic", poly_json(pols)},
                            {"warnings", log::warning_count() - warnings_before}};

        OutputSet out(cfg.out_dir);
        out.add("curves.csv", curves.str());
        out.add("error_density.csv", dens.str());
        out.add("report.json", report.dump(2) + "\n");
        out.commit();
        log::info("fit: wrote outputs to " + cfg.out_dir.string());
        return 0;
    } catch (const std::exception& e) {
        return report_failure(e);
    }
}

int cmd_simulate(const RunConfig& cfg) {
    try {
        simulation::SimConfig sim;
        sim.observations = cfg.observations;
        sim.seed = cfg.seed;
        sim.error_variance = cfg.error_variance;
        sim.knots = cfg.knots;
        if (!cfg.estimators.empty()) sim.estimators = cfg.estimators;
        sim.desk_profile = cfg.desk_profile;
        if (cfg.mcmc_overridden()) sim.mcmc = cfg.mcmc();
        stage("simulate", [&] { sim.validate(); });

        const auto result = stage("simulate", [&] { return simulation::run_mc_comparison(sim); });

        std::ostringstream cmp;
        cmp << "estimator,grid,fitted,truth\n";
        std::ostringstream summary_csv;
        summary_csv << "estimator,rmse,runtime_seconds,status\n";
        ordered_json rows = ordered_json::array();
        bool any_failed = false;
        for (const auto& est : result.estimators) {
            any_failed = any_failed || est.failed;
            if (!est.failed)
                for (std::size_t i = 0; i < result.grid.size(); ++i)
                    cmp << est.name << ',' << fmt(result.grid[i]) << ',' << fmt(est.fitted[i]) << ',' << fmt(result.truth[i]) << '\n';
            summary_csv << est.name << ',' << (est.failed ? std::string("nan") : fmt(est.rmse)) << ','
                        << fmt(est.runtime_seconds) << ',' << (est.failed ? "failed" : "ok") << '\n';
            ordered_json row{{"estimator", est.name}, {"runtime_seconds", est.runtime_seconds}, {"failed", est.failed}};
            if (est.failed) row["error"] = est.error;
            else row["rmse"] = est.rmse;
            if (est.parametric) row["coefficients"] = poly_json(*est.parametric);
            rows.push_back(row);
        }

        ordered_json report{{"schema_version", kReportSchemaVersion},
                            {"command", "simulate"},
                            {"software", software()},
                            {"seed", cfg.seed},
                            {"observations", sim.observations},
                            {"error_variance", sim.error_variance},
                            {"mcmc_profile", sim.mcmc ? "custom" : (sim.desk_profile ? "desk" : "monte_carlo")},
                            {"summary", rows}};
        if (sim.mcmc) report["mcmc"] = mcmc_json(*sim.mcmc);

        if (cfg.appendix_a) {
            ordered_json ovb = ordered_json::array();
            const struct { double beta, alpha, loading; } cases[] = {{3.0, 2.0, 0.8}, {1.0, 1.5, -0.5}, {-2.0, 1.0, 0.6}};
            std::uint64_t k = 0;
            for (const auto& c : cases) {
                const auto r = stage("appendix-a", [&] {
                    return simulation::ovb_demo(100000, c.beta, c.alpha, c.loading, Rng::derive(cfg.seed, {20, k}).engine()());
                });
                ++k;
                ovb.push_back({{"beta", c.beta},
                               {"alpha", c.alpha},
                               {"loading", c.loading},
                               {"empirical_slope", r.empirical_slope},
                               {"slope_se", r.slope_se},
                               {"empirical_delta", r.empirical_delta},
                               {"predicted_plim", r.predicted_plim},
                               {"difference", r.difference}});
            }
            const auto rc = stage("appendix-a", [&] {
                return simulation::reverse_causality_demo(100000, 0.5, 0.4, Rng::derive(cfg.seed, {21}).engine()());
            });
            report["appendix_a"] = {{"omitted_variable_bias", ovb},
                                    {"reverse_causality",
                                     {{"beta", 0.5},
                                      {"gamma", 0.4},
                                      {"empirical_cov", rc.empirical_cov},
                                      {"cov_se", rc.cov_se},
                                      {"analytic_cov", rc.analytic_cov},
                                      {"ols_slope", rc.ols_slope},
                                      {"ols_slope_se", rc.ols_slope_se},
                                      {"analytic_plim", rc.analytic_plim},
                                      {"bias", rc.bias}}}};
        }

        OutputSet out(cfg.out_dir);
        out.add("comparison.csv", cmp.str());
        out.add("summary.csv", summary_csv.str());
        out.add("report.json", report.dump(2) + "\n");
        out.commit();
        if (any_failed) {
            log::warn("simulate: at least one estimator failed");
            return 1;
        }
        return 0;
    } catch (const std::exception& e) {
        return report_failure(e);
    }
}

int cmd_ftest(const RunConfig& cfg) {
    try {
        ordered_json sample_info;
        const RegressionSample sample = load_sample(cfg, sample_info);
        const auto bins = stage("ftest", [&] { return baselines::bins_from_cuts(cfg.bin_cuts); });
        const auto ftest = stage("ftest", [&] { return baselines::weak_instrument_ftest(sample, bins, cfg.critical_f); });

        std::ostringstream csv;
        csv << "bin,observations,f_statistic,r_squared,skipped\n";
        for (const auto& r : ftest.rows)
            csv << '"' << r.bin.label << "\"," << r.observations << ',' << (r.skipped ? "nan" : fmt(r.f_statistic)) << ','
                << (r.skipped ? "nan" : fmt(r.r_squared)) << ',' << (r.skipped ? "true" : "false") << '\n';

        ordered_json report{{"schema_version", kReportSchemaVersion},
                            {"command", "ftest"},
                            {"software", software()},
                            {"seed", cfg.seed},
                            {"site", site_json(cfg.site)},
                            {"sample", sample_info},
                            {"first_stage_f", ftest_json(ftest)}};
        OutputSet out(cfg.out_dir);
        out.add("ftest.csv", csv.str());
        out.add("report.json", report.dump(2) + "\n");
        out.commit();
        return 0;
    } catch (const std::exception& e) {
        return report_failure(e);
    }
}

int run(const RunConfig& cfg) {
    try {
        cfg.validate();
    } catch (const UsageError& e) {
        log::warn(std::string("usage: ") + e.what());
        return 2;
    }
    if (cfg.subcommand == "fit") return cmd_fit(cfg);
    if (cfg.subcommand == "simulate") return cmd_simulate(cfg);
    if (cfg.subcommand == "ftest") return cmd_ftest(cfg);
    log::warn("usage: unknown subcommand '" + cfg.subcommand + "'");
    return 2;
}

}  // namespace bnpiv::cli
