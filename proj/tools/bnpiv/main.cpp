#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bnpiv/commands.hpp"
#include "bnpiv/log.hpp"

namespace {

struct Flags {
    std::string config;
    std::string input;
    std::string out;
    std::string seed;
    std::string delta;
    std::string knots;
    std::string draws;
    std::string burnin;
    std::string thin;
    std::string estimators;
    std::string bins;
    std::vector<std::string> settings;
    bool desk_profile = false;
    bool appendix_a = false;
    bool quiet = false;
};

void add_common(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "key = value configuration file");
    app->add_option("--out", f.out, "output directory (default: out)");
    app->add_option("--seed", f.seed, "master random seed (u64)");
    app->add_option("--set", f.settings, "override one configuration key, KEY=VALUE (repeatable)");
    app->add_flag("--quiet", f.quiet, "only print warnings and errors");
}

void add_estimation(CLI::App* app, Flags& f) {
    app->add_option("--delta", f.delta, "simultaneous band level, in (0, 0.5] (default 0.05)");
    app->add_option("--knots", f.knots, "interior knots per spline (default 20)");
    app->add_option("--draws", f.draws, "total MCMC iterations");
    app->add_option("--burnin", f.burnin, "burn-in iterations");
    app->add_option("--thin", f.thin, "keep every k-th draw after burn-in");
    app->add_flag("--desk-profile", f.desk_profile, "short chain: 5000 draws, 1000 burn-in, thin 4");
}

void apply(bnpiv::cli::RunConfig& cfg, const Flags& f) {
    using bnpiv::cli::apply_setting;
    if (!f.config.empty()) bnpiv::cli::apply_config_file(cfg, f.config);
    for (const auto& kv : f.settings) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw bnpiv::cli::UsageError("--set expects KEY=VALUE, got '" + kv + "'");
        apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    const std::pair<const char*, const std::string*> flags[] = {
        {"input", &f.input},   {"out", &f.out},       {"seed", &f.seed},   {"delta", &f.delta},
        {"knots", &f.knots},   {"draws", &f.draws},   {"burnin", &f.burnin}, {"thin", &f.thin},
        {"estimators", &f.estimators}, {"bins", &f.bins},
    };
    for (const auto& [key, value] : flags)
        if (!value->empty()) apply_setting(cfg, key, *value);
    if (f.desk_profile) cfg.desk_profile = true;
    if (f.appendix_a) cfg.appendix_a = true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian nonparametric IV estimation of flow-occupancy relations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("bnpiv ") + BNPIV_VERSION_STRING);

    Flags f;
    auto* fit = app.add_subcommand("fit", "fit both Bayesian estimators to detector data");
    auto* sim = app.add_subcommand("simulate", "Monte Carlo comparison of the four estimators");
    auto* ftest = app.add_subcommand("ftest", "binned first-stage F tests of the lagged instrument");
    for (auto* sub : {fit, sim, ftest}) add_common(sub, f);
    for (auto* sub : {fit, ftest}) {
        sub->add_option("--input", f.input, "detector CSV");
        sub->add_option("--bins", f.bins, "instrument cut points, comma separated (default 15)");
    }
    for (auto* sub : {fit, sim}) add_estimation(sub, f);
    sim->add_option("--estimators", f.estimators, "comma list of 2sls-quadratic, 2sls-true, bayes-np, bayes-npiv");
    sim->add_flag("--appendix-a", f.appendix_a, "add omitted-variable and reverse-causality demonstrations");

    CLI11_PARSE(app, argc, argv);

    bnpiv::cli::RunConfig cfg;
    cfg.subcommand = app.get_subcommands().front()->get_name();
    bnpiv::log::set_level(f.quiet ? bnpiv::log::Level::warn : bnpiv::log::Level::info);
    try {
        apply(cfg, f);
    } catch (const bnpiv::cli::UsageError& e) {
        std::cerr << "usage: " << e.what() << '\n';
        return 2;
    }
    return bnpiv::cli::run(cfg);
}
