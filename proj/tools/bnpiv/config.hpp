#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bnpiv/analysis.hpp"
#include "bnpiv/ingest.hpp"
#include "bnpiv/npiv.hpp"

namespace bnpiv::cli {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string subcommand;
    std::filesystem::path input;
    std::filesystem::path out_dir = "out";

    ingest::CsvSchema schema;
    ingest::SiteConfig site;
    ingest::InstrumentOptions instrument;

    int knots = 20;
    int degree = 3;
    int penalty_order = 2;
    int truncation = 25;
    double concentration_shape = 2.0;
    double concentration_rate = 2.0;
    double precision_scale = 0.01;
    double iw_dof = 4.0;

    // fit uses the full profile, simulate the Monte Carlo profile; the desk
    // profile replaces either, and explicit values override any profile.
    bool desk_profile = false;
    std::optional<long> draws;
    std::optional<long> burnin;
    std::optional<long> thin;
    double delta = 0.05;
    std::uint64_t seed = 1;

    std::vector<double> bin_cuts{15.0};
    double critical_f = 10.0;
    analysis::CapacityOptions capacity;

    // simulate
    std::size_t observations = 10000;
    double error_variance = 0.5;
    std::vector<std::string> estimators;
    bool appendix_a = false;

    /// Checks ranges and that referenced paths exist. Throws UsageError.
    void validate() const;

    [[nodiscard]] bool mcmc_overridden() const noexcept { return draws || burnin || thin; }
    /// Profile for the subcommand with explicit overrides applied; seed and delta filled in.
    [[nodiscard]] npiv::McmcConfig mcmc() const;
};

/// Parses "key = value" lines ('#' starts a comment).
[[nodiscard]] std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

/// Applies one key. Throws UsageError for unknown keys or bad values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

[[nodiscard]] std::vector<std::string> split_list(const std::string& text);

/// Every key accepted in config files, for documentation and --help.
[[nodiscard]] const std::vector<std::string>& known_keys();

}  // namespace bnpiv::cli
