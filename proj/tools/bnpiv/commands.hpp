#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bnpiv/config.hpp"

namespace bnpiv::cli {

inline constexpr int kReportSchemaVersion = 1;

/// A pipeline stage failed; carries the stage name for the error message.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Collects output files and commits them together. Each file is written to a
/// temporary sibling and renamed into place; on failure every file committed
/// so far is removed.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content);
    /// Returns the committed paths.
    std::vector<std::filesystem::path> commit();

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

/// Each returns the process exit code (0 on success) and logs errors.
int cmd_fit(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);
int cmd_ftest(const RunConfig& cfg);

/// Dispatches on cfg.subcommand after validation.
int run(const RunConfig& cfg);

}  // namespace bnpiv::cli
