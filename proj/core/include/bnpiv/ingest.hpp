#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bnpiv/sample.hpp"

namespace bnpiv::ingest {

/// One 5-minute detector observation.
struct DetectorRecord {
    std::string detector_id;
    Date day{};
    int interval = 0;      // slot within the day, 0..287
    double flow = 0.0;     // vehicles per 5 minutes
    double occupancy = 0.0;  // percent
};

/// Column mapping for detector CSV files. When time_column is set the
/// timestamp column holds only the date and the time of day comes from
/// time_column; otherwise timestamp holds "YYYY-MM-DD HH:MM".
struct CsvSchema {
    std::string detector_column = "detector_id";
    std::string timestamp_column = "timestamp";
    std::string time_column;
    std::string flow_column = "flow_veh_per_5min";
    std::string occupancy_column = "occupancy_pct";
};

struct RowRejection {
    std::size_t line = 0;  // 1-based, header is line 1
    std::string reason;
};

struct CsvResult {
    std::vector<DetectorRecord> records;
    std::vector<RowRejection> rejected;
};

struct SiteConfig {
    std::string name = "site";
    std::vector<std::string> detector_ids;  // empty selects every detector
    int window_start = 144;                 // inclusive slot, 12:00
    int window_end = kSlotsPerDay - 1;      // inclusive slot, 23:55
    bool workdays_only = true;
    std::optional<std::pair<Date, Date>> date_range;  // inclusive; unset = all dates
    std::vector<Date> holidays;

    void validate() const;
    [[nodiscard]] bool is_workday(const Date& d) const;
    [[nodiscard]] bool selects(const std::string& detector_id) const;
};

struct InstrumentOptions {
    int half_window = 15;        // slots either side of i
    int lag_days = 1;            // workdays back
    double max_missing = 0.20;   // fraction of window slots allowed missing
};

struct InstrumentResult {
    RegressionSample sample;
    std::size_t dropped_no_lag = 0;       // previous workday entirely absent
    std::size_t dropped_missing = 0;      // too many missing slots in the window
};

/// Parse "HH:MM" into a 5-minute slot (half-open bins anchored at midnight).
[[nodiscard]] std::optional<int> parse_slot(const std::string& text);
[[nodiscard]] std::optional<Date> parse_date(const std::string& text);

/// Reads and validates a detector CSV. Throws SchemaError on a missing
/// column or an empty file; invalid rows are rejected with line numbers.
[[nodiscard]] CsvResult read_detector_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
[[nodiscard]] CsvResult parse_detector_csv(const std::string& content, const CsvSchema& schema = {});

/// Writes records in the default schema.
void write_detector_csv(const std::filesystem::path& path, const std::vector<DetectorRecord>& records);

/// The k-th workday before d under cfg's weekend/holiday rules.
[[nodiscard]] Date previous_workday(const Date& d, const SiteConfig& cfg, int lag_days = 1);

/// Builds (flow, occupancy, instrument) rows for in-window workday observations.
/// The instrument is the mean occupancy over slots [i - h, i + h] (truncated at
/// day boundaries) on the previous workday of the same detector. Throws
/// EmptySampleError when no row survives.
[[nodiscard]] InstrumentResult build_lagged_instrument(const std::vector<DetectorRecord>& series, const SiteConfig& cfg,
                                                       const InstrumentOptions& options = {});

}  // namespace bnpiv::ingest
