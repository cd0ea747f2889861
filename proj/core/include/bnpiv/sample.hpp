#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <vector>

namespace bnpiv {

using Date = std::chrono::year_month_day;

inline constexpr int kSlotsPerDay = 288;
inline constexpr int kMinutesPerSlot = 5;

/// Where a regression row came from.
struct RowKey {
    std::string detector_id;
    Date day{};
    int interval = 0;

    friend bool operator==(const RowKey&, const RowKey&) = default;
};

/// Estimation-ready observables: response (flow), endogenous covariate
/// (occupancy) and instrument, index-aligned. provenance is either empty
/// (synthetic samples) or aligned with the data vectors.
struct RegressionSample {
    std::vector<double> flow;
    std::vector<double> occupancy;
    std::vector<double> instrument;
    std::vector<RowKey> provenance;

    [[nodiscard]] std::size_t size() const noexcept { return flow.size(); }

    /// Throws std::invalid_argument on misaligned, empty, or non-finite data.
    void validate() const;
};

[[nodiscard]] std::string format_date(const Date& d);

}  // namespace bnpiv
