#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bnpiv/summary.hpp"

// Capacity, critical occupancy and capacity drop read off a fitted
// flow-occupancy band.
namespace bnpiv::analysis {

enum class Significance { significant, not_significant, indeterminate };
[[nodiscard]] std::string to_string(Significance s);

struct CapacityOptions {
    /// Minimum share of observations within one grid cell of a grid point for
    /// it to be eligible (ignored when no observations are supplied).
    double density_floor = 0.005;
    /// Search window beyond the critical occupancy for the post-drop minimum.
    double drop_window = 10.0;
};

struct CapacityPoint {
    std::size_t index = 0;
    double occupancy = 0.0;
    double flow = 0.0;
    bool boundary = false;  // argmax at the edge of the eligible support
};

struct CapacityReport {
    double critical_occupancy = 0.0;
    double capacity = 0.0;           // veh / 5 min
    double capacity_hourly = 0.0;    // veh / h
    double post_drop_occupancy = 0.0;
    double post_drop_flow = 0.0;     // veh / 5 min
    double drop_percent = 0.0;
    Significance significance = Significance::indeterminate;
    bool backward_bend = false;
    bool boundary_capacity = false;
    double grid_resolution = 0.0;
};

[[nodiscard]] constexpr double to_hourly(double per_five_minutes) noexcept { return 12.0 * per_five_minutes; }

/// Grid points with enough nearby observations. All true when observations is empty.
[[nodiscard]] std::vector<bool> eligible_points(const summary::CurveBand& band, std::span<const double> observations,
                                                double density_floor);

/// Argmax of the posterior mean over eligible grid points (ties toward
/// smaller occupancy); flags a maximum at the support boundary.
[[nodiscard]] CapacityPoint extract_capacity(const summary::CurveBand& band, std::span<const double> observations,
                                             const CapacityOptions& options = {});

/// Post-drop minimum over (o_c, o_c + window], drop size, and band-based
/// significance (simultaneous lower band at o_c above the upper band at o*).
[[nodiscard]] CapacityReport detect_capacity_drop(const summary::CurveBand& band, const CapacityPoint& capacity,
                                                  std::span<const double> observations, const CapacityOptions& options = {});

/// extract_capacity followed by detect_capacity_drop.
[[nodiscard]] CapacityReport analyse(const summary::CurveBand& band, std::span<const double> observations,
                                     const CapacityOptions& options = {});

}  // namespace bnpiv::analysis
