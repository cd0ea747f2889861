#include "bnpiv/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bnpiv/log.hpp"

namespace bnpiv::analysis {

std::string to_string(Significance s) {
    switch (s) {
        case Significance::significant: return "significant";
        case Significance::not_significant: return "not significant";
        case Significance::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

namespace {

double resolution(const summary::CurveBand& band) {
    return band.grid.size() > 1 ? (band.grid.back() - band.grid.front()) / static_cast<double>(band.grid.size() - 1) : 0.0;
}

}  // namespace

std::vector<bool> eligible_points(const summary::CurveBand& band, std::span<const double> observations, double density_floor) {
    const std::size_t g = band.grid.size();
    std::vector<bool> ok(g, true);
    if (observations.empty() || g < 2) return ok;
    std::vector<double> sorted(observations.begin(), observations.end());
    std::sort(sorted.begin(), sorted.end());
    const double half = 0.5 * resolution(band);
    const double needed = density_floor * static_cast<double>(sorted.size());
    for (std::size_t j = 0; j < g; ++j) {
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), band.grid[j] - half);
        const auto hi = std::upper_bound(sorted.begin(), sorted.end(), band.grid[j] + half);
        ok[j] = static_cast<double>(hi - lo) >= needed;
    }
    return ok;
}

CapacityPoint extract_capacity(const summary::CurveBand& band, std::span<const double> observations,
                               const CapacityOptions& options) {
    if (band.grid.empty()) throw std::invalid_argument("extract_capacity: empty band");
    if (!observations.empty()) {
        const auto [lo, hi] = std::minmax_element(observations.begin(), observations.end());
        const double tol = resolution(band);
        if (band.grid.front() > *lo + tol || band.grid.back() < *hi - tol)
            log::warn("extract_capacity: grid does not cover the observed occupancy support");
    }
    const auto ok = eligible_points(band, observations, options.density_floor);
    std::size_t first = band.grid.size();
    std::size_t last = 0;
    std::size_t best = band.grid.size();
    for (std::size_t j = 0; j < band.grid.size(); ++j) {
        if (!ok[j]) continue;
        first = std::min(first, j);
        last = j;
        if (best == band.grid.size() || band.mean[j] > band.mean[best]) best = j;
    }
    if (best == band.grid.size()) throw std::invalid_argument("extract_capacity: no grid point meets the data-density floor");

    CapacityPoint cap;
    cap.index = best;
    cap.occupancy = band.grid[best];
    cap.flow = band.mean[best];
    cap.boundary = best == first || best == last;
    if (cap.boundary) log::warn("extract_capacity: maximum at the support boundary (suspect capacity)");
    return cap;
}

CapacityReport detect_capacity_drop(const summary::CurveBand& band, const CapacityPoint& capacity,
                                    std::span<const double> observations, const CapacityOptions& options) {
    if (!(options.drop_window > 0.0)) throw std::invalid_argument("detect_capacity_drop: window must be positive");
    const auto ok = eligible_points(band, observations, options.density_floor);

    CapacityReport report;
    report.critical_occupancy = capacity.occupancy;
    report.capacity = capacity.flow;
    report.capacity_hourly = to_hourly(capacity.flow);
    report.boundary_capacity = capacity.boundary;
    report.grid_resolution = resolution(band);
    if (band.grid.back() < capacity.occupancy + options.drop_window - 1e-9)
        log::warn("detect_capacity_drop: grid ends before the end of the drop search window");

    const double window_end = capacity.occupancy + options.drop_window + 1e-9;
    std::size_t star = band.grid.size();
    for (std::size_t j = capacity.index + 1; j < band.grid.size() && band.grid[j] <= window_end; ++j) {
        if (!ok[j]) continue;
        if (star == band.grid.size() || band.mean[j] < band.mean[star]) star = j;
    }
    if (star == band.grid.size()) {
        report.post_drop_occupancy = capacity.occupancy;
        report.post_drop_flow = capacity.flow;
        report.significance = Significance::indeterminate;
        return report;
    }

    report.post_drop_occupancy = band.grid[star];
    report.post_drop_flow = band.mean[star];
    report.drop_percent = 100.0 * (capacity.flow - report.post_drop_flow) / capacity.flow;
    report.significance = band.simultaneous_lower[capacity.index] > band.simultaneous_upper[star]
                              ? Significance::significant
                              : Significance::not_significant;
    for (std::size_t j = star + 1; j < band.grid.size(); ++j) {
        if (ok[j] && band.simultaneous_upper[j] < band.simultaneous_lower[star]) {
            report.backward_bend = true;
            break;
        }
    }
    return report;
}

CapacityReport analyse(const summary::CurveBand& band, std::span<const double> observations, const CapacityOptions& options) {
    return detect_capacity_drop(band, extract_capacity(band, observations, options), observations, options);
}

}  // namespace bnpiv::analysis
