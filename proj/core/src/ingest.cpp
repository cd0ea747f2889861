#include "bnpiv/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "bnpiv/error.hpp"

namespace bnpiv {

void RegressionSample::validate() const {
    const std::size_t n = flow.size();
    if (n == 0) throw std::invalid_argument("RegressionSample: empty");
    if (occupancy.size() != n || instrument.size() != n)
        throw std::invalid_argument("RegressionSample: vectors are not aligned");
    if (!provenance.empty() && provenance.size() != n)
        throw std::invalid_argument("RegressionSample: provenance is not aligned");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(flow[i]) || !std::isfinite(occupancy[i]) || !std::isfinite(instrument[i]))
            throw std::invalid_argument("RegressionSample: non-finite entry at row " + std::to_string(i));
    }
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

}  // namespace bnpiv

namespace bnpiv::ingest {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Double-quoted fields may contain commas; "" inside quotes is a literal quote.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            out.push_back(was_quoted ? field : trim(field));
            field.clear();
            was_quoted = false;
        } else if (!(was_quoted && (c == ' ' || c == '\t' || c == '\r'))) {
            field += c;
        }
    }
    out.push_back(was_quoted ? field : trim(field));
    return out;
}

std::optional<double> parse_real(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("detector CSV: missing required column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

bool is_weekend(const Date& d) {
    const std::chrono::weekday wd{std::chrono::sys_days{d}};
    return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

}  // namespace

std::optional<int> parse_slot(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) return std::nullopt;
    const auto hh = parse_int(std::string_view(text).substr(0, colon));
    auto rest = std::string_view(text).substr(colon + 1);
    // Accept an optional ":SS" suffix.
    if (const auto second_colon = rest.find(':'); second_colon != std::string_view::npos) rest = rest.substr(0, second_colon);
    const auto mm = parse_int(rest);
    if (!hh || !mm || *hh < 0 || *hh > 23 || *mm < 0 || *mm > 59) return std::nullopt;
    return (*hh * 60 + *mm) / kMinutesPerSlot;
}

std::optional<Date> parse_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    const auto y = parse_int(std::string_view(text).substr(0, 4));
    const auto m = parse_int(std::string_view(text).substr(5, 2));
    const auto d = parse_int(std::string_view(text).substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    const Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                    std::chrono::day{static_cast<unsigned>(*d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

void SiteConfig::validate() const {
    if (window_start < 0 || window_end >= kSlotsPerDay || window_start > window_end)
        throw std::invalid_argument("SiteConfig: analysis window must satisfy 0 <= start <= end <= 287");
    if (date_range && std::chrono::sys_days{date_range->first} > std::chrono::sys_days{date_range->second})
        throw std::invalid_argument("SiteConfig: date range is empty");
}

bool SiteConfig::is_workday(const Date& d) const {
    if (is_weekend(d)) return false;
    return std::find(holidays.begin(), holidays.end(), d) == holidays.end();
}

bool SiteConfig::selects(const std::string& detector_id) const {
    return detector_ids.empty() ||
           std::find(detector_ids.begin(), detector_ids.end(), detector_id) != detector_ids.end();
}

CsvResult parse_detector_csv(const std::string& content, const CsvSchema& schema) {
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_csv(line);
            break;
        }
    }
    if (header.empty()) throw SchemaError("detector CSV: file is empty");
    // Tolerate a UTF-8 byte order mark on the first header field.
    if (header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

    const std::size_t c_det = column_index(header, schema.detector_column);
    const std::size_t c_ts = column_index(header, schema.timestamp_column);
    const std::optional<std::size_t> c_time =
        schema.time_column.empty() ? std::nullopt : std::optional(column_index(header, schema.time_column));
    const std::size_t c_flow = column_index(header, schema.flow_column);
    const std::size_t c_occ = column_index(header, schema.occupancy_column);
    const std::size_t needed = std::max({c_det, c_ts, c_flow, c_occ, c_time.value_or(0)}) + 1;

    CsvResult result;
    std::set<std::tuple<std::string, int, int>> seen;
    auto reject = [&result, &line_no](std::string reason) { result.rejected.push_back({line_no, std::move(reason)}); };

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() < needed) {
            reject("too few fields");
            continue;
        }
        std::string date_text = fields[c_ts];
        std::string time_text;
        if (c_time) {
            time_text = fields[*c_time];
        } else {
            const auto space = date_text.find_first_of(" T");
            if (space == std::string::npos) {
                reject("timestamp missing time of day");
                continue;
            }
            time_text = trim(std::string_view(date_text).substr(space + 1));
            date_text = date_text.substr(0, space);
        }
        const auto day = parse_date(date_text);
        const auto slot = parse_slot(time_text);
        if (!day || !slot) {
            reject("unparseable timestamp");
            continue;
        }
        const auto flow = parse_real(fields[c_flow]);
        const auto occ = parse_real(fields[c_occ]);
        if (!flow || !occ || !std::isfinite(*flow) || !std::isfinite(*occ)) {
            reject("missing or non-numeric value");
            continue;
        }
        if (*flow < 0.0) {
            reject("negative flow");
            continue;
        }
        if (*occ < 0.0 || *occ > 100.0) {
            reject("occupancy out of range");
            continue;
        }
        const auto days = static_cast<int>(std::chrono::sys_days{*day}.time_since_epoch().count());
        if (!seen.emplace(fields[c_det], days, *slot).second) {
            reject("duplicate detector/day/interval");
            continue;
        }
        result.records.push_back({fields[c_det], *day, *slot, *flow, *occ});
    }
    return result;
}

CsvResult read_detector_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("detector CSV: cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_detector_csv(buffer.str(), schema);
}

void write_detector_csv(const std::filesystem::path& path, const std::vector<DetectorRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "detector_id,timestamp,flow_veh_per_5min,occupancy_pct\n";
    char buf[64];
    for (const auto& r : records) {
        const int minutes = r.interval * kMinutesPerSlot;
        std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
        out << r.detector_id << ',' << format_date(r.day) << ' ' << buf << ',';
        std::snprintf(buf, sizeof buf, "%.2f,%.2f", r.flow, r.occupancy);
        out << buf << '\n';
    }
}

Date previous_workday(const Date& d, const SiteConfig& cfg, int lag_days) {
    if (lag_days < 1) throw std::invalid_argument("previous_workday: lag_days must be >= 1");
    std::chrono::sys_days day{d};
    int found = 0;
    // A bounded search; a year without workdays is a configuration error.
    for (int step = 0; step < 366 * lag_days; ++step) {
        day -= std::chrono::days{1};
        if (cfg.is_workday(Date{day}) && ++found == lag_days) return Date{day};
    }
    throw std::invalid_argument("previous_workday: no workday found");
}

InstrumentResult build_lagged_instrument(const std::vector<DetectorRecord>& series, const SiteConfig& cfg,
                                         const InstrumentOptions& options) {
    cfg.validate();
    if (options.half_window < 0) throw std::invalid_argument("build_lagged_instrument: half_window must be >= 0");
    if (options.lag_days < 1) throw std::invalid_argument("build_lagged_instrument: lag_days must be >= 1");

    // Occupancy lookup per (detector, day): slot -> value, NaN when missing.
    using DayKey = std::pair<std::string, int>;
    struct DayKeyHash {
        std::size_t operator()(const DayKey& k) const noexcept {
            return std::hash<std::string>{}(k.first) ^ (std::hash<int>{}(k.second) * 0x9e3779b97f4a7c15ULL);
        }
    };
    std::unordered_map<DayKey, std::vector<double>, DayKeyHash> by_day;
    auto day_number = [](const Date& d) { return static_cast<int>(std::chrono::sys_days{d}.time_since_epoch().count()); };
    for (const auto& r : series) {
        if (!cfg.selects(r.detector_id)) continue;
        auto& slots = by_day[{r.detector_id, day_number(r.day)}];
        if (slots.empty()) slots.assign(kSlotsPerDay, std::nan(""));
        slots[static_cast<std::size_t>(r.interval)] = r.occupancy;
    }

    // Rows in deterministic order: detector, day, interval.
    std::vector<const DetectorRecord*> rows;
    for (const auto& r : series) {
        if (!cfg.selects(r.detector_id)) continue;
        if (r.interval < cfg.window_start || r.interval > cfg.window_end) continue;
        if (cfg.workdays_only && !cfg.is_workday(r.day)) continue;
        if (cfg.date_range) {
            const std::chrono::sys_days d{r.day};
            if (d < std::chrono::sys_days{cfg.date_range->first} || d > std::chrono::sys_days{cfg.date_range->second}) continue;
        }
        rows.push_back(&r);
    }
    std::stable_sort(rows.begin(), rows.end(), [&](const DetectorRecord* a, const DetectorRecord* b) {
        return std::tuple(a->detector_id, day_number(a->day), a->interval) <
               std::tuple(b->detector_id, day_number(b->day), b->interval);
    });

    InstrumentResult out;
    auto& s = out.sample;
    for (const DetectorRecord* r : rows) {
        const Date lag_day = previous_workday(r->day, cfg, options.lag_days);
        const auto it = by_day.find({r->detector_id, day_number(lag_day)});
        if (it == by_day.end()) {
            ++out.dropped_no_lag;
            continue;
        }
        const int lo = std::max(0, r->interval - options.half_window);
        const int hi = std::min(kSlotsPerDay - 1, r->interval + options.half_window);
        double sum = 0.0;
        int available = 0;
        for (int k = lo; k <= hi; ++k) {
            const double v = it->second[static_cast<std::size_t>(k)];
            if (!std::isnan(v)) {
                sum += v;
                ++available;
            }
        }
        const int window = hi - lo + 1;
        const double missing = 1.0 - static_cast<double>(available) / window;
        if (available == 0 || missing > options.max_missing) {
            ++out.dropped_missing;
            continue;
        }
        s.flow.push_back(r->flow);
        s.occupancy.push_back(r->occupancy);
        s.instrument.push_back(sum / available);
        s.provenance.push_back({r->detector_id, r->day, r->interval});
    }
    if (s.size() == 0) throw EmptySampleError("build_lagged_instrument: no row has a usable previous-workday instrument");
    return out;
}

}  // namespace bnpiv::ingest
