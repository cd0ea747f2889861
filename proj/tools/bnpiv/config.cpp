#include "bnpiv/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace bnpiv::cli {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw UsageError("invalid number for '" + key + "': " + v);
    return out;
}

long to_long(const std::string& key, const std::string& v) {
    long out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw UsageError("invalid integer for '" + key + "': " + v);
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw UsageError("invalid unsigned integer for '" + key + "': " + v);
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw UsageError("invalid boolean for '" + key + "': " + v);
}

int to_slot(const std::string& key, const std::string& v) {
    const auto slot = ingest::parse_slot(v);
    if (!slot) throw UsageError("invalid time of day for '" + key + "': " + v);
    return *slot;
}

Date to_date(const std::string& key, const std::string& v) {
    const auto d = ingest::parse_date(v);
    if (!d) throw UsageError("invalid date for '" + key + "': " + v);
    return *d;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"input", [](RunConfig& c, const std::string&, const std::string& v) { c.input = v; }},
        {"out", [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
        {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); }},
        {"delta", [](RunConfig& c, const std::string& k, const std::string& v) { c.delta = to_real(k, v); }},
        {"knots", [](RunConfig& c, const std::string& k, const std::string& v) { c.knots = static_cast<int>(to_long(k, v)); }},
        {"degree", [](RunConfig& c, const std::string& k, const std::string& v) { c.degree = static_cast<int>(to_long(k, v)); }},
        {"penalty_order",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.penalty_order = static_cast<int>(to_long(k, v)); }},
        {"truncation",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.truncation = static_cast<int>(to_long(k, v)); }},
        {"dp_shape", [](RunConfig& c, const std::string& k, const std::string& v) { c.concentration_shape = to_real(k, v); }},
        {"dp_rate", [](RunConfig& c, const std::string& k, const std::string& v) { c.concentration_rate = to_real(k, v); }},
        {"tau_sigma", [](RunConfig& c, const std::string& k, const std::string& v) { c.precision_scale = to_real(k, v); }},
        {"iw_dof", [](RunConfig& c, const std::string& k, const std::string& v) { c.iw_dof = to_real(k, v); }},
        {"draws", [](RunConfig& c, const std::string& k, const std::string& v) { c.draws = to_long(k, v); }},
        {"burnin", [](RunConfig& c, const std::string& k, const std::string& v) { c.burnin = to_long(k, v); }},
        {"thin", [](RunConfig& c, const std::string& k, const std::string& v) { c.thin = to_long(k, v); }},
        {"desk_profile", [](RunConfig& c, const std::string& k, const std::string& v) { c.desk_profile = to_bool(k, v); }},
        {"site", [](RunConfig& c, const std::string&, const std::string& v) { c.site.name = v; }},
        {"detectors", [](RunConfig& c, const std::string&, const std::string& v) { c.site.detector_ids = split_list(v); }},
        {"window_start", [](RunConfig& c, const std::string& k, const std::string& v) { c.site.window_start = to_slot(k, v); }},
        {"window_end", [](RunConfig& c, const std::string& k, const std::string& v) { c.site.window_end = to_slot(k, v); }},
        {"workdays_only", [](RunConfig& c, const std::string& k, const std::string& v) { c.site.workdays_only = to_bool(k, v); }},
        {"start_date",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             const Date d = to_date(k, v);
             c.site.date_range = {d, c.site.date_range ? c.site.date_range->second : Date{std::chrono::year{9999}, std::chrono::December, std::chrono::day{31}}};
         }},
        {"end_date",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             const Date d = to_date(k, v);
             c.site.date_range = {c.site.date_range ? c.site.date_range->first : Date{std::chrono::year{1}, std::chrono::January, std::chrono::day{1}}, d};
         }},
        {"holidays",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.site.holidays.clear();
             for (const auto& item : split_list(v)) c.site.holidays.push_back(to_date(k, item));
         }},
        {"half_window",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.instrument.half_window = static_cast<int>(to_long(k, v)); }},
        {"lag_days",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.instrument.lag_days = static_cast<int>(to_long(k, v)); }},
        {"max_missing", [](RunConfig& c, const std::string& k, const std::string& v) { c.instrument.max_missing = to_real(k, v); }},
        {"detector_column", [](RunConfig& c, const std::string&, const std::string& v) { c.schema.detector_column = v; }},
        {"timestamp_column", [](RunConfig& c, const std::string&, const std::string& v) { c.schema.timestamp_column = v; }},
        {"time_column", [](RunConfig& c, const std::string&, const std::string& v) { c.schema.time_column = v; }},
        {"flow_column", [](RunConfig& c, const std::string&, const std::string& v) { c.schema.flow_column = v; }},
        {"occupancy_column", [](RunConfig& c, const std::string&, const std::string& v) { c.schema.occupancy_column = v; }},
        {"bins",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.bin_cuts.clear();
             for (const auto& item : split_list(v)) c.bin_cuts.push_back(to_real(k, item));
         }},
        {"critical_f", [](RunConfig& c, const std::string& k, const std::string& v) { c.critical_f = to_real(k, v); }},
        {"density_floor", [](RunConfig& c, const std::string& k, const std::string& v) { c.capacity.density_floor = to_real(k, v); }},
        {"drop_window", [](RunConfig& c, const std::string& k, const std::string& v) { c.capacity.drop_window = to_real(k, v); }},
        {"n", [](RunConfig& c, const std::string& k, const std::string& v) { c.observations = static_cast<std::size_t>(to_u64(k, v)); }},
        {"error_variance", [](RunConfig& c, const std::string& k, const std::string& v) { c.error_variance = to_real(k, v); }},
        {"estimators", [](RunConfig& c, const std::string&, const std::string& v) { c.estimators = split_list(v); }},
        {"appendix_a", [](RunConfig& c, const std::string& k, const std::string& v) { c.appendix_a = to_bool(k, v); }},
    };
    return table;
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, _] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw UsageError("unknown configuration key '" + key + "'");
    it->second(cfg, key, value);
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    for (const auto& [k, v] : read_key_values(path)) apply_setting(cfg, k, v);
}

void RunConfig::validate() const {
    if (!(delta > 0.0 && delta <= 0.5)) throw UsageError("delta must be in (0, 0.5]");
    if (subcommand != "simulate") {
        if (input.empty()) throw UsageError("an input CSV is required (--input)");
        if (!std::filesystem::exists(input)) throw UsageError("input file does not exist: " + input.string());
    }
    if (out_dir.empty()) throw UsageError("an output directory is required (--out)");
    if (knots < 1 || degree < 1 || penalty_order < 1) throw UsageError("knots, degree and penalty_order must be >= 1");
    if (truncation < 1) throw UsageError("truncation must be >= 1");
    try {
        site.validate();
        if (subcommand == "fit") {
            mcmc().validate();
        }
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

npiv::McmcConfig RunConfig::mcmc() const {
    npiv::McmcConfig m = desk_profile                ? npiv::McmcConfig::desk(seed)
                         : subcommand == "simulate" ? npiv::McmcConfig::monte_carlo(seed)
                                                    : npiv::McmcConfig::full(seed);
    if (draws) m.total = *draws;
    if (burnin) m.burnin = *burnin;
    if (thin) m.thin = *thin;
    m.delta = delta;
    return m;
}

}  // namespace bnpiv::cli
