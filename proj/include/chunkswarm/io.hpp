#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chunkswarm/analysis.hpp"
#include "chunkswarm/rational.hpp"
#include "chunkswarm/rules.hpp"
#include "chunkswarm/sim.hpp"
#include "chunkswarm/swarm_state.hpp"

namespace chunkswarm {

// Raised on any config/snapshot violation of the documented schemas. The
// message names the offending field so a typo in a job file is diagnosable
// from the error alone.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void schema_fail(const std::string& where, const std::string& what) {
    throw SchemaError(where + ": " + what);
}

inline void expect_object(const json& v, const std::string& where) {
    if (!v.is_object()) schema_fail(where, "expected a JSON object");
}

// Fail-closed: a field outside the allowed list is an error, not a warning.
inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                           const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (std::string_view name : allowed)
            if (key == name) {
                known = true;
                break;
            }
        if (!known) schema_fail(where, "unknown field \"" + key + "\"");
    }
}

inline const json& field(const json& obj, std::string_view name, const std::string& where) {
    auto it = obj.find(name);
    if (it == obj.end())
        schema_fail(where, "missing field \"" + std::string(name) + "\"");
    return *it;
}

inline std::int64_t int_field(const json& obj, std::string_view name,
                              const std::string& where) {
    const json& v = field(obj, name, where);
    if (!v.is_number_integer())
        schema_fail(where, "field \"" + std::string(name) + "\" must be an integer");
    return v.get<std::int64_t>();
}

inline std::uint64_t uint64_field(const json& obj, std::string_view name,
                                  const std::string& where) {
    const json& v = field(obj, name, where);
    const bool negative =
        v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0;
    if (!v.is_number_integer() || negative)
        schema_fail(where, "field \"" + std::string(name) + "\" must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

inline double number_field(const json& obj, std::string_view name,
                           const std::string& where) {
    const json& v = field(obj, name, where);
    if (!v.is_number())
        schema_fail(where, "field \"" + std::string(name) + "\" must be a number");
    return v.get<double>();
}

inline std::string string_field(const json& obj, std::string_view name,
                                const std::string& where) {
    const json& v = field(obj, name, where);
    if (!v.is_string())
        schema_fail(where, "field \"" + std::string(name) + "\" must be a string");
    return v.get<std::string>();
}

// NaN and infinities have no JSON representation; emit null instead of the
// library's silent default.
inline json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

}  // namespace detail

inline nlohmann::json rule_to_json(const Rule& rule) {
    switch (rule.kind) {
        case Rule::Kind::common_chunk:
            return {{"type", "common-chunk"}, {"m", rule.m}};
        case Rule::Kind::rare_chunk:
            return {{"type", "rare-chunk"}};
        case Rule::Kind::random_match:
            return {{"type", "random-match"}};
    }
    throw std::logic_error("unknown rule kind");
}

inline Rule rule_from_json(const nlohmann::json& v) {
    const std::string where = "rule";
    detail::expect_object(v, where);
    const std::string type = detail::string_field(v, "type", where);
    if (type == "common-chunk") {
        detail::reject_unknown(v, {"type", "m"}, where);
        const std::int64_t m = detail::int_field(v, "m", where);
        if (m < 3) detail::schema_fail(where, "field \"m\" must be at least 3");
        if (m > 64) detail::schema_fail(where, "field \"m\" must be at most 64");
        return Rule::common_chunk(static_cast<int>(m));
    }
    if (type == "rare-chunk") {
        detail::reject_unknown(v, {"type"}, where);
        return Rule::rare_chunk();
    }
    if (type == "random-match") {
        detail::reject_unknown(v, {"type"}, where);
        return Rule::random_match();
    }
    detail::schema_fail(where, "unknown rule type \"" + type + "\"");
}

inline nlohmann::json state_to_json(const SwarmState& state) {
    nlohmann::json profiles = nlohmann::json::array();
    for (const auto& [profile, count] : state.profiles())
        profiles.push_back({profile.bits(), count});
    return {{"k", state.chunk_count()}, {"profiles", std::move(profiles)}};
}

inline SwarmState state_from_json(const nlohmann::json& v) {
    const std::string where = "state";
    detail::expect_object(v, where);
    detail::reject_unknown(v, {"k", "profiles"}, where);
    const std::int64_t k = detail::int_field(v, "k", where);
    if (k < 2 || k > max_chunks)
        detail::schema_fail(where, "field \"k\" must be in [2, " +
                                       std::to_string(max_chunks) + "]");

    const nlohmann::json& profiles = detail::field(v, "profiles", where);
    if (!profiles.is_array())
        detail::schema_fail(where, "field \"profiles\" must be an array");
    std::vector<std::pair<ChunkSet, std::int64_t>> parsed;
    parsed.reserve(profiles.size());
    for (const nlohmann::json& entry : profiles) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_integer() ||
            !entry[1].is_number_integer())
            detail::schema_fail(where,
                                "each profiles entry must be a [bitmask, count] pair of integers");
        const std::int64_t bits = entry[0].get<std::int64_t>();
        const std::int64_t count = entry[1].get<std::int64_t>();
        if (bits < 0 || bits > std::numeric_limits<std::uint32_t>::max())
            detail::schema_fail(where, "profile bitmask out of range");
        if (count <= 0) detail::schema_fail(where, "profile count must be positive");
        parsed.emplace_back(ChunkSet(static_cast<std::uint32_t>(bits)), count);
    }
    try {
        return SwarmState(static_cast<int>(k),
                          std::span<const std::pair<ChunkSet, std::int64_t>>(parsed));
    } catch (const std::invalid_argument& e) {
        detail::schema_fail(where, e.what());
    }
}

inline nlohmann::json scenario_to_json(const Scenario& scenario) {
    if (scenario.kind == Scenario::Kind::empty) return {{"kind", "empty"}};
    return {{"kind", "imbalanced"},
            {"peers", scenario.peers},
            {"missing_chunk", scenario.missing_chunk}};
}

inline Scenario scenario_from_json(const nlohmann::json& v) {
    const std::string where = "initial";
    detail::expect_object(v, where);
    const std::string kind = detail::string_field(v, "kind", where);
    if (kind == "empty") {
        detail::reject_unknown(v, {"kind"}, where);
        return Scenario::empty();
    }
    if (kind == "imbalanced") {
        detail::reject_unknown(v, {"kind", "peers", "missing_chunk"}, where);
        const std::int64_t peers = detail::int_field(v, "peers", where);
        const std::int64_t missing = detail::int_field(v, "missing_chunk", where);
        if (peers < 0) detail::schema_fail(where, "field \"peers\" must be nonnegative");
        if (missing < 0 || missing >= max_chunks)
            detail::schema_fail(where, "field \"missing_chunk\" out of range");
        return Scenario::imbalanced(peers, static_cast<int>(missing));
    }
    detail::schema_fail(where, "unknown scenario kind \"" + kind + "\"");
}

inline nlohmann::json sim_config_to_json(const SimConfig& config) {
    return {{"k", config.k},
            {"lambda", config.lambda},
            {"rule", rule_to_json(config.rule)},
            {"horizon", config.horizon},
            {"rng_seed", config.rng_seed},
            {"initial", scenario_to_json(config.initial)},
            {"sample_interval", config.sample_interval}};
}

inline SimConfig sim_config_from_json(const nlohmann::json& v) {
    const std::string where = "config";
    detail::expect_object(v, where);
    detail::reject_unknown(
        v, {"k", "lambda", "rule", "horizon", "rng_seed", "initial", "sample_interval"},
        where);

    SimConfig config;
    config.k = static_cast<int>(detail::int_field(v, "k", where));
    config.lambda = detail::number_field(v, "lambda", where);
    config.rule = rule_from_json(detail::field(v, "rule", where));
    config.horizon = detail::number_field(v, "horizon", where);
    config.rng_seed = detail::uint64_field(v, "rng_seed", where);
    config.initial = scenario_from_json(detail::field(v, "initial", where));
    if (v.contains("sample_interval"))
        config.sample_interval = detail::number_field(v, "sample_interval", where);
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        detail::schema_fail(where, e.what());
    }
    return config;
}

template <class Scalar>
nlohmann::json drift_report_to_json(const DriftReport<Scalar>& report) {
    return {{"value", detail::finite_or_null(to_double(report.value))},
            {"margin", detail::finite_or_null(to_double(report.margin))},
            {"breakdown",
             {{"arrival", detail::finite_or_null(to_double(report.arrival))},
              {"download", detail::finite_or_null(to_double(report.download))},
              {"departure", detail::finite_or_null(to_double(report.departure))}}}};
}

// Maps the CLI spelling of a Lyapunov function to its spec. "combined" is
// instantiated at the canonical scale C(k) = 108 e k^3.
inline LyapunovSpec lyapunov_spec_from_name(std::string_view name, int k) {
    if (name == "l1") return LyapunovSpec::l1();
    if (name == "combined") return LyapunovSpec::combined(constant_C(k));
    if (name == "two-chunk") {
        if (k != 2)
            throw SchemaError("spec: two-chunk requires k = 2, got k = " + std::to_string(k));
        return LyapunovSpec::two_chunk();
    }
    throw SchemaError("spec: unknown Lyapunov spec \"" + std::string(name) +
                      "\" (expected l1, combined, or two-chunk)");
}

// Shortest decimal form that parses back to the same double. Integral values
// print without an exponent or trailing ".0".
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::logic_error("double formatting failed");
    return std::string(buf, ptr);
}

inline void write_timeseries_csv(std::ostream& out, std::span<const TimeSeriesRow> rows,
                                 int k) {
    out << "t,S,S0";
    for (int i = 1; i <= k; ++i) out << ",S" << i;
    out << ",min_Si,L1\n";
    for (const TimeSeriesRow& row : rows) {
        if (static_cast<int>(row.holders.size()) != k)
            throw std::invalid_argument("time series row does not match k");
        out << format_double(row.t) << ',' << row.total << ',' << row.empty_peers;
        for (std::int64_t h : row.holders) out << ',' << h;
        out << ',' << row.min_holders << ',' << row.l1 << '\n';
    }
}

inline void write_sojourn_csv(std::ostream& out, std::span<const SojournRecord> records) {
    out << "arrival_t,departure_t,sojourn\n";
    for (const SojournRecord& r : records)
        out << format_double(r.arrival_t) << ',' << format_double(r.departure_t) << ','
            << format_double(r.sojourn()) << '\n';
}

inline nlohmann::json summary_json(const SimConfig& config, const SimResult& result) {
    double sojourn_sum = 0;
    for (const SojournRecord& r : result.sojourns) sojourn_sum += r.sojourn();
    std::int64_t max_total = 0;
    for (const TimeSeriesRow& row : result.series) max_total = std::max(max_total, row.total);

    nlohmann::json summary = {
        {"config", sim_config_to_json(config)},
        {"events",
         {{"arrivals", result.counters.arrivals},
          {"downloads", result.counters.downloads},
          {"departures", result.counters.departures},
          {"idle_samples", result.counters.idle_samples}}},
        {"mean_sojourn", nullptr},
        {"max_S", max_total}};
    if (!result.sojourns.empty())
        summary["mean_sojourn"] =
            sojourn_sum / static_cast<double>(result.sojourns.size());
    return summary;
}

}  // namespace chunkswarm
