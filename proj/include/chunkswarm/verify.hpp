#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "chunkswarm/analysis.hpp"
#include "chunkswarm/io.hpp"
#include "chunkswarm/rational.hpp"
#include "chunkswarm/rules.hpp"
#include "chunkswarm/state_sampler.hpp"
#include "chunkswarm/swarm_state.hpp"

namespace chunkswarm {

struct RandomStates {
    std::size_t count = 0;
    std::int64_t s_min = 1;
    std::int64_t s_max = 1;
    std::uint64_t rng_seed = 0;

    bool operator==(const RandomStates&) const = default;
};

struct ExhaustiveStates {
    std::int64_t s_min = 1;
    std::int64_t s_max = 1;

    bool operator==(const ExhaustiveStates&) const = default;
};

struct FileStates {
    std::filesystem::path path;

    bool operator==(const FileStates&) const = default;
};

// One batch of states to push through a checker. Which inequality gets
// checked, where the states come from, and the protocol parameters.
struct VerificationJob {
    enum class Target { lemma1, lemma2, case1_drift, two_chunk_drift };

    Target target = Target::lemma1;
    int k = 2;
    double lambda = 1.0;
    Rule rule = Rule::common_chunk();
    std::variant<RandomStates, ExhaustiveStates, FileStates> source = RandomStates{};

    // Cross-field rules. The lemma bounds and the low-rate drift case are
    // proved for the base protocol only; the two-chunk target is the k = 2
    // rare-chunk system; exhaustive enumeration exists only for k = 2.
    void validate() const {
        if (k < 2 || k > max_chunks)
            throw SchemaError("job: field \"k\" must be in [2, " +
                              std::to_string(max_chunks) + "]");
        if (!(lambda > 0)) throw SchemaError("job: field \"lambda\" must be positive");
        switch (target) {
            case Target::lemma1:
            case Target::lemma2:
                if (rule != Rule::common_chunk(3))
                    throw SchemaError("job: lemma targets require the common-chunk rule with m = 3");
                break;
            case Target::case1_drift:
                if (rule != Rule::common_chunk(3))
                    throw SchemaError("job: case1-drift requires the common-chunk rule with m = 3");
                if (!(lambda <= 1.0 / (3.0 * k)))
                    throw SchemaError("job: case1-drift requires lambda <= 1/(3k)");
                break;
            case Target::two_chunk_drift:
                if (k != 2) throw SchemaError("job: two-chunk-drift requires k = 2");
                if (rule != Rule::rare_chunk())
                    throw SchemaError("job: two-chunk-drift requires the rare-chunk rule");
                break;
        }
        if (std::holds_alternative<ExhaustiveStates>(source) && k != 2)
            throw SchemaError("job: exhaustive state source requires k = 2");
        if (const auto* random = std::get_if<RandomStates>(&source)) {
            if (random->count == 0)
                throw SchemaError("job: field \"count\" must be positive");
            if (random->s_min < 1 || random->s_max < random->s_min)
                throw SchemaError("job: state source needs 1 <= s_min <= s_max");
        }
        if (const auto* exhaustive = std::get_if<ExhaustiveStates>(&source)) {
            if (exhaustive->s_min < 1 || exhaustive->s_max < exhaustive->s_min)
                throw SchemaError("job: state source needs 1 <= s_min <= s_max");
        }
    }
};

inline std::string_view target_name(VerificationJob::Target target) {
    switch (target) {
        case VerificationJob::Target::lemma1: return "lemma1";
        case VerificationJob::Target::lemma2: return "lemma2";
        case VerificationJob::Target::case1_drift: return "case1-drift";
        case VerificationJob::Target::two_chunk_drift: return "two-chunk-drift";
    }
    throw std::logic_error("unknown verification target");
}

inline VerificationJob::Target target_from_name(std::string_view name) {
    if (name == "lemma1") return VerificationJob::Target::lemma1;
    if (name == "lemma2") return VerificationJob::Target::lemma2;
    if (name == "case1-drift") return VerificationJob::Target::case1_drift;
    if (name == "two-chunk-drift") return VerificationJob::Target::two_chunk_drift;
    throw SchemaError("job: unknown target \"" + std::string(name) + "\"");
}

inline nlohmann::json verification_job_to_json(const VerificationJob& job) {
    nlohmann::json states;
    if (const auto* random = std::get_if<RandomStates>(&job.source)) {
        states = {{"source", "random"},
                  {"count", random->count},
                  {"s_min", random->s_min},
                  {"s_max", random->s_max},
                  {"rng_seed", random->rng_seed}};
    } else if (const auto* exhaustive = std::get_if<ExhaustiveStates>(&job.source)) {
        states = {{"source", "exhaustive"},
                  {"s_min", exhaustive->s_min},
                  {"s_max", exhaustive->s_max}};
    } else {
        states = {{"source", "file"},
                  {"path", std::get<FileStates>(job.source).path.string()}};
    }
    return {{"target", std::string(target_name(job.target))},
            {"k", job.k},
            {"lambda", job.lambda},
            {"rule", rule_to_json(job.rule)},
            {"states", std::move(states)}};
}

// Relative file paths in the job resolve against base_dir, normally the
// directory holding the job file.
inline VerificationJob verification_job_from_json(
    const nlohmann::json& v, const std::filesystem::path& base_dir = ".") {
    const std::string where = "job";
    detail::expect_object(v, where);
    detail::reject_unknown(v, {"target", "k", "lambda", "rule", "states"}, where);

    VerificationJob job;
    job.target = target_from_name(detail::string_field(v, "target", where));
    job.k = static_cast<int>(detail::int_field(v, "k", where));
    job.lambda = detail::number_field(v, "lambda", where);
    job.rule = rule_from_json(detail::field(v, "rule", where));

    const nlohmann::json& states = detail::field(v, "states", where);
    const std::string source_where = "job.states";
    detail::expect_object(states, source_where);
    const std::string source = detail::string_field(states, "source", source_where);
    if (source == "random") {
        detail::reject_unknown(states, {"source", "count", "s_min", "s_max", "rng_seed"},
                               source_where);
        RandomStates random;
        const std::int64_t count = detail::int_field(states, "count", source_where);
        if (count <= 0) detail::schema_fail(source_where, "field \"count\" must be positive");
        random.count = static_cast<std::size_t>(count);
        random.s_min = detail::int_field(states, "s_min", source_where);
        random.s_max = detail::int_field(states, "s_max", source_where);
        random.rng_seed = detail::uint64_field(states, "rng_seed", source_where);
        job.source = random;
    } else if (source == "exhaustive") {
        detail::reject_unknown(states, {"source", "s_min", "s_max"}, source_where);
        ExhaustiveStates exhaustive;
        exhaustive.s_min = detail::int_field(states, "s_min", source_where);
        exhaustive.s_max = detail::int_field(states, "s_max", source_where);
        job.source = exhaustive;
    } else if (source == "file") {
        detail::reject_unknown(states, {"source", "path"}, source_where);
        std::filesystem::path path = detail::string_field(states, "path", source_where);
        if (path.is_relative()) path = base_dir / path;
        job.source = FileStates{std::move(path)};
    } else {
        detail::schema_fail(source_where, "unknown state source \"" + source + "\"");
    }

    job.validate();
    return job;
}

// Instantiates the job's state list. File sources hold a JSON array of state
// snapshots, all with the job's k.
inline std::vector<SwarmState> materialize_states(const VerificationJob& job) {
    if (const auto* random = std::get_if<RandomStates>(&job.source))
        return sample_states(job.k, random->s_min, random->s_max, random->count,
                             random->rng_seed);
    if (const auto* exhaustive = std::get_if<ExhaustiveStates>(&job.source))
        return exhaustive_two_chunk_states(exhaustive->s_min, exhaustive->s_max);

    const std::filesystem::path& path = std::get<FileStates>(job.source).path;
    std::ifstream in(path);
    if (!in) throw SchemaError("job.states: cannot read \"" + path.string() + "\"");
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("job.states: \"" + path.string() + "\" is not valid JSON: " +
                          e.what());
    }
    if (!parsed.is_array())
        throw SchemaError("job.states: \"" + path.string() +
                          "\" must hold a JSON array of state snapshots");
    std::vector<SwarmState> out;
    out.reserve(parsed.size());
    for (const nlohmann::json& entry : parsed) {
        SwarmState state = state_from_json(entry);
        if (state.chunk_count() != job.k)
            throw SchemaError("job.states: snapshot k does not match the job's k");
        out.push_back(std::move(state));
    }
    return out;
}

// Whether the target's inequality claims anything at this state. States
// outside the hypothesis are skipped and counted, never treated as failures.
inline bool target_applies(const VerificationJob& job, const SwarmState& state) {
    const std::int64_t total = state.aggregates().total;
    switch (job.target) {
        case VerificationJob::Target::lemma1:
            return true;
        case VerificationJob::Target::lemma2:
            return total >= 12;
        case VerificationJob::Target::case1_drift:
            return static_cast<double>(total) > threshold_case1(job.k);
        case VerificationJob::Target::two_chunk_drift:
            return static_cast<double>(total) > threshold_two_chunk(job.lambda);
    }
    throw std::logic_error("unknown verification target");
}

namespace detail {

// margin >= 0 is the pass condition for every target: rate minus bound for
// the lemmas, minus the drift for the drift targets. The violation flag is
// evaluated in Scalar before any rounding.
template <class Scalar>
std::pair<double, bool> target_margin(const VerificationJob& job, const SwarmState& state) {
    switch (job.target) {
        case VerificationJob::Target::lemma1: {
            auto check = check_lemma1<Scalar>(state, job.rule);
            return {to_double(check.margin), !(check.margin >= Scalar{})};
        }
        case VerificationJob::Target::lemma2: {
            auto check = check_lemma2<Scalar>(state, job.rule);
            return {to_double(check.margin), !(check.margin >= Scalar{})};
        }
        case VerificationJob::Target::case1_drift: {
            auto report = drift<Scalar>(state, job.rule, Scalar(job.lambda),
                                        LyapunovSpec::l1());
            return {to_double(report.margin), !(report.value < Scalar{})};
        }
        case VerificationJob::Target::two_chunk_drift: {
            auto report = drift<Scalar>(state, job.rule, Scalar(job.lambda),
                                        LyapunovSpec::two_chunk());
            return {to_double(report.margin), !(report.value < Scalar{})};
        }
    }
    throw std::logic_error("unknown verification target");
}

}  // namespace detail

struct VerificationViolation {
    SwarmState state;
    double margin;
};

struct VerificationReport {
    VerificationJob job;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    std::vector<VerificationViolation> violations;
    double min_margin = std::numeric_limits<double>::infinity();
    double runtime_seconds = 0;

    bool passed() const { return violations.empty(); }
};

// Runs the job: materialize states, check each applicable one exactly
// (rational arithmetic up to exact_population_limit peers, double beyond).
inline VerificationReport run_verification(const VerificationJob& job) {
    job.validate();
    const auto started = std::chrono::steady_clock::now();
    VerificationReport report{job, 0, 0, {}, std::numeric_limits<double>::infinity(), 0};

    for (SwarmState& state : materialize_states(job)) {
        if (!target_applies(job, state)) {
            ++report.skipped;
            continue;
        }
        ++report.checked;
        const bool exact = state.aggregates().total <= exact_population_limit;
        auto [margin, violated] = exact ? detail::target_margin<Rational>(job, state)
                                        : detail::target_margin<double>(job, state);
        report.min_margin = std::min(report.min_margin, margin);
        if (violated) report.violations.push_back({std::move(state), margin});
    }

    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

inline nlohmann::json verification_report_to_json(const VerificationReport& report) {
    nlohmann::json violations = nlohmann::json::array();
    for (const VerificationViolation& v : report.violations)
        violations.push_back({{"state", state_to_json(v.state)}, {"margin", v.margin}});
    return {{"job", verification_job_to_json(report.job)},
            {"checked", report.checked},
            {"skipped", report.skipped},
            {"violations", std::move(violations)},
            {"min_margin", detail::finite_or_null(report.min_margin)},
            {"runtime_seconds", report.runtime_seconds},
            {"passed", report.passed()}};
}

}  // namespace chunkswarm
