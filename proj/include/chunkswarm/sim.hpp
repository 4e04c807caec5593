#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "chunkswarm/analysis.hpp"
#include "chunkswarm/rules.hpp"
#include "chunkswarm/swarm_state.hpp"

namespace chunkswarm {

// Initial population of a run. empty starts from the lone seed; imbalanced
// starts from n peers that all miss the same chunk.
struct Scenario {
    enum class Kind { empty, imbalanced };

    Kind kind = Kind::empty;
    std::int64_t peers = 0;
    int missing_chunk = 0;

    static Scenario empty() { return {}; }
    static Scenario imbalanced(std::int64_t peers, int missing_chunk) {
        if (peers < 0) throw std::invalid_argument("imbalanced peer count must be >= 0");
        return {Kind::imbalanced, peers, missing_chunk};
    }

    bool operator==(const Scenario&) const = default;
};

inline SwarmState scenario_state(const Scenario& scenario, int k) {
    SwarmState state(k);
    if (scenario.kind == Scenario::Kind::imbalanced) {
        if (scenario.missing_chunk < 0 || scenario.missing_chunk >= k)
            throw std::invalid_argument("missing_chunk out of range");
        ChunkSet profile = ChunkSet::full(k).without(scenario.missing_chunk);
        for (std::int64_t i = 0; i < scenario.peers; ++i) state.add_peer(profile);
    }
    return state;
}

struct SimConfig {
    int k = 2;
    double lambda = 1.0;
    Rule rule = Rule::common_chunk();
    double horizon = 100.0;
    std::uint64_t rng_seed = 0;
    Scenario initial{};
    double sample_interval = 1.0;

    void validate() const {
        if (k < 2 || k > max_chunks) throw std::invalid_argument("k must be in [2, 30]");
        if (!(lambda > 0)) throw std::invalid_argument("lambda must be positive");
        if (!(horizon > 0)) throw std::invalid_argument("horizon must be positive");
        if (!(sample_interval > 0))
            throw std::invalid_argument("sample_interval must be positive");
        if (initial.kind == Scenario::Kind::imbalanced &&
            (initial.missing_chunk < 0 || initial.missing_chunk >= k))
            throw std::invalid_argument("missing_chunk out of range");
    }
};

struct TimeSeriesRow {
    double t = 0;
    std::int64_t total = 0;
    std::int64_t empty_peers = 0;
    std::vector<std::int64_t> holders;
    std::int64_t min_holders = 0;
    std::int64_t l1 = 0;
};

struct SojournRecord {
    double arrival_t = 0;
    double departure_t = 0;
    double sojourn() const { return departure_t - arrival_t; }
};

struct SimCounters {
    std::uint64_t arrivals = 0;
    std::uint64_t downloads = 0;   // downloads that do not complete the file
    std::uint64_t departures = 0;  // completing downloads
    std::uint64_t idle_samples = 0;
};

struct SimResult {
    std::vector<TimeSeriesRow> series;
    std::vector<SojournRecord> sojourns;
    SwarmState final_state;
    SimCounters counters;
};

namespace detail {

// Event-loop state: the swarm plus a FIFO arrival-time ledger per class.
// Which member of a class acts is irrelevant to the dynamics, so the oldest
// member moves; that fixes sojourn bookkeeping deterministically.
class SimDriver {
public:
    SimDriver(const SimConfig& config)
        : config_(config), state_(scenario_state(config.initial, config.k)),
          rng_(config.rng_seed) {
        for (const auto& [profile, count] : state_.profiles())
            ledger_[profile].assign(count, 0.0);
    }

    SimResult run() {
        SimResult result{{}, {}, state_, {}};
        double t = 0.0;
        double next_snapshot = 0.0;
        snapshot(result, 0.0);
        next_snapshot += config_.sample_interval;

        while (true) {
            const std::int64_t actors = state_.aggregates().total - 1;
            const double event_rate = config_.lambda + static_cast<double>(actors);
            const double dt =
                std::exponential_distribution<double>(event_rate)(rng_);
            const double t_next = t + dt;

            while (next_snapshot <= t_next && next_snapshot < config_.horizon) {
                snapshot(result, next_snapshot);
                next_snapshot += config_.sample_interval;
            }
            if (t_next >= config_.horizon) break;
            t = t_next;

            if (actors == 0 ||
                std::bernoulli_distribution(config_.lambda / event_rate)(rng_)) {
                state_.add_peer(ChunkSet{});
                ledger_[ChunkSet{}].push_back(t);
                ++result.counters.arrivals;
                continue;
            }
            const ChunkSet profile = pick_actor_class(actors);
            draw_sample(profile);
            const auto chunk =
                decide_sampled(profile, std::span<const ChunkSet>(sample_), config_.rule,
                               config_.k, rng_);
            if (!chunk) {
                ++result.counters.idle_samples;
                continue;
            }
            const double arrived = pop_arrival(profile);
            const ChunkSet next_profile = profile.with(*chunk);
            if (next_profile.is_full(config_.k)) {
                state_.apply(Transition<>::departure(profile, *chunk, 0.0));
                result.sojourns.push_back({arrived, t});
                ++result.counters.departures;
            } else {
                state_.apply(Transition<>::download(profile, *chunk, 0.0));
                ledger_[next_profile].push_back(arrived);
                ++result.counters.downloads;
            }
        }

        snapshot(result, config_.horizon);
        result.final_state = state_;
        return result;
    }

private:
    void snapshot(SimResult& result, double t) {
        const Aggregates& agg = state_.aggregates();
        result.series.push_back({t, agg.total, agg.empty_peers, agg.holders,
                                 agg.min_holders(), agg.total_lacking()});
    }

    ChunkSet pick_actor_class(std::int64_t actors) {
        std::int64_t index =
            std::uniform_int_distribution<std::int64_t>(0, actors - 1)(rng_);
        for (const auto& [profile, count] : state_.profiles()) {
            if (index < count) return profile;
            index -= count;
        }
        throw std::logic_error("actor index ran past the population");
    }

    // One individual uniform over the S-strong population, seed included.
    ChunkSet draw_individual() {
        std::int64_t index = std::uniform_int_distribution<std::int64_t>(
            0, state_.aggregates().total - 1)(rng_);
        if (index == 0) return state_.seed_profile();
        index -= 1;
        for (const auto& [profile, count] : state_.profiles()) {
            if (index < count) return profile;
            index -= count;
        }
        throw std::logic_error("draw index ran past the population");
    }

    void draw_sample(ChunkSet profile) {
        const int draws = sample_size(profile, config_.rule, config_.k);
        sample_.clear();
        for (int i = 0; i < draws; ++i) sample_.push_back(draw_individual());
    }

    double pop_arrival(ChunkSet profile) {
        auto it = ledger_.find(profile);
        if (it == ledger_.end() || it->second.empty())
            throw std::logic_error("arrival ledger out of sync with the state");
        double arrived = it->second.front();
        it->second.pop_front();
        if (it->second.empty()) ledger_.erase(it);
        return arrived;
    }

    SimConfig config_;
    SwarmState state_;
    std::mt19937_64 rng_;
    std::map<ChunkSet, std::deque<double>> ledger_;
    std::vector<ChunkSet> sample_;
};

}  // namespace detail

// Exact event-by-event simulation of the chunk-sharing process: exponential
// holding times at rate lambda + (S - 1), arrivals against uniformly chosen
// acting peers, downloads applied instantaneously, departure on completion.
// Deterministic given the config's rng_seed.
inline SimResult run(const SimConfig& config) {
    config.validate();
    return detail::SimDriver(config).run();
}

struct DriftEstimate {
    double estimate = 0;
    double std_error = 0;
};

// Monte-Carlo estimate of the drift: each trial draws one event of the
// embedded jump chain and weights its Lyapunov change by the total event
// rate. Unbiased for the exact drift, no-download events included as zeros.
inline DriftEstimate monte_carlo_drift(const SwarmState& state, const Rule& rule,
                                       double lambda, const LyapunovSpec& spec,
                                       std::uint64_t trials, std::uint64_t rng_seed) {
    if (trials < 1) throw std::invalid_argument("monte_carlo_drift needs trials >= 1");
    if (!(lambda > 0)) throw std::invalid_argument("lambda must be positive");

    const int k = state.chunk_count();
    const double before = lyapunov(state, spec);
    const std::int64_t actors = state.aggregates().total - 1;
    const double event_rate = lambda + static_cast<double>(actors);

    const auto change_for = [&](const Transition<>& t) {
        SwarmState next = state;
        next.apply(t);
        return lyapunov(next, spec) - before;
    };
    const double arrival_change = change_for(Transition<>::arrival(lambda));
    std::map<std::pair<ChunkSet, int>, double> download_changes;

    std::mt19937_64 rng(rng_seed);
    std::vector<ChunkSet> sample;
    double sum = 0, sum_sq = 0;
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        double change = 0;
        if (actors == 0 ||
            std::bernoulli_distribution(lambda / event_rate)(rng)) {
            change = arrival_change;
        } else {
            std::int64_t index =
                std::uniform_int_distribution<std::int64_t>(0, actors - 1)(rng);
            ChunkSet profile;
            for (const auto& [p, count] : state.profiles()) {
                if (index < count) {
                    profile = p;
                    break;
                }
                index -= count;
            }
            const int draws = sample_size(profile, rule, k);
            sample.clear();
            for (int i = 0; i < draws; ++i) {
                std::int64_t draw = std::uniform_int_distribution<std::int64_t>(
                    0, state.aggregates().total - 1)(rng);
                if (draw == 0) {
                    sample.push_back(state.seed_profile());
                    continue;
                }
                draw -= 1;
                for (const auto& [p, count] : state.profiles()) {
                    if (draw < count) {
                        sample.push_back(p);
                        break;
                    }
                    draw -= count;
                }
            }
            const auto chunk = decide_sampled(profile, std::span<const ChunkSet>(sample),
                                              rule, k, rng);
            if (chunk) {
                auto [it, inserted] =
                    download_changes.try_emplace({profile, *chunk}, 0.0);
                if (inserted) {
                    const bool completes = profile.cardinality() == k - 1;
                    it->second = change_for(
                        completes ? Transition<>::departure(profile, *chunk, 0.0)
                                  : Transition<>::download(profile, *chunk, 0.0));
                }
                change = it->second;
            }
        }
        sum += change;
        sum_sq += change * change;
    }

    const double n = static_cast<double>(trials);
    const double mean = sum / n;
    const double variance = trials > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)) : 0.0;
    return {event_rate * mean, event_rate * std::sqrt(variance / n)};
}

}  // namespace chunkswarm
