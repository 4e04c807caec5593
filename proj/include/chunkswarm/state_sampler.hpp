#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "chunkswarm/swarm_state.hpp"

namespace chunkswarm {

// Random states for property sweeps: total size uniform in [s_min, s_max],
// profiles i.i.d. per-chunk Bernoulli(q) with q drawn uniformly per state.
// Uniform sampling under-covers the imbalanced corner the stability results
// care about, so the first states are adversarial: every peer empty, and for
// each chunk a state where every peer misses exactly that chunk.
inline std::vector<SwarmState> sample_states(int k, std::int64_t s_min, std::int64_t s_max,
                                             std::size_t count, std::uint64_t rng_seed,
                                             bool include_adversarial = true) {
    if (s_min < 1 || s_max < s_min)
        throw std::invalid_argument("state sampler needs 1 <= s_min <= s_max");

    std::vector<SwarmState> states;
    states.reserve(count);

    if (include_adversarial) {
        const std::int64_t peers = s_max - 1;
        if (peers > 0 && states.size() < count) {
            SwarmState all_empty(k, {{ChunkSet{}, peers}});
            states.push_back(std::move(all_empty));
        }
        for (int i = 0; i < k && states.size() < count; ++i) {
            if (peers == 0) break;
            SwarmState all_missing(k, {{ChunkSet::full(k).without(i), peers}});
            states.push_back(std::move(all_missing));
        }
    }

    std::mt19937_64 rng(rng_seed);
    std::uniform_int_distribution<std::int64_t> size_dist(s_min, s_max);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> chunk_dist(0, k - 1);

    while (states.size() < count) {
        SwarmState state(k);
        const std::int64_t peers = size_dist(rng) - 1;
        const double q = unit(rng);
        for (std::int64_t p = 0; p < peers; ++p) {
            ChunkSet profile;
            for (int c = 0; c < k; ++c)
                if (unit(rng) < q) profile.insert(c);
            if (profile.is_full(k)) profile = profile.without(chunk_dist(rng));
            state.add_peer(profile);
        }
        states.push_back(std::move(state));
    }
    return states;
}

// Every k = 2 state with s_min <= S <= s_max, enumerated over the counts of
// the three storable profiles.
inline std::vector<SwarmState> exhaustive_two_chunk_states(std::int64_t s_min,
                                                           std::int64_t s_max) {
    if (s_min < 1 || s_max < s_min)
        throw std::invalid_argument("exhaustive sweep needs 1 <= s_min <= s_max");
    std::vector<SwarmState> states;
    for (std::int64_t total = s_min; total <= s_max; ++total) {
        const std::int64_t peers = total - 1;
        for (std::int64_t empty = 0; empty <= peers; ++empty) {
            for (std::int64_t first = 0; first + empty <= peers; ++first) {
                const std::int64_t second = peers - empty - first;
                std::vector<std::pair<ChunkSet, std::int64_t>> profiles;
                if (empty > 0) profiles.emplace_back(ChunkSet{}, empty);
                if (first > 0) profiles.emplace_back(ChunkSet{0}, first);
                if (second > 0) profiles.emplace_back(ChunkSet{1}, second);
                states.emplace_back(
                    2, std::span<const std::pair<ChunkSet, std::int64_t>>(profiles));
            }
        }
    }
    return states;
}

}  // namespace chunkswarm
