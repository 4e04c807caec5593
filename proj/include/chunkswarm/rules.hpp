#pragma once

#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "chunkswarm/chunkset.hpp"

namespace chunkswarm {

// Chunk-selection rule. common_chunk(3) is the base protocol; larger m
// relaxes only the near-complete class, which then samples m peers and may
// depart once every owned chunk shows up at least twice. rare_chunk makes
// every class take rare matches only. random_match is the naive baseline
// (one draw, any match) that exhibits the rare-chunk instability.
struct Rule {
    enum class Kind { common_chunk, rare_chunk, random_match };

    Kind kind = Kind::common_chunk;
    int m = 3;  // near-complete sample size; meaningful for common_chunk only

    static Rule common_chunk(int m = 3) {
        if (m < 3) throw std::invalid_argument("common_chunk requires m >= 3");
        return {Kind::common_chunk, m};
    }
    static Rule rare_chunk() { return {Kind::rare_chunk, 3}; }
    static Rule random_match() { return {Kind::random_match, 3}; }

    bool operator==(const Rule&) const = default;
};

// Number of draws a peer with this profile makes per sampling event.
inline int sample_size(ChunkSet profile, const Rule& rule, int k) {
    if (profile.is_full(k))
        throw std::invalid_argument("the seed profile never samples");
    switch (rule.kind) {
        case Rule::Kind::common_chunk: {
            int held = profile.cardinality();
            if (held == 0) return 3;
            if (held == k - 1) return rule.m;
            return 1;
        }
        case Rule::Kind::rare_chunk:
            return 3;
        case Rule::Kind::random_match:
            return 1;
    }
    throw std::logic_error("unknown rule kind");
}

// Per-chunk occurrence counts over the draws of a sample. Multiset
// semantics: an individual drawn twice contributes twice.
inline std::vector<int> chunk_counts(std::span<const ChunkSet> sample, int k) {
    std::vector<int> counts(k, 0);
    for (const ChunkSet& draw : sample)
        for (int c = 0; c < k; ++c)
            if (draw.contains(c)) ++counts[c];
    return counts;
}

// Outcome distribution of one sampling event, conditioned on a fixed sample.
// Every rule picks uniformly among a candidate set; the event is a
// no-download exactly when that set is empty.
struct Decision {
    ChunkSet candidates;

    int option_count() const { return candidates.cardinality(); }
    bool downloads() const { return !candidates.empty(); }

    double mass(int chunk) const {
        if (!candidates.contains(chunk)) return 0.0;
        return 1.0 / option_count();
    }
    double none_mass() const { return candidates.empty() ? 1.0 : 0.0; }
};

// Applies the rule to (own profile, sampled profiles). Pure; randomness is
// the caller's (see decide_sampled).
inline Decision decide(ChunkSet profile, std::span<const ChunkSet> sample,
                       const Rule& rule, int k) {
    if (static_cast<int>(sample.size()) != sample_size(profile, rule, k))
        throw std::invalid_argument("sample size does not match the rule's draw count");

    const std::vector<int> counts = chunk_counts(sample, k);

    ChunkSet matches;    // present in the sample, absent from the profile
    ChunkSet rare;       // matches with exactly one occurrence
    for (int c = 0; c < k; ++c) {
        if (profile.contains(c) || counts[c] == 0) continue;
        matches.insert(c);
        if (counts[c] == 1) rare.insert(c);
    }

    switch (rule.kind) {
        case Rule::Kind::common_chunk: {
            int held = profile.cardinality();
            if (held == 0) return {rare};
            if (held < k - 1) return {matches};
            // Near-complete: depart only when every owned chunk occurs at
            // least twice and the missing chunk shows up at all.
            int missing = profile.missing_chunk(k);
            if (counts[missing] == 0) return {ChunkSet{}};
            for (int c = 0; c < k; ++c)
                if (profile.contains(c) && counts[c] < 2) return {ChunkSet{}};
            return {ChunkSet{}.with(missing)};
        }
        case Rule::Kind::rare_chunk:
            return {rare};
        case Rule::Kind::random_match:
            return {matches};
    }
    throw std::logic_error("unknown rule kind");
}

// Draws one outcome from decide()'s distribution; nullopt = no download.
template <class URBG>
std::optional<int> decide_sampled(ChunkSet profile, std::span<const ChunkSet> sample,
                                  const Rule& rule, int k, URBG& rng) {
    Decision d = decide(profile, sample, rule, k);
    int n = d.option_count();
    if (n == 0) return std::nullopt;
    int pick = (n == 1) ? 0 : std::uniform_int_distribution<int>(0, n - 1)(rng);
    for (int c = 0; c < k; ++c) {
        if (!d.candidates.contains(c)) continue;
        if (pick-- == 0) return c;
    }
    throw std::logic_error("candidate selection ran past the set");
}

}  // namespace chunkswarm
