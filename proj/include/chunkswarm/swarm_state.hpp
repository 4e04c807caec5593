#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chunkswarm/chunkset.hpp"

namespace chunkswarm {

// Aggregate statistics of a swarm state. The seed is never stored as a peer;
// its contribution (it holds every chunk) enters here as unconditional +1
// terms, so holders[i] >= 1 always.
struct Aggregates {
    std::int64_t total = 1;                  // peers in the system, seed included
    std::int64_t empty_peers = 0;            // peers holding no chunks
    std::vector<std::int64_t> holders;       // per chunk: peers holding it, seed included
    std::vector<std::int64_t> sole_missing;  // per chunk: peers missing only that chunk

    explicit Aggregates(int k = 0) : holders(k, 1), sole_missing(k, 0) {}

    int chunk_count() const { return static_cast<int>(holders.size()); }

    // Peers lacking chunk i.
    std::int64_t lacking(int i) const { return total - holders[i]; }

    // Peers lacking chunk i that hold between 1 and k-2 chunks.
    std::int64_t mid_lacking(int i) const {
        return lacking(i) - empty_peers - sole_missing[i];
    }

    std::int64_t min_holders() const {
        std::int64_t m = holders[0];
        for (auto h : holders) m = std::min(m, h);
        return m;
    }

    // Sum over chunks of the lacking counts.
    std::int64_t total_lacking() const {
        std::int64_t s = 0;
        for (int i = 0; i < chunk_count(); ++i) s += lacking(i);
        return s;
    }

    bool operator==(const Aggregates&) const = default;
};

enum class TransitionKind { arrival, download, departure };

// One entry of the CTMC generator row at the current state: an event and the
// rate at which it fires. A departure is the download that completes a
// (k-1)-chunk profile; the peer leaves in the same instant.
template <class Rate = double>
struct Transition {
    TransitionKind kind = TransitionKind::arrival;
    ChunkSet profile{};  // class of the acting peer; unused for arrivals
    int chunk = -1;      // chunk downloaded; unused for arrivals
    Rate rate{};

    static Transition arrival(Rate rate) { return {TransitionKind::arrival, ChunkSet{}, -1, std::move(rate)}; }
    static Transition download(ChunkSet profile, int chunk, Rate rate) {
        return {TransitionKind::download, profile, chunk, std::move(rate)};
    }
    static Transition departure(ChunkSet profile, int chunk, Rate rate) {
        return {TransitionKind::departure, profile, chunk, std::move(rate)};
    }
};

// Population of peer profiles, seed implicit. Aggregates are maintained
// incrementally on every mutation; recompute_aggregates() rebuilds them from
// scratch for consistency checks.
class SwarmState {
public:
    explicit SwarmState(int k) : k_(validate_k(k)), agg_(k) {}

    SwarmState(int k, std::span<const std::pair<ChunkSet, std::int64_t>> profiles)
        : SwarmState(k) {
        for (const auto& [profile, count] : profiles) {
            if (count <= 0)
                throw std::invalid_argument("profile count must be positive");
            check_profile(profile);
            profiles_[profile] += count;
            for (std::int64_t i = 0; i < count; ++i) account_add(profile);
        }
    }

    SwarmState(int k, std::initializer_list<std::pair<ChunkSet, std::int64_t>> profiles)
        : SwarmState(k, std::span<const std::pair<ChunkSet, std::int64_t>>(
                            profiles.begin(), profiles.size())) {}

    int chunk_count() const { return k_; }
    ChunkSet seed_profile() const { return ChunkSet::full(k_); }

    const std::map<ChunkSet, std::int64_t>& profiles() const { return profiles_; }

    std::int64_t count(ChunkSet profile) const {
        auto it = profiles_.find(profile);
        return it == profiles_.end() ? 0 : it->second;
    }

    const Aggregates& aggregates() const { return agg_; }

    // Rebuilds the aggregates by walking the profile map.
    Aggregates recompute_aggregates() const {
        Aggregates agg(k_);
        for (const auto& [profile, count] : profiles_) {
            agg.total += count;
            if (profile.empty()) agg.empty_peers += count;
            for (int i = 0; i < k_; ++i)
                if (profile.contains(i)) agg.holders[i] += count;
            if (profile.cardinality() == k_ - 1)
                agg.sole_missing[profile.missing_chunk(k_)] += count;
        }
        return agg;
    }

    void add_peer(ChunkSet profile) {
        check_profile(profile);
        profiles_[profile] += 1;
        account_add(profile);
    }

    void remove_peer(ChunkSet profile) {
        auto it = profiles_.find(profile);
        if (it == profiles_.end())
            throw std::invalid_argument("profile absent from state");
        if (--it->second == 0) profiles_.erase(it);
        account_remove(profile);
    }

    template <class Rate>
    void apply(const Transition<Rate>& t) {
        switch (t.kind) {
            case TransitionKind::arrival:
                add_peer(ChunkSet{});
                return;
            case TransitionKind::download: {
                require_present(t.profile);
                if (t.profile.contains(t.chunk))
                    throw std::invalid_argument("download of a chunk already held");
                ChunkSet next = t.profile.with(t.chunk);
                if (next.is_full(k_))
                    throw std::invalid_argument(
                        "download completing the file must be a departure");
                remove_peer(t.profile);
                add_peer(next);
                return;
            }
            case TransitionKind::departure: {
                require_present(t.profile);
                if (t.profile.cardinality() != k_ - 1)
                    throw std::invalid_argument(
                        "departing profile must hold exactly k-1 chunks");
                if (t.chunk >= 0 && t.chunk != t.profile.missing_chunk(k_))
                    throw std::invalid_argument("departure chunk is not the missing one");
                remove_peer(t.profile);
                return;
            }
        }
        throw std::logic_error("unknown transition kind");
    }

    bool operator==(const SwarmState& other) const {
        return k_ == other.k_ && profiles_ == other.profiles_;
    }

private:
    static int validate_k(int k) {
        if (k < 2)
            throw std::invalid_argument("chunk count must be at least 2");
        if (k > max_chunks)
            throw std::invalid_argument("chunk count exceeds " + std::to_string(max_chunks));
        return k;
    }

    void check_profile(ChunkSet profile) const {
        if (!profile.fits(k_))
            throw std::invalid_argument("profile contains a chunk index >= k");
        if (profile.is_full(k_))
            throw std::invalid_argument("a stored peer profile may not be the full set");
    }

    void require_present(ChunkSet profile) const {
        if (count(profile) == 0)
            throw std::invalid_argument("profile absent from state");
    }

    void account_add(ChunkSet profile) {
        agg_.total += 1;
        if (profile.empty()) agg_.empty_peers += 1;
        for (int i = 0; i < k_; ++i)
            if (profile.contains(i)) agg_.holders[i] += 1;
        if (profile.cardinality() == k_ - 1)
            agg_.sole_missing[profile.missing_chunk(k_)] += 1;
    }

    void account_remove(ChunkSet profile) {
        agg_.total -= 1;
        if (profile.empty()) agg_.empty_peers -= 1;
        for (int i = 0; i < k_; ++i)
            if (profile.contains(i)) agg_.holders[i] -= 1;
        if (profile.cardinality() == k_ - 1)
            agg_.sole_missing[profile.missing_chunk(k_)] -= 1;
    }

    int k_;
    std::map<ChunkSet, std::int64_t> profiles_;
    Aggregates agg_;
};

template <class Rate>
SwarmState apply(SwarmState state, const Transition<Rate>& t) {
    state.apply(t);
    return state;
}

}  // namespace chunkswarm
