#pragma once

// Brute-force reference implementations for the exact-analysis results.
// Everything here enumerates ordered draw tuples over individual peers, the
// definitional model, so agreement with the library's class-multiset
// enumeration is a real cross-check rather than a tautology.

#include <cstdint>
#include <vector>

#include "chunkswarm/analysis.hpp"
#include "chunkswarm/rational.hpp"
#include "chunkswarm/rules.hpp"
#include "chunkswarm/swarm_state.hpp"

namespace testsupport {

using chunkswarm::ChunkSet;
using chunkswarm::Distribution;
using chunkswarm::LyapunovSpec;
using chunkswarm::Rational;
using chunkswarm::Rule;
using chunkswarm::SwarmState;

// The population as individuals, seed first.
inline std::vector<ChunkSet> individuals(const SwarmState& state) {
    std::vector<ChunkSet> out{state.seed_profile()};
    for (const auto& [profile, count] : state.profiles())
        for (std::int64_t i = 0; i < count; ++i) out.push_back(profile);
    return out;
}

// Download distribution by walking all S^m ordered samples, each with
// probability S^-m. Exponential in m; callers keep S small.
inline Distribution<Rational> brute_distribution(const SwarmState& state, ChunkSet profile,
                                                 const Rule& rule) {
    const int k = state.chunk_count();
    const auto pop = individuals(state);
    const int draws = chunkswarm::sample_size(profile, rule, k);

    Distribution<Rational> dist{std::vector<Rational>(k, Rational(0)), Rational(0)};
    const Rational weight =
        Rational(1) / chunkswarm::detail::scalar_pow(Rational(pop.size()), draws);

    std::vector<std::size_t> index(draws, 0);
    std::vector<ChunkSet> sample(draws);
    while (true) {
        for (int i = 0; i < draws; ++i) sample[i] = pop[index[i]];
        const chunkswarm::Decision d = chunkswarm::decide(profile, sample, rule, k);
        if (!d.downloads()) {
            dist.none += weight;
        } else {
            const Rational share = weight / Rational(d.option_count());
            for (int c = 0; c < k; ++c)
                if (d.candidates.contains(c)) dist.chunk_mass[c] += share;
        }
        int pos = draws - 1;
        while (pos >= 0 && ++index[pos] == pop.size()) index[pos--] = 0;
        if (pos < 0) break;
    }
    return dist;
}

// Exact drift from the brute-force distributions.
inline Rational brute_drift(const SwarmState& state, const Rule& rule,
                            const Rational& lambda, const LyapunovSpec& spec) {
    using chunkswarm::Transition;
    const int k = state.chunk_count();
    const Rational before = chunkswarm::lyapunov<Rational>(state, spec);
    auto change = [&](const Transition<Rational>& t) {
        SwarmState next = state;
        next.apply(t);
        return t.rate * (chunkswarm::lyapunov<Rational>(next, spec) - before);
    };

    Rational total = change(Transition<Rational>::arrival(lambda));
    for (const auto& [profile, count] : state.profiles()) {
        const auto dist = brute_distribution(state, profile, rule);
        const bool completes = profile.cardinality() == k - 1;
        for (int c = 0; c < k; ++c) {
            if (dist.chunk_mass[c] == 0) continue;
            const Rational rate = Rational(count) * dist.chunk_mass[c];
            total += change(completes ? Transition<Rational>::departure(profile, c, rate)
                                      : Transition<Rational>::download(profile, c, rate));
        }
    }
    return total;
}

}  // namespace testsupport
