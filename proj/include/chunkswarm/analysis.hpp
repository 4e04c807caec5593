#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include "chunkswarm/rational.hpp"
#include "chunkswarm/rules.hpp"
#include "chunkswarm/swarm_state.hpp"

namespace chunkswarm {

// Exact enumeration refuses sample sizes and class counts beyond these; the
// simulator covers anything larger.
inline constexpr int max_enumeration_draws = 6;
inline constexpr double max_enumeration_samples = 1e7;  // bound on d^m

// Population size up to which callers default to rational arithmetic.
inline constexpr std::int64_t exact_population_limit = 512;

namespace detail {

struct PopulationClass {
    ChunkSet profile;
    std::int64_t count;
};

// Distinct profile classes of the drawing population: the seed first, then
// every stored class.
inline std::vector<PopulationClass> population_classes(const SwarmState& state) {
    std::vector<PopulationClass> classes;
    classes.reserve(state.profiles().size() + 1);
    classes.push_back({state.seed_profile(), 1});
    for (const auto& [profile, count] : state.profiles())
        classes.push_back({profile, count});
    return classes;
}

inline std::int64_t binomial(int n, int r) {
    if (r < 0 || r > n) return 0;
    r = std::min(r, n - r);
    std::int64_t result = 1;
    for (int i = 1; i <= r; ++i) result = result * (n - r + i) / i;
    return result;
}

template <class Scalar>
Scalar scalar_pow(const Scalar& base, int exp) {
    Scalar r(1);
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

// Visits every multiset of `draws` profiles over the population classes,
// together with its probability under i.i.d. uniform draws over the S
// individuals. Individuals of equal profile are exchangeable, so a
// composition with multinomial weight stands in for all its orderings.
template <class Scalar, class Visitor>
void enumerate_samples(const std::vector<PopulationClass>& classes,
                       std::int64_t population, int draws, Visitor&& visit) {
    std::vector<ChunkSet> sample;
    sample.reserve(draws);
    const Scalar inv_population = Scalar(1) / Scalar(population);
    auto rec = [&](auto&& self, std::size_t index, int remaining, Scalar weight) -> void {
        if (remaining == 0) {
            visit(std::span<const ChunkSet>(sample.data(), sample.size()), weight);
            return;
        }
        const Scalar p = Scalar(classes[index].count) * inv_population;
        if (index + 1 == classes.size()) {
            Scalar w = weight * scalar_pow(p, remaining);
            sample.insert(sample.end(), remaining, classes[index].profile);
            visit(std::span<const ChunkSet>(sample.data(), sample.size()), w);
            sample.resize(sample.size() - remaining);
            return;
        }
        for (int take = 0; take <= remaining; ++take) {
            Scalar w = weight * Scalar(binomial(remaining, take)) * scalar_pow(p, take);
            sample.insert(sample.end(), take, classes[index].profile);
            self(self, index + 1, remaining - take, w);
            sample.resize(sample.size() - take);
        }
    };
    rec(rec, 0, draws, Scalar(1));
}

inline void check_enumeration_limits(std::size_t class_count, int draws) {
    if (draws > max_enumeration_draws)
        throw std::domain_error("exact enumeration refuses more than " +
                                std::to_string(max_enumeration_draws) + " draws");
    if (std::pow(static_cast<double>(class_count), draws) > max_enumeration_samples)
        throw std::domain_error("exact enumeration refuses this many class combinations");
}

}  // namespace detail

// Per-chunk download probability of one sampling event of a peer with the
// given profile, drawing from this state's population. The profile need not
// be present; the hypothetical peer draws from the population as-is.
template <class Scalar>
struct Distribution {
    std::vector<Scalar> chunk_mass;
    Scalar none{};

    Scalar total() const {
        Scalar t{};
        for (const Scalar& x : chunk_mass) t += x;
        return t;
    }
};

template <class Scalar>
Distribution<Scalar> download_distribution(const SwarmState& state, ChunkSet profile,
                                           const Rule& rule) {
    const int k = state.chunk_count();
    if (!profile.fits(k))
        throw std::invalid_argument("profile contains a chunk index >= k");
    if (profile.is_full(k))
        throw std::invalid_argument("the full profile never downloads");

    const int draws = sample_size(profile, rule, k);
    const auto classes = detail::population_classes(state);
    detail::check_enumeration_limits(classes.size(), draws);

    Distribution<Scalar> dist{std::vector<Scalar>(k, Scalar{}), Scalar{}};
    detail::enumerate_samples<Scalar>(
        classes, state.aggregates().total, draws,
        [&](std::span<const ChunkSet> sample, const Scalar& weight) {
            Decision d = decide(profile, sample, rule, k);
            if (!d.downloads()) {
                dist.none += weight;
                return;
            }
            Scalar share = weight / Scalar(d.option_count());
            for (int c = 0; c < k; ++c)
                if (d.candidates.contains(c)) dist.chunk_mass[c] += share;
        });
    return dist;
}

// Exact per-state stochastic intensities. All entries are probabilities per
// sampling event; peers sample at unit rate, so they double as rates.
template <class Scalar>
struct RateProfile {
    Scalar total_rate{};       // r: count-weighted download rate over all classes
    Scalar empty_peer_rate{};  // r0: sum of empty_downloads

    // Per-peer rate an empty peer downloads chunk i. Zeroed when the state
    // has no empty peer (empty_class_present distinguishes that case).
    std::vector<Scalar> empty_downloads;

    // Per-peer rate a peer missing only chunk i downloads it and leaves.
    // Computed for the hypothetical member when the class is absent.
    std::vector<Scalar> completion_rates;

    bool empty_class_present = false;

    // Per stored class: per-peer download probability per sampling event.
    std::vector<std::pair<ChunkSet, Scalar>> class_rates;
};

template <class Scalar>
RateProfile<Scalar> rate_profile(const SwarmState& state, const Rule& rule) {
    const int k = state.chunk_count();
    RateProfile<Scalar> rp;
    rp.empty_downloads.assign(k, Scalar{});
    rp.completion_rates.assign(k, Scalar{});
    rp.empty_class_present = state.aggregates().empty_peers > 0;

    for (const auto& [profile, count] : state.profiles()) {
        auto dist = download_distribution<Scalar>(state, profile, rule);
        Scalar per_peer = dist.total();
        rp.total_rate += Scalar(count) * per_peer;
        if (profile.empty()) rp.empty_downloads = dist.chunk_mass;
        if (profile.cardinality() == k - 1) {
            int missing = profile.missing_chunk(k);
            rp.completion_rates[missing] = dist.chunk_mass[missing];
        }
        rp.class_rates.emplace_back(profile, std::move(per_peer));
    }
    for (int i = 0; i < k; ++i) {
        ChunkSet near_complete = ChunkSet::full(k).without(i);
        if (state.count(near_complete) == 0)
            rp.completion_rates[i] =
                download_distribution<Scalar>(state, near_complete, rule).chunk_mass[i];
    }
    for (const Scalar& x : rp.empty_downloads) rp.empty_peer_rate += x;
    return rp;
}

// The generator row at this state: one arrival entry plus one entry per
// (stored class, downloadable chunk) with positive rate.
template <class Scalar>
std::vector<Transition<Scalar>> transitions(const SwarmState& state, const Rule& rule,
                                            const Scalar& arrival_rate) {
    if (!(arrival_rate > Scalar{}))
        throw std::invalid_argument("arrival rate must be positive");
    const int k = state.chunk_count();
    std::vector<Transition<Scalar>> out;
    out.push_back(Transition<Scalar>::arrival(arrival_rate));
    for (const auto& [profile, count] : state.profiles()) {
        auto dist = download_distribution<Scalar>(state, profile, rule);
        const bool completes = profile.cardinality() == k - 1;
        for (int c = 0; c < k; ++c) {
            if (dist.chunk_mass[c] == Scalar{}) continue;
            Scalar rate = Scalar(count) * dist.chunk_mass[c];
            out.push_back(completes
                              ? Transition<Scalar>::departure(profile, c, std::move(rate))
                              : Transition<Scalar>::download(profile, c, std::move(rate)));
        }
    }
    return out;
}

// State functions whose drift the checkers evaluate. l1 sums the per-chunk
// lacking counts. combined adds the exponential part scaled against a linear
// term. two_chunk is the quadratic function for the k = 2 rare-chunk system.
struct LyapunovSpec {
    enum class Kind { l1, combined, two_chunk };

    Kind kind = Kind::l1;
    double scale = 0.0;  // weight of the linear part; combined only

    static LyapunovSpec l1() { return {Kind::l1, 0.0}; }
    static LyapunovSpec combined(double scale) {
        if (!(scale > 0)) throw std::invalid_argument("combined scale must be positive");
        return {Kind::combined, scale};
    }
    static LyapunovSpec two_chunk() { return {Kind::two_chunk, 0.0}; }

    bool operator==(const LyapunovSpec&) const = default;
};

template <class Scalar = double>
Scalar lyapunov(const SwarmState& state, const LyapunovSpec& spec) {
    const Aggregates& agg = state.aggregates();
    switch (spec.kind) {
        case LyapunovSpec::Kind::l1:
            return Scalar(agg.total_lacking());
        case LyapunovSpec::Kind::combined: {
            if constexpr (std::is_floating_point_v<Scalar>) {
                Scalar value = Scalar(spec.scale) * Scalar(agg.total_lacking());
                const Scalar s = Scalar(agg.total);
                for (int i = 0; i < agg.chunk_count(); ++i)
                    value += s * std::exp(-Scalar(agg.holders[i]));
                value += s * std::exp(-Scalar(agg.empty_peers));
                return value;
            } else {
                throw std::invalid_argument(
                    "combined Lyapunov value needs floating-point arithmetic");
            }
        }
        case LyapunovSpec::Kind::two_chunk: {
            if (state.chunk_count() != 2)
                throw std::invalid_argument("two_chunk Lyapunov requires k = 2");
            const Scalar s0(agg.empty_peers), s1(agg.holders[0]), s2(agg.holders[1]);
            const Scalar diff = s1 - s2;
            return Scalar(2) * (Scalar(2) * s0 + s1 + s2) + diff * diff;
        }
    }
    throw std::logic_error("unknown Lyapunov kind");
}

// Exact drift of the Lyapunov function at this state, with per-transition-kind
// breakdown. margin is the distance below zero.
template <class Scalar>
struct DriftReport {
    Scalar value{};
    Scalar margin{};
    Scalar arrival{};
    Scalar download{};
    Scalar departure{};
};

template <class Scalar>
DriftReport<Scalar> drift(const SwarmState& state, const Rule& rule,
                          const Scalar& arrival_rate, const LyapunovSpec& spec) {
    DriftReport<Scalar> report;
    const Scalar before = lyapunov<Scalar>(state, spec);
    for (const auto& t : transitions<Scalar>(state, rule, arrival_rate)) {
        SwarmState next = state;
        next.apply(t);
        Scalar change = t.rate * (lyapunov<Scalar>(next, spec) - before);
        switch (t.kind) {
            case TransitionKind::arrival: report.arrival += change; break;
            case TransitionKind::download: report.download += change; break;
            case TransitionKind::departure: report.departure += change; break;
        }
    }
    report.value = report.arrival + report.download + report.departure;
    report.margin = -report.value;
    return report;
}

namespace detail {
inline void check_k(int k) {
    if (k < 2) throw std::invalid_argument("chunk count must be at least 2");
}
inline void check_lambda(double lambda) {
    if (!(lambda > 0)) throw std::invalid_argument("arrival rate must be positive");
}
}  // namespace detail

// Scale constant of the combined Lyapunov function: 108 e k^3.
inline double constant_C(int k) {
    detail::check_k(k);
    return 108.0 * std::numbers::e * std::pow(static_cast<double>(k), 3);
}

// Population threshold of the low-arrival-rate case: 3 k^3.
inline double threshold_case1(int k) {
    detail::check_k(k);
    return 3.0 * std::pow(static_cast<double>(k), 3);
}

// Population threshold for the 2-chunk rare-chunk system: 30 lambda (20 lambda + 1)^2.
inline double threshold_two_chunk(double lambda) {
    detail::check_lambda(lambda);
    return 30.0 * lambda * (20.0 * lambda + 1.0) * (20.0 * lambda + 1.0);
}

// Natural log of the combined-Lyapunov stability threshold
// 4 C k exp(3 C lambda k^2 exp(6 lambda k^4)). Finite far beyond where the
// raw value overflows.
inline double threshold_main_ln(int k, double lambda) {
    detail::check_k(k);
    detail::check_lambda(lambda);
    const double c = constant_C(k);
    const double k4 = std::pow(static_cast<double>(k), 4);
    const double inner = std::exp(6.0 * lambda * k4);
    return std::log(4.0 * c * k) + 3.0 * c * lambda * k * k * inner;
}

// The threshold itself. Saturates to +infinity when unrepresentable, which it
// is for every interesting (k, lambda); use threshold_main_ln to see why.
inline double threshold_main(int k, double lambda) {
    return std::exp(threshold_main_ln(k, lambda));
}

// r against its guaranteed lower bound; nonnegative margin means the
// inequality holds at this state.
template <class Scalar>
struct LemmaCheck {
    Scalar rate{};
    Scalar bound{};
    Scalar margin{};
};

namespace detail {
inline void require_base_protocol(const Rule& rule) {
    if (rule != Rule::common_chunk(3))
        throw std::invalid_argument("lemma bounds are proved for common_chunk(3) only");
}
}  // namespace detail

// r >= S r0^2 / (6 k^2).
template <class Scalar>
LemmaCheck<Scalar> check_lemma1(const SwarmState& state, const Rule& rule) {
    detail::require_base_protocol(rule);
    const auto rp = rate_profile<Scalar>(state, rule);
    const int k = state.chunk_count();
    Scalar bound = Scalar(state.aggregates().total) * rp.empty_peer_rate *
                   rp.empty_peer_rate / Scalar(6 * k * k);
    Scalar margin = rp.total_rate - bound;
    return {rp.total_rate, std::move(bound), std::move(margin)};
}

// r >= min_i S_i / (2 k^3), valid from S >= 12.
template <class Scalar>
LemmaCheck<Scalar> check_lemma2(const SwarmState& state, const Rule& rule) {
    detail::require_base_protocol(rule);
    if (state.aggregates().total < 12)
        throw std::domain_error("lemma 2 requires S >= 12");
    const auto rp = rate_profile<Scalar>(state, rule);
    const int k = state.chunk_count();
    Scalar bound = Scalar(state.aggregates().min_holders()) / Scalar(2 * k * k * k);
    Scalar margin = rp.total_rate - bound;
    return {rp.total_rate, std::move(bound), std::move(margin)};
}

struct DriftViolation {
    SwarmState state;
    double value;
};

// Outcome of a negative-drift sweep. min_margin is over checked states only
// and stays +infinity when nothing satisfied the condition.
struct DriftSweep {
    std::vector<DriftViolation> violations;
    double min_margin = std::numeric_limits<double>::infinity();
    std::size_t checked = 0;
    std::size_t skipped = 0;

    bool passed() const { return violations.empty(); }
};

template <class Scalar, class Condition>
DriftSweep check_drift_negative(std::span<const SwarmState> states, const Rule& rule,
                                const Scalar& arrival_rate, const LyapunovSpec& spec,
                                Condition&& condition) {
    DriftSweep sweep;
    for (const SwarmState& state : states) {
        if (!condition(state)) {
            ++sweep.skipped;
            continue;
        }
        ++sweep.checked;
        auto report = drift<Scalar>(state, rule, arrival_rate, spec);
        double value = to_double(report.value);
        if (!(report.value < Scalar{})) sweep.violations.push_back({state, value});
        sweep.min_margin = std::min(sweep.min_margin, -value);
    }
    return sweep;
}

}  // namespace chunkswarm
