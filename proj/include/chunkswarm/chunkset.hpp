#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace chunkswarm {

// Chunk indices are 0-based and fit in a 32-bit mask.
inline constexpr int max_chunks = 30;

// The set of chunks a peer currently holds (its profile), stored as a bitmask
// with bit i set iff chunk i is held.
class ChunkSet {
public:
    constexpr ChunkSet() = default;

    constexpr explicit ChunkSet(std::uint32_t bits) : bits_(bits) {}

    ChunkSet(std::initializer_list<int> chunks) {
        for (int c : chunks) insert(c);
    }

    // Profile of the seed: all k chunks.
    static constexpr ChunkSet full(int k) {
        return ChunkSet((std::uint32_t{1} << k) - 1);
    }

    constexpr std::uint32_t bits() const { return bits_; }
    constexpr bool contains(int chunk) const { return (bits_ >> chunk) & 1u; }
    constexpr int cardinality() const { return std::popcount(bits_); }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr bool is_full(int k) const { return bits_ == full(k).bits_; }

    // True when every member index is < k.
    constexpr bool fits(int k) const { return (bits_ & ~full(k).bits_) == 0; }

    void insert(int chunk) {
        check_index(chunk);
        bits_ |= std::uint32_t{1} << chunk;
    }

    constexpr ChunkSet with(int chunk) const {
        return ChunkSet(bits_ | (std::uint32_t{1} << chunk));
    }

    constexpr ChunkSet without(int chunk) const {
        return ChunkSet(bits_ & ~(std::uint32_t{1} << chunk));
    }

    // Index of the single missing chunk of a profile with k-1 members.
    int missing_chunk(int k) const {
        if (cardinality() != k - 1)
            throw std::logic_error("missing_chunk: profile does not have exactly k-1 chunks");
        return std::countr_zero(~bits_ & full(k).bits_);
    }

    auto operator<=>(const ChunkSet&) const = default;

private:
    static void check_index(int chunk) {
        if (chunk < 0 || chunk >= max_chunks)
            throw std::invalid_argument("chunk index out of range: " + std::to_string(chunk));
    }

    std::uint32_t bits_ = 0;
};

}  // namespace chunkswarm
