#pragma once

#include <array>
#include <concepts>
#include <cstdint>
#include <limits>

namespace bridgex {

/// Counter-based random source (Philox4x32-10).
///
/// A source is identified by (seed, stream). Streams with different ids are
/// independent by construction of the generator, so a batch assigns stream
/// `path_index` to each path and the result does not depend on how the batch
/// is scheduled across threads.
class RandomSource {
public:
    using result_type = std::uint64_t;

    explicit RandomSource(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept;

    static RandomSource for_path(std::uint64_t seed, std::uint64_t path_index) noexcept {
        return RandomSource(seed, path_index);
    }

    /// Child stream for a nested consumer; deterministic in (seed, stream, child).
    RandomSource split(std::uint64_t child) const noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    result_type operator()() noexcept;
    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept;
    /// Standard normal (Box-Muller, pairs cached).
    double normal() noexcept;

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Anything that yields standard normal variates. Generators are written
/// against this so tests can drive them with a deterministic noise stream.
template <class G>
concept NormalSource = requires(G& g) {
    { g.normal() } -> std::convertible_to<double>;
};

}  // namespace bridgex
