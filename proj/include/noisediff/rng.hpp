// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

#include "noisediff/tensor.hpp"

namespace noisediff {

/// Reproducible random stream.
///
/// Algorithm (fixed, part of the file-format contract for golden outputs):
///   - state: xoshiro256** (Blackman & Vigna), four 64-bit words seeded by
///     running splitmix64 four times from `seed`;
///   - uniform(): top 53 bits of next() scaled by 2^-53, range [0, 1);
///   - normal(): basic Box-Muller on u1 = 1 - uniform() (in (0, 1]) and
///     u2 = uniform(), radius sqrt(-2 ln u1), returning r cos(2 pi u2) first
///     and caching r sin(2 pi u2) for the following call.
///
/// Bit-exact replay across platforms holds as long as std::log, std::cos and
/// std::sin agree, which is the case for glibc on x86-64 and aarch64.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() noexcept;
    double uniform() noexcept;
    double normal() noexcept;

    /// Uniform integer in [0, bound). Uses Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t bound) noexcept;

    /// Independent child stream; see derive_seed.
    SeededRng child(std::uint64_t stream) const { return SeededRng(derive_seed(seed_, stream)); }

    /// Seed for stream `stream` of parent `parent`:
    /// splitmix64(parent + 0x9E3779B97F4A7C15 * (stream + 1)).
    /// Parallel trials take child seeds from this so that results do not
    /// depend on scheduling.
    static std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) noexcept;

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_{};
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// I.i.d. N(0, std^2) entries drawn from `rng` in row-major order. std = 0 gives zeros
/// without consuming the stream.
Tensor sample_gaussian(SeededRng& rng, const Shape& shape, double std = 1.0);

}  // namespace noisediff
