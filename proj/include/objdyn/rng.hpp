#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (base_seed, session_index, stream, iteration, block), so sessions can be
// generated in any order or in parallel and still reproduce bit-for-bit.

#include "objdyn/core.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace objdyn::rng {

/// SplitMix64 finalizer; used to hash session indices into key material.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kW0;
            key[1] += kW1;
        }
        const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// Maps 64 random bits to a double in the open interval (0, 1). 52 bits
/// keep the half-step offset exactly representable at the top end.
constexpr double to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

enum class Stream : std::uint32_t { StepNoise = 0, InitialState = 1 };

/// Per-session view over the counter-based generator.
class SessionStream {
  public:
    SessionStream(std::uint64_t base_seed, std::uint64_t session_index) noexcept
        : seed_(base_seed ^ splitmix64(session_index)) {}

    std::uint64_t seed() const noexcept { return seed_; }

    /// Two uniforms in (0, 1) from block `block` of (stream, iteration).
    std::array<double, 2> uniform_pair(Stream stream, std::uint64_t iteration, std::uint32_t block) const noexcept {
        const PhiloxKey key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
        const PhiloxCounter ctr{static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(iteration >> 32),
                                block, static_cast<std::uint32_t>(stream)};
        const auto out = philox4x32_10(ctr, key);
        const std::uint64_t a = (std::uint64_t{out[0]} << 32) | out[1];
        const std::uint64_t b = (std::uint64_t{out[2]} << 32) | out[3];
        return {to_open_unit(a), to_open_unit(b)};
    }

    /// n independent standard normals for one iteration (Box-Muller).
    Vector normals(std::uint64_t iteration, std::size_t n, Stream stream = Stream::StepNoise) const {
        Vector z(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; i += 2) {
            const auto [u1, u2] = uniform_pair(stream, iteration, static_cast<std::uint32_t>(i / 2));
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double theta = 2.0 * std::numbers::pi * u2;
            z[static_cast<Eigen::Index>(i)] = r * std::cos(theta);
            if (i + 1 < n) z[static_cast<Eigen::Index>(i + 1)] = r * std::sin(theta);
        }
        return z;
    }

    /// n independent uniforms in (0, 1).
    Vector uniforms(std::uint64_t iteration, std::size_t n, Stream stream) const {
        Vector u(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; i += 2) {
            const auto pair = uniform_pair(stream, iteration, static_cast<std::uint32_t>(i / 2));
            u[static_cast<Eigen::Index>(i)] = pair[0];
            if (i + 1 < n) u[static_cast<Eigen::Index>(i + 1)] = pair[1];
        }
        return u;
    }

  private:
    std::uint64_t seed_;
};

}  // namespace objdyn::rng
