#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "bazam/bytes.hpp"

namespace bazam {

// ChaCha20 keystream generator. Seeded instances are fully deterministic,
// which the simulation harness relies on for reproducible reports.
class Rng {
public:
    using Seed = std::array<std::uint8_t, 32>;

    explicit Rng(const Seed& key);
    explicit Rng(std::uint64_t seed);
    static Rng from_os();

    void fill(std::span<std::uint8_t> out);
    Bytes bytes(std::size_t n);
    std::uint64_t next_u64();
    // Uniform in [0, bound), bound > 0.
    std::uint64_t uniform(std::uint64_t bound);
    // Bernoulli trial with success probability p.
    bool chance(double p);
    // Child generator with an independent stream; used to hand actors their own randomness.
    Rng fork();

private:
    Seed key_;
    std::uint64_t block_ = 0;
};

}  // namespace bazam
