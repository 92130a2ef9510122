#include "bazam/rng.hpp"

#include <sodium.h>

#include <stdexcept>

namespace bazam {

namespace {
void init_sodium() {
    static const bool ok = sodium_init() >= 0;
    if (!ok) throw std::runtime_error("libsodium initialization failed");
}
}  // namespace

Rng::Rng(const Seed& key) : key_(key) { init_sodium(); }

Rng::Rng(std::uint64_t seed) {
    init_sodium();
    std::array<std::uint8_t, 24> material{};
    constexpr char kLabel[] = "bazam-rng-seed";
    std::copy(kLabel, kLabel + sizeof(kLabel) - 1, material.begin());
    for (int i = 0; i < 8; ++i) material[16 + i] = static_cast<std::uint8_t>(seed >> (56 - 8 * i));
    crypto_hash_sha256(key_.data(), material.data(), material.size());
}

Rng Rng::from_os() {
    init_sodium();
    Seed key;
    randombytes_buf(key.data(), key.size());
    return Rng(key);
}

void Rng::fill(std::span<std::uint8_t> out) {
    if (out.empty()) return;
    static const std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> kNonce{};
    std::fill(out.begin(), out.end(), 0);
    crypto_stream_chacha20_xor_ic(out.data(), out.data(), out.size(), kNonce.data(), block_, key_.data());
    block_ += (out.size() + 63) / 64;
}

Bytes Rng::bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
}

std::uint64_t Rng::next_u64() {
    std::array<std::uint8_t, 8> b;
    fill(b);
    std::uint64_t v = 0;
    for (auto x : b) v = (v << 8) | x;
    return v;
}

std::uint64_t Rng::uniform(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform bound must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (;;) {
        auto v = next_u64();
        if (v < limit) return v % bound;
    }
}

bool Rng::chance(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    // 53 random mantissa bits.
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u < p;
}

Rng Rng::fork() {
    Seed child;
    fill(child);
    return Rng(child);
}

}  // namespace bazam
