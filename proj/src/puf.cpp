#include "bazam/puf.hpp"

#include <sodium.h>

namespace bazam::puf {

PufDevice::PufDevice(const std::array<std::uint8_t, 32>& secret, double noise_rate)
    : secret_(secret), noise_rate_(noise_rate) {
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw ConfigError("PUF noise rate must lie in [0, 1]");
}

PufDevice::~PufDevice() { sodium_memzero(secret_.data(), secret_.size()); }

PufDevice PufDevice::manufacture(Rng& rng, double noise_rate) {
    std::array<std::uint8_t, 32> secret;
    rng.fill(secret);
    return PufDevice(secret, noise_rate);
}

Response PufDevice::clean_response(ByteView challenge) const {
    if (challenge.empty()) throw Error("PUF challenge must be non-empty");
    Response out;
    crypto_auth_hmacsha256_state st;
    crypto_auth_hmacsha256_init(&st, secret_.data(), secret_.size());
    crypto_auth_hmacsha256_update(&st, challenge.data(), challenge.size());
    crypto_auth_hmacsha256_final(&st, out.data());
    return out;
}

Response PufDevice::evaluate(ByteView challenge) const {
    if (noise_rate_ > 0.0) throw ConfigError("noisy PUF evaluation needs a noise source");
    return clean_response(challenge);
}

Response PufDevice::evaluate(ByteView challenge, Rng& noise) const {
    auto out = clean_response(challenge);
    if (noise_rate_ == 0.0) return out;
    for (auto& byte : out) {
        for (int bit = 0; bit < 8; ++bit) {
            if (noise.chance(noise_rate_)) byte ^= static_cast<std::uint8_t>(1u << bit);
        }
    }
    return out;
}

}  // namespace bazam::puf
