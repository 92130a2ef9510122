#pragma once

#include <array>
#include <cstdint>

#include "bazam/bytes.hpp"
#include "bazam/rng.hpp"

namespace bazam::puf {

inline constexpr std::size_t kResponseBytes = 32;
inline constexpr std::size_t kChallengeBytes = 32;

using Response = std::array<std::uint8_t, kResponseBytes>;

// Software stand-in for a physical unclonable function: HMAC-SHA256 of the
// challenge under a hidden per-device seed. The seed cannot be read back.
class PufDevice {
public:
    // Manufactures a device with a fresh random seed.
    static PufDevice manufacture(Rng& rng, double noise_rate = 0.0);

    PufDevice(const PufDevice&) = default;
    PufDevice& operator=(const PufDevice&) = default;
    ~PufDevice();

    double noise_rate() const { return noise_rate_; }
    // The same physical device under different operating conditions.
    PufDevice with_noise_rate(double noise_rate) const { return PufDevice(secret_, noise_rate); }

    // Noiseless evaluation. Throws ConfigError if the device is noisy.
    Response evaluate(ByteView challenge) const;
    // Each output bit flips independently with probability noise_rate.
    Response evaluate(ByteView challenge, Rng& noise) const;

private:
    PufDevice(const std::array<std::uint8_t, 32>& secret, double noise_rate);
    Response clean_response(ByteView challenge) const;

    std::array<std::uint8_t, 32> secret_;
    double noise_rate_;
};

}  // namespace bazam::puf
