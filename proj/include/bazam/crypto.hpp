#pragma once

// Pairing-group algebra over the PBC "Type A" supersingular curve
// y^2 = x^3 + x over F_p (512-bit p, 160-bit subgroup order q), embedding
// degree 2. The distortion map (x, y) -> (-x, i*y) makes the reduced Tate
// pairing a symmetric map G1 x G1 -> G2, with G2 the order-q subgroup of
// F_p2^* = F_p[i]/(i^2 + 1).
//
// Hardness rests on the modified bilinear Diffie-Hellman assumptions
// (computational and decisional); nothing here attempts a reduction.

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <string>

#include "bazam/bytes.hpp"
#include "bazam/rng.hpp"

namespace bazam::crypto {

// Encoded widths of the configured backend.
inline constexpr std::size_t kFieldBytes = 64;       // F_p element
inline constexpr std::size_t kScalarBytes = 20;      // Z_q element
inline constexpr std::size_t kG1Bytes = 1 + kFieldBytes;
inline constexpr std::size_t kG2Bytes = 1 + kFieldBytes;
inline constexpr std::size_t kOrderBits = 160;
inline constexpr std::size_t kDefaultKeyBits = 256;

const mpz_class& group_order();
const mpz_class& field_prime();

class Scalar {
public:
    Scalar() = default;
    // Reduces modulo q.
    explicit Scalar(const mpz_class& v);
    static Scalar from_u64(std::uint64_t v) { return Scalar(mpz_class(std::to_string(v))); }
    // Uniform in [1, q-1].
    static Scalar random_nonzero(Rng& rng);
    static Scalar decode(ByteView bytes);

    const mpz_class& value() const { return v_; }
    bool is_zero() const { return v_ == 0; }
    Bytes encode() const;
    Scalar inverse() const;

    friend Scalar operator+(const Scalar& a, const Scalar& b);
    friend Scalar operator-(const Scalar& a, const Scalar& b);
    friend Scalar operator*(const Scalar& a, const Scalar& b);
    friend bool operator==(const Scalar& a, const Scalar& b) { return a.v_ == b.v_; }

private:
    mpz_class v_{0};
};

// Affine point on the curve, always inside the order-q subgroup.
class G1Elem {
public:
    G1Elem() = default;  // identity
    static G1Elem identity() { return {}; }
    // Rejects off-curve points and points outside the order-q subgroup.
    static G1Elem decode(ByteView bytes);

    bool is_identity() const { return inf_; }
    const mpz_class& x() const { return x_; }
    const mpz_class& y() const { return y_; }
    // Compressed: tag (0x00 identity, 0x02/0x03 parity of y) then x, big-endian.
    Bytes encode() const;

    friend bool operator==(const G1Elem& a, const G1Elem& b);

    // Trusted constructor for points already known to be in the subgroup.
    static G1Elem from_affine_unchecked(mpz_class x, mpz_class y);

private:
    mpz_class x_{0}, y_{0};
    bool inf_ = true;
};

// Element of the order-q subgroup of F_p2^*, stored as a + b*i.
class G2Elem {
public:
    G2Elem() : a_(1), b_(0) {}  // identity
    static G2Elem identity() { return {}; }
    // Elements of order q have norm 1, so the encoding keeps a and the parity of b.
    static G2Elem decode(ByteView bytes);

    bool is_identity() const { return a_ == 1 && b_ == 0; }
    bool is_zero() const { return a_ == 0 && b_ == 0; }
    const mpz_class& real() const { return a_; }
    const mpz_class& imag() const { return b_; }
    Bytes encode() const;

    friend bool operator==(const G2Elem& a, const G2Elem& b) { return a.a_ == b.a_ && a.b_ == b.b_; }

    static G2Elem from_components_unchecked(mpz_class a, mpz_class b);

private:
    mpz_class a_, b_;
};

class SymKey {
public:
    SymKey() = default;
    explicit SymKey(Bytes key) : key_(std::move(key)) {}
    const Bytes& bytes() const { return key_; }
    std::size_t size() const { return key_.size(); }
    friend bool operator==(const SymKey&, const SymKey&) = default;

private:
    Bytes key_;
};

struct OpCounter {
    std::uint64_t n_pairing = 0;
    std::uint64_t n_mul_g1 = 0;
    std::uint64_t n_add_g1 = 0;
    std::uint64_t n_exp_g2 = 0;
    std::uint64_t n_mul_g2 = 0;
    std::uint64_t n_hash = 0;

    void reset() { *this = OpCounter{}; }
    friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

// Routes operation counts on the current thread into `counter` for the
// lifetime of the scope. Scopes nest; the innermost one receives the counts.
class OpScope {
public:
    explicit OpScope(OpCounter& counter);
    ~OpScope();
    OpScope(const OpScope&) = delete;
    OpScope& operator=(const OpScope&) = delete;

private:
    OpCounter* previous_;
};

struct SystemParams {
    std::size_t order_bits = kOrderBits;   // k
    std::size_t key_bits = kDefaultKeyBits;  // l
    G1Elem generator;
    std::string curve_name = "type-a-512-160";
    std::string h1_domain = "BAZAM-H1";
    std::string h2_domain = "BAZAM-H2";
    std::string h3_domain = "BAZAM-H3";

    std::size_t key_bytes() const { return key_bits / 8; }
};

struct SetupResult {
    SystemParams params;
    G1Elem spk;
    Scalar ssk;
};

// Fixed generator of G1, derived by hashing a public label onto the curve.
const G1Elem& generator();

// Throws ConfigError when k does not match the backend's 160-bit order or
// when l is not a whole number of bytes in [128, 512].
SetupResult setup(std::size_t k, std::size_t l, Rng& rng);

G1Elem h1(ByteView input);
SymKey h2(const G2Elem& z, std::size_t key_bits = kDefaultKeyBits);
Scalar h3(ByteView data, const G2Elem& r);

G2Elem pairing(const G1Elem& a, const G1Elem& b);
G1Elem scalar_mul(const Scalar& s, const G1Elem& p);
G1Elem g1_add(const G1Elem& p, const G1Elem& q);
G1Elem g1_neg(const G1Elem& p);
G2Elem g2_exp(const G2Elem& z, const Scalar& s);
G2Elem g2_mul(const G2Elem& a, const G2Elem& b);

// ChaCha20 keystream under the key (hashed to 32 bytes when l != 256). Each
// message under one key needs its own nonce.
Bytes sym_encrypt(const SymKey& key, ByteView plaintext, std::uint64_t nonce = 0);
Bytes sym_decrypt(const SymKey& key, ByteView ciphertext, std::uint64_t nonce = 0);

}  // namespace bazam::crypto
