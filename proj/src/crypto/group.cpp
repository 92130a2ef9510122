#include <sodium.h>

#include <array>

#include "bazam/crypto.hpp"
#include "type_a.hpp"

namespace bazam::crypto {

using detail::Affine;
using detail::Fp2;

namespace {

thread_local OpCounter* active_counter = nullptr;

template <auto Field>
void count() {
    if (active_counter) ++(active_counter->*Field);
}

Affine to_affine(const G1Elem& p) {
    Affine a;
    if (p.is_identity()) return a;
    a.x = p.x();
    a.y = p.y();
    a.inf = false;
    return a;
}

G1Elem from_affine(const Affine& a) {
    if (a.inf) return G1Elem::identity();
    return G1Elem::from_affine_unchecked(a.x, a.y);
}

void write_fixed(Bytes& out, const mpz_class& v, std::size_t width) {
    const std::size_t start = out.size();
    out.resize(start + width, 0);
    std::size_t count = 0;
    const auto needed = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
    if (v == 0) return;
    if (needed > width) throw Error("integer too wide for fixed-width encoding");
    mpz_export(out.data() + start + (width - needed), &count, 1, 1, 1, 0, v.get_mpz_t());
}

mpz_class read_fixed(ByteView b) {
    mpz_class v;
    if (!b.empty()) mpz_import(v.get_mpz_t(), b.size(), 1, 1, 1, 0, b.data());
    return v;
}

// Hash-to-field style expander: SHA-256(dst_len || dst || counter || block || msg) blocks.
Bytes expand(std::string_view dst, std::uint32_t counter, ByteView msg, std::size_t out_len) {
    Bytes out;
    out.reserve(out_len + crypto_hash_sha256_BYTES);
    for (std::uint32_t block = 0; out.size() < out_len; ++block) {
        crypto_hash_sha256_state st;
        crypto_hash_sha256_init(&st);
        const std::uint8_t dst_len = static_cast<std::uint8_t>(dst.size());
        crypto_hash_sha256_update(&st, &dst_len, 1);
        crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(dst.data()), dst.size());
        std::array<std::uint8_t, 8> ctr{};
        for (int i = 0; i < 4; ++i) ctr[i] = static_cast<std::uint8_t>(counter >> (24 - 8 * i));
        for (int i = 0; i < 4; ++i) ctr[4 + i] = static_cast<std::uint8_t>(block >> (24 - 8 * i));
        crypto_hash_sha256_update(&st, ctr.data(), ctr.size());
        crypto_hash_sha256_update(&st, msg.data(), msg.size());
        std::array<std::uint8_t, crypto_hash_sha256_BYTES> digest;
        crypto_hash_sha256_final(&st, digest.data());
        out.insert(out.end(), digest.begin(), digest.end());
    }
    out.resize(out_len);
    return out;
}

G1Elem hash_to_g1(std::string_view dst, ByteView input) {
    const auto& tp = detail::params();
    for (std::uint32_t ctr = 0;; ++ctr) {
        auto d = expand(dst, ctr, input, 81);
        mpz_class x = read_fixed(ByteView(d).first(80)) % tp.p;
        mpz_class rhs, y;
        detail::fp_sqr(rhs, x);
        detail::fp_mul(rhs, rhs, x);
        detail::fp_add(rhs, rhs, x);
        if (!detail::fp_sqrt(y, rhs)) continue;
        const bool want_odd = (d[80] & 1) != 0;
        if (mpz_odd_p(y.get_mpz_t()) != static_cast<int>(want_odd)) detail::fp_neg(y, y);
        Affine pt{x, y, false};
        auto cleared = detail::affine_mul(tp.cofactor, pt);
        if (cleared.inf) continue;
        return from_affine(cleared);
    }
}

}  // namespace

const mpz_class& group_order() { return detail::params().q; }
const mpz_class& field_prime() { return detail::params().p; }

// --- Scalar ----------------------------------------------------------------

Scalar::Scalar(const mpz_class& v) {
    mpz_mod(v_.get_mpz_t(), v.get_mpz_t(), group_order().get_mpz_t());
}

Scalar Scalar::random_nonzero(Rng& rng) {
    // 256 random bits reduced into [1, q-1]; bias is below 2^-96.
    auto b = rng.bytes(32);
    mpz_class v = read_fixed(b);
    mpz_class qm1 = group_order() - 1;
    mpz_class r;
    mpz_mod(r.get_mpz_t(), v.get_mpz_t(), qm1.get_mpz_t());
    return Scalar(r + 1);
}

Scalar Scalar::decode(ByteView bytes) {
    if (bytes.size() != kScalarBytes) throw DecodeError("scalar encoding must be 20 bytes");
    mpz_class v = read_fixed(bytes);
    if (v >= group_order()) throw DecodeError("scalar out of range");
    Scalar s;
    s.v_ = v;
    return s;
}

Bytes Scalar::encode() const {
    Bytes out;
    write_fixed(out, v_, kScalarBytes);
    return out;
}

Scalar Scalar::inverse() const {
    if (is_zero()) throw Error("zero scalar has no inverse");
    mpz_class r;
    mpz_invert(r.get_mpz_t(), v_.get_mpz_t(), group_order().get_mpz_t());
    return Scalar(r);
}

Scalar operator+(const Scalar& a, const Scalar& b) { return Scalar(a.v_ + b.v_); }
Scalar operator-(const Scalar& a, const Scalar& b) { return Scalar(a.v_ - b.v_); }
Scalar operator*(const Scalar& a, const Scalar& b) { return Scalar(a.v_ * b.v_); }

// --- G1 --------------------------------------------------------------------

G1Elem G1Elem::from_affine_unchecked(mpz_class x, mpz_class y) {
    G1Elem e;
    e.x_ = std::move(x);
    e.y_ = std::move(y);
    e.inf_ = false;
    return e;
}

bool operator==(const G1Elem& a, const G1Elem& b) {
    if (a.inf_ || b.inf_) return a.inf_ == b.inf_;
    return a.x_ == b.x_ && a.y_ == b.y_;
}

Bytes G1Elem::encode() const {
    Bytes out;
    out.reserve(kG1Bytes);
    if (inf_) {
        out.assign(kG1Bytes, 0);
        return out;
    }
    out.push_back(mpz_odd_p(y_.get_mpz_t()) ? 0x03 : 0x02);
    write_fixed(out, x_, kFieldBytes);
    return out;
}

G1Elem G1Elem::decode(ByteView bytes) {
    if (bytes.size() != kG1Bytes) throw DecodeError("G1 encoding has wrong width");
    const auto tag = bytes[0];
    auto body = bytes.subspan(1);
    if (tag == 0x00) {
        for (auto b : body)
            if (b != 0) throw DecodeError("non-canonical G1 identity");
        return identity();
    }
    if (tag != 0x02 && tag != 0x03) throw DecodeError("bad G1 tag");
    mpz_class x = read_fixed(body);
    if (x >= field_prime()) throw DecodeError("G1 x-coordinate out of range");
    mpz_class rhs, y;
    detail::fp_sqr(rhs, x);
    detail::fp_mul(rhs, rhs, x);
    detail::fp_add(rhs, rhs, x);
    if (!detail::fp_sqrt(y, rhs)) throw DecodeError("G1 point not on curve");
    if (mpz_odd_p(y.get_mpz_t()) != (tag == 0x03 ? 1 : 0)) detail::fp_neg(y, y);
    if (y == 0 && tag == 0x03) throw DecodeError("non-canonical G1 parity");
    Affine a{x, y, false};
    if (!detail::affine_mul(group_order(), a).inf) throw DecodeError("G1 point outside the order-q subgroup");
    return from_affine_unchecked(x, y);
}

// --- G2 --------------------------------------------------------------------

G2Elem G2Elem::from_components_unchecked(mpz_class a, mpz_class b) {
    G2Elem e;
    e.a_ = std::move(a);
    e.b_ = std::move(b);
    return e;
}

Bytes G2Elem::encode() const {
    Bytes out;
    out.reserve(kG2Bytes);
    out.push_back(mpz_odd_p(b_.get_mpz_t()) ? 0x03 : 0x02);
    write_fixed(out, a_, kFieldBytes);
    return out;
}

G2Elem G2Elem::decode(ByteView bytes) {
    if (bytes.size() != kG2Bytes) throw DecodeError("G2 encoding has wrong width");
    const auto tag = bytes[0];
    if (tag != 0x02 && tag != 0x03) throw DecodeError("bad G2 tag");
    mpz_class a = read_fixed(bytes.subspan(1));
    if (a >= field_prime()) throw DecodeError("G2 component out of range");
    // b^2 = 1 - a^2
    mpz_class a2, b2, b;
    detail::fp_sqr(a2, a);
    detail::fp_sub(b2, mpz_class(1), a2);
    if (!detail::fp_sqrt(b, b2)) throw DecodeError("G2 element does not have norm 1");
    if (mpz_odd_p(b.get_mpz_t()) != (tag == 0x03 ? 1 : 0)) detail::fp_neg(b, b);
    if (b == 0 && tag == 0x03) throw DecodeError("non-canonical G2 parity");
    Fp2 z{a, b};
    auto check = detail::fp2_unitary_pow(z, group_order());
    if (check.a != 1 || check.b != 0) throw DecodeError("G2 element outside the order-q subgroup");
    return from_components_unchecked(a, b);
}

// --- counting scope --------------------------------------------------------

OpScope::OpScope(OpCounter& counter) : previous_(active_counter) { active_counter = &counter; }
OpScope::~OpScope() { active_counter = previous_; }

// --- setup -----------------------------------------------------------------

const G1Elem& generator() {
    static const G1Elem g = hash_to_g1("BAZAM-GENERATOR", to_bytes("type-a generator"));
    return g;
}

SetupResult setup(std::size_t k, std::size_t l, Rng& rng) {
    if (k != kOrderBits) throw ConfigError("the Type A backend supports only k = 160 (got " + std::to_string(k) + ")");
    if (l % 8 != 0 || l < 128 || l > 512) throw ConfigError("key length l must be a multiple of 8 in [128, 512]");
    SetupResult r;
    r.params.order_bits = k;
    r.params.key_bits = l;
    r.params.generator = generator();
    r.ssk = Scalar::random_nonzero(rng);
    r.spk = from_affine(detail::affine_mul(r.ssk.value(), to_affine(r.params.generator)));
    return r;
}

// --- hash oracles ----------------------------------------------------------

G1Elem h1(ByteView input) {
    count<&OpCounter::n_hash>();
    return hash_to_g1("BAZAM-H1", input);
}

SymKey h2(const G2Elem& z, std::size_t key_bits) {
    if (z.is_zero()) throw Error("h2 input must be a nonzero G2 element");
    if (key_bits % 8 != 0 || key_bits == 0) throw ConfigError("h2 output length must be a whole number of bytes");
    count<&OpCounter::n_hash>();
    return SymKey(expand("BAZAM-H2", 0, z.encode(), key_bits / 8));
}

Scalar h3(ByteView data, const G2Elem& r) {
    count<&OpCounter::n_hash>();
    ByteWriter w;
    w.var(data).var(r.encode());
    auto d = expand("BAZAM-H3", 0, w.bytes(), 40);
    mpz_class v = read_fixed(d);
    mpz_class qm1 = group_order() - 1;
    mpz_class out;
    mpz_mod(out.get_mpz_t(), v.get_mpz_t(), qm1.get_mpz_t());
    return Scalar(out + 1);
}

// --- algebra ---------------------------------------------------------------

G2Elem pairing(const G1Elem& a, const G1Elem& b) {
    count<&OpCounter::n_pairing>();
    auto f = detail::tate(to_affine(a), to_affine(b));
    return G2Elem::from_components_unchecked(std::move(f.a), std::move(f.b));
}

G1Elem scalar_mul(const Scalar& s, const G1Elem& p) {
    count<&OpCounter::n_mul_g1>();
    return from_affine(detail::affine_mul(s.value(), to_affine(p)));
}

G1Elem g1_add(const G1Elem& p, const G1Elem& q) {
    count<&OpCounter::n_add_g1>();
    return from_affine(detail::affine_add(to_affine(p), to_affine(q)));
}

G1Elem g1_neg(const G1Elem& p) {
    if (p.is_identity()) return p;
    mpz_class y;
    detail::fp_neg(y, p.y());
    return G1Elem::from_affine_unchecked(p.x(), y);
}

G2Elem g2_exp(const G2Elem& z, const Scalar& s) {
    count<&OpCounter::n_exp_g2>();
    auto r = detail::fp2_unitary_pow(Fp2{z.real(), z.imag()}, s.value());
    return G2Elem::from_components_unchecked(std::move(r.a), std::move(r.b));
}

G2Elem g2_mul(const G2Elem& a, const G2Elem& b) {
    count<&OpCounter::n_mul_g2>();
    Fp2 r;
    detail::fp2_mul(r, Fp2{a.real(), a.imag()}, Fp2{b.real(), b.imag()});
    return G2Elem::from_components_unchecked(std::move(r.a), std::move(r.b));
}

// --- symmetric cipher ------------------------------------------------------

namespace {
Bytes chacha_xor(const SymKey& key, ByteView in, std::uint64_t nonce) {
    std::array<std::uint8_t, crypto_stream_chacha20_KEYBYTES> k{};
    if (key.size() == k.size()) {
        std::copy(key.bytes().begin(), key.bytes().end(), k.begin());
    } else {
        if (key.size() == 0) throw Error("symmetric key is empty");
        crypto_hash_sha256(k.data(), key.bytes().data(), key.size());
    }
    std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> n{};
    for (std::size_t i = 0; i < n.size(); ++i) n[n.size() - 1 - i] = static_cast<std::uint8_t>(nonce >> (8 * i));
    Bytes out(in.size());
    if (!in.empty()) crypto_stream_chacha20_xor(out.data(), in.data(), in.size(), n.data(), k.data());
    sodium_memzero(k.data(), k.size());
    return out;
}
}  // namespace

Bytes sym_encrypt(const SymKey& key, ByteView plaintext, std::uint64_t nonce) {
    return chacha_xor(key, plaintext, nonce);
}
Bytes sym_decrypt(const SymKey& key, ByteView ciphertext, std::uint64_t nonce) {
    return chacha_xor(key, ciphertext, nonce);
}

}  // namespace bazam::crypto
