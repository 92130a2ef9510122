#include "type_a.hpp"

#include <array>
#include <cstdint>

namespace bazam::crypto::detail {

const TypeA& params() {
    static const TypeA t = [] {
        TypeA c;
        c.p = mpz_class(
            "8780710799663312522437781984754049815806883199414208211028653399266475630880222957078625179422662221423155858"
            "769582317459277713367317481324925129998224791");
        c.q = mpz_class("730750818665451621361119245571504901405976559617");
        c.cofactor = (c.p + 1) / c.q;
        c.sqrt_exp = (c.p + 1) / 4;
        return c;
    }();
    return t;
}

bool fp_sqrt(mpz_class& r, const mpz_class& a) {
    mpz_class cand;
    mpz_powm(cand.get_mpz_t(), a.get_mpz_t(), params().sqrt_exp.get_mpz_t(), params().p.get_mpz_t());
    mpz_class check;
    fp_sqr(check, cand);
    if (check != a) return false;
    r = cand;
    return true;
}

namespace {

// ---------------------------------------------------------------------------
// F_p in Montgomery form, R = 2^512. p has its top bit set, so reduced values
// fill exactly eight limbs and intermediate sums need one extra carry word.

constexpr int kLimbs = 8;
using u64 = std::uint64_t;
using u128 = unsigned __int128;

struct Fp {
    std::array<u64, kLimbs> v{};
    bool is_zero() const {
        u64 acc = 0;
        for (auto x : v) acc |= x;
        return acc == 0;
    }
    friend bool operator==(const Fp&, const Fp&) = default;
};

struct Mont {
    Fp p;
    Fp r2;   // R^2 mod p
    Fp one;  // R mod p
    u64 n0;  // -p^{-1} mod 2^64
};

Fp limbs_of(const mpz_class& x) {
    Fp f;
    std::size_t count = 0;
    mpz_export(f.v.data(), &count, -1, sizeof(u64), 0, 0, x.get_mpz_t());
    return f;
}

mpz_class mpz_of(const Fp& f) {
    mpz_class x;
    mpz_import(x.get_mpz_t(), kLimbs, -1, sizeof(u64), 0, 0, f.v.data());
    return x;
}

const Mont& mont() {
    static const Mont m = [] {
        Mont c;
        const auto& p = params().p;
        c.p = limbs_of(p);
        mpz_class r = mpz_class(1) << 512;
        c.one = limbs_of(r % p);
        c.r2 = limbs_of((r * r) % p);
        // Newton iteration for p^{-1} mod 2^64.
        u64 inv = 1;
        for (int i = 0; i < 6; ++i) inv *= 2 - c.p.v[0] * inv;
        c.n0 = ~inv + 1;
        return c;
    }();
    return m;
}

bool geq_p(const std::array<u64, kLimbs>& t) {
    const auto& p = mont().p.v;
    for (int i = kLimbs - 1; i >= 0; --i) {
        if (t[i] != p[i]) return t[i] > p[i];
    }
    return true;
}

void sub_p(std::array<u64, kLimbs>& t) {
    const auto& p = mont().p.v;
    u64 borrow = 0;
    for (int i = 0; i < kLimbs; ++i) {
        u128 d = static_cast<u128>(t[i]) - p[i] - borrow;
        t[i] = static_cast<u64>(d);
        borrow = static_cast<u64>(d >> 64) & 1;
    }
}

// Montgomery product on GMP's mpn kernels: full 16-limb product, then REDC.
void mul(Fp& r, const Fp& a, const Fp& b) {
    const auto& m = mont();
    std::array<mp_limb_t, 2 * kLimbs + 1> t{};
    mpn_mul_n(t.data(), reinterpret_cast<const mp_limb_t*>(a.v.data()), reinterpret_cast<const mp_limb_t*>(b.v.data()),
              kLimbs);
    const auto* pl = reinterpret_cast<const mp_limb_t*>(m.p.v.data());
    mp_limb_t top = 0;
    for (int i = 0; i < kLimbs; ++i) {
        const mp_limb_t k = t[i] * m.n0;
        mp_limb_t c = mpn_addmul_1(t.data() + i, pl, kLimbs, k);
        top += mpn_add_1(t.data() + i + kLimbs, t.data() + i + kLimbs, kLimbs - i, c);
    }
    std::array<u64, kLimbs> out;
    std::copy(t.begin() + kLimbs, t.begin() + 2 * kLimbs, out.begin());
    if (top != 0 || geq_p(out)) sub_p(out);
    r.v = out;
}

void sqr(Fp& r, const Fp& a) { mul(r, a, a); }

void add(Fp& r, const Fp& a, const Fp& b) {
    u64 carry = 0;
    std::array<u64, kLimbs> out;
    for (int i = 0; i < kLimbs; ++i) {
        u128 s = static_cast<u128>(a.v[i]) + b.v[i] + carry;
        out[i] = static_cast<u64>(s);
        carry = static_cast<u64>(s >> 64);
    }
    if (carry || geq_p(out)) sub_p(out);
    r.v = out;
}

void sub(Fp& r, const Fp& a, const Fp& b) {
    u64 borrow = 0;
    std::array<u64, kLimbs> out;
    for (int i = 0; i < kLimbs; ++i) {
        u128 d = static_cast<u128>(a.v[i]) - b.v[i] - borrow;
        out[i] = static_cast<u64>(d);
        borrow = static_cast<u64>(d >> 64) & 1;
    }
    if (borrow) {
        const auto& p = mont().p.v;
        u64 carry = 0;
        for (int i = 0; i < kLimbs; ++i) {
            u128 s = static_cast<u128>(out[i]) + p[i] + carry;
            out[i] = static_cast<u64>(s);
            carry = static_cast<u64>(s >> 64);
        }
    }
    r.v = out;
}

void dbl(Fp& r, const Fp& a) { add(r, a, a); }

Fp to_mont(const mpz_class& x) {
    Fp r;
    mul(r, limbs_of(x), mont().r2);
    return r;
}

mpz_class from_mont(const Fp& x) {
    Fp one_plain;
    one_plain.v[0] = 1;
    Fp r;
    mul(r, x, one_plain);
    return mpz_of(r);
}

void inv(Fp& r, const Fp& a) {
    mpz_class x = from_mont(a);
    mpz_invert(x.get_mpz_t(), x.get_mpz_t(), params().p.get_mpz_t());
    r = to_mont(x);
}

// ---------------------------------------------------------------------------
// F_p2 = F_p[i] / (i^2 + 1)

struct Fq2 {
    Fp a, b;
};

Fq2 fq2_one() { return Fq2{mont().one, Fp{}}; }

void fq2_mul(Fq2& r, const Fq2& x, const Fq2& y) {
    Fp ac, bd, s1, s2;
    mul(ac, x.a, y.a);
    mul(bd, x.b, y.b);
    add(s1, x.a, x.b);
    add(s2, y.a, y.b);
    mul(s1, s1, s2);
    sub(s1, s1, ac);
    sub(r.b, s1, bd);
    sub(r.a, ac, bd);
}

void fq2_sqr(Fq2& r, const Fq2& x) {
    // (a+bi)^2 = (a+b)(a-b) + 2ab i
    Fp s, d, ab;
    add(s, x.a, x.b);
    sub(d, x.a, x.b);
    mul(ab, x.a, x.b);
    mul(r.a, s, d);
    dbl(r.b, ab);
}

// With a^2 + b^2 = 1: real = 2a^2 - 1, imag = (a+b)^2 - 1.
void fq2_unitary_sqr(Fq2& r, const Fq2& x) {
    Fp t, s;
    sqr(t, x.a);
    dbl(t, t);
    add(s, x.a, x.b);
    sqr(s, s);
    sub(r.a, t, mont().one);
    sub(r.b, s, mont().one);
}

Fq2 fq2_unitary_pow(const Fq2& base, const mpz_class& e) {
    Fq2 acc = fq2_one();
    if (e == 0) return acc;
    const auto bits = mpz_sizeinbase(e.get_mpz_t(), 2);
    // 4-bit fixed window.
    std::array<Fq2, 16> table;
    table[1] = base;
    for (int i = 2; i < 16; ++i) fq2_mul(table[i], table[i - 1], base);
    const long top = static_cast<long>((bits + 3) / 4) * 4 - 1;
    for (long i = top; i >= 0; i -= 4) {
        for (int k = 0; k < 4; ++k) fq2_unitary_sqr(acc, acc);
        unsigned w = 0;
        for (int k = 0; k < 4; ++k) {
            w <<= 1;
            if (mpz_tstbit(e.get_mpz_t(), static_cast<mp_bitcnt_t>(i - k))) w |= 1;
        }
        if (w) fq2_mul(acc, acc, table[w]);
    }
    return acc;
}

Fq2 to_fq2(const Fp2& x) { return Fq2{to_mont(x.a), to_mont(x.b)}; }
Fp2 to_fp2(const Fq2& x) { return Fp2{from_mont(x.a), from_mont(x.b)}; }

// ---------------------------------------------------------------------------
// E: y^2 = x^3 + x in Jacobian coordinates (x = X/Z^2, y = Y/Z^3).

struct MAffine {
    Fp x, y;
    bool inf = true;
};

struct Jacobian {
    Fp X, Y, Z;
    bool inf = true;
};

MAffine to_m(const Affine& p) {
    MAffine m;
    if (p.inf) return m;
    m.x = to_mont(p.x);
    m.y = to_mont(p.y);
    m.inf = false;
    return m;
}

Jacobian to_jacobian(const MAffine& p) {
    Jacobian j;
    if (p.inf) return j;
    j.X = p.x;
    j.Y = p.y;
    j.Z = mont().one;
    j.inf = false;
    return j;
}

MAffine normalize(const Jacobian& j) {
    MAffine a;
    if (j.inf) return a;
    Fp zi, zi2, zi3;
    inv(zi, j.Z);
    sqr(zi2, zi);
    mul(zi3, zi2, zi);
    mul(a.x, j.X, zi2);
    mul(a.y, j.Y, zi3);
    a.inf = false;
    return a;
}

Affine to_plain(const MAffine& m) {
    Affine a;
    if (m.inf) return a;
    a.x = from_mont(m.x);
    a.y = from_mont(m.y);
    a.inf = false;
    return a;
}

void jac_double(Jacobian& v) {
    if (v.inf) return;
    if (v.Y.is_zero()) {
        v.inf = true;
        return;
    }
    Fp xx, yy, yyyy, zz, s, m, t;
    sqr(xx, v.X);
    sqr(yy, v.Y);
    sqr(yyyy, yy);
    sqr(zz, v.Z);
    mul(s, v.X, yy);
    dbl(s, s);
    dbl(s, s);
    dbl(m, xx);
    add(m, m, xx);
    sqr(t, zz);
    add(m, m, t);
    mul(v.Z, v.Y, v.Z);
    dbl(v.Z, v.Z);
    sqr(v.X, m);
    sub(v.X, v.X, s);
    sub(v.X, v.X, s);
    sub(t, s, v.X);
    mul(t, m, t);
    dbl(yyyy, yyyy);
    dbl(yyyy, yyyy);
    dbl(yyyy, yyyy);
    sub(v.Y, t, yyyy);
}

void jac_add_affine(Jacobian& v, const MAffine& p) {
    if (p.inf) return;
    if (v.inf) {
        v = to_jacobian(p);
        return;
    }
    Fp zz, u2, s2, h, r, hh, hhh, v1, x3, y3, t;
    sqr(zz, v.Z);
    mul(u2, p.x, zz);
    mul(s2, p.y, v.Z);
    mul(s2, s2, zz);
    sub(h, u2, v.X);
    sub(r, s2, v.Y);
    if (h.is_zero()) {
        if (r.is_zero()) jac_double(v);
        else v.inf = true;
        return;
    }
    sqr(hh, h);
    mul(hhh, h, hh);
    mul(v1, v.X, hh);
    sqr(x3, r);
    sub(x3, x3, hhh);
    sub(x3, x3, v1);
    sub(x3, x3, v1);
    sub(y3, v1, x3);
    mul(y3, r, y3);
    mul(t, v.Y, hhh);
    sub(v.Y, y3, t);
    v.X = x3;
    mul(v.Z, v.Z, h);
}

}  // namespace

void fp2_mul(Fp2& r, const Fp2& x, const Fp2& y) {
    Fq2 out;
    fq2_mul(out, to_fq2(x), to_fq2(y));
    r = to_fp2(out);
}

Fp2 fp2_unitary_pow(const Fp2& base, const mpz_class& e) { return to_fp2(fq2_unitary_pow(to_fq2(base), e)); }

Affine affine_add(const Affine& p, const Affine& q) {
    Jacobian j = to_jacobian(to_m(p));
    jac_add_affine(j, to_m(q));
    return to_plain(normalize(j));
}

Affine affine_mul(const mpz_class& k, const Affine& p) {
    if (p.inf || k == 0) return {};
    const MAffine base = to_m(p);
    // 4-bit fixed window; table entries normalized so additions stay mixed.
    std::array<MAffine, 16> table;
    table[1] = base;
    {
        Jacobian acc = to_jacobian(base);
        for (int i = 2; i < 16; ++i) {
            jac_add_affine(acc, base);
            table[i] = normalize(acc);
        }
    }
    const auto bits = mpz_sizeinbase(k.get_mpz_t(), 2);
    Jacobian acc;
    const long top = static_cast<long>((bits + 3) / 4) * 4 - 1;
    for (long i = top; i >= 0; i -= 4) {
        for (int s = 0; s < 4; ++s) jac_double(acc);
        unsigned w = 0;
        for (int s = 0; s < 4; ++s) {
            w <<= 1;
            if (mpz_tstbit(k.get_mpz_t(), static_cast<mp_bitcnt_t>(i - s))) w |= 1;
        }
        if (w) jac_add_affine(acc, table[w]);
    }
    return to_plain(normalize(acc));
}

Fp2 tate(const Affine& p_in, const Affine& q_in) {
    if (p_in.inf || q_in.inf) return Fp2{};

    const MAffine p = to_m(p_in);
    const MAffine q = to_m(q_in);
    const auto& order = params().q;
    const auto bits = mpz_sizeinbase(order.get_mpz_t(), 2);

    Jacobian v = to_jacobian(p);
    Fq2 f = fq2_one();
    Fq2 line;
    Fp zz, xx, yy, m, t, s, zq;

    // Lines are evaluated at phi(Q) = (-xQ, i*yQ) and scaled by F_p factors,
    // which the (p - 1) part of the final exponentiation removes. Vertical
    // lines evaluate into F_p for the same reason and are skipped.
    for (long i = static_cast<long>(bits) - 2; i >= 0; --i) {
        // Doubling: real = M(xQ*Z^2 + X) - 2Y^2, imag = 2YZ * Z^2 * yQ.
        sqr(zz, v.Z);
        sqr(xx, v.X);
        sqr(yy, v.Y);
        dbl(m, xx);
        add(m, m, xx);
        sqr(t, zz);
        add(m, m, t);
        mul(t, q.x, zz);
        add(t, t, v.X);
        mul(t, m, t);
        dbl(s, yy);
        sub(line.a, t, s);
        mul(zq, v.Y, v.Z);
        dbl(zq, zq);
        mul(zq, zq, zz);
        mul(line.b, zq, q.y);

        fq2_sqr(f, f);
        fq2_mul(f, f, line);
        jac_double(v);

        if (mpz_tstbit(order.get_mpz_t(), static_cast<mp_bitcnt_t>(i))) {
            // Addition with P: real = R(xQ + xP) - Z3*yP, imag = Z3*yQ.
            Fp u2, s2, h, r, z3;
            sqr(zz, v.Z);
            mul(u2, p.x, zz);
            mul(s2, p.y, v.Z);
            mul(s2, s2, zz);
            sub(h, u2, v.X);
            sub(r, s2, v.Y);
            if (h.is_zero()) {
                // V = -P: the vertical line; only reached on the final bit.
                v.inf = true;
                continue;
            }
            mul(z3, v.Z, h);
            add(t, q.x, p.x);
            mul(t, r, t);
            mul(s, z3, p.y);
            sub(line.a, t, s);
            mul(line.b, z3, q.y);
            fq2_mul(f, f, line);
            jac_add_affine(v, p);
        }
    }

    // f^(p-1) = conj(f)^2 / N(f), then raise to (p+1)/q.
    Fp norm, b2, ninv;
    sqr(norm, f.a);
    sqr(b2, f.b);
    add(norm, norm, b2);
    inv(ninv, norm);
    Fq2 c{f.a, Fp{}};
    sub(c.b, Fp{}, f.b);
    fq2_sqr(c, c);
    mul(c.a, c.a, ninv);
    mul(c.b, c.b, ninv);
    return to_fp2(fq2_unitary_pow(c, params().cofactor));
}

}  // namespace bazam::crypto::detail
