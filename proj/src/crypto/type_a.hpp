#pragma once

// Internal field and curve arithmetic. Nothing in here touches OpCounter;
// the public wrappers in group.cpp do the counting. The mpz helpers serve the
// cold paths (decoding, hashing); the group operations below run on a fixed
// eight-limb Montgomery representation inside type_a.cpp.

#include <gmpxx.h>

#include "bazam/crypto.hpp"

namespace bazam::crypto::detail {

struct TypeA {
    mpz_class p;          // field prime, p = cofactor * q - 1, p = 3 mod 4
    mpz_class q;          // subgroup order, 2^159 + 2^107 + 1
    mpz_class cofactor;   // (p + 1) / q
    mpz_class sqrt_exp;   // (p + 1) / 4
};

const TypeA& params();

// F_p helpers. Inputs are reduced; outputs are reduced.
inline void fp_mul(mpz_class& r, const mpz_class& a, const mpz_class& b) {
    mpz_mul(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    mpz_tdiv_r(r.get_mpz_t(), r.get_mpz_t(), params().p.get_mpz_t());
}
inline void fp_sqr(mpz_class& r, const mpz_class& a) { fp_mul(r, a, a); }
inline void fp_add(mpz_class& r, const mpz_class& a, const mpz_class& b) {
    mpz_add(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    if (mpz_cmp(r.get_mpz_t(), params().p.get_mpz_t()) >= 0) mpz_sub(r.get_mpz_t(), r.get_mpz_t(), params().p.get_mpz_t());
}
inline void fp_sub(mpz_class& r, const mpz_class& a, const mpz_class& b) {
    mpz_sub(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    if (mpz_sgn(r.get_mpz_t()) < 0) mpz_add(r.get_mpz_t(), r.get_mpz_t(), params().p.get_mpz_t());
}
inline void fp_neg(mpz_class& r, const mpz_class& a) {
    if (mpz_sgn(a.get_mpz_t()) == 0) r = 0;
    else mpz_sub(r.get_mpz_t(), params().p.get_mpz_t(), a.get_mpz_t());
}
inline void fp_inv(mpz_class& r, const mpz_class& a) { mpz_invert(r.get_mpz_t(), a.get_mpz_t(), params().p.get_mpz_t()); }

// Square root for p = 3 mod 4; false if a is a non-residue.
bool fp_sqrt(mpz_class& r, const mpz_class& a);

struct Fp2 {
    mpz_class a{1}, b{0};
};

void fp2_mul(Fp2& r, const Fp2& x, const Fp2& y);
// Exponentiation for norm-1 elements; exponent >= 0.
Fp2 fp2_unitary_pow(const Fp2& base, const mpz_class& e);

struct Affine {
    mpz_class x, y;
    bool inf = true;
};

Affine affine_add(const Affine& p, const Affine& q);
Affine affine_mul(const mpz_class& k, const Affine& p);

// Reduced Tate pairing e(P, phi(Q)) in F_p2, result of order dividing q.
Fp2 tate(const Affine& p, const Affine& q);

}  // namespace bazam::crypto::detail
