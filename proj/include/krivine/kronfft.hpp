#pragma once

#include "krivine/poly.hpp"

#include <map>
#include <optional>
#include <vector>

namespace krivine {

// Packing base shared by one multiplication: variable k contributes
// exponent * D^(k-1) to the univariate degree.
struct KroneckerContext {
    int nvars = 1;
    unsigned long long degree_bound = 1; // D
};

// Smallest collision-free base for the product: D = 1 + max_k(deg_k p + deg_k q).
KroneckerContext choose_degree_bound(const Polynomial& p, const Polynomial& q);

// Univariate image, sparse map packed-degree -> integer coefficient.
using UnivariatePoly = std::map<unsigned long long, Integer>;

// Requires integer coefficients and per-variable degrees < D.
UnivariatePoly to_univariate(const Polynomial& p, const KroneckerContext& ctx);
// Inverse unpacking by repeated mod/div with D; requires degrees < D^nvars.
Polynomial from_univariate(const UnivariatePoly& u, const KroneckerContext& ctx);

// Exact integer convolution through a complex double FFT of size
// N = 2^ceil(log2(len_u + len_v - 1)), coefficients recovered by nearest-int
// rounding. Returns nullopt when the precision guard N*max|u|*max|v| < 2^52
// fails (or a rounding residual reaches 0.1); the caller falls back to the
// schoolbook product.
std::optional<std::vector<long long>> fft_convolve(const std::vector<long long>& u,
                                                   const std::vector<long long>& v);

// Exact product for rational polynomials. Rational inputs are scaled by the
// LCM of their denominators, multiplied as integer polynomials through the
// Kronecker + FFT pipeline, and scaled back. Falls back to poly_mul_naive
// when the packed degree span exceeds 2^20 or the precision guard fires,
// so the result is always exact.
Polynomial fast_mul(const Polynomial& p, const Polynomial& q);

// Same pipeline with every intermediate exposed; forced_degree_bound
// overrides the context base D (compatibility knob for fixed-base tests).
struct FastMulTrace {
    KroneckerContext ctx;
    bool used_fft = false;
    UnivariatePoly p_uni, q_uni, conv;
    Polynomial product;
};
FastMulTrace fast_mul_traced(const Polynomial& p, const Polynomial& q,
                             std::optional<unsigned long long> forced_degree_bound = {});

} // namespace krivine
