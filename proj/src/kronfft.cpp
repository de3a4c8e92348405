#include "krivine/kronfft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace krivine {

namespace {

constexpr unsigned long long kSpanLimit = 1ull << 20;

unsigned long long next_pow2(unsigned long long n) {
    unsigned long long p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft(std::vector<std::complex<double>>& a, bool invert) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * M_PI / static_cast<double>(len) * (invert ? 1.0 : -1.0);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                auto u = a[i + j];
                auto v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (invert)
        for (auto& x : a) x /= static_cast<double>(n);
}

Integer lcm_of_denominators(const Polynomial& p) {
    Integer l = 1;
    for (const auto& [e, c] : p.terms()) {
        Integer d = c.get_den();
        mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), d.get_mpz_t());
    }
    return l;
}

Integer max_abs_coeff(const UnivariatePoly& u) {
    Integer m = 0;
    for (const auto& [d, c] : u) {
        Integer a = abs(c);
        if (a > m) m = a;
    }
    return m;
}

} // namespace

KroneckerContext choose_degree_bound(const Polynomial& p, const Polynomial& q) {
    if (p.nvars() != q.nvars())
        throw std::invalid_argument("choose_degree_bound: nvars mismatch");
    unsigned long long maxsum = 0;
    for (int k = 0; k < p.nvars(); ++k)
        maxsum = std::max<unsigned long long>(
            maxsum, static_cast<unsigned long long>(p.degree_in_var(k)) + q.degree_in_var(k));
    return KroneckerContext{p.nvars(), maxsum + 1};
}

UnivariatePoly to_univariate(const Polynomial& p, const KroneckerContext& ctx) {
    if (p.nvars() != ctx.nvars)
        throw std::invalid_argument("to_univariate: nvars mismatch");
    UnivariatePoly u;
    for (const auto& [e, c] : p.terms()) {
        if (c.get_den() != 1)
            throw std::invalid_argument("to_univariate: coefficients must be integers");
        unsigned __int128 nu = 0, base = 1;
        for (int k = 0; k < ctx.nvars; ++k) {
            if (e[k] >= ctx.degree_bound)
                throw std::invalid_argument("to_univariate: exponent >= degree bound");
            nu += static_cast<unsigned __int128>(e[k]) * base;
            base *= ctx.degree_bound;
            if (base > (static_cast<unsigned __int128>(1) << 62) && k + 1 < ctx.nvars)
                throw std::invalid_argument("to_univariate: packed degree overflow");
        }
        u[static_cast<unsigned long long>(nu)] = c.get_num();
    }
    return u;
}

Polynomial from_univariate(const UnivariatePoly& u, const KroneckerContext& ctx) {
    Polynomial p(ctx.nvars);
    for (const auto& [deg, c] : u) {
        if (c == 0) continue;
        unsigned long long nu = deg;
        ExponentVec e(ctx.nvars, 0);
        for (int k = 0; k < ctx.nvars; ++k) {
            e[k] = static_cast<unsigned>(nu % ctx.degree_bound);
            nu /= ctx.degree_bound;
        }
        if (nu != 0)
            throw std::invalid_argument("from_univariate: degree >= D^nvars");
        p.set_coeff(e, Rational(c));
    }
    return p;
}

std::optional<std::vector<long long>> fft_convolve(const std::vector<long long>& u,
                                                   const std::vector<long long>& v) {
    if (u.empty() || v.empty()) return std::vector<long long>{};
    long long mu = 0, mv = 0;
    for (long long x : u) mu = std::max(mu, std::llabs(x));
    for (long long x : v) mv = std::max(mv, std::llabs(x));
    const std::size_t out_len = u.size() + v.size() - 1;
    const unsigned long long n = next_pow2(out_len);
    // Guard: every exact convolution coefficient stays below 2^52, so the
    // double mantissa represents it and rounding recovers the integer.
    unsigned __int128 bound = static_cast<unsigned __int128>(n);
    bound *= static_cast<unsigned long long>(mu);
    bound *= static_cast<unsigned long long>(mv);
    if (bound >= (static_cast<unsigned __int128>(1) << 52)) return std::nullopt;

    std::vector<std::complex<double>> fa(n), fb(n);
    for (std::size_t i = 0; i < u.size(); ++i) fa[i] = static_cast<double>(u[i]);
    for (std::size_t i = 0; i < v.size(); ++i) fb[i] = static_cast<double>(v[i]);
    fft(fa, false);
    fft(fb, false);
    for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
    fft(fa, true);

    std::vector<long long> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        const double raw = fa[i].real();
        const long long r = std::llround(raw);
        if (std::fabs(raw - static_cast<double>(r)) >= 0.1) return std::nullopt;
        out[i] = r;
    }
    return out;
}

FastMulTrace fast_mul_traced(const Polynomial& p, const Polynomial& q,
                             std::optional<unsigned long long> forced_degree_bound) {
    if (p.nvars() != q.nvars())
        throw std::invalid_argument("fast_mul: nvars mismatch");
    FastMulTrace tr{KroneckerContext{p.nvars(), 1}, false, {}, {}, {}, Polynomial(p.nvars())};
    if (p.is_zero() || q.is_zero()) return tr;

    tr.ctx = choose_degree_bound(p, q);
    if (forced_degree_bound) {
        if (*forced_degree_bound < tr.ctx.degree_bound)
            throw std::invalid_argument("fast_mul: forced degree bound too small");
        tr.ctx.degree_bound = *forced_degree_bound;
    }

    // Packed span of the product's dense coefficient array.
    unsigned __int128 span = 1, base = 1;
    bool too_wide = false;
    for (int k = 0; k < p.nvars() && !too_wide; ++k) {
        span += (static_cast<unsigned __int128>(p.degree_in_var(k)) + q.degree_in_var(k)) * base;
        base *= tr.ctx.degree_bound;
        if (span > kSpanLimit || base > (static_cast<unsigned __int128>(1) << 62))
            too_wide = true;
    }
    if (too_wide || span > kSpanLimit) {
        tr.product = poly_mul_naive(p, q);
        return tr;
    }

    const Integer sp = lcm_of_denominators(p);
    const Integer sq = lcm_of_denominators(q);
    Polynomial pi = poly_scale(p, Rational(sp));
    Polynomial qi = poly_scale(q, Rational(sq));
    tr.p_uni = to_univariate(pi, tr.ctx);
    tr.q_uni = to_univariate(qi, tr.ctx);

    const unsigned long long du = tr.p_uni.rbegin()->first;
    const unsigned long long dv = tr.q_uni.rbegin()->first;
    const unsigned long long n = next_pow2(du + dv + 1);
    const Integer ma = max_abs_coeff(tr.p_uni), mb = max_abs_coeff(tr.q_uni);
    Integer guard = Integer(static_cast<unsigned long>(n)) * ma * mb;
    Integer limit = 1;
    mpz_mul_2exp(limit.get_mpz_t(), limit.get_mpz_t(), 52);
    if (guard >= limit) {
        tr.product = poly_mul_naive(p, q);
        return tr;
    }

    std::vector<long long> a(du + 1, 0), b(dv + 1, 0);
    for (const auto& [d, c] : tr.p_uni) a[d] = c.get_si();
    for (const auto& [d, c] : tr.q_uni) b[d] = c.get_si();
    auto conv = fft_convolve(a, b);
    if (!conv) {
        tr.product = poly_mul_naive(p, q);
        return tr;
    }
    tr.used_fft = true;
    for (std::size_t i = 0; i < conv->size(); ++i)
        if ((*conv)[i] != 0) tr.conv[i] = Integer(static_cast<long>((*conv)[i]));

    Polynomial prod_int = from_univariate(tr.conv, tr.ctx);
    tr.product = poly_scale(prod_int, make_rational(Integer(1), sp * sq));
    return tr;
}

Polynomial fast_mul(const Polynomial& p, const Polynomial& q) {
    return fast_mul_traced(p, q).product;
}

} // namespace krivine
