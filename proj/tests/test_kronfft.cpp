#include "doctest.h"

#include "krivine/kronfft.hpp"
#include "test_util.hpp"

#include <vector>

using namespace krivine;

namespace {

// Schoolbook integer convolution in 128-bit arithmetic.
std::vector<long long> conv_reference(const std::vector<long long>& u,
                                      const std::vector<long long>& v) {
    if (u.empty() || v.empty()) return {};
    std::vector<__int128> acc(u.size() + v.size() - 1, 0);
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j)
            acc[i + j] += static_cast<__int128>(u[i]) * v[j];
    std::vector<long long> out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<long long>(acc[i]);
    return out;
}

} // namespace

TEST_CASE("packing base is one plus the largest per-variable degree sum") {
    auto p = parse_polynomial("x1 + 3*x1*x2", 2);
    auto q = parse_polynomial("2*x2 - 5*x1^2", 2);
    CHECK(choose_degree_bound(p, q).degree_bound == 4);

    auto x1 = parse_polynomial("x1", 2);
    CHECK(choose_degree_bound(x1, x1).degree_bound == 3);

    auto c = parse_polynomial("7", 2);
    CHECK(choose_degree_bound(c, c).degree_bound == 1);
}

TEST_CASE("packing golden with base 5") {
    KroneckerContext ctx{2, 5};
    auto p = parse_polynomial("x1 + 3*x1*x2", 2);
    UnivariatePoly pu = to_univariate(p, ctx);
    CHECK(pu == UnivariatePoly{{1, Integer(1)}, {6, Integer(3)}});

    auto q = parse_polynomial("2*x2 - 5*x1^2", 2);
    UnivariatePoly qu = to_univariate(q, ctx);
    CHECK(qu == UnivariatePoly{{2, Integer(-5)}, {5, Integer(2)}});
}

TEST_CASE("unpacking golden with base 5: z^11 -> x1*x2^2") {
    KroneckerContext ctx{2, 5};
    UnivariatePoly u{{11, Integer(6)}};
    auto p = from_univariate(u, ctx);
    CHECK(p == parse_polynomial("6*x1*x2^2", 2));
}

TEST_CASE("packing rejects exponents at or above the base") {
    KroneckerContext ctx{2, 3};
    auto p = parse_polynomial("x1^3", 2);
    CHECK_THROWS_AS(to_univariate(p, ctx), std::invalid_argument);
    auto r = parse_polynomial("1/2*x1", 2);
    CHECK_THROWS_AS(to_univariate(r, ctx), std::invalid_argument);
    CHECK_THROWS_AS(from_univariate(UnivariatePoly{{9, Integer(1)}}, ctx),
                    std::invalid_argument);
}

TEST_CASE("pack/unpack round trip on random integer polynomials") {
    testutil::Rng rng(101);
    for (int i = 0; i < 200; ++i) {
        int n = 1 + static_cast<int>(rng() % 4);
        auto p = testutil::random_polynomial(rng, n, 5, 10, 50);
        auto ctx = choose_degree_bound(p, p);
        CHECK(from_univariate(to_univariate(p, ctx), ctx) == p);
    }
}

TEST_CASE("fft convolution matches schoolbook on random arrays") {
    testutil::Rng rng(103);
    for (int i = 0; i < 200; ++i) {
        std::size_t la = 1 + rng() % 64, lb = 1 + rng() % 64;
        std::vector<long long> u(la), v(lb);
        for (auto& x : u) x = static_cast<long long>(rng() % 2001) - 1000;
        for (auto& x : v) x = static_cast<long long>(rng() % 2001) - 1000;
        auto got = fft_convolve(u, v);
        REQUIRE(got.has_value());
        CHECK(*got == conv_reference(u, v));
    }
}

TEST_CASE("fft convolution declines when the magnitude guard fails") {
    std::vector<long long> u{1ll << 40}, v{1ll << 40};
    CHECK_FALSE(fft_convolve(u, v).has_value());
    std::vector<long long> ok_u{1ll << 20}, ok_v{1ll << 20};
    auto got = fft_convolve(ok_u, ok_v);
    REQUIRE(got.has_value());
    CHECK((*got)[0] == 1ll << 40);
}

TEST_CASE("fast multiply golden with forced base 5, every intermediate pinned") {
    auto p = parse_polynomial("x1 + 3*x1*x2", 2);
    auto q = parse_polynomial("2*x2 - 5*x1^2", 2);
    auto tr = fast_mul_traced(p, q, 5);
    CHECK(tr.ctx.degree_bound == 5);
    CHECK(tr.used_fft);
    CHECK(tr.p_uni == UnivariatePoly{{1, Integer(1)}, {6, Integer(3)}});
    CHECK(tr.q_uni == UnivariatePoly{{2, Integer(-5)}, {5, Integer(2)}});
    CHECK(tr.conv == UnivariatePoly{{3, Integer(-5)},
                                    {6, Integer(2)},
                                    {8, Integer(-15)},
                                    {11, Integer(6)}});
    CHECK(tr.product ==
          parse_polynomial("-5*x1^3 + 2*x1*x2 - 15*x1^3*x2 + 6*x1*x2^2", 2));
    CHECK(tr.product == poly_mul_naive(p, q));
}

TEST_CASE("fast multiply equals schoolbook on random integer pairs") {
    testutil::Rng rng(107);
    for (int i = 0; i < 500; ++i) {
        int n = 1 + static_cast<int>(rng() % 4);
        auto p = testutil::random_polynomial(rng, n, 5, 10, 10);
        auto q = testutil::random_polynomial(rng, n, 5, 10, 10);
        CHECK(fast_mul(p, q) == poly_mul_naive(p, q));
    }
}

TEST_CASE("fast multiply equals schoolbook on random rational pairs") {
    testutil::Rng rng(109);
    for (int i = 0; i < 200; ++i) {
        int n = 1 + static_cast<int>(rng() % 3);
        Polynomial p(n), q(n);
        auto pi = testutil::random_polynomial(rng, n, 4, 8, 12);
        auto qi = testutil::random_polynomial(rng, n, 4, 8, 12);
        for (const auto& [e, c] : pi.terms())
            p.add_term(e, c * testutil::random_rational(rng, 9, 9));
        for (const auto& [e, c] : qi.terms())
            q.add_term(e, c * testutil::random_rational(rng, 9, 9));
        CHECK(fast_mul(p, q) == poly_mul_naive(p, q));
    }
}

TEST_CASE("fast multiply identity and annihilator") {
    auto p = parse_polynomial("x1^2 - 3/7*x2 + 1", 2);
    CHECK(fast_mul(p, Polynomial(2)).is_zero());
    CHECK(fast_mul(p, parse_polynomial("1", 2)) == p);
}

TEST_CASE("oversized packed span falls back to the schoolbook product") {
    Polynomial p(1), q(1);
    p.set_coeff(ExponentVec{2000000}, Rational(3));
    p.set_coeff(ExponentVec{0}, Rational(1));
    q.set_coeff(ExponentVec{1500000}, Rational(2));
    auto tr = fast_mul_traced(p, q);
    CHECK_FALSE(tr.used_fft);
    CHECK(tr.product == poly_mul_naive(p, q));
}

TEST_CASE("huge coefficients fall back to the schoolbook product, still exact") {
    Polynomial p(2), q(2);
    Integer big = 1;
    mpz_mul_2exp(big.get_mpz_t(), big.get_mpz_t(), 60);
    p.set_coeff(ExponentVec{1, 0}, Rational(big));
    p.set_coeff(ExponentVec{0, 0}, Rational(1));
    q.set_coeff(ExponentVec{0, 1}, Rational(big));
    auto tr = fast_mul_traced(p, q);
    CHECK_FALSE(tr.used_fft);
    CHECK(tr.product == poly_mul_naive(p, q));
    CHECK(tr.product.coeff({1, 1}) == Rational(big * big));
}
