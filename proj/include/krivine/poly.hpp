#pragma once

#include "krivine/rational.hpp"

#include <map>
#include <string>
#include <vector>

namespace krivine {

// Exponent vector of a monomial; size equals the ambient variable count.
using ExponentVec = std::vector<unsigned>;

unsigned total_degree(const ExponentVec& e);

// Graded lexicographic order: lower total degree first; within a degree
// block, x1 has the highest priority, so (2,0) precedes (1,1) precedes (0,2).
// For n = 2, d = 2 this yields [1, x1, x2, x1^2, x1*x2, x2^2].
struct GradedLexLess {
    bool operator()(const ExponentVec& a, const ExponentVec& b) const;
};

// Sparse multivariate polynomial with exact rational coefficients.
// Invariants: every stored key has size nvars, no zero coefficient is kept,
// and the zero polynomial is the empty map (degree 0 by convention).
class Polynomial {
public:
    using TermMap = std::map<ExponentVec, Rational, GradedLexLess>;

    explicit Polynomial(int nvars);
    Polynomial(int nvars, std::initializer_list<std::pair<ExponentVec, Rational>> terms);

    int nvars() const { return nvars_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }

    Rational coeff(const ExponentVec& e) const;
    // Sets (or erases, when c == 0) the coefficient of monomial e.
    void set_coeff(const ExponentVec& e, const Rational& c);
    void add_term(const ExponentVec& e, const Rational& c);

    unsigned degree() const;                 // total degree; 0 for the zero polynomial
    unsigned degree_in_var(int var) const;   // max exponent of variable `var`

    bool operator==(const Polynomial& o) const = default;

private:
    int nvars_;
    TermMap terms_;
    void check_key(const ExponentVec& e) const;
};

Polynomial poly_add(const Polynomial& p, const Polynomial& q);
Polynomial poly_sub(const Polynomial& p, const Polynomial& q);
Polynomial poly_neg(const Polynomial& p);
Polynomial poly_scale(const Polynomial& p, const Rational& c);
// Schoolbook product; the reference multiplier every fast path is checked against.
Polynomial poly_mul_naive(const Polynomial& p, const Polynomial& q);

Rational evaluate(const Polynomial& p, const std::vector<Rational>& point);

// Axis-aligned box [lo_i, hi_i]^n with lo_i < hi_i enforced at construction.
class Box {
public:
    Box(std::vector<Rational> lo, std::vector<Rational> hi);
    int nvars() const { return static_cast<int>(lo_.size()); }
    const std::vector<Rational>& lo() const { return lo_; }
    const std::vector<Rational>& hi() const { return hi_; }

private:
    std::vector<Rational> lo_, hi_;
};

// Affine pullback onto the unit cube: substitutes x_i <- a_i + (b_i - a_i)*x_i,
// so g(x) = f(a + (b - a) .* x) and f >= 0 on the box iff g >= 0 on [0,1]^n.
Polynomial regularize(const Polynomial& f, const Box& box);

// All monomials of total degree <= max_degree in graded-lex order;
// size is C(nvars + max_degree, nvars).
std::vector<ExponentVec> monomial_basis(int nvars, unsigned max_degree);

// Product term x^alpha * (1-x)^beta of the unit-cube representation basis.
struct KrivineTerm {
    ExponentVec alpha, beta;

    unsigned degree() const { return total_degree(alpha) + total_degree(beta); }
    bool operator==(const KrivineTerm& o) const = default;
    bool operator<(const KrivineTerm& o) const;
};

// Expands x^alpha * (1-x)^beta into its monomial form.
Polynomial expand_krivine(const KrivineTerm& term, int nvars);

// Renders factored Krivine terms, e.g. "x1^2*(1-x2)"; "1" for the empty term.
std::string krivine_term_to_string(const KrivineTerm& term);

// Canonical text form, highest-degree terms first: "-x2^3 + 3*x2^2 - 3*x2 + 1".
// parse_polynomial accepts that form plus parenthesized factors with powers,
// so "8/3*(1-x2)^3" and "(x1+1)*(x1-1)" both parse. Round trip
// parse(to_string(p)) == p holds for every polynomial.
std::string to_string(const Polynomial& p);
Polynomial parse_polynomial(const std::string& text, int nvars);

} // namespace krivine
