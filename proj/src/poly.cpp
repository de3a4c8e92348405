#include "krivine/poly.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace krivine {

unsigned total_degree(const ExponentVec& e) {
    unsigned d = 0;
    for (unsigned x : e) d += x;
    return d;
}

bool GradedLexLess::operator()(const ExponentVec& a, const ExponentVec& b) const {
    unsigned da = total_degree(a), db = total_degree(b);
    if (da != db) return da < db;
    // Same degree block: the lexicographically larger vector comes first.
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

Polynomial::Polynomial(int nvars) : nvars_(nvars) {
    if (nvars < 1) throw std::invalid_argument("polynomial: nvars must be >= 1");
}

Polynomial::Polynomial(int nvars, std::initializer_list<std::pair<ExponentVec, Rational>> terms)
    : Polynomial(nvars) {
    for (const auto& [e, c] : terms) add_term(e, c);
}

void Polynomial::check_key(const ExponentVec& e) const {
    if (static_cast<int>(e.size()) != nvars_)
        throw std::invalid_argument("polynomial: exponent vector size mismatch");
}

Rational Polynomial::coeff(const ExponentVec& e) const {
    check_key(e);
    auto it = terms_.find(e);
    return it == terms_.end() ? Rational(0) : it->second;
}

void Polynomial::set_coeff(const ExponentVec& e, const Rational& c) {
    check_key(e);
    if (c == 0)
        terms_.erase(e);
    else
        terms_[e] = c;
}

void Polynomial::add_term(const ExponentVec& e, const Rational& c) {
    check_key(e);
    if (c == 0) return;
    auto [it, inserted] = terms_.emplace(e, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

unsigned Polynomial::degree() const {
    if (terms_.empty()) return 0;
    // Map is graded-lex ordered, so the last key has the maximal total degree.
    return total_degree(std::prev(terms_.end())->first);
}

unsigned Polynomial::degree_in_var(int var) const {
    if (var < 0 || var >= nvars_)
        throw std::invalid_argument("polynomial: variable index out of range");
    unsigned d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, e[var]);
    return d;
}

Polynomial poly_add(const Polynomial& p, const Polynomial& q) {
    if (p.nvars() != q.nvars()) throw std::invalid_argument("poly_add: nvars mismatch");
    Polynomial r = p;
    for (const auto& [e, c] : q.terms()) r.add_term(e, c);
    return r;
}

Polynomial poly_sub(const Polynomial& p, const Polynomial& q) {
    if (p.nvars() != q.nvars()) throw std::invalid_argument("poly_sub: nvars mismatch");
    Polynomial r = p;
    for (const auto& [e, c] : q.terms()) r.add_term(e, -c);
    return r;
}

Polynomial poly_neg(const Polynomial& p) {
    Polynomial r(p.nvars());
    for (const auto& [e, c] : p.terms()) r.set_coeff(e, -c);
    return r;
}

Polynomial poly_scale(const Polynomial& p, const Rational& c) {
    Polynomial r(p.nvars());
    if (c == 0) return r;
    for (const auto& [e, k] : p.terms()) r.set_coeff(e, k * c);
    return r;
}

Polynomial poly_mul_naive(const Polynomial& p, const Polynomial& q) {
    if (p.nvars() != q.nvars()) throw std::invalid_argument("poly_mul_naive: nvars mismatch");
    Polynomial r(p.nvars());
    ExponentVec e(p.nvars());
    for (const auto& [ep, cp] : p.terms())
        for (const auto& [eq, cq] : q.terms()) {
            for (int i = 0; i < p.nvars(); ++i) e[i] = ep[i] + eq[i];
            r.add_term(e, cp * cq);
        }
    return r;
}

namespace {

Rational rational_pow(const Rational& base, unsigned exp) {
    Rational r(1);
    for (unsigned i = 0; i < exp; ++i) r *= base;
    return r;
}

Integer binomial(unsigned n, unsigned k) {
    Integer b;
    mpz_bin_uiui(b.get_mpz_t(), n, k);
    return b;
}

} // namespace

Rational evaluate(const Polynomial& p, const std::vector<Rational>& point) {
    if (static_cast<int>(point.size()) != p.nvars())
        throw std::invalid_argument("evaluate: point dimension mismatch");
    Rational acc(0);
    for (const auto& [e, c] : p.terms()) {
        Rational t = c;
        for (int i = 0; i < p.nvars(); ++i)
            if (e[i] > 0) t *= rational_pow(point[i], e[i]);
        acc += t;
    }
    return acc;
}

Box::Box(std::vector<Rational> lo, std::vector<Rational> hi)
    : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.empty() || lo_.size() != hi_.size())
        throw std::invalid_argument("box: bound vectors empty or mismatched");
    for (std::size_t i = 0; i < lo_.size(); ++i)
        if (!(lo_[i] < hi_[i]))
            throw std::invalid_argument("box: requires lo_i < hi_i in every coordinate");
}

Polynomial regularize(const Polynomial& f, const Box& box) {
    if (f.nvars() != box.nvars())
        throw std::invalid_argument("regularize: box dimension mismatch");
    const int n = f.nvars();
    Polynomial g(n);
    ExponentVec mono(n);
    for (const auto& [e, c] : f.terms()) {
        // Expand c * prod_i (a_i + w_i x_i)^{e_i} term by term.
        std::vector<std::vector<Rational>> factors(n); // factors[i][j]: coeff of x_i^j
        for (int i = 0; i < n; ++i) {
            const Rational a = box.lo()[i];
            const Rational w = box.hi()[i] - box.lo()[i];
            factors[i].resize(e[i] + 1);
            for (unsigned j = 0; j <= e[i]; ++j)
                factors[i][j] = Rational(binomial(e[i], j)) *
                                rational_pow(a, e[i] - j) * rational_pow(w, j);
        }
        std::function<void(int, Rational&)> walk = [&](int i, Rational& coef) {
            if (i == n) {
                g.add_term(mono, c * coef);
                return;
            }
            for (unsigned j = 0; j < factors[i].size(); ++j) {
                if (factors[i][j] == 0) continue;
                mono[i] = j;
                Rational next = coef * factors[i][j];
                walk(i + 1, next);
            }
            mono[i] = 0;
        };
        Rational one(1);
        walk(0, one);
    }
    return g;
}

std::vector<ExponentVec> monomial_basis(int nvars, unsigned max_degree) {
    if (nvars < 1) throw std::invalid_argument("monomial_basis: nvars must be >= 1");
    std::vector<ExponentVec> out;
    ExponentVec e(nvars, 0);
    std::function<void(int, unsigned)> fill = [&](int i, unsigned left) {
        if (i == nvars - 1) {
            e[i] = left;
            out.push_back(e);
            e[i] = 0;
            return;
        }
        for (int j = static_cast<int>(left); j >= 0; --j) {
            e[i] = static_cast<unsigned>(j);
            fill(i + 1, left - static_cast<unsigned>(j));
        }
        e[i] = 0;
    };
    for (unsigned d = 0; d <= max_degree; ++d) fill(0, d);
    return out;
}

bool KrivineTerm::operator<(const KrivineTerm& o) const {
    GradedLexLess less;
    ExponentVec a(alpha), b(o.alpha);
    a.insert(a.end(), beta.begin(), beta.end());
    b.insert(b.end(), o.beta.begin(), o.beta.end());
    return less(a, b);
}

Polynomial expand_krivine(const KrivineTerm& term, int nvars) {
    if (static_cast<int>(term.alpha.size()) != nvars ||
        static_cast<int>(term.beta.size()) != nvars)
        throw std::invalid_argument("expand_krivine: exponent size mismatch");
    Polynomial r(nvars, {{ExponentVec(nvars, 0), Rational(1)}});
    for (int i = 0; i < nvars; ++i) {
        if (term.alpha[i] == 0 && term.beta[i] == 0) continue;
        // x_i^a * (1-x_i)^b = sum_j C(b,j) (-1)^j x_i^{a+j}
        Polynomial factor(nvars);
        ExponentVec e(nvars, 0);
        for (unsigned j = 0; j <= term.beta[i]; ++j) {
            e[i] = term.alpha[i] + j;
            Rational c(binomial(term.beta[i], j));
            if (j % 2 == 1) c = -c;
            factor.set_coeff(e, c);
        }
        r = poly_mul_naive(r, factor);
    }
    return r;
}

std::string krivine_term_to_string(const KrivineTerm& term) {
    std::ostringstream ss;
    bool first = true;
    auto emit = [&](const std::string& base, unsigned exp) {
        if (exp == 0) return;
        if (!first) ss << "*";
        first = false;
        ss << base;
        if (exp > 1) ss << "^" << exp;
    };
    for (std::size_t i = 0; i < term.alpha.size(); ++i)
        emit("x" + std::to_string(i + 1), term.alpha[i]);
    for (std::size_t i = 0; i < term.beta.size(); ++i)
        emit("(1-x" + std::to_string(i + 1) + ")", term.beta[i]);
    if (first) return "1";
    return ss.str();
}

std::string to_string(const Polynomial& p) {
    if (p.is_zero()) return "0";
    std::ostringstream ss;
    bool first = true;
    for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
        const auto& [e, c] = *it;
        Rational a = c;
        if (first) {
            if (a < 0) {
                ss << "-";
                a = -a;
            }
        } else {
            ss << (a < 0 ? " - " : " + ");
            if (a < 0) a = -a;
        }
        first = false;
        bool has_vars = total_degree(e) > 0;
        bool printed_coeff = false;
        if (!has_vars || a != 1) {
            ss << rational_to_string(a);
            printed_coeff = true;
        }
        bool first_var = !printed_coeff;
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i] == 0) continue;
            if (!first_var) ss << "*";
            first_var = false;
            ss << "x" << (i + 1);
            if (e[i] > 1) ss << "^" << e[i];
        }
    }
    return ss.str();
}

namespace {

// Recursive-descent parser for the canonical text form plus parenthesized
// factors: expr := [sign] term (('+'|'-') term)*, term := factor ('*' factor)*,
// factor := rational | x<k>[^e] | '(' expr ')' [^e].
class PolyParser {
public:
    PolyParser(const std::string& text, int nvars) : nvars_(nvars) {
        for (char c : text)
            if (!std::isspace(static_cast<unsigned char>(c))) s_.push_back(c);
    }

    Polynomial parse() {
        Polynomial p = expr();
        if (pos_ != s_.size())
            throw std::invalid_argument("polynomial parse: trailing input at '" +
                                        s_.substr(pos_) + "'");
        return p;
    }

private:
    std::string s_;
    std::size_t pos_ = 0;
    int nvars_;

    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }

    Polynomial expr() {
        Polynomial acc(nvars_);
        bool neg = false;
        if (peek() == '+' || peek() == '-') neg = s_[pos_++] == '-';
        acc = term();
        if (neg) acc = poly_neg(acc);
        while (peek() == '+' || peek() == '-') {
            bool sub = s_[pos_++] == '-';
            Polynomial t = term();
            acc = sub ? poly_sub(acc, t) : poly_add(acc, t);
        }
        return acc;
    }

    Polynomial term() {
        Polynomial acc = factor();
        while (peek() == '*') {
            ++pos_;
            acc = poly_mul_naive(acc, factor());
        }
        return acc;
    }

    Polynomial factor() {
        if (peek() == '(') {
            ++pos_;
            Polynomial inner = expr();
            if (peek() != ')') throw std::invalid_argument("polynomial parse: missing ')'");
            ++pos_;
            return power(inner);
        }
        if (peek() == 'x') {
            ++pos_;
            unsigned idx = read_uint("variable index");
            if (idx < 1 || static_cast<int>(idx) > nvars_)
                throw std::invalid_argument("polynomial parse: variable x" +
                                            std::to_string(idx) + " out of range");
            Polynomial v(nvars_);
            ExponentVec e(nvars_, 0);
            e[idx - 1] = 1;
            v.set_coeff(e, Rational(1));
            return power(v);
        }
        if (std::isdigit(static_cast<unsigned char>(peek()))) {
            std::size_t start = pos_;
            while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
            if (peek() == '.' || peek() == '/') {
                ++pos_;
                if (!std::isdigit(static_cast<unsigned char>(peek())))
                    throw std::invalid_argument("polynomial parse: malformed number");
                while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
            }
            Rational c = parse_rational(s_.substr(start, pos_ - start));
            Polynomial k(nvars_);
            k.set_coeff(ExponentVec(nvars_, 0), c);
            return power(k);
        }
        throw std::invalid_argument(std::string("polynomial parse: unexpected '") +
                                    peek() + "'");
    }

    Polynomial power(Polynomial base) {
        if (peek() != '^') return base;
        ++pos_;
        unsigned e = read_uint("exponent");
        Polynomial acc(nvars_);
        acc.set_coeff(ExponentVec(nvars_, 0), Rational(1));
        for (unsigned i = 0; i < e; ++i) acc = poly_mul_naive(acc, base);
        return acc;
    }

    unsigned read_uint(const std::string& what) {
        if (!std::isdigit(static_cast<unsigned char>(peek())))
            throw std::invalid_argument("polynomial parse: expected " + what);
        unsigned v = 0;
        while (std::isdigit(static_cast<unsigned char>(peek())))
            v = v * 10 + static_cast<unsigned>(s_[pos_++] - '0');
        return v;
    }
};

} // namespace

Polynomial parse_polynomial(const std::string& text, int nvars) {
    return PolyParser(text, nvars).parse();
}

} // namespace krivine
