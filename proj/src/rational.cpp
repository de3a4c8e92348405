#include "krivine/rational.hpp"

#include <stdexcept>
#include <cctype>

namespace krivine {

Rational make_rational(long num, long den) {
    if (den == 0) throw std::invalid_argument("rational: zero denominator");
    Rational r(num, den);
    r.canonicalize();
    return r;
}

Rational make_rational(const Integer& num, const Integer& den) {
    if (den == 0) throw std::invalid_argument("rational: zero denominator");
    Rational r(num, den);
    r.canonicalize();
    return r;
}

Rational parse_rational(const std::string& text) {
    std::string s;
    s.reserve(text.size());
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) throw std::invalid_argument("rational: empty string");

    bool neg = false;
    std::size_t pos = 0;
    if (s[pos] == '+' || s[pos] == '-') {
        neg = s[pos] == '-';
        ++pos;
    }
    std::string body = s.substr(pos);
    if (body.empty()) throw std::invalid_argument("rational: no digits in '" + text + "'");

    auto all_digits = [](const std::string& t) {
        if (t.empty()) return false;
        for (char c : t)
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        return true;
    };

    Rational r;
    std::size_t slash = body.find('/');
    std::size_t dot   = body.find('.');
    if (slash != std::string::npos) {
        std::string num = body.substr(0, slash), den = body.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den))
            throw std::invalid_argument("rational: malformed fraction '" + text + "'");
        Integer n(num, 10), d(den, 10);
        if (d == 0) throw std::invalid_argument("rational: zero denominator in '" + text + "'");
        r = make_rational(n, d);
    } else if (dot != std::string::npos) {
        std::string ip = body.substr(0, dot), fp = body.substr(dot + 1);
        if (ip.empty()) ip = "0";
        if (fp.empty()) fp = "0";
        if (!all_digits(ip) || !all_digits(fp))
            throw std::invalid_argument("rational: malformed decimal '" + text + "'");
        Integer num(ip + fp, 10);
        Integer den = 1;
        for (std::size_t i = 0; i < fp.size(); ++i) den *= 10;
        r = make_rational(num, den);
    } else {
        if (!all_digits(body))
            throw std::invalid_argument("rational: malformed number '" + text + "'");
        r = Rational(Integer(body, 10));
    }
    if (neg) r = -r;
    return r;
}

std::string rational_to_string(const Rational& r) {
    return r.get_str();
}

} // namespace krivine
