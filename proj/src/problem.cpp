#include "krivine/problem.hpp"

#include "krivine/rational.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace krivine {

using nlohmann::json;

Polynomial Problem::regularized() const { return regularize(f, box); }

std::vector<Polynomial> Problem::regularized_axioms() const {
    std::vector<Polynomial> out;
    out.reserve(equality_axioms.size());
    for (const auto& g : equality_axioms) out.push_back(regularize(g, box));
    return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

json poly_to_json(const Polynomial& p) {
    json terms = json::array();
    for (const auto& [e, c] : p.terms()) {
        json t;
        t["coeff"] = rational_to_string(c);
        t["exponents"] = e;
        terms.push_back(std::move(t));
    }
    return terms;
}

Polynomial poly_from_json(const json& terms, int nvars, const std::string& what) {
    if (!terms.is_array()) throw std::runtime_error(what + ": expected an array of terms");
    Polynomial p(nvars);
    for (const auto& t : terms) {
        if (!t.contains("coeff") || !t.contains("exponents"))
            throw std::runtime_error(what + ": term needs coeff and exponents");
        const auto& ex = t.at("exponents");
        if (!ex.is_array() || static_cast<int>(ex.size()) != nvars)
            throw std::runtime_error(what + ": exponents must list one entry per variable");
        ExponentVec e;
        e.reserve(nvars);
        for (const auto& v : ex) {
            if (!v.is_number_integer() || v.get<long long>() < 0)
                throw std::runtime_error(what + ": exponents must be non-negative integers");
            e.push_back(static_cast<unsigned>(v.get<long long>()));
        }
        p.add_term(e, parse_rational(t.at("coeff").get<std::string>()));
    }
    return p;
}

std::string canonical_poly(const Polynomial& p) {
    std::ostringstream ss;
    for (const auto& [e, c] : p.terms()) {
        for (unsigned v : e) ss << v << ",";
        ss << ":" << rational_to_string(c) << ";";
    }
    return ss.str();
}

} // namespace

Problem problem_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& ex) {
        throw std::runtime_error(std::string("problem file is not valid JSON: ") + ex.what());
    }
    Problem p;
    try {
        p.format_version = j.at("format_version").get<int>();
        if (p.format_version != 1)
            throw std::runtime_error("unsupported format_version " +
                                     std::to_string(p.format_version));
        p.name = j.at("name").get<std::string>();
        p.description = j.value("description", std::string());
        p.nvars = j.at("nvars").get<int>();
        if (p.nvars < 1) throw std::runtime_error("nvars must be >= 1");
        if (j.contains("variables")) {
            p.variables = j.at("variables").get<std::vector<std::string>>();
            if (static_cast<int>(p.variables.size()) != p.nvars)
                throw std::runtime_error("variables list length differs from nvars");
        } else {
            for (int i = 1; i <= p.nvars; ++i) p.variables.push_back("x" + std::to_string(i));
        }
        const auto& box = j.at("box");
        std::vector<Rational> lo, hi;
        for (const auto& s : box.at("lo")) lo.push_back(parse_rational(s.get<std::string>()));
        for (const auto& s : box.at("hi")) hi.push_back(parse_rational(s.get<std::string>()));
        if (static_cast<int>(lo.size()) != p.nvars || static_cast<int>(hi.size()) != p.nvars)
            throw std::runtime_error("box lo/hi must list one bound per variable");
        p.box = Box(lo, hi);
        p.f = poly_from_json(j.at("polynomial"), p.nvars, "polynomial");
        if (j.contains("equality_axioms"))
            for (const auto& ax : j.at("equality_axioms"))
                p.equality_axioms.push_back(poly_from_json(ax, p.nvars, "equality_axioms"));
        if (j.contains("options"))
            for (const auto& [key, val] : j.at("options").items()) {
                if (!val.is_number())
                    throw std::runtime_error("options." + key + " must be a number");
                p.options[key] = val.get<double>();
            }
    } catch (const json::exception& ex) {
        throw std::runtime_error(std::string("malformed problem file: ") + ex.what());
    } catch (const std::invalid_argument& ex) {
        throw std::runtime_error(std::string("malformed problem file: ") + ex.what());
    }
    return p;
}

std::string problem_to_json_text(const Problem& p) {
    json j;
    j["format_version"] = p.format_version;
    j["name"] = p.name;
    if (!p.description.empty()) j["description"] = p.description;
    j["nvars"] = p.nvars;
    j["variables"] = p.variables;
    json lo = json::array(), hi = json::array();
    for (const auto& r : p.box.lo()) lo.push_back(rational_to_string(r));
    for (const auto& r : p.box.hi()) hi.push_back(rational_to_string(r));
    j["box"] = {{"lo", lo}, {"hi", hi}};
    j["polynomial"] = poly_to_json(p.f);
    if (!p.equality_axioms.empty()) {
        json ax = json::array();
        for (const auto& g : p.equality_axioms) ax.push_back(poly_to_json(g));
        j["equality_axioms"] = ax;
    }
    if (!p.options.empty()) j["options"] = p.options;
    return j.dump(2) + "\n";
}

Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open problem file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return problem_from_json_text(buf.str());
    } catch (const std::runtime_error& ex) {
        throw std::runtime_error(path + ": " + ex.what());
    }
}

void save_problem(const Problem& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write problem file: " + path);
    out << problem_to_json_text(p);
}

std::string problem_digest(const Problem& p) {
    std::ostringstream ss;
    ss << "v1|n=" << p.nvars << "|box=";
    for (const auto& r : p.box.lo()) ss << rational_to_string(r) << ",";
    ss << ";";
    for (const auto& r : p.box.hi()) ss << rational_to_string(r) << ",";
    ss << "|f=" << canonical_poly(p.f) << "|ax=";
    for (const auto& g : p.equality_axioms) ss << canonical_poly(g) << "&";
    std::uint64_t h = fnv1a(ss.str());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace krivine
