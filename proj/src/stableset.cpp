#include "krivine/stableset.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace krivine {

namespace {

int parse_index(const std::string& token, const std::string& line) {
    std::size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(token, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("malformed graph line '" + line + "'");
    }
    if (used != token.size())
        throw std::invalid_argument("malformed graph line '" + line + "'");
    return value;
}

} // namespace

Graph parse_graph(const std::string& text) {
    Graph g;
    std::set<std::pair<int, int>> seen;
    bool have_header = false;
    int max_index = 0;

    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream fields(line);
        std::vector<std::string> tok;
        std::string t;
        while (fields >> t) tok.push_back(t);
        if (tok.empty() || tok[0][0] == '#' || tok[0] == "c") continue;

        if (tok[0] == "p") {
            // DIMACS-style: p <format> <vertices> <edges>
            if (tok.size() < 3) throw std::invalid_argument("malformed graph header '" + line + "'");
            if (have_header) throw std::invalid_argument("duplicate graph header");
            if (!seen.empty()) throw std::invalid_argument("graph header after edges");
            g.n = parse_index(tok[2], line);
            if (g.n < 1) throw std::invalid_argument("graph header declares no vertices");
            have_header = true;
            continue;
        }
        if (tok.size() == 1) {
            if (have_header) throw std::invalid_argument("duplicate graph header");
            if (!seen.empty()) throw std::invalid_argument("graph header after edges");
            g.n = parse_index(tok[0], line);
            if (g.n < 1) throw std::invalid_argument("graph header declares no vertices");
            have_header = true;
            continue;
        }

        std::size_t at = 0;
        if (tok[0] == "e") at = 1; // DIMACS edge line
        if (tok.size() != at + 2)
            throw std::invalid_argument("malformed graph line '" + line + "'");
        int u = parse_index(tok[at], line);
        int v = parse_index(tok[at + 1], line);
        if (u < 1 || v < 1)
            throw std::invalid_argument("vertex index below 1 in '" + line + "'");
        if (u == v) throw std::invalid_argument("self-loop at vertex " + std::to_string(u));
        if (u > v) std::swap(u, v);
        if (have_header && v > g.n)
            throw std::invalid_argument("vertex " + std::to_string(v) +
                                        " exceeds the declared count " + std::to_string(g.n));
        if (!seen.insert({u, v}).second)
            throw std::invalid_argument("duplicate edge " + std::to_string(u) + " " +
                                        std::to_string(v));
        g.edges.emplace_back(u, v);
        max_index = std::max(max_index, v);
    }

    if (!have_header) {
        if (max_index == 0) throw std::invalid_argument("empty graph description");
        g.n = max_index;
    }
    return g;
}

Graph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open graph file: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_graph(text.str());
}

StableSetProblem encode(const Graph& g, int bound, int lemma_degree_cap) {
    if (g.n < 1) throw std::invalid_argument("graph has no vertices");
    if (bound < 0) throw std::invalid_argument("bound must be non-negative");
    if (lemma_degree_cap < 1) throw std::invalid_argument("lemma degree cap must be positive");

    StableSetProblem sp;
    sp.bound = bound;
    sp.lemma_degree_cap = lemma_degree_cap;

    Problem& p = sp.problem;
    p.name = "stable_set_n" + std::to_string(g.n) + "_b" + std::to_string(bound);
    p.description = "stable set bound " + std::to_string(bound) + " on " +
                    std::to_string(g.n) + " vertices, " + std::to_string(g.edges.size()) +
                    " edges";
    p.nvars = g.n;
    for (int i = 1; i <= g.n; ++i) p.variables.push_back("x" + std::to_string(i));
    p.box = Box(std::vector<Rational>(static_cast<std::size_t>(g.n), Rational(0)),
                std::vector<Rational>(static_cast<std::size_t>(g.n), Rational(1)));

    p.f = Polynomial(g.n);
    p.f.set_coeff(ExponentVec(static_cast<std::size_t>(g.n), 0), Rational(bound));
    for (int i = 0; i < g.n; ++i) {
        ExponentVec e(static_cast<std::size_t>(g.n), 0);
        e[static_cast<std::size_t>(i)] = 1;
        p.f.set_coeff(e, Rational(-1));
    }

    for (const auto& [u, v] : g.edges) {
        Polynomial a(g.n);
        ExponentVec e(static_cast<std::size_t>(g.n), 0);
        e[static_cast<std::size_t>(u - 1)] = 1;
        e[static_cast<std::size_t>(v - 1)] = 1;
        a.set_coeff(e, Rational(1));
        p.equality_axioms.push_back(std::move(a));
    }
    for (int i = 0; i < g.n; ++i) {
        Polynomial a(g.n);
        ExponentVec sq(static_cast<std::size_t>(g.n), 0), lin(static_cast<std::size_t>(g.n), 0);
        sq[static_cast<std::size_t>(i)] = 2;
        lin[static_cast<std::size_t>(i)] = 1;
        a.set_coeff(sq, Rational(1));
        a.set_coeff(lin, Rational(-1));
        p.equality_axioms.push_back(std::move(a));
    }

    p.options["lemma_degree_cap"] = lemma_degree_cap;
    p.options["init_memory_degree"] = lemma_degree_cap;
    p.options["maxstep"] = 100;
    return sp;
}

ProveResult prove_stable_bound(const StableSetProblem& sp, const RunConfig& cfg,
                               const std::set<std::string>& pinned) {
    return prove(sp.problem, apply_problem_options(cfg, sp.problem, pinned));
}

namespace {

int mis_recurse(std::uint32_t candidates, const std::vector<std::uint32_t>& adj) {
    if (candidates == 0) return 0;
    const int v = std::countr_zero(candidates);
    const std::uint32_t without = candidates & ~(1u << v);
    int best = mis_recurse(without, adj);
    best = std::max(best, 1 + mis_recurse(without & ~adj[static_cast<std::size_t>(v)], adj));
    return best;
}

} // namespace

int max_stable_set(const Graph& g) {
    if (g.n < 0 || g.n > 25)
        throw std::invalid_argument("brute-force stable set limited to 25 vertices");
    std::vector<std::uint32_t> adj(static_cast<std::size_t>(g.n), 0);
    for (const auto& [u, v] : g.edges) {
        adj[static_cast<std::size_t>(u - 1)] |= 1u << (v - 1);
        adj[static_cast<std::size_t>(v - 1)] |= 1u << (u - 1);
    }
    const std::uint32_t all = g.n == 0 ? 0 : (g.n == 32 ? ~0u : (1u << g.n) - 1);
    return mis_recurse(all, adj);
}

} // namespace krivine
