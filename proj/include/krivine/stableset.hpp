#pragma once

#include "krivine/problem.hpp"
#include "krivine/prover.hpp"

#include <set>
#include <string>
#include <utility>
#include <vector>

namespace krivine {

// Undirected graph, vertices 1..n, edges normalized to u < v.
struct Graph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;
};

// Accepts plain edge lists (one "u v" pair per line, 1-based) and
// DIMACS-like files ("c ..." comments, "p edge <n> <m>" header, "e u v"
// edges). Lines starting with '#' are comments; a bare integer line before
// any edge declares the vertex count, otherwise the count is the largest
// index seen. Throws std::invalid_argument on malformed lines, self-loops,
// duplicate edges, or vertices outside a declared range.
Graph parse_graph(const std::string& text);
Graph load_graph(const std::string& path);

// Bound proof encoded as a box problem with equality axioms: prove
// bound - sum x_i >= 0 on [0,1]^n given x_u x_v = 0 per edge and
// x_i^2 = x_i per vertex. Axioms are indexed edges first (input order),
// then vertices ascending; the environment admits both signs of each, so
// their weights are effectively free. The problem options fix the initial
// memory degree and the lemma degree cap to `lemma_degree_cap` and the
// step budget to 100.
struct StableSetProblem {
    Problem problem;
    int bound = 0;
    int lemma_degree_cap = 2;
};

StableSetProblem encode(const Graph& g, int bound, int lemma_degree_cap = 2);

// prove() on the encoded problem with its options applied (pinned keys
// keep their cfg values, mirroring explicit command-line flags).
ProveResult prove_stable_bound(const StableSetProblem& sp, const RunConfig& cfg,
                               const std::set<std::string>& pinned = {});

// Exhaustive maximum-stable-set size; test oracle, guarded to n <= 25.
int max_stable_set(const Graph& g);

} // namespace krivine
