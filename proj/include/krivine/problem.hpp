#pragma once

#include "krivine/poly.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace krivine {

// One inequality-proving task: show f >= bound 0 on the box. Coordinates are
// the original ones; regularized() pulls f (and any equality axioms) back to
// the unit cube. equality_axioms hold polynomials g with g = 0 on the
// feasible set, so both +g and -g may multiply memory elements.
struct Problem {
    int format_version = 1;
    std::string name;
    std::string description;
    int nvars = 0;
    std::vector<std::string> variables;
    Box box;
    Polynomial f;
    std::vector<Polynomial> equality_axioms;
    std::map<std::string, double> options; // per-problem config overrides

    Problem() : box({Rational(0)}, {Rational(1)}), f(1) {}

    Polynomial regularized() const;
    std::vector<Polynomial> regularized_axioms() const;
};

// JSON schema (format_version 1):
// { "format_version": 1, "name": "...", "description": "...",
//   "nvars": n, "variables": ["x1", ...],
//   "box": {"lo": ["-1", ...], "hi": ["1", ...]},
//   "polynomial": [{"coeff": "p/q or decimal", "exponents": [..n ints..]}, ...],
//   "equality_axioms": [[term...], ...], "options": {"key": number, ...} }
// Coefficients and bounds are strings parsed as exact rationals.
Problem load_problem(const std::string& path);
void save_problem(const Problem& p, const std::string& path);
Problem problem_from_json_text(const std::string& text);
std::string problem_to_json_text(const Problem& p);

// FNV-1a over the mathematical content (nvars, box, f, axioms) in canonical
// graded-lex order. Metadata (name, description, options) does not affect it,
// so certificates stay valid under renames or hyperparameter edits.
std::string problem_digest(const Problem& p);

// FNV-1a 64-bit, used for every content digest in this project.
std::uint64_t fnv1a(const std::string& bytes);

} // namespace krivine
