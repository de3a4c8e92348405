#pragma once

#include "krivine/environment.hpp"
#include "krivine/lp.hpp"
#include "krivine/problem.hpp"

#include <string>
#include <vector>

namespace krivine {

// One weighted element of a non-negativity witness. Only the structural
// description is stored, never a precomputed expansion, so verification is
// forced to re-derive the polynomial itself.
struct CertificateTerm {
    Rational lambda = 0;
    KrivineTerm term;             // meaningful when axiom_index < 0
    int axiom_index = -1;         // >= 0: rooted at equality axiom g[axiom_index]
    bool axiom_negated = false;
    std::vector<int> multipliers; // generator ids applied to the axiom, in order

    bool is_krivine() const { return axiom_index < 0; }
    std::string describe() const;
    bool operator==(const CertificateTerm& o) const = default;
};

// Exact witness for f >= gamma on [0,1]^n:
//     f = gamma + sum_i lambda_i * E_i,   lambda_i >= 0,  gamma >= 0,
// where each E_i is a product of x_j / (1-x_j) factors, optionally rooted in
// a signed equality axiom (its contribution vanishes on the constraint set).
// problem_digest ties the witness to the problem file it certifies.
struct Certificate {
    int format_version = 1;
    std::string problem_digest;
    int nvars = 0;
    Rational gamma = 0;
    std::vector<CertificateTerm> terms;

    bool operator==(const Certificate& o) const = default;
};

struct VerifyReport {
    bool ok = false;
    std::vector<std::string> failures;

    std::string summary() const; // failures joined by "; ", "ok" when clean
};

// Checks, over the rationals,
//   lambda_i >= 0 for all i,  gamma >= 0,  sum_i lambda_i*E_i + gamma == f,
// re-expanding every E_i from its structural description with schoolbook
// multiplication only. f and axioms must already be in unit-cube form. The
// check deliberately shares nothing with the solving pipeline beyond the
// base polynomial type, so it cannot inherit a solver bug.
VerifyReport verify_certificate(const Polynomial& f,
                                const std::vector<Polynomial>& axioms,
                                const Certificate& cert);

// Wrapper for problem files: recomputes the digest, rejects on mismatch,
// regularizes f and the axioms onto the unit cube and verifies against them.
VerifyReport verify_certificate(const Problem& problem, const Certificate& cert);

struct ExtractionOptions {
    double support_tol = 1e-7; // float weights above this form the support
    int max_widenings = 4;     // support-growth retries before giving up
};

struct ExtractionResult {
    bool ok = false;
    std::string reason;
    Certificate certificate; // digest left empty; the caller binds it
};

// Converts the float LP solution of a finished episode into an exact
// certificate. Columns whose weight exceeds support_tol form the initial
// support and the equality system restricted to them is re-solved over the
// rationals. If the exact solve is inconsistent or yields a negative weight
// or negative gamma, the support widens to the next-largest float weights
// and the solve is retried; after max_widenings growths the extraction
// fails rather than round anything.
ExtractionResult extract_certificate(const Polynomial& f,
                                     const std::vector<BasisElement>& memory,
                                     const LpSolution& solution,
                                     const ExtractionOptions& opts = {});

// JSON (de)serialization; rationals travel as exact "p/q" strings.
// Malformed input raises std::runtime_error.
std::string certificate_to_json_text(const Certificate& cert);
Certificate certificate_from_json_text(const std::string& text);
void save_certificate(const Certificate& cert, const std::string& path);
Certificate load_certificate(const std::string& path);

// Readable proof listing: one "[step k] <expanded polynomial>" line per
// element admitted during the episode, then "Non-negative representation:"
// with the weighted combination. Combination entries reference "[step k]"
// when the element was admitted at step k and are written in factored form
// otherwise; a weight of 1 and a gamma of 0 are omitted.
std::string render_proof(const Certificate& cert, const std::vector<StepRecord>& trace,
                         const std::vector<BasisElement>& memory);
// Combination only, every element in factored form.
std::string render_proof(const Certificate& cert);

} // namespace krivine
