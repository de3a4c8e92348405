#pragma once

#include "krivine/poly.hpp"

#include <memory>
#include <string>
#include <vector>

namespace krivine {

enum class LpStatus { Optimal, Infeasible, NumericFailure };

// Equality system  sum_j lambda_j * column_j + gamma * e_const = f  over the
// monomial rows, lambda >= 0, gamma free, objective max gamma.
// Columns are [lambda_1 .. lambda_m, gamma]; gamma is stored LAST and its
// column is 1 on the constant row and 0 elsewhere. Rows enumerate the full
// graded-lex monomial basis up to d = max(deg f, max column degree).
struct LpInstance {
    int nvars = 0;
    std::vector<ExponentVec> row_monomials;
    std::vector<std::vector<double>> A; // rows x (lambda_cols + 1)
    std::vector<double> c;              // rhs: f's coefficient per row
    std::vector<Polynomial> column_terms;

    int rows() const { return static_cast<int>(row_monomials.size()); }
    int lambda_cols() const { return static_cast<int>(column_terms.size()); }
};

// Throws std::invalid_argument on empty memory or nvars mismatch.
LpInstance build_lp(const Polynomial& f, const std::vector<Polynomial>& memory);

struct LpSolution {
    LpStatus status = LpStatus::NumericFailure;
    double gamma = 0.0;
    std::vector<double> lambda;
    long iterations = 0;
};

struct LpOptions {
    double feas_tol = 1e-9;   // residual / sign tolerance on Optimal
    double pivot_tol = 1e-9;  // entering / ratio-test threshold
    long iter_factor = 50;    // cap = iter_factor * (rows + cols)
};

// Solver interface; the environment only depends on this, so an external
// LP backend can be swapped in.
class LpBackend {
public:
    virtual ~LpBackend() = default;
    virtual LpSolution solve(const LpInstance& lp) = 0;
};

// Dense two-phase primal simplex with Bland's rule. The free gamma is split
// into gamma+ - gamma-; rows are max-abs equilibrated before solving and the
// returned basic solution is re-solved from the equilibrated input by LU to
// shed accumulated pivot drift. Residual (equilibrated) and sign tolerances
// are enforced on every Optimal result; iteration-cap or tolerance breaches
// surface as NumericFailure. Unbounded cannot occur for well-formed
// instances and also maps to NumericFailure.
class SimplexBackend : public LpBackend {
public:
    explicit SimplexBackend(LpOptions opts = {}) : opts_(opts) {}
    LpSolution solve(const LpInstance& lp) override;

private:
    LpOptions opts_;
};

LpSolution solve_lp(const LpInstance& lp, LpBackend* backend = nullptr);

// Exact rational solve of the equality system restricted to the given
// support columns plus gamma. Rows span the union of monomials of f and the
// support, Gaussian elimination runs over rationals, free variables are
// pinned to 0. ok == false when the restricted system is inconsistent.
struct ExactSolution {
    bool ok = false;
    std::string reason;
    Rational gamma = 0;
    std::vector<Rational> lambda;
};
ExactSolution solve_restricted_exact(const Polynomial& f,
                                     const std::vector<Polynomial>& support);

// Fixed-width text dump of (A | c) for debugging, gamma column last.
std::string dump_instance(const LpInstance& lp);

} // namespace krivine
