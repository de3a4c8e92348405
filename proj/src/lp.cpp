#include "krivine/lp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace krivine {

LpInstance build_lp(const Polynomial& f, const std::vector<Polynomial>& memory) {
    if (memory.empty())
        throw std::invalid_argument("build_lp: memory must not be empty");
    unsigned d = f.degree();
    for (const auto& m : memory) {
        if (m.nvars() != f.nvars())
            throw std::invalid_argument("build_lp: memory nvars mismatch");
        d = std::max(d, m.degree());
    }
    LpInstance lp;
    lp.nvars = f.nvars();
    lp.row_monomials = monomial_basis(f.nvars(), d);
    lp.column_terms = memory;

    std::map<ExponentVec, int, GradedLexLess> row_of;
    for (int i = 0; i < lp.rows(); ++i) row_of[lp.row_monomials[i]] = i;

    const int m = lp.lambda_cols();
    lp.A.assign(lp.rows(), std::vector<double>(m + 1, 0.0));
    lp.c.assign(lp.rows(), 0.0);
    for (int j = 0; j < m; ++j)
        for (const auto& [e, coef] : memory[j].terms())
            lp.A[row_of.at(e)][j] = to_double(coef);
    lp.A[0][m] = 1.0; // gamma on the constant row
    for (const auto& [e, coef] : f.terms()) lp.c[row_of.at(e)] = to_double(coef);
    return lp;
}

namespace {

struct Tableau {
    int m = 0;      // constraint rows
    int n0 = 0;     // structural columns (lambda + gamma split)
    int ncols = 0;  // structural + artificial
    std::vector<std::vector<double>> t; // (m+1) x (ncols+1); last row = reduced costs
    std::vector<int> basis;

    double& rhs(int i) { return t[i][ncols]; }
    void pivot(int r, int j) {
        const double piv = t[r][j];
        for (int k = 0; k <= ncols; ++k) t[r][k] /= piv;
        for (int i = 0; i <= m; ++i) {
            if (i == r) continue;
            const double f = t[i][j];
            if (f == 0.0) continue;
            for (int k = 0; k <= ncols; ++k) t[i][k] -= f * t[r][k];
        }
        basis[r] = j;
    }
};

// Bland's rule loop; entering restricted to columns < allowed_cols.
// Returns false when the iteration budget is exhausted, sets *unbounded when
// no leaving row exists.
bool run_simplex(Tableau& tb, int allowed_cols, double pivot_tol, long max_iters,
                 long& iters, bool* unbounded) {
    *unbounded = false;
    while (true) {
        int enter = -1;
        for (int j = 0; j < allowed_cols; ++j)
            if (tb.t[tb.m][j] < -pivot_tol) {
                enter = j;
                break;
            }
        if (enter < 0) return true;
        int leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < tb.m; ++i) {
            if (tb.t[i][enter] <= pivot_tol) continue;
            const double ratio = tb.rhs(i) / tb.t[i][enter];
            if (ratio < best - 1e-15 ||
                (std::fabs(ratio - best) <= 1e-15 &&
                 (leave < 0 || tb.basis[i] < tb.basis[leave]))) {
                best = ratio;
                leave = i;
            }
        }
        if (leave < 0) {
            *unbounded = true;
            return true;
        }
        tb.pivot(leave, enter);
        if (++iters > max_iters) return false;
    }
}

// Re-solves the basic system from the equilibrated input with partial-pivot
// LU, removing drift accumulated across tableau pivots. Rows whose basic
// variable stayed artificial are redundant and excluded; their residual is
// checked by the caller like everyone else's.
bool refine_basic(const std::vector<std::vector<double>>& a,
                  const std::vector<double>& b, const std::vector<int>& basis,
                  int ncols, std::vector<double>& x) {
    std::vector<int> rows, cols;
    for (std::size_t i = 0; i < basis.size(); ++i)
        if (basis[i] < ncols) {
            rows.push_back(static_cast<int>(i));
            cols.push_back(basis[i]);
        }
    const int r = static_cast<int>(rows.size());
    std::vector<std::vector<double>> lu(r, std::vector<double>(r + 1, 0.0));
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) lu[i][j] = a[rows[i]][cols[j]];
        lu[i][r] = b[rows[i]];
    }
    for (int k = 0; k < r; ++k) {
        int piv = k;
        for (int i = k + 1; i < r; ++i)
            if (std::fabs(lu[i][k]) > std::fabs(lu[piv][k])) piv = i;
        if (std::fabs(lu[piv][k]) < 1e-13) return false;
        std::swap(lu[piv], lu[k]);
        for (int i = k + 1; i < r; ++i) {
            const double f = lu[i][k] / lu[k][k];
            if (f == 0.0) continue;
            for (int j = k; j <= r; ++j) lu[i][j] -= f * lu[k][j];
        }
    }
    std::vector<double> xb(r);
    for (int i = r - 1; i >= 0; --i) {
        double s = lu[i][r];
        for (int j = i + 1; j < r; ++j) s -= lu[i][j] * xb[j];
        xb[i] = s / lu[i][i];
    }
    x.assign(ncols, 0.0);
    for (int i = 0; i < r; ++i) x[cols[i]] = xb[i];
    return true;
}

} // namespace

LpSolution SimplexBackend::solve(const LpInstance& lp) {
    LpSolution out;
    const int m = lp.rows();
    const int k = lp.lambda_cols();
    if (m == 0 || k == 0) return out;
    const int n0 = k + 2; // lambda columns + gamma split

    // Row equilibration keeps the pivot tolerances meaningful across
    // benchmark scales (coefficients range from O(1) to O(10^5)).
    std::vector<std::vector<double>> a(m, std::vector<double>(n0, 0.0));
    std::vector<double> b(m, 0.0);
    for (int i = 0; i < m; ++i) {
        double scale = 0.0;
        for (int j = 0; j <= k; ++j) scale = std::max(scale, std::fabs(lp.A[i][j]));
        scale = std::max(scale, std::fabs(lp.c[i]));
        if (scale < 1e-300) scale = 1.0;
        for (int j = 0; j < k; ++j) a[i][j] = lp.A[i][j] / scale;
        a[i][k] = lp.A[i][k] / scale;      // gamma+
        a[i][k + 1] = -lp.A[i][k] / scale; // gamma-
        b[i] = lp.c[i] / scale;
        if (b[i] < 0.0) {
            for (int j = 0; j < n0; ++j) a[i][j] = -a[i][j];
            b[i] = -b[i];
        }
    }

    Tableau tb;
    tb.m = m;
    tb.n0 = n0;
    tb.ncols = n0 + m;
    tb.t.assign(m + 1, std::vector<double>(tb.ncols + 1, 0.0));
    tb.basis.resize(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n0; ++j) tb.t[i][j] = a[i][j];
        tb.t[i][n0 + i] = 1.0;
        tb.rhs(i) = b[i];
        tb.basis[i] = n0 + i;
    }
    // Phase 1: minimize the artificial sum; reduced costs = -sum of rows.
    for (int j = 0; j <= tb.ncols; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += tb.t[i][j];
        tb.t[m][j] = (j >= n0 && j < tb.ncols) ? 0.0 : -s;
    }
    const long max_iters = opts_.iter_factor * (m + tb.ncols);
    bool unbounded = false;
    if (!run_simplex(tb, tb.ncols, opts_.pivot_tol, max_iters, out.iterations, &unbounded) ||
        unbounded)
        return out; // NumericFailure
    if (-tb.rhs(m) > 1e-7) {
        out.status = LpStatus::Infeasible;
        return out;
    }
    // Pivot leftover artificials out where possible; rows that cannot are
    // redundant and keep a zero-valued artificial basic.
    for (int i = 0; i < m; ++i) {
        if (tb.basis[i] < n0) continue;
        for (int j = 0; j < n0; ++j)
            if (std::fabs(tb.t[i][j]) > opts_.pivot_tol) {
                tb.pivot(i, j);
                break;
            }
    }

    // Phase 2: minimize -(gamma+ - gamma-).
    std::vector<double> cost(tb.ncols, 0.0);
    cost[k] = -1.0;
    cost[k + 1] = 1.0;
    for (int j = 0; j <= tb.ncols; ++j) {
        double s = (j < tb.ncols) ? cost[j] : 0.0;
        for (int i = 0; i < m; ++i)
            if (tb.basis[i] < tb.ncols) s -= cost[tb.basis[i]] * tb.t[i][j];
        tb.t[m][j] = s;
    }
    if (!run_simplex(tb, n0, opts_.pivot_tol, max_iters, out.iterations, &unbounded) ||
        unbounded)
        return out;

    for (int i = 0; i < m; ++i)
        if (tb.basis[i] >= n0 && std::fabs(tb.rhs(i)) > 1e-7) return out;

    std::vector<double> x(n0, 0.0);
    bool refined = refine_basic(a, b, tb.basis, n0, x);
    if (!refined) {
        // Near-singular basis; keep the tableau values and let the residual
        // check decide.
        for (int i = 0; i < m; ++i)
            if (tb.basis[i] < n0) x[tb.basis[i]] = tb.rhs(i);
    }

    double resid = 0.0;
    for (int i = 0; i < m; ++i) {
        double s = -b[i];
        for (int j = 0; j < n0; ++j) s += a[i][j] * x[j];
        resid = std::max(resid, std::fabs(s));
    }
    double min_lambda = 0.0;
    for (int j = 0; j < k; ++j) min_lambda = std::min(min_lambda, x[j]);
    if (resid > opts_.feas_tol || min_lambda < -opts_.feas_tol) return out;

    out.status = LpStatus::Optimal;
    out.gamma = x[k] - x[k + 1];
    out.lambda.assign(x.begin(), x.begin() + k);
    return out;
}

LpSolution solve_lp(const LpInstance& lp, LpBackend* backend) {
    if (backend) return backend->solve(lp);
    SimplexBackend simplex;
    return simplex.solve(lp);
}

ExactSolution solve_restricted_exact(const Polynomial& f,
                                     const std::vector<Polynomial>& support) {
    ExactSolution out;
    const int s = static_cast<int>(support.size());
    std::set<ExponentVec, GradedLexLess> monos;
    for (const auto& [e, c] : f.terms()) monos.insert(e);
    for (const auto& p : support) {
        if (p.nvars() != f.nvars()) {
            out.reason = "support nvars mismatch";
            return out;
        }
        for (const auto& [e, c] : p.terms()) monos.insert(e);
    }
    const ExponentVec constant(f.nvars(), 0);
    monos.insert(constant);

    std::vector<std::vector<Rational>> M;
    std::vector<Rational> rhs;
    for (const auto& e : monos) {
        std::vector<Rational> row(s + 1, Rational(0));
        for (int j = 0; j < s; ++j) row[j] = support[j].coeff(e);
        if (e == constant) row[s] = 1; // gamma
        M.push_back(std::move(row));
        rhs.push_back(f.coeff(e));
    }

    // Row echelon with column-priority pivoting, free columns pinned to 0.
    const int rows = static_cast<int>(M.size());
    const int cols = s + 1;
    std::vector<int> pivot_col_of_row(rows, -1);
    int r = 0;
    for (int col = 0; col < cols && r < rows; ++col) {
        int pr = -1;
        for (int i = r; i < rows; ++i)
            if (M[i][col] != 0) {
                pr = i;
                break;
            }
        if (pr < 0) continue;
        std::swap(M[pr], M[r]);
        std::swap(rhs[pr], rhs[r]);
        const Rational piv = M[r][col];
        for (int j = col; j < cols; ++j) M[r][j] /= piv;
        rhs[r] /= piv;
        for (int i = 0; i < rows; ++i) {
            if (i == r || M[i][col] == 0) continue;
            const Rational f2 = M[i][col];
            for (int j = col; j < cols; ++j) M[i][j] -= f2 * M[r][j];
            rhs[i] -= f2 * rhs[r];
        }
        pivot_col_of_row[r] = col;
        ++r;
    }
    for (int i = r; i < rows; ++i)
        if (rhs[i] != 0) {
            out.reason = "restricted system is inconsistent";
            return out;
        }

    std::vector<Rational> x(cols, Rational(0));
    for (int i = 0; i < r; ++i) x[pivot_col_of_row[i]] = rhs[i];
    out.ok = true;
    out.gamma = x[s];
    out.lambda.assign(x.begin(), x.begin() + s);
    return out;
}

std::string dump_instance(const LpInstance& lp) {
    std::ostringstream ss;
    ss << "rows=" << lp.rows() << " lambda_cols=" << lp.lambda_cols()
       << " (gamma column last)\n";
    for (int i = 0; i < lp.rows(); ++i) {
        ss << to_string(Polynomial(lp.nvars,
                                   {{lp.row_monomials[i], Rational(1)}}));
        ss << ":";
        for (double v : lp.A[i]) ss << " " << std::setw(8) << v;
        ss << " | " << lp.c[i] << "\n";
    }
    return ss.str();
}

} // namespace krivine
