#ifndef GDSCHED_LP_HPP
#define GDSCHED_LP_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace gdsched::lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense : char { LessEqual = 'L', Equal = 'E', GreaterEqual = 'G' };

struct Row {
    std::vector<std::pair<int, double>> coeffs;  // (column, value)
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
};

/// Linear program over variables with box bounds.  Lower bounds must be
/// finite (default 0); upper bounds may be +inf.
struct LinearProgram {
    int num_vars = 0;
    bool maximize = false;
    std::vector<double> objective;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<Row> rows;

    explicit LinearProgram(int n = 0) { resize(n); }

    void resize(int n) {
        num_vars = n;
        objective.assign(n, 0.0);
        lower.assign(n, 0.0);
        upper.assign(n, kInf);
    }

    int add_var(double obj, double lo = 0.0, double hi = kInf) {
        objective.push_back(obj);
        lower.push_back(lo);
        upper.push_back(hi);
        return num_vars++;
    }

    void add_row(Row r) { rows.push_back(std::move(r)); }

    void add_row(const std::vector<std::pair<int, double>>& coeffs, Sense s, double rhs) {
        rows.push_back(Row{coeffs, s, rhs});
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double objective = 0.0;
    std::vector<double> primal;  // size num_vars
    std::vector<double> dual;    // one per row

    bool optimal() const { return status == LpStatus::Optimal; }
};

namespace detail {

// Dense two-phase primal simplex.  Dantzig pricing with a permanent switch to
// Bland's rule once the objective stalls, so degenerate inputs terminate.
// Duals come from a back-solve of B^T y = c_B on the initial standard form.
class Simplex {
  public:
    explicit Simplex(const LinearProgram& lp) : lp_(lp) {}

    LpSolution run() {
        build();
        LpSolution sol;
        if (infeasible_) {
            sol.status = LpStatus::Infeasible;
            return sol;
        }
        if (!phase1(sol)) return sol;
        sol.status = phase2();
        if (sol.status != LpStatus::Optimal) return sol;
        extract(sol);
        return sol;
    }

  private:
    static constexpr double kPivTol = 1e-9;

    const LinearProgram& lp_;
    int nv_ = 0, nrows_ = 0, ncols_ = 0, art_begin_ = 0;
    std::vector<int> basis_;
    std::vector<int> row_of_original_;
    std::vector<double> row_flip_;
    std::vector<double> A0_;  // initial standard-form matrix, nrows x ncols
    std::vector<double> cost_;
    std::vector<double> T_;  // working tableau, (nrows+1) x (ncols+1)
    bool infeasible_ = false;

    double& T(int r, int c) { return T_[static_cast<size_t>(r) * (ncols_ + 1) + c]; }
    double& A0(int r, int c) { return A0_[static_cast<size_t>(r) * ncols_ + c]; }

    void build() {
        nv_ = lp_.num_vars;
        for (int j = 0; j < nv_; ++j)
            if (!std::isfinite(lp_.lower[j]))
                throw std::invalid_argument("lp: lower bounds must be finite");
        struct SRow {
            std::vector<std::pair<int, double>> c;
            Sense s;
            double b;
            int orig;
        };
        std::vector<SRow> srows;
        srows.reserve(lp_.rows.size() + nv_);
        for (size_t i = 0; i < lp_.rows.size(); ++i) {
            const Row& r = lp_.rows[i];
            double shift = 0.0;
            for (auto [j, v] : r.coeffs) {
                if (j < 0 || j >= nv_) throw std::invalid_argument("lp: column index out of range");
                shift += v * lp_.lower[j];
            }
            srows.push_back({r.coeffs, r.sense, r.rhs - shift, static_cast<int>(i)});
        }
        for (int j = 0; j < nv_; ++j) {
            if (std::isfinite(lp_.upper[j])) {
                const double ub = lp_.upper[j] - lp_.lower[j];
                if (ub < -1e-9) infeasible_ = true;
                srows.push_back({{{j, 1.0}}, Sense::LessEqual, std::max(ub, 0.0), -1});
            }
        }
        nrows_ = static_cast<int>(srows.size());
        int nslack = 0;
        for (auto& r : srows)
            if (r.s != Sense::Equal) ++nslack;
        art_begin_ = nv_ + nslack;
        ncols_ = art_begin_ + nrows_;

        A0_.assign(static_cast<size_t>(nrows_) * ncols_, 0.0);
        basis_.assign(nrows_, -1);
        row_of_original_.assign(lp_.rows.size(), -1);
        row_flip_.assign(nrows_, 1.0);
        cost_.assign(ncols_, 0.0);
        const double sgn = lp_.maximize ? -1.0 : 1.0;  // internally minimize
        for (int j = 0; j < nv_; ++j) cost_[j] = sgn * lp_.objective[j];

        std::vector<double> b0(nrows_, 0.0);
        int slack = nv_;
        for (int i = 0; i < nrows_; ++i) {
            SRow& r = srows[i];
            if (r.orig >= 0) row_of_original_[r.orig] = i;
            Sense s = r.s;
            double flip = 1.0;
            if (r.b < 0) {  // normalize rhs >= 0
                flip = -1.0;
                r.b = -r.b;
                if (s == Sense::LessEqual) s = Sense::GreaterEqual;
                else if (s == Sense::GreaterEqual) s = Sense::LessEqual;
            }
            row_flip_[i] = flip;
            for (auto [j, v] : r.c) A0(i, j) += flip * v;
            b0[i] = r.b;
            if (s == Sense::LessEqual) {
                A0(i, slack) = 1.0;
                basis_[i] = slack++;
            } else if (s == Sense::GreaterEqual) {
                A0(i, slack) = -1.0;
                ++slack;
                A0(i, art_begin_ + i) = 1.0;
                basis_[i] = art_begin_ + i;
            } else {
                A0(i, art_begin_ + i) = 1.0;
                basis_[i] = art_begin_ + i;
            }
        }
        T_.assign(static_cast<size_t>(nrows_ + 1) * (ncols_ + 1), 0.0);
        for (int i = 0; i < nrows_; ++i) {
            for (int c = 0; c < ncols_; ++c) T(i, c) = A0(i, c);
            T(i, ncols_) = b0[i];
        }
    }

    void install_costs(const std::vector<double>& costs) {
        for (int c = 0; c <= ncols_; ++c) T(nrows_, c) = 0.0;
        for (int c = 0; c < ncols_; ++c) T(nrows_, c) = costs[c];
        for (int i = 0; i < nrows_; ++i) {
            const double cb = costs[basis_[i]];
            if (cb == 0.0) continue;
            for (int c = 0; c <= ncols_; ++c) T(nrows_, c) -= cb * T(i, c);
        }
    }

    void pivot(int pr, int pc) {
        const double inv = 1.0 / T(pr, pc);
        for (int c = 0; c <= ncols_; ++c) T(pr, c) *= inv;
        T(pr, pc) = 1.0;
        for (int r = 0; r <= nrows_; ++r) {
            if (r == pr) continue;
            const double f = T(r, pc);
            if (f == 0.0) continue;
            for (int c = 0; c <= ncols_; ++c) T(r, c) -= f * T(pr, c);
            T(r, pc) = 0.0;
        }
        basis_[pr] = pc;
    }

    LpStatus run_iterations(bool allow_art) {
        const int limit_cols = allow_art ? ncols_ : art_begin_;
        const int64_t stall_limit = 2LL * (nrows_ + ncols_) + 64;
        const int64_t iter_limit = 500LL * (nrows_ + ncols_) + 200000;
        bool bland = false;
        int64_t stall = 0;
        double last_obj = T(nrows_, ncols_);
        for (int64_t it = 0; it < iter_limit; ++it) {
            int pc = -1;
            if (!bland) {
                double best = -kPivTol;
                for (int c = 0; c < limit_cols; ++c) {
                    const double rc = T(nrows_, c);
                    if (rc < best) { best = rc; pc = c; }
                }
            } else {
                for (int c = 0; c < limit_cols; ++c)
                    if (T(nrows_, c) < -kPivTol) { pc = c; break; }
            }
            if (pc < 0) return LpStatus::Optimal;
            int pr = -1;
            double best_ratio = kInf;
            for (int r = 0; r < nrows_; ++r) {
                const double a = T(r, pc);
                if (a <= kPivTol) continue;
                const double ratio = T(r, ncols_) / a;
                if (pr < 0 || ratio < best_ratio - 1e-12 ||
                    (ratio <= best_ratio + 1e-12 && basis_[r] < basis_[pr])) {
                    if (pr < 0 || ratio < best_ratio) best_ratio = ratio;
                    pr = r;
                }
            }
            if (pr < 0) return LpStatus::Unbounded;
            pivot(pr, pc);
            const double obj = T(nrows_, ncols_);
            if (obj > last_obj - 1e-12) {
                if (++stall > stall_limit) bland = true;
            } else {
                stall = 0;
                last_obj = obj;
            }
        }
        return LpStatus::IterationLimit;
    }

    bool phase1(LpSolution& sol) {
        bool any_art = false;
        for (int i = 0; i < nrows_; ++i)
            if (basis_[i] >= art_begin_) { any_art = true; break; }
        if (!any_art) {
            install_costs(cost_);
            return true;
        }
        std::vector<double> c1(ncols_, 0.0);
        for (int c = art_begin_; c < ncols_; ++c) c1[c] = 1.0;
        install_costs(c1);
        const LpStatus st = run_iterations(true);
        if (st != LpStatus::Optimal) {
            sol.status = LpStatus::IterationLimit;
            return false;
        }
        if (-T(nrows_, ncols_) > 1e-7) {
            sol.status = LpStatus::Infeasible;
            return false;
        }
        // Drive degenerate artificials out of the basis where possible.
        for (int r = 0; r < nrows_; ++r) {
            if (basis_[r] < art_begin_) continue;
            int pc = -1;
            for (int c = 0; c < art_begin_; ++c)
                if (std::fabs(T(r, c)) > 1e-7) { pc = c; break; }
            if (pc >= 0) pivot(r, pc);
        }
        install_costs(cost_);
        return true;
    }

    LpStatus phase2() { return run_iterations(false); }

    void extract(LpSolution& sol) {
        std::vector<double> x(ncols_, 0.0);
        for (int i = 0; i < nrows_; ++i) x[basis_[i]] = T(i, ncols_);
        sol.primal.assign(nv_, 0.0);
        double obj = 0.0;
        for (int j = 0; j < nv_; ++j) {
            sol.primal[j] = lp_.lower[j] + x[j];
            obj += lp_.objective[j] * sol.primal[j];
        }
        sol.objective = obj;
        sol.dual.assign(lp_.rows.size(), 0.0);

        const int m = nrows_;
        std::vector<double> bt(static_cast<size_t>(m) * m);
        std::vector<double> y(m);
        for (int i = 0; i < m; ++i) {
            y[i] = cost_[basis_[i]];
            for (int r = 0; r < m; ++r) bt[static_cast<size_t>(i) * m + r] = A0(r, basis_[i]);
        }
        gauss_solve(bt, y, m);
        const double sgn = lp_.maximize ? -1.0 : 1.0;
        for (size_t i = 0; i < lp_.rows.size(); ++i) {
            const int tr = row_of_original_[i];
            sol.dual[i] = sgn * row_flip_[tr] * y[tr];
        }
    }

    static void gauss_solve(std::vector<double>& a, std::vector<double>& y, int m) {
        for (int k = 0; k < m; ++k) {
            int piv = k;
            double best = std::fabs(a[static_cast<size_t>(k) * m + k]);
            for (int r = k + 1; r < m; ++r) {
                const double v = std::fabs(a[static_cast<size_t>(r) * m + k]);
                if (v > best) { best = v; piv = r; }
            }
            if (piv != k) {
                for (int c = 0; c < m; ++c)
                    std::swap(a[static_cast<size_t>(k) * m + c], a[static_cast<size_t>(piv) * m + c]);
                std::swap(y[k], y[piv]);
            }
            const double d = a[static_cast<size_t>(k) * m + k];
            if (std::fabs(d) < 1e-12) continue;
            const double inv = 1.0 / d;
            for (int r = k + 1; r < m; ++r) {
                const double f = a[static_cast<size_t>(r) * m + k] * inv;
                if (f == 0.0) continue;
                for (int c = k; c < m; ++c)
                    a[static_cast<size_t>(r) * m + c] -= f * a[static_cast<size_t>(k) * m + c];
                y[r] -= f * y[k];
            }
        }
        for (int k = m - 1; k >= 0; --k) {
            double v = y[k];
            for (int c = k + 1; c < m; ++c) v -= a[static_cast<size_t>(k) * m + c] * y[c];
            const double d = a[static_cast<size_t>(k) * m + k];
            y[k] = (std::fabs(d) < 1e-12) ? 0.0 : v / d;
        }
    }
};

}  // namespace detail

inline LpSolution solve(const LinearProgram& lp) {
    if (lp.num_vars == 0) {
        LpSolution sol;
        sol.status = LpStatus::Optimal;
        sol.dual.assign(lp.rows.size(), 0.0);
        for (const Row& r : lp.rows) {
            const bool ok = (r.sense == Sense::LessEqual && r.rhs >= -1e-9) ||
                            (r.sense == Sense::Equal && std::fabs(r.rhs) <= 1e-9) ||
                            (r.sense == Sense::GreaterEqual && r.rhs <= 1e-9);
            if (!ok) {
                sol.status = LpStatus::Infeasible;
                break;
            }
        }
        return sol;
    }
    detail::Simplex s(lp);
    return s.run();
}

/// Dual objective implied by the row duals; the gap against the primal
/// objective is the LpSolution quality invariant tested by the suite.
inline double dual_objective(const LinearProgram& lp, const LpSolution& sol) {
    std::vector<double> red = lp.objective;
    for (size_t i = 0; i < lp.rows.size(); ++i)
        for (auto [j, v] : lp.rows[i].coeffs) red[j] -= sol.dual[i] * v;
    double obj = 0.0;
    for (size_t i = 0; i < lp.rows.size(); ++i) obj += sol.dual[i] * lp.rows[i].rhs;
    for (int j = 0; j < lp.num_vars; ++j) {
        double pick;
        if (lp.maximize)
            pick = red[j] > 0 ? lp.upper[j] : lp.lower[j];
        else
            pick = red[j] < 0 ? lp.upper[j] : lp.lower[j];
        if (!std::isfinite(pick)) pick = lp.lower[j];  // optimal solutions have red ~ 0 here
        obj += red[j] * pick;
    }
    return obj;
}

/// Max primal residual across rows and bounds.
inline double primal_infeasibility(const LinearProgram& lp, const LpSolution& sol) {
    double worst = 0.0;
    for (const Row& r : lp.rows) {
        double lhs = 0.0;
        for (auto [j, v] : r.coeffs) lhs += v * sol.primal[j];
        if (r.sense == Sense::LessEqual) worst = std::max(worst, lhs - r.rhs);
        else if (r.sense == Sense::GreaterEqual) worst = std::max(worst, r.rhs - lhs);
        else worst = std::max(worst, std::fabs(lhs - r.rhs));
    }
    for (int j = 0; j < lp.num_vars; ++j) {
        worst = std::max(worst, lp.lower[j] - sol.primal[j]);
        if (std::isfinite(lp.upper[j])) worst = std::max(worst, sol.primal[j] - lp.upper[j]);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Hungarian algorithm (min-cost assignment of rows to distinct columns).
// Rectangular input with rows <= columns.  Potentials formulation; exact on
// integer inputs since only additions and comparisons are used.
// ---------------------------------------------------------------------------

struct Assignment {
    std::vector<int> column_of_row;
    double total_cost = 0.0;
};

inline Assignment hungarian(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    Assignment out;
    if (n == 0) return out;
    const int m = static_cast<int>(cost[0].size());
    if (m < n) throw std::invalid_argument("hungarian: need rows <= columns");
    for (const auto& row : cost)
        if (static_cast<int>(row.size()) != m)
            throw std::invalid_argument("hungarian: ragged cost matrix");

    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, n), way(m + 1, 0);  // p[col] = row matched to col
    for (int i = 0; i < n; ++i) {
        p[m] = i;
        int j0 = m;
        std::vector<double> minv(m + 1, kInf);
        std::vector<char> used(m + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = kInf;
            int j1 = -1;
            for (int j = 0; j < m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0][j] - u[i0] - v[j];
                if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
                if (minv[j] < delta) { delta = minv[j]; j1 = j; }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
                else minv[j] -= delta;
            }
            j0 = j1;
        } while (p[j0] != n);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != m);
    }
    out.column_of_row.assign(n, -1);
    for (int j = 0; j < m; ++j)
        if (p[j] != n) out.column_of_row[p[j]] = j;
    out.total_cost = 0.0;
    for (int i = 0; i < n; ++i) out.total_cost += cost[i][out.column_of_row[i]];
    return out;
}

// ---------------------------------------------------------------------------
// Birkhoff-von-Neumann decomposition.
// ---------------------------------------------------------------------------

struct BirkhoffComponent {
    double weight = 0.0;
    std::vector<int> column_of_row;  // permutation over the padded square matrix
};

namespace detail {

inline bool perfect_matching(const std::vector<std::vector<double>>& a, double tol,
                             std::vector<int>& col_of_row) {
    const int n = static_cast<int>(a.size());
    std::vector<int> row_of_col(n, -1);
    col_of_row.assign(n, -1);
    std::vector<char> seen;
    std::function<bool(int)> aug = [&](int r) -> bool {
        for (int c = 0; c < n; ++c) {
            if (a[r][c] > tol && !seen[c]) {
                seen[c] = true;
                if (row_of_col[c] < 0 || aug(row_of_col[c])) {
                    row_of_col[c] = r;
                    col_of_row[r] = c;
                    return true;
                }
            }
        }
        return false;
    };
    for (int r = 0; r < n; ++r) {
        seen.assign(n, false);
        if (!aug(r)) return false;
    }
    return true;
}

}  // namespace detail

namespace detail {

inline std::vector<BirkhoffComponent> birkhoff_extract(std::vector<std::vector<double>>& a,
                                                       double target, int keep_rows,
                                                       int keep_cols) {
    const int side = static_cast<int>(a.size());
    std::vector<BirkhoffComponent> comps;
    double remaining = target;
    const int max_comps = side * side + 2;
    for (int it = 0; it < max_comps && remaining > 1e-12; ++it) {
        std::vector<int> match;
        if (!perfect_matching(a, remaining * 1e-12, match)) break;
        double w = remaining;
        for (int r = 0; r < side; ++r) w = std::min(w, a[r][match[r]]);
        if (w <= 0) break;
        for (int r = 0; r < side; ++r) a[r][match[r]] = std::max(0.0, a[r][match[r]] - w);
        BirkhoffComponent comp;
        comp.weight = w;
        comp.column_of_row.assign(keep_rows, -1);
        for (int r = 0; r < keep_rows; ++r)
            if (match[r] < keep_cols) comp.column_of_row[r] = match[r];
        comps.push_back(std::move(comp));
        remaining -= w;
    }
    return comps;
}

}  // namespace detail

/// Decomposes a nonnegative matrix with row/column sums <= 1+1e-9 into a
/// weighted sum of matchings whose weights sum to the maximum row/column sum.
/// The slack is padded outside the original support whenever possible (then
/// at most n^2-2n+2 components are produced); otherwise the matrix is
/// embedded into a doubly stochastic one twice the size, and component
/// entries matched to padding report column -1.  Either way the components
/// recompose the input exactly on its support.
inline std::vector<BirkhoffComponent> birkhoff_decompose(std::vector<std::vector<double>> a) {
    const int n = static_cast<int>(a.size());
    if (n == 0) return {};
    for (const auto& r : a)
        if (static_cast<int>(r.size()) != n)
            throw std::invalid_argument("birkhoff: matrix must be square");
    std::vector<double> rs(n, 0.0), cs(n, 0.0);
    double target = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (a[i][j] < -1e-12) throw std::invalid_argument("birkhoff: negative entry");
            a[i][j] = std::max(a[i][j], 0.0);
            rs[i] += a[i][j];
            cs[j] += a[i][j];
        }
    for (int i = 0; i < n; ++i) {
        if (rs[i] > 1.0 + 1e-9 || cs[i] > 1.0 + 1e-9)
            throw std::invalid_argument("birkhoff: row/column sum exceeds 1");
        target = std::max({target, rs[i], cs[i]});
    }
    if (target <= 1e-15) return {};

    // First try to route all padding through zero cells only.
    {
        auto b = a;
        auto rs2 = rs, cs2 = cs;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n && rs2[i] < target - 1e-12; ++j) {
                if (a[i][j] > 0.0) continue;
                const double add = std::min(target - rs2[i], target - cs2[j]);
                if (add > 1e-15) {
                    b[i][j] += add;
                    rs2[i] += add;
                    cs2[j] += add;
                }
            }
        bool balanced = true;
        for (int i = 0; i < n; ++i)
            balanced = balanced && rs2[i] >= target - 1e-9 && cs2[i] >= target - 1e-9;
        if (balanced) return detail::birkhoff_extract(b, target, n, n);
    }

    // Fallback: embed into a 2n x 2n doubly stochastic matrix with the slack
    // confined to the auxiliary blocks.
    const int side = 2 * n;
    std::vector<std::vector<double>> b(side, std::vector<double>(side, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b[i][j] = a[i][j];
    for (int i = 0; i < n; ++i) b[i][n + i] = target - rs[i];
    for (int j = 0; j < n; ++j) b[n + j][j] = target - cs[j];
    // bottom-right block: row n+j still needs cs[j], column n+i still needs rs[i]
    std::vector<double> row_need(n), col_need(n);
    for (int j = 0; j < n; ++j) row_need[j] = cs[j];
    for (int i = 0; i < n; ++i) col_need[i] = rs[i];
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n && row_need[j] > 1e-15; ++i) {
            const double add = std::min(row_need[j], col_need[i]);
            if (add > 1e-15) {
                b[n + j][n + i] += add;
                row_need[j] -= add;
                col_need[i] -= add;
            }
        }
    return detail::birkhoff_extract(b, target, n, n);
}

}  // namespace gdsched::lp

#endif  // GDSCHED_LP_HPP
