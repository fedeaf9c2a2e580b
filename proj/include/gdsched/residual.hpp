#ifndef GDSCHED_RESIDUAL_HPP
#define GDSCHED_RESIDUAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdsched/core.hpp"
#include "gdsched/envs.hpp"
#include "gdsched/lp.hpp"

namespace gdsched::residual {

// ---------------------------------------------------------------------------
// A residual problem is a set of virtual jobs (remaining size, weight,
// original size) mapped onto environment job slots.  Copies of the same slot
// aggregate against the slot's capacity (parallel elements); on unrelated
// machines each copy carries its own matching constraint.
// ---------------------------------------------------------------------------

struct ResidualProblem {
    const EnvironmentSpec* env = nullptr;
    std::vector<int> element_of;
    std::vector<double> remaining;   // x_v
    std::vector<double> weight;      // w_v
    std::vector<double> orig_size;   // p_v (fractional density is w_v / p_v)

    int size() const { return static_cast<int>(remaining.size()); }

    double density(int v) const { return weight[v] / orig_size[v]; }

    double fractional_weight() const {
        double s = 0.0;
        for (int v = 0; v < size(); ++v) s += density(v) * remaining[v];
        return s;
    }

    static ResidualProblem from_state(const Instance& inst, const std::vector<double>& remaining) {
        ResidualProblem p;
        p.env = &inst.env;
        for (size_t j = 0; j < inst.jobs.size(); ++j) {
            p.element_of.push_back(static_cast<int>(j));
            p.remaining.push_back(remaining[j]);
            p.weight.push_back(inst.jobs[j].weight);
            p.orig_size.push_back(inst.jobs[j].size);
        }
        return p;
    }

    ResidualProblem restricted(const std::vector<char>& keep) const {
        ResidualProblem p;
        p.env = env;
        for (int v = 0; v < size(); ++v) {
            p.element_of.push_back(element_of[v]);
            p.remaining.push_back(keep[v] ? remaining[v] : 0.0);
            p.weight.push_back(weight[v]);
            p.orig_size.push_back(orig_size[v]);
        }
        return p;
    }
};

/// Piecewise-constant processing plan over residual time.
struct ResidualPlan {
    struct Segment {
        double start = 0.0, end = 0.0;
        std::vector<double> rates;  // per virtual job
    };
    std::vector<Segment> segments;
    double value = 0.0;

    double horizon() const { return segments.empty() ? 0.0 : segments.back().end; }

    std::vector<double> rates_at(double t) const {
        for (const auto& s : segments)
            if (t < s.end - 1e-15) return s.rates;
        return segments.empty() ? std::vector<double>{} : std::vector<double>(segments[0].rates.size(), 0.0);
    }

    std::vector<double> processed_by(double t) const {
        std::vector<double> acc;
        if (!segments.empty()) acc.assign(segments[0].rates.size(), 0.0);
        for (const auto& s : segments) {
            if (s.start >= t) break;
            const double len = std::min(t, s.end) - s.start;
            for (size_t v = 0; v < acc.size(); ++v) acc[v] += s.rates[v] * len;
        }
        return acc;
    }
};

/// Exact fractional objective of a plan: sum_v d_v * int t z_v(t) dt.
inline double plan_fractional_value(const ResidualPlan& plan, const ResidualProblem& prob) {
    double acc = 0.0;
    for (const auto& s : plan.segments) {
        const double coef = (s.end * s.end - s.start * s.start) / 2.0;
        for (int v = 0; v < prob.size(); ++v) acc += prob.density(v) * s.rates[v] * coef;
    }
    return acc;
}

/// Value of the remaining plan suffix from residual time tau, re-zeroed.
inline double plan_suffix_fractional_value(const ResidualPlan& plan, const ResidualProblem& prob,
                                           double tau) {
    double acc = 0.0;
    for (const auto& s : plan.segments) {
        if (s.end <= tau + 1e-15) continue;
        const double a = std::max(s.start, tau) - tau;
        const double b = s.end - tau;
        const double coef = (b * b - a * a) / 2.0;
        for (int v = 0; v < prob.size(); ++v) acc += prob.density(v) * s.rates[v] * coef;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Single machine closed forms.
// ---------------------------------------------------------------------------

struct ResidualResult {
    double value = 0.0;
    ResidualPlan plan;
};

namespace detail {

inline std::vector<int> alive_jobs(const ResidualProblem& p) {
    std::vector<int> out;
    for (int v = 0; v < p.size(); ++v)
        if (p.remaining[v] > kCompletionTol) out.push_back(v);
    return out;
}

inline void append_sequential(ResidualPlan& plan, int num_jobs, int vjob, double start, double len,
                              double rate) {
    ResidualPlan::Segment s;
    s.start = start;
    s.end = start + len;
    s.rates.assign(num_jobs, 0.0);
    s.rates[vjob] = rate;
    plan.segments.push_back(std::move(s));
}

}  // namespace detail

/// Min total weighted completion time on one machine: Smith's rule on the
/// remaining sizes (descending w/x, ties by ascending index).
inline ResidualResult single_machine_residual_integral(const ResidualProblem& p) {
    auto alive = detail::alive_jobs(p);
    std::sort(alive.begin(), alive.end(), [&](int a, int b) {
        const double ra = p.weight[a] / p.remaining[a], rb = p.weight[b] / p.remaining[b];
        if (ra != rb) return ra > rb;
        return a < b;
    });
    ResidualResult out;
    double t = 0.0;
    for (int v : alive) {
        detail::append_sequential(out.plan, p.size(), v, t, p.remaining[v], 1.0);
        t += p.remaining[v];
        out.value += p.weight[v] * t;
    }
    out.plan.value = out.value;
    return out;
}

/// Min total fractional weighted completion time on one machine: run jobs in
/// descending w/p order (original sizes), sequentially at rate 1.
inline ResidualResult single_machine_residual_fractional(const ResidualProblem& p) {
    auto alive = detail::alive_jobs(p);
    std::sort(alive.begin(), alive.end(), [&](int a, int b) {
        const double ra = p.density(a), rb = p.density(b);
        if (ra != rb) return ra > rb;
        return a < b;
    });
    ResidualResult out;
    double t = 0.0;
    for (int v : alive) {
        const double x = p.remaining[v];
        detail::append_sequential(out.plan, p.size(), v, t, x, 1.0);
        out.value += p.density(v) * (t * x + x * x / 2.0);
        t += x;
    }
    out.plan.value = out.value;
    return out;
}

/// Weighted completion time on one machine with job-specific processing times
/// p_i (already rate-converted); plain Smith value, no plan.
inline double smith_value(std::vector<std::pair<double, double>> wp /* (weight, time) */) {
    std::sort(wp.begin(), wp.end(), [](const auto& a, const auto& b) {
        const double ra = a.first / a.second, rb = b.first / b.second;
        if (ra != rb) return ra > rb;
        return a.second < b.second;
    });
    double t = 0.0, acc = 0.0;
    for (const auto& [w, x] : wp) {
        t += x;
        acc += w * t;
    }
    return acc;
}

/// Residual optimum of one unrelated machine: Smith on p_j(t) / lambda_ij.
inline double per_machine_residual(const std::vector<double>& lambda_row,
                                   const std::vector<double>& remaining,
                                   const std::vector<double>& weights) {
    std::vector<std::pair<double, double>> wp;
    for (size_t j = 0; j < remaining.size(); ++j) {
        if (remaining[j] <= kCompletionTol) continue;
        if (lambda_row[j] <= 0)
            throw std::invalid_argument("per_machine_residual: job has zero rate on this machine");
        wp.push_back({weights[j], remaining[j] / lambda_row[j]});
    }
    return smith_value(std::move(wp));
}

// ---------------------------------------------------------------------------
// Interval grid for the compact time-indexed LP.
// ---------------------------------------------------------------------------

struct IntervalGrid {
    int inv_rho = 1;                      // 1/rho
    std::vector<long long> breakpoints;   // a_1 < a_2 < ... (first interval [a_1, a_2))

    int num_intervals() const { return static_cast<int>(breakpoints.size()) - 1; }
    double left(int h) const { return static_cast<double>(breakpoints[h]); }
    double length(int h) const { return static_cast<double>(breakpoints[h + 1] - breakpoints[h]); }
    double covered() const { return static_cast<double>(breakpoints.back() - breakpoints.front()); }
};

/// Breakpoints are the integers in [10/rho^2] followed by
/// floor((10/rho^2)(1+rho)^l), deduplicated, extended to cover the horizon.
inline IntervalGrid build_interval_grid(int inv_rho, double horizon) {
    if (inv_rho < 1) throw std::invalid_argument("build_interval_grid: 1/rho must be a positive integer");
    IntervalGrid g;
    g.inv_rho = inv_rho;
    const double rho = 1.0 / inv_rho;
    const long long base = static_cast<long long>(10.0 * inv_rho * static_cast<double>(inv_rho));
    for (long long a = 1; a <= base; ++a) g.breakpoints.push_back(a);
    double v = static_cast<double>(base);
    while (g.breakpoints.back() < static_cast<long long>(std::ceil(horizon)) + 1) {
        v *= (1.0 + rho);
        const long long a = static_cast<long long>(std::floor(v));
        if (a > g.breakpoints.back()) g.breakpoints.push_back(a);
        if (v > 1e15) break;
    }
    // Always cover at least the horizon plus one more breakpoint.
    while (g.breakpoints.size() < 2 ||
           static_cast<double>(g.breakpoints.back() - 1) < horizon) {
        v *= (1.0 + rho);
        const long long a = std::max(static_cast<long long>(std::floor(v)), g.breakpoints.back() + 1);
        g.breakpoints.push_back(a);
    }
    return g;
}

/// Unit grid covering the horizon (the exact-mode special case).
inline IntervalGrid build_unit_grid(double horizon) {
    IntervalGrid g;
    g.inv_rho = 1;
    const long long h = std::max<long long>(2, static_cast<long long>(std::ceil(horizon)) + 2);
    for (long long a = 1; a <= h; ++a) g.breakpoints.push_back(a);
    return g;
}

/// Horizon guaranteeing LP feasibility: total work over the slowest job's
/// best-case rate.
inline double residual_horizon(const ResidualProblem& p) {
    double total = 0.0, min_rate = lp::kInf;
    for (int v = 0; v < p.size(); ++v) {
        if (p.remaining[v] <= kCompletionTol) continue;
        total += p.remaining[v];
        const double r = envs::max_rate_of(*p.env, p.element_of, v);
        if (r <= 1e-12)
            throw std::invalid_argument("residual: job cannot be processed in this environment");
        min_rate = std::min(min_rate, r);
    }
    if (total == 0.0) return 0.0;
    return total / min_rate;
}

// ---------------------------------------------------------------------------
// Grid LP: minimize sum_v d_v sum_h (a_h - 1) u_{h,v}, work conservation, and
// the per-interval scaled polytope rows.  The unit-cost convention prices the
// first unit slot at zero so unit-grid values line up with the continuous
// closed forms shifted by half the fractional weight.
// ---------------------------------------------------------------------------

struct GridLp {
    lp::LinearProgram prog;
    envs::PhaseSeparator separator;
    std::vector<std::vector<int>> work_var;  // [interval][vjob]
    std::vector<int> demand_row;             // row index per vjob
    IntervalGrid grid;
    int intervals_used = 0;
};

inline GridLp build_residual_lp(const ResidualProblem& p, const IntervalGrid& grid) {
    GridLp out;
    out.grid = grid;
    const int nv = p.size();
    double horizon = 0.0;
    if (!detail::alive_jobs(p).empty()) horizon = residual_horizon(p);
    int H = 0;
    double covered = 0.0;
    while (H < grid.num_intervals() && covered < horizon) covered += grid.length(H++);
    if (covered < horizon) throw std::invalid_argument("build_residual_lp: grid does not cover horizon");
    out.intervals_used = H;

    out.prog.maximize = false;
    out.work_var.assign(H, std::vector<int>(nv, -1));
    for (int h = 0; h < H; ++h)
        for (int v = 0; v < nv; ++v)
            out.work_var[h][v] = out.prog.add_var(p.density(v) * (grid.left(h) - 1.0), 0.0, lp::kInf);
    envs::PhaseSeparator combined;
    std::vector<envs::PhaseSeparator> seps;
    for (int h = 0; h < H; ++h)
        seps.push_back(envs::add_phase_rows(out.prog, *p.env, p.element_of, out.work_var[h],
                                            grid.length(h)));
    out.demand_row.assign(nv, -1);
    for (int v = 0; v < nv; ++v) {
        std::vector<std::pair<int, double>> row;
        for (int h = 0; h < H; ++h) row.push_back({out.work_var[h][v], 1.0});
        out.demand_row[v] = static_cast<int>(out.prog.rows.size());
        out.prog.add_row(row, lp::Sense::Equal, std::max(p.remaining[v], 0.0));
    }
    bool exact = true;
    for (const auto& s : seps) exact = exact && s.exact;
    combined.exact = exact;
    if (!exact) {
        combined.separate = [seps](const std::vector<double>& primal, lp::LinearProgram& prog) {
            int added = 0;
            for (const auto& s : seps)
                if (!s.exact) added += s.separate(primal, prog);
            return added;
        };
    }
    out.separator = std::move(combined);
    return out;
}

struct GridSolveResult {
    double lp_objective = 0.0;  // left-endpoint-minus-one convention
    ResidualPlan plan;          // plan.value = exact fractional evaluation
};

inline GridSolveResult solve_grid_lp(const ResidualProblem& p, const IntervalGrid& grid) {
    GridLp g = build_residual_lp(p, grid);
    GridSolveResult out;
    if (g.prog.num_vars == 0) return out;
    lp::LpSolution sol = envs::solve_with_separation(g.prog, g.separator);
    if (!sol.optimal()) throw std::runtime_error("solve_grid_lp: LP not optimal");
    out.lp_objective = sol.objective;
    double t = 0.0;
    for (int h = 0; h < g.intervals_used; ++h) {
        ResidualPlan::Segment s;
        s.start = t;
        s.end = t + g.grid.length(h);
        s.rates.assign(p.size(), 0.0);
        for (int v = 0; v < p.size(); ++v)
            s.rates[v] = std::max(0.0, sol.primal[g.work_var[h][v]]) / g.grid.length(h);
        t = s.end;
        out.plan.segments.push_back(std::move(s));
    }
    while (!out.plan.segments.empty()) {  // trim idle tail
        const auto& s = out.plan.segments.back();
        double tot = 0.0;
        for (double r : s.rates) tot += r;
        if (tot > 1e-12) break;
        out.plan.segments.pop_back();
    }
    out.plan.value = plan_fractional_value(out.plan, p);
    return out;
}

// ---------------------------------------------------------------------------
// Non-migratory matching residual for unrelated machines (unweighted): jobs
// match to (machine, reverse position) slots with cost k * x_j / lambda_ij.
// ---------------------------------------------------------------------------

struct MatchingResidual {
    double value = 0.0;
    std::vector<int> machine_of;   // per vjob, -1 if not alive
    std::vector<int> position_of;  // reverse position k (1 = last)
    ResidualPlan plan;
};

inline MatchingResidual matching_residual(const ResidualProblem& p) {
    const auto* env = std::get_if<UnrelatedMachines>(p.env);
    if (!env) throw std::invalid_argument("matching_residual: unrelated environment required");
    const int m = env->num_machines();
    const auto alive = detail::alive_jobs(p);
    const int n = static_cast<int>(alive.size());
    MatchingResidual out;
    out.machine_of.assign(p.size(), -1);
    out.position_of.assign(p.size(), 0);
    if (n == 0) return out;

    double max_cost = 0.0;
    std::vector<std::vector<double>> ptime(n, std::vector<double>(m, -1.0));
    for (int a = 0; a < n; ++a) {
        bool any = false;
        for (int i = 0; i < m; ++i) {
            const double lam = env->rates[p.element_of[alive[a]]][i];
            if (lam > 0) {
                ptime[a][i] = p.remaining[alive[a]] / lam;
                max_cost = std::max(max_cost, n * ptime[a][i]);
                any = true;
            }
        }
        if (!any) throw std::invalid_argument("matching_residual: job has all-zero rates");
    }
    const double big = (max_cost + 1.0) * 1e6;
    std::vector<std::vector<double>> cost(n, std::vector<double>(m * n));
    for (int a = 0; a < n; ++a)
        for (int i = 0; i < m; ++i)
            for (int k = 1; k <= n; ++k)
                cost[a][i * n + (k - 1)] = ptime[a][i] < 0 ? big : k * ptime[a][i];
    lp::Assignment asg = lp::hungarian(cost);
    out.value = asg.total_cost;

    std::vector<std::vector<int>> on_machine(m);
    for (int a = 0; a < n; ++a) {
        const int col = asg.column_of_row[a];
        out.machine_of[alive[a]] = col / n;
        out.position_of[alive[a]] = col % n + 1;
        on_machine[col / n].push_back(alive[a]);
    }
    // Per machine, run in descending reverse position (shortest first).
    std::vector<double> ready(m, 0.0);
    std::vector<std::pair<double, std::pair<int, int>>> pieces;  // (start, (vjob, machine))
    for (int i = 0; i < m; ++i) {
        std::sort(on_machine[i].begin(), on_machine[i].end(),
                  [&](int a, int b) { return out.position_of[a] > out.position_of[b]; });
        for (int v : on_machine[i]) {
            pieces.push_back({ready[i], {v, i}});
            ready[i] += p.remaining[v] / env->rates[p.element_of[v]][i];
        }
    }
    // Merge per-machine sequential pieces into global segments.
    std::vector<double> cuts;
    for (auto& pc : pieces) cuts.push_back(pc.first);
    for (int i = 0; i < m; ++i) cuts.push_back(ready[i]);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::fabs(a - b) < 1e-12; }),
               cuts.end());
    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
        if (cuts[k + 1] - cuts[k] < 1e-12) continue;
        ResidualPlan::Segment s;
        s.start = cuts[k];
        s.end = cuts[k + 1];
        s.rates.assign(p.size(), 0.0);
        const double mid = 0.5 * (s.start + s.end);
        for (int i = 0; i < m; ++i) {
            double t0 = 0.0;
            for (int v : on_machine[i]) {
                const double dur = p.remaining[v] / env->rates[p.element_of[v]][i];
                if (mid > t0 && mid < t0 + dur) s.rates[v] = env->rates[p.element_of[v]][i];
                t0 += dur;
            }
        }
        out.plan.segments.push_back(std::move(s));
    }
    out.plan.value = out.value;
    return out;
}

// ---------------------------------------------------------------------------
// Weighted unrelated residual LP over a grid, with exact per-interval time
// coefficients: (*) = sum (w lambda / p) int t z, (**) = sum w int z.
// ---------------------------------------------------------------------------

struct WeightedUnrelatedResidual {
    double value = 0.0;
    double star = 0.0;       // (*)
    double star_star = 0.0;  // (**)
    struct Segment {
        double start = 0.0, end = 0.0;
        std::vector<std::vector<double>> z;  // [vjob][machine] rates
    };
    std::vector<Segment> segments;
};

inline WeightedUnrelatedResidual weighted_unrelated_residual(const ResidualProblem& p,
                                                             const IntervalGrid& grid) {
    const auto* env = std::get_if<UnrelatedMachines>(p.env);
    if (!env) throw std::invalid_argument("weighted_unrelated_residual: unrelated environment required");
    const int m = env->num_machines();
    const auto alive = detail::alive_jobs(p);
    WeightedUnrelatedResidual out;
    if (alive.empty()) return out;

    double horizon = 0.0;
    for (int v : alive) {
        double best = 0.0;
        for (int i = 0; i < m; ++i) best = std::max(best, env->rates[p.element_of[v]][i]);
        if (best <= 0) throw std::invalid_argument("weighted_unrelated_residual: job has all-zero rates");
        horizon += p.remaining[v] / best;
    }
    int H = 0;
    double covered = 0.0;
    while (H < grid.num_intervals() && covered < horizon) covered += grid.length(H++);
    if (covered < horizon)
        throw std::invalid_argument("weighted_unrelated_residual: grid does not cover horizon");

    lp::LinearProgram prog;
    const int n = static_cast<int>(alive.size());
    // machine-time variables mt[h][a][i]
    std::vector<std::vector<std::vector<int>>> mt(H, std::vector<std::vector<int>>(n, std::vector<int>(m)));
    double t0 = 0.0;
    for (int h = 0; h < H; ++h) {
        const double mid = t0 + grid.length(h) / 2.0;
        for (int a = 0; a < n; ++a) {
            const int v = alive[a];
            for (int i = 0; i < m; ++i) {
                const double lam = env->rates[p.element_of[v]][i];
                const double c_star = p.weight[v] * lam / p.orig_size[v] * mid;
                const double c_flat = p.weight[v];
                mt[h][a][i] = prog.add_var(c_star + c_flat, 0.0, lam > 0 ? lp::kInf : 0.0);
            }
        }
        t0 += grid.length(h);
    }
    t0 = 0.0;
    for (int h = 0; h < H; ++h) {
        for (int i = 0; i < m; ++i) {
            std::vector<std::pair<int, double>> row;
            for (int a = 0; a < n; ++a) row.push_back({mt[h][a][i], 1.0});
            prog.add_row(row, lp::Sense::LessEqual, grid.length(h));
        }
        t0 += grid.length(h);
    }
    for (int a = 0; a < n; ++a) {
        const int v = alive[a];
        std::vector<std::pair<int, double>> row;
        for (int h = 0; h < H; ++h)
            for (int i = 0; i < m; ++i) row.push_back({mt[h][a][i], env->rates[p.element_of[v]][i]});
        prog.add_row(row, lp::Sense::Equal, p.remaining[v]);
    }
    lp::LpSolution sol = lp::solve(prog);
    if (!sol.optimal()) throw std::runtime_error("weighted_unrelated_residual: LP not optimal");
    out.value = sol.objective;
    t0 = 0.0;
    for (int h = 0; h < H; ++h) {
        WeightedUnrelatedResidual::Segment seg;
        seg.start = t0;
        seg.end = t0 + grid.length(h);
        seg.z.assign(p.size(), std::vector<double>(m, 0.0));
        const double mid = 0.5 * (seg.start + seg.end);
        bool any = false;
        for (int a = 0; a < n; ++a) {
            const int v = alive[a];
            for (int i = 0; i < m; ++i) {
                const double mtime = std::max(0.0, sol.primal[mt[h][a][i]]);
                if (mtime > 1e-12) {
                    seg.z[v][i] = mtime / grid.length(h);
                    any = true;
                    const double lam = env->rates[p.element_of[v]][i];
                    out.star += p.weight[v] * lam / p.orig_size[v] * mid * mtime;
                    out.star_star += p.weight[v] * mtime;
                }
            }
        }
        t0 = seg.end;
        out.segments.push_back(std::move(seg));
        if (!any && t0 > horizon) break;
    }
    while (!out.segments.empty()) {
        bool any = false;
        for (const auto& zr : out.segments.back().z)
            for (double z : zr)
                if (z > 1e-12) any = true;
        if (any) break;
        out.segments.pop_back();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exact continuous fractional residual: segment LP with midpoint costs,
// refined until the LP duals certify optimality against every continuous
// schedule (the plan maximizes (alpha - d t) . z over P at both endpoints of
// every segment, so by convexity throughout).
// ---------------------------------------------------------------------------

struct ContinuousOptions {
    double cert_tol = 1e-8;
    int max_rounds = 60;
    int max_segments = 240;
};

namespace detail {

struct SegmentLpResult {
    double value = 0.0;
    std::vector<std::vector<double>> work;  // [segment][vjob]
    std::vector<double> alpha;              // equality duals per vjob
};

inline SegmentLpResult solve_segment_lp(const ResidualProblem& p, const std::vector<int>& act,
                                        const std::vector<double>& cuts) {
    const int K = static_cast<int>(cuts.size()) - 1;
    const int n = static_cast<int>(act.size());
    lp::LinearProgram prog;
    std::vector<std::vector<int>> uvar(K, std::vector<int>(n));
    std::vector<int> sub_elem(n);
    for (int a = 0; a < n; ++a) sub_elem[a] = p.element_of[act[a]];
    for (int k = 0; k < K; ++k) {
        const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
        for (int a = 0; a < n; ++a) uvar[k][a] = prog.add_var(p.density(act[a]) * mid, 0.0, lp::kInf);
    }
    std::vector<envs::PhaseSeparator> seps;
    for (int k = 0; k < K; ++k)
        seps.push_back(envs::add_phase_rows(prog, *p.env, sub_elem, uvar[k], cuts[k + 1] - cuts[k]));
    std::vector<int> eq_row(n);
    for (int a = 0; a < n; ++a) {
        std::vector<std::pair<int, double>> row;
        for (int k = 0; k < K; ++k) row.push_back({uvar[k][a], 1.0});
        eq_row[a] = static_cast<int>(prog.rows.size());
        prog.add_row(row, lp::Sense::Equal, p.remaining[act[a]]);
    }
    envs::PhaseSeparator sep;
    sep.exact = true;
    for (const auto& s : seps) sep.exact = sep.exact && s.exact;
    if (!sep.exact) {
        sep.separate = [seps](const std::vector<double>& primal, lp::LinearProgram& pr) {
            int added = 0;
            for (const auto& s : seps)
                if (!s.exact) added += s.separate(primal, pr);
            return added;
        };
    }
    lp::LpSolution sol = envs::solve_with_separation(prog, sep);
    if (!sol.optimal()) throw std::runtime_error("continuous residual: segment LP not optimal");
    SegmentLpResult out;
    out.value = sol.objective;
    out.work.assign(K, std::vector<double>(n, 0.0));
    for (int k = 0; k < K; ++k)
        for (int a = 0; a < n; ++a) out.work[k][a] = std::max(0.0, sol.primal[uvar[k][a]]);
    out.alpha.assign(n, 0.0);
    for (int a = 0; a < n; ++a) out.alpha[a] = sol.dual[eq_row[a]];
    return out;
}

// Greedy front-loading seed: repeatedly sustain the max-density rate vector
// until some job exhausts.  Not optimal in general, just good breakpoints.
inline std::vector<double> greedy_seed_cuts(const ResidualProblem& p, const std::vector<int>& act,
                                            double horizon) {
    std::vector<double> cuts{0.0};
    std::vector<double> x;
    std::vector<int> sub_elem;
    std::vector<double> dens;
    for (int v : act) {
        x.push_back(p.remaining[v]);
        sub_elem.push_back(p.element_of[v]);
        dens.push_back(p.density(v));
    }
    double t = 0.0;
    for (int round = 0; round < static_cast<int>(act.size()) + 2; ++round) {
        std::vector<double> c(dens);
        bool any = false;
        for (size_t a = 0; a < x.size(); ++a) {
            if (x[a] <= 1e-12) c[a] = -1.0;
            else any = true;
        }
        if (!any) break;
        auto res = envs::max_linear_virtual(*p.env, sub_elem, c);
        double dt = lp::kInf;
        for (size_t a = 0; a < x.size(); ++a)
            if (res.rates[a] > 1e-12) dt = std::min(dt, x[a] / res.rates[a]);
        if (!std::isfinite(dt) || dt <= 1e-12) break;
        t += dt;
        for (size_t a = 0; a < x.size(); ++a) x[a] = std::max(0.0, x[a] - dt * res.rates[a]);
        if (t >= horizon - 1e-12) break;
        cuts.push_back(t);
    }
    cuts.push_back(std::max(horizon, t + 1e-9));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::fabs(a - b) < 1e-10; }),
               cuts.end());
    return cuts;
}

}  // namespace detail

inline ResidualResult solve_fractional_continuous(const ResidualProblem& p,
                                                  const ContinuousOptions& opt = {}) {
    ResidualResult out;
    std::vector<int> act;  // positive-density alive jobs
    std::vector<int> free_jobs;
    for (int v = 0; v < p.size(); ++v) {
        if (p.remaining[v] <= kCompletionTol) continue;
        if (p.density(v) > 0) act.push_back(v);
        else free_jobs.push_back(v);
    }
    double tail_end = 0.0;
    if (!act.empty()) {
        ResidualProblem q = p;
        for (int v : free_jobs) q.remaining[v] = 0.0;
        double horizon = residual_horizon(q);
        std::vector<double> cuts = detail::greedy_seed_cuts(q, act, horizon);
        std::vector<int> sub_elem;
        for (int v : act) sub_elem.push_back(q.element_of[v]);

        detail::SegmentLpResult lpres;
        bool certified = false;
        for (int round = 0; round < opt.max_rounds; ++round) {
            lpres = detail::solve_segment_lp(q, act, cuts);
            // Tail check first: all clamp times must be inside the horizon.
            double need = cuts.back();
            for (size_t a = 0; a < act.size(); ++a)
                need = std::max(need, lpres.alpha[a] / q.density(act[a]));
            if (need > cuts.back() + 1e-9) {
                cuts.back() = need * 1.25;
                continue;
            }
            std::vector<double> to_add;
            const int K = static_cast<int>(cuts.size()) - 1;
            for (int k = 0; k < K; ++k) {
                const double tau = cuts[k + 1] - cuts[k];
                std::vector<double> zhat(act.size());
                for (size_t a = 0; a < act.size(); ++a) zhat[a] = lpres.work[k][a] / tau;
                bool violated = false;
                const size_t seg_candidates_begin = to_add.size();
                envs::LinearMaxResult left_best;
                for (int side = 0; side < 2; ++side) {
                    const double t = side == 0 ? cuts[k] : cuts[k + 1];
                    std::vector<double> c(act.size());
                    for (size_t a = 0; a < act.size(); ++a)
                        c[a] = lpres.alpha[a] - q.density(act[a]) * t;
                    auto best = envs::max_linear_virtual(*q.env, sub_elem, c);
                    if (side == 0) left_best = best;
                    double mine = 0.0;
                    for (size_t a = 0; a < act.size(); ++a) mine += c[a] * zhat[a];
                    if (best.value > mine + opt.cert_tol * (1.0 + std::fabs(best.value))) {
                        violated = true;
                        // exact crossing of the two linear value functions
                        double num = 0.0, den = 0.0;
                        for (size_t a = 0; a < act.size(); ++a) {
                            num += lpres.alpha[a] * (best.rates[a] - zhat[a]);
                            den += q.density(act[a]) * (best.rates[a] - zhat[a]);
                        }
                        if (std::fabs(den) > 1e-12) {
                            const double tc = num / den;
                            if (tc > cuts[k] + 1e-9 && tc < cuts[k + 1] - 1e-9) to_add.push_back(tc);
                        }
                    }
                }
                if (violated) {
                    // playing the left-endpoint bundle until the segment's own
                    // density work runs out localizes the breakpoint when the
                    // LP spread work indifferently across the segment
                    double dwork = 0.0, drate = 0.0;
                    for (size_t a = 0; a < act.size(); ++a) {
                        dwork += q.density(act[a]) * lpres.work[k][a];
                        drate += q.density(act[a]) * left_best.rates[a];
                    }
                    if (drate > 1e-12) {
                        const double tex = cuts[k] + dwork / drate;
                        if (tex > cuts[k] + 1e-9 && tex < cuts[k + 1] - 1e-9) to_add.push_back(tex);
                    }
                    if (to_add.size() == seg_candidates_begin)
                        to_add.push_back(0.5 * (cuts[k] + cuts[k + 1]));
                }
            }
            if (to_add.empty()) {
                certified = true;
                break;
            }
            for (double t : to_add) cuts.push_back(t);
            std::sort(cuts.begin(), cuts.end());
            cuts.erase(std::unique(cuts.begin(), cuts.end(),
                                   [](double a, double b) { return std::fabs(a - b) < 1e-9; }),
                       cuts.end());
            if (static_cast<int>(cuts.size()) > opt.max_segments)
                throw std::runtime_error("continuous residual: segment budget exceeded");
        }
        if (!certified) throw std::runtime_error("continuous residual: certificate not reached");

        out.value = lpres.value;
        const int K = static_cast<int>(cuts.size()) - 1;
        for (int k = 0; k < K; ++k) {
            const double tau = cuts[k + 1] - cuts[k];
            ResidualPlan::Segment s;
            s.start = cuts[k];
            s.end = cuts[k + 1];
            s.rates.assign(p.size(), 0.0);
            bool any = false;
            for (size_t a = 0; a < act.size(); ++a) {
                s.rates[act[a]] = lpres.work[k][a] / tau;
                if (s.rates[act[a]] > 1e-12) any = true;
            }
            if (any || k + 1 < K) out.plan.segments.push_back(std::move(s));
        }
        while (!out.plan.segments.empty()) {
            double tot = 0.0;
            for (double r : out.plan.segments.back().rates) tot += r;
            if (tot > 1e-12) break;
            out.plan.segments.pop_back();
        }
        tail_end = out.plan.horizon();
    }
    // Zero-density jobs are appended after everything else; they do not
    // affect the objective.
    for (int v : free_jobs) {
        const double rate = envs::max_rate_of(*p.env, p.element_of, v);
        if (rate <= 1e-12) throw std::invalid_argument("residual: job cannot be processed");
        detail::append_sequential(out.plan, p.size(), v, tail_end, p.remaining[v] / rate, rate);
        tail_end += p.remaining[v] / rate;
    }
    out.plan.value = out.value;
    return out;
}

// ---------------------------------------------------------------------------
// Dispatcher.
// ---------------------------------------------------------------------------

enum class Objective { Integral, Fractional };
enum class Method { Auto, ClosedForm, Matching, GridLp, Continuous };

struct SolveOptions {
    Objective objective = Objective::Fractional;
    Method method = Method::Auto;
    int inv_rho = 4;  // for explicit grid solves
};

inline bool uniform_weights(const ResidualProblem& p) {
    double w = -1.0;
    for (int v = 0; v < p.size(); ++v) {
        if (p.remaining[v] <= kCompletionTol) continue;
        if (w < 0) w = p.weight[v];
        else if (std::fabs(w - p.weight[v]) > 1e-12) return false;
    }
    return true;
}

inline ResidualResult solve_residual(const ResidualProblem& p, const SolveOptions& opt = {}) {
    const bool single = std::holds_alternative<SingleMachine>(*p.env);
    const bool unrel = std::holds_alternative<UnrelatedMachines>(*p.env);

    if (opt.objective == Objective::Integral) {
        if (single || opt.method == Method::ClosedForm) {
            if (!single) throw std::invalid_argument("closed-form integral residual needs a single machine");
            return single_machine_residual_integral(p);
        }
        if (unrel) {
            if (!uniform_weights(p))
                throw std::invalid_argument("integral residual on unrelated machines requires uniform weights");
            double w = 1.0;
            for (int v = 0; v < p.size(); ++v)
                if (p.remaining[v] > kCompletionTol) { w = p.weight[v]; break; }
            MatchingResidual mr = matching_residual(p);
            ResidualResult out;
            out.value = w * mr.value;
            out.plan = std::move(mr.plan);
            out.plan.value = out.value;
            return out;
        }
        throw std::invalid_argument("integral residual is not polynomially solvable for this environment");
    }

    switch (opt.method) {
        case Method::ClosedForm:
            if (!single) throw std::invalid_argument("closed-form fractional residual needs a single machine");
            return single_machine_residual_fractional(p);
        case Method::Matching:
            throw std::invalid_argument("matching residual solves the integral objective");
        case Method::GridLp: {
            IntervalGrid grid = build_interval_grid(opt.inv_rho, residual_horizon(p) + 2.0);
            GridSolveResult r = solve_grid_lp(p, grid);
            ResidualResult out;
            out.value = r.lp_objective;
            out.plan = std::move(r.plan);
            return out;
        }
        case Method::Auto:
        case Method::Continuous:
            if (single) return single_machine_residual_fractional(p);
            return solve_fractional_continuous(p);
    }
    throw std::logic_error("unreachable");
}

/// f(x * 1_S): residual value with jobs outside S zeroed out.
inline double residual_set_function(const ResidualProblem& p, const std::vector<char>& members,
                                    const SolveOptions& opt = {}) {
    ResidualProblem q = p.restricted(members);
    if (opt.method == Method::GridLp) {
        // Keep the grid fixed across subsets so set-function values share one
        // cost scale: build from the full problem's horizon.
        IntervalGrid grid = build_interval_grid(opt.inv_rho, residual_horizon(p) + 2.0);
        if (detail::alive_jobs(q).empty()) return 0.0;
        return solve_grid_lp(q, grid).lp_objective;
    }
    if (detail::alive_jobs(q).empty()) return 0.0;
    if (opt.objective == Objective::Integral) return solve_residual(q, opt).value;
    SolveOptions o = opt;
    return solve_residual(q, o).value;
}

}  // namespace gdsched::residual

#endif  // GDSCHED_RESIDUAL_HPP
