#ifndef GDSCHED_ENVS_HPP
#define GDSCHED_ENVS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gdsched/lp.hpp"

namespace gdsched {

// ---------------------------------------------------------------------------
// Environment specifications: the polytope P of feasible processing rates.
// ---------------------------------------------------------------------------

struct SingleMachine {};

struct IdenticalMachines {
    int machines = 1;
};

struct UnrelatedMachines {
    // rates[j][i]: rate of job j on machine i.
    std::vector<std::vector<double>> rates;

    int num_machines() const { return rates.empty() ? 0 : static_cast<int>(rates[0].size()); }
};

struct MatroidEnv {
    enum class Kind { Uniform, Partition, Graphic };
    Kind kind = Kind::Uniform;
    int num_elements = 0;
    int uniform_rank = 0;
    std::vector<std::vector<int>> blocks;  // partition kind
    std::vector<int> capacities;
    int graph_vertices = 0;
    std::vector<std::pair<int, int>> edges;  // graphic kind, one edge per element
};

struct GenFlowEnv {
    struct Arc {
        int from = 0, to = 0;
        double capacity = 0.0;
        double gain = 1.0;
    };
    int num_nodes = 0;
    std::vector<double> excess;  // b_v; positive = may source, negative = may absorb
    std::vector<Arc> arcs;
    std::vector<int> source_of_job;  // node index per job
};

/// Concave nondecreasing piecewise-linear function with g(0) = 0, extended
/// past the last breakpoint by its final slope.
struct ConcavePL {
    std::vector<double> xs;  // 0 = xs[0] < xs[1] < ...
    std::vector<double> ys;  // 0 = ys[0] <= ys[1] <= ...

    double eval(double x) const {
        if (xs.empty()) return 0.0;
        if (x <= 0) return 0.0;
        for (size_t k = 1; k < xs.size(); ++k)
            if (x <= xs[k])
                return ys[k - 1] + (ys[k] - ys[k - 1]) * (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
        return ys.back() + final_slope() * (x - xs.back());
    }

    double slope_at(double x) const {
        for (size_t k = 1; k < xs.size(); ++k)
            if (x < xs[k] - 1e-15) return (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]);
        return final_slope();
    }

    double final_slope() const {
        const size_t k = xs.size();
        if (k < 2) return 0.0;
        return (ys[k - 1] - ys[k - 2]) / (xs[k - 1] - xs[k - 2]);
    }

    bool valid() const {
        if (xs.size() != ys.size() || xs.size() < 1) return false;
        if (std::fabs(xs[0]) > 1e-12 || std::fabs(ys[0]) > 1e-12) return false;
        double prev_slope = lp::kInf;
        for (size_t k = 1; k < xs.size(); ++k) {
            if (xs[k] <= xs[k - 1]) return false;
            const double s = (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]);
            if (s < -1e-12 || s > prev_slope + 1e-9) return false;
            prev_slope = s;
        }
        return true;
    }
};

struct SpeedupEnv {
    struct Group {
        std::vector<int> resources;
        std::vector<double> coeffs;  // a_jd, aligned with resources
        ConcavePL g;
    };
    struct JobUtility {
        std::vector<Group> groups;  // disjoint resource sets
    };
    int num_resources = 0;
    std::vector<JobUtility> jobs;
};

using EnvironmentSpec =
    std::variant<SingleMachine, IdenticalMachines, UnrelatedMachines, MatroidEnv, GenFlowEnv, SpeedupEnv>;

inline const char* env_kind_name(const EnvironmentSpec& env) {
    struct V {
        const char* operator()(const SingleMachine&) const { return "single_machine"; }
        const char* operator()(const IdenticalMachines&) const { return "identical"; }
        const char* operator()(const UnrelatedMachines&) const { return "unrelated"; }
        const char* operator()(const MatroidEnv& m) const {
            switch (m.kind) {
                case MatroidEnv::Kind::Uniform: return "matroid_uniform";
                case MatroidEnv::Kind::Partition: return "matroid_partition";
                default: return "matroid_graphic";
            }
        }
        const char* operator()(const GenFlowEnv&) const { return "genflow"; }
        const char* operator()(const SpeedupEnv&) const { return "speedup"; }
    };
    return std::visit(V{}, env);
}

/// Number of job slots the environment is dimensioned for, or -1 when the
/// environment works for any job count (single/identical machines).
inline int env_job_capacity(const EnvironmentSpec& env) {
    if (std::holds_alternative<SingleMachine>(env) || std::holds_alternative<IdenticalMachines>(env))
        return -1;
    if (const auto* u = std::get_if<UnrelatedMachines>(&env)) return static_cast<int>(u->rates.size());
    if (const auto* m = std::get_if<MatroidEnv>(&env)) return m->num_elements;
    if (const auto* g = std::get_if<GenFlowEnv>(&env)) return static_cast<int>(g->source_of_job.size());
    return static_cast<int>(std::get<SpeedupEnv>(env).jobs.size());
}

namespace envs {

constexpr int kVertexCap = 12;  // subset enumeration cap

// ---------------------------------------------------------------------------
// Matroid primitives.
// ---------------------------------------------------------------------------

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

}  // namespace detail

inline bool matroid_independent(const MatroidEnv& m, const std::vector<int>& set) {
    switch (m.kind) {
        case MatroidEnv::Kind::Uniform:
            return static_cast<int>(set.size()) <= m.uniform_rank;
        case MatroidEnv::Kind::Partition: {
            std::vector<int> cnt(m.blocks.size(), 0);
            for (int e : set) {
                bool found = false;
                for (size_t b = 0; b < m.blocks.size(); ++b) {
                    if (std::find(m.blocks[b].begin(), m.blocks[b].end(), e) != m.blocks[b].end()) {
                        if (++cnt[b] > m.capacities[b]) return false;
                        found = true;
                        break;
                    }
                }
                if (!found) return false;  // element outside every block is a loop
            }
            return true;
        }
        case MatroidEnv::Kind::Graphic: {
            detail::UnionFind uf(m.graph_vertices);
            for (int e : set) {
                auto [a, b] = m.edges[e];
                if (!uf.unite(a, b)) return false;
            }
            return true;
        }
    }
    return false;
}

inline int matroid_rank(const MatroidEnv& m, const std::vector<int>& set) {
    switch (m.kind) {
        case MatroidEnv::Kind::Uniform:
            return std::min<int>(static_cast<int>(set.size()), m.uniform_rank);
        case MatroidEnv::Kind::Partition: {
            std::vector<int> cnt(m.blocks.size(), 0);
            int r = 0;
            for (int e : set) {
                for (size_t b = 0; b < m.blocks.size(); ++b) {
                    if (std::find(m.blocks[b].begin(), m.blocks[b].end(), e) != m.blocks[b].end()) {
                        if (cnt[b] < m.capacities[b]) {
                            ++cnt[b];
                            ++r;
                        }
                        break;
                    }
                }
            }
            return r;
        }
        case MatroidEnv::Kind::Graphic: {
            detail::UnionFind uf(m.graph_vertices);
            int r = 0;
            for (int e : set) {
                auto [a, b] = m.edges[e];
                if (uf.unite(a, b)) ++r;
            }
            return r;
        }
    }
    return 0;
}

/// Greedy max-weight independent subset of S; exact for matroids.
inline double weighted_rank(const MatroidEnv& m, const std::vector<int>& set,
                            const std::vector<double>& weights) {
    std::vector<int> order = set;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (weights[a] != weights[b]) return weights[a] > weights[b];
        return a < b;
    });
    std::vector<int> chosen;
    double total = 0.0;
    for (int e : order) {
        if (weights[e] <= 0) break;
        chosen.push_back(e);
        if (matroid_independent(m, chosen)) total += weights[e];
        else chosen.pop_back();
    }
    return total;
}

/// Greedy max-weight independent set returning the chosen elements.
inline std::vector<int> greedy_independent_set(const MatroidEnv& m, const std::vector<double>& weights) {
    std::vector<int> order(m.num_elements);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (weights[a] != weights[b]) return weights[a] > weights[b];
        return a < b;
    });
    std::vector<int> chosen;
    for (int e : order) {
        if (weights[e] <= 0) break;
        chosen.push_back(e);
        if (!matroid_independent(m, chosen)) chosen.pop_back();
    }
    return chosen;
}

/// Exchange-axiom check on the enumerated independence system; used by
/// validate_instance for small ground sets.
inline bool matroid_axioms_hold(const MatroidEnv& m) {
    const int n = m.num_elements;
    if (n > kVertexCap) return true;  // not checked beyond desk scale
    const uint32_t full = 1u << n;
    std::vector<char> indep(full, 0);
    std::vector<int> buf;
    for (uint32_t s = 0; s < full; ++s) {
        buf.clear();
        for (int e = 0; e < n; ++e)
            if (s & (1u << e)) buf.push_back(e);
        indep[s] = matroid_independent(m, buf) ? 1 : 0;
    }
    if (!indep[0]) return false;
    for (uint32_t s = 0; s < full; ++s) {
        if (!indep[s]) continue;
        for (int e = 0; e < n; ++e)  // downward closure
            if (s & (1u << e))
                if (!indep[s & ~(1u << e)]) return false;
        for (uint32_t t = 0; t < full; ++t) {
            if (!indep[t]) continue;
            if (__builtin_popcount(s) >= __builtin_popcount(t)) continue;
            bool found = false;
            for (int e = 0; e < n && !found; ++e)
                if ((t & (1u << e)) && !(s & (1u << e)) && indep[s | (1u << e)]) found = true;
            if (!found) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Generalized flow LP building blocks.
// ---------------------------------------------------------------------------

namespace detail {

// Appends arc flow variables for one phase of length tau and the node excess
// rows min(b,0)*tau <= netout(v) <= max(b,0)*tau.  Source nodes of interest
// get their netout linked by the caller.
struct GenFlowPhase {
    int arc_var_begin = 0;
    // netout coefficients per node: list of (var, coeff)
    std::vector<std::vector<std::pair<int, double>>> netout;
};

inline GenFlowPhase genflow_add_phase(lp::LinearProgram& prog, const GenFlowEnv& g, double tau) {
    GenFlowPhase ph;
    ph.arc_var_begin = prog.num_vars;
    for (const auto& a : g.arcs) prog.add_var(0.0, 0.0, tau * a.capacity);
    ph.netout.assign(g.num_nodes, {});
    for (size_t e = 0; e < g.arcs.size(); ++e) {
        const int var = ph.arc_var_begin + static_cast<int>(e);
        ph.netout[g.arcs[e].from].push_back({var, 1.0});
        ph.netout[g.arcs[e].to].push_back({var, -g.arcs[e].gain});
    }
    for (int v = 0; v < g.num_nodes; ++v) {
        if (ph.netout[v].empty()) continue;
        prog.add_row(ph.netout[v], lp::Sense::LessEqual, tau * std::max(g.excess[v], 0.0));
        prog.add_row(ph.netout[v], lp::Sense::GreaterEqual, tau * std::min(g.excess[v], 0.0));
    }
    return ph;
}

// Speedup machinery: appends per-virtual-job resource-time variables and
// hypograph rows so that work[v] <= tau * u_{elem(v)}(Y_v / tau).
inline void speedup_add_phase(lp::LinearProgram& prog, const SpeedupEnv& env,
                              const std::vector<int>& element_of, const std::vector<int>& work_var,
                              double tau) {
    const int D = env.num_resources;
    const int nv = static_cast<int>(element_of.size());
    std::vector<std::vector<int>> yvar(nv, std::vector<int>(D, -1));
    for (int v = 0; v < nv; ++v)
        for (int d = 0; d < D; ++d) yvar[v][d] = prog.add_var(0.0, 0.0, tau);
    for (int d = 0; d < D; ++d) {
        std::vector<std::pair<int, double>> row;
        for (int v = 0; v < nv; ++v) row.push_back({yvar[v][d], 1.0});
        prog.add_row(row, lp::Sense::LessEqual, tau);
    }
    for (int v = 0; v < nv; ++v) {
        const auto& ju = env.jobs[element_of[v]];
        std::vector<std::pair<int, double>> total{{work_var[v], 1.0}};
        for (const auto& grp : ju.groups) {
            const int gv = prog.add_var(0.0, 0.0, lp::kInf);
            total.push_back({gv, -1.0});
            // g concave => hypograph is the intersection of its affine pieces.
            const auto& pl = grp.g;
            for (size_t k = 1; k < pl.xs.size(); ++k) {
                const double s = (pl.ys[k] - pl.ys[k - 1]) / (pl.xs[k] - pl.xs[k - 1]);
                const double b = pl.ys[k - 1] - s * pl.xs[k - 1];
                std::vector<std::pair<int, double>> row{{gv, 1.0}};
                for (size_t r = 0; r < grp.resources.size(); ++r)
                    row.push_back({yvar[v][grp.resources[r]], -s * grp.coeffs[r]});
                prog.add_row(row, lp::Sense::LessEqual, tau * b);
            }
            // Final-slope extension piece.
            const double s = pl.final_slope();
            const double b = pl.ys.back() - s * pl.xs.back();
            std::vector<std::pair<int, double>> row{{gv, 1.0}};
            for (size_t r = 0; r < grp.resources.size(); ++r)
                row.push_back({yvar[v][grp.resources[r]], -s * grp.coeffs[r]});
            prog.add_row(row, lp::Sense::LessEqual, tau * b);
        }
        prog.add_row(total, lp::Sense::LessEqual, 0.0);  // work <= sum of group values
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Phase rows: work vector u (one entry per virtual job) constrained to lie in
// tau * P, where virtual jobs map onto environment job slots via element_of.
// Copies of the same element aggregate (they share the element's capacity);
// unrelated machines are the exception: each virtual job carries its own
// matching constraint.
// ---------------------------------------------------------------------------

struct PhaseSeparator {
    bool exact = true;  // false => call separate() until it returns 0 new rows
    std::function<int(const std::vector<double>& primal, lp::LinearProgram&)> separate;
};

inline PhaseSeparator add_phase_rows(lp::LinearProgram& prog, const EnvironmentSpec& env,
                                     const std::vector<int>& element_of,
                                     const std::vector<int>& work_var, double tau) {
    PhaseSeparator sep;
    const int nv = static_cast<int>(element_of.size());

    if (std::holds_alternative<SingleMachine>(env)) {
        std::vector<std::pair<int, double>> row;
        for (int v = 0; v < nv; ++v) row.push_back({work_var[v], 1.0});
        if (!row.empty()) prog.add_row(row, lp::Sense::LessEqual, tau);
        return sep;
    }
    if (const auto* ident = std::get_if<IdenticalMachines>(&env)) {
        if (nv == 0) return sep;
        std::vector<std::pair<int, double>> total;
        std::vector<std::vector<std::pair<int, double>>> per_elem;
        std::vector<int> elem_row(1 + *std::max_element(element_of.begin(), element_of.end()), -1);
        for (int v = 0; v < nv; ++v) {
            total.push_back({work_var[v], 1.0});
            const int e = element_of[v];
            if (elem_row[e] < 0) {
                elem_row[e] = static_cast<int>(per_elem.size());
                per_elem.emplace_back();
            }
            per_elem[elem_row[e]].push_back({work_var[v], 1.0});
        }
        if (!total.empty()) prog.add_row(total, lp::Sense::LessEqual, tau * ident->machines);
        for (auto& row : per_elem) prog.add_row(row, lp::Sense::LessEqual, tau);
        return sep;
    }
    if (const auto* mat = std::get_if<MatroidEnv>(&env)) {
        // Aggregate per element; seed with singleton rows, block rows
        // (partition), and the full-set row.  Graphic matroids may need
        // further subset rows from the separator.
        std::vector<int> used;
        std::vector<std::vector<std::pair<int, double>>> by_elem(mat->num_elements);
        for (int v = 0; v < nv; ++v) {
            if (by_elem[element_of[v]].empty()) used.push_back(element_of[v]);
            by_elem[element_of[v]].push_back({work_var[v], 1.0});
        }
        std::sort(used.begin(), used.end());
        for (int e : used) prog.add_row(by_elem[e], lp::Sense::LessEqual, tau * matroid_rank(*mat, {e}));
        if (used.size() > 1) {
            std::vector<std::pair<int, double>> row;
            for (int e : used)
                for (auto& t : by_elem[e]) row.push_back(t);
            prog.add_row(row, lp::Sense::LessEqual, tau * matroid_rank(*mat, used));
        }
        if (mat->kind == MatroidEnv::Kind::Partition) {
            for (size_t b = 0; b < mat->blocks.size(); ++b) {
                std::vector<std::pair<int, double>> row;
                std::vector<int> members;
                for (int e : mat->blocks[b])
                    if (e < mat->num_elements && !by_elem[e].empty()) {
                        members.push_back(e);
                        for (auto& t : by_elem[e]) row.push_back(t);
                    }
                if (members.size() > 1)
                    prog.add_row(row, lp::Sense::LessEqual, tau * matroid_rank(*mat, members));
            }
            return sep;  // singleton + block rows are a complete description
        }
        if (mat->kind == MatroidEnv::Kind::Uniform) return sep;  // complete as seeded
        if (static_cast<int>(used.size()) > kVertexCap)
            throw std::invalid_argument("matroid phase rows: too many distinct elements");
        MatroidEnv m = *mat;
        sep.exact = false;
        sep.separate = [m, used, by_elem, tau](const std::vector<double>& primal,
                                               lp::LinearProgram& p) -> int {
            const int k = static_cast<int>(used.size());
            int added = 0;
            for (uint32_t s = 1; s < (1u << k); ++s) {
                std::vector<int> subset;
                double usum = 0.0;
                std::vector<std::pair<int, double>> row;
                for (int i = 0; i < k; ++i) {
                    if (!(s & (1u << i))) continue;
                    subset.push_back(used[i]);
                    for (auto& t : by_elem[used[i]]) {
                        row.push_back(t);
                        usum += primal[t.first];
                    }
                }
                const double cap = tau * matroid_rank(m, subset);
                if (usum > cap + 1e-9) {
                    p.add_row(row, lp::Sense::LessEqual, cap);
                    if (++added >= 8) return added;  // a few cuts per round
                }
            }
            return added;
        };
        return sep;
    }
    if (const auto* unrel = std::get_if<UnrelatedMachines>(&env)) {
        const int m = unrel->num_machines();
        // Machine-time variables per (virtual job, machine); each copy is an
        // independent job with its own matching row.
        std::vector<std::vector<int>> yvar(nv, std::vector<int>(m, -1));
        for (int v = 0; v < nv; ++v)
            for (int i = 0; i < m; ++i) yvar[v][i] = prog.add_var(0.0, 0.0, tau);
        for (int v = 0; v < nv; ++v) {
            std::vector<std::pair<int, double>> link{{work_var[v], 1.0}};
            std::vector<std::pair<int, double>> cap;
            for (int i = 0; i < m; ++i) {
                link.push_back({yvar[v][i], -unrel->rates[element_of[v]][i]});
                cap.push_back({yvar[v][i], 1.0});
            }
            prog.add_row(link, lp::Sense::Equal, 0.0);      // u_v = sum_i lambda * y
            prog.add_row(cap, lp::Sense::LessEqual, tau);   // job on <= 1 machine at a time
        }
        for (int i = 0; i < m; ++i) {
            std::vector<std::pair<int, double>> row;
            for (int v = 0; v < nv; ++v) row.push_back({yvar[v][i], 1.0});
            if (!row.empty()) prog.add_row(row, lp::Sense::LessEqual, tau);
        }
        return sep;
    }
    if (const auto* gf = std::get_if<GenFlowEnv>(&env)) {
        auto ph = detail::genflow_add_phase(prog, *gf, tau);
        // Link aggregated work at each used source node to its netout.
        std::vector<std::vector<std::pair<int, double>>> by_node(gf->num_nodes);
        for (int v = 0; v < nv; ++v)
            by_node[gf->source_of_job[element_of[v]]].push_back({work_var[v], 1.0});
        for (int node = 0; node < gf->num_nodes; ++node) {
            if (by_node[node].empty()) continue;
            std::vector<std::pair<int, double>> row = by_node[node];
            for (auto& t : ph.netout[node]) row.push_back({t.first, -t.second});
            prog.add_row(row, lp::Sense::Equal, 0.0);  // sum of work = netout
        }
        return sep;
    }
    const auto& sp = std::get<SpeedupEnv>(env);
    detail::speedup_add_phase(prog, sp, element_of, work_var, tau);
    return sep;
}

/// Solves an LP whose rows were produced by add_phase_rows, iterating the
/// separator until no violated subset rows remain.
inline lp::LpSolution solve_with_separation(lp::LinearProgram& prog, const PhaseSeparator& sep) {
    lp::LpSolution sol = lp::solve(prog);
    if (sep.exact || !sol.optimal()) return sol;
    for (int round = 0; round < 64; ++round) {
        const int added = sep.separate(sol.primal, prog);
        if (added == 0) return sol;
        sol = lp::solve(prog);
        if (!sol.optimal()) return sol;
    }
    throw std::runtime_error("phase separation did not converge");
}

// ---------------------------------------------------------------------------
// max_linear over the (virtually extended) polytope, with signed objective:
// negative coefficients are clamped to zero rate, valid for downward-closed P.
// Returns the achieved value and the rate vector per virtual job.
// ---------------------------------------------------------------------------

struct LinearMaxResult {
    double value = 0.0;
    std::vector<double> rates;
};

inline LinearMaxResult max_linear_virtual(const EnvironmentSpec& env,
                                          const std::vector<int>& element_of,
                                          const std::vector<double>& c) {
    const int nv = static_cast<int>(element_of.size());
    LinearMaxResult out;
    out.rates.assign(nv, 0.0);
    if (nv == 0) return out;

    if (std::holds_alternative<SingleMachine>(env)) {
        int best = -1;
        for (int v = 0; v < nv; ++v)
            if (c[v] > 0 && (best < 0 || c[v] > c[best])) best = v;
        if (best >= 0) {
            out.rates[best] = 1.0;
            out.value = c[best];
        }
        return out;
    }
    if (const auto* ident = std::get_if<IdenticalMachines>(&env)) {
        // Best copy per element, then the top machines' worth of elements.
        std::vector<std::pair<double, int>> best;  // (value, vjob)
        std::vector<int> best_of_elem;
        {
            std::vector<int> idx;
            for (int v = 0; v < nv; ++v) {
                const int e = element_of[v];
                while (static_cast<int>(idx.size()) <= e) idx.push_back(-1);
                if (c[v] > 0 && (idx[e] < 0 || c[v] > c[idx[e]])) idx[e] = v;
            }
            for (int v : idx)
                if (v >= 0) best.push_back({c[v], v});
        }
        std::sort(best.begin(), best.end(), [](auto& a, auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (size_t k = 0; k < best.size() && k < static_cast<size_t>(ident->machines); ++k) {
            out.rates[best[k].second] = 1.0;
            out.value += best[k].first;
        }
        return out;
    }
    if (const auto* mat = std::get_if<MatroidEnv>(&env)) {
        std::vector<double> elem_weight(mat->num_elements, 0.0);
        std::vector<int> elem_copy(mat->num_elements, -1);
        for (int v = 0; v < nv; ++v) {
            const int e = element_of[v];
            if (c[v] > 0 && (elem_copy[e] < 0 || c[v] > elem_weight[e])) {
                elem_weight[e] = c[v];
                elem_copy[e] = v;
            }
        }
        for (int e : greedy_independent_set(*mat, elem_weight)) {
            out.rates[elem_copy[e]] = 1.0;
            out.value += elem_weight[e];
        }
        return out;
    }

    // LP-backed environments.
    lp::LinearProgram prog;
    prog.maximize = true;
    std::vector<int> work(nv);
    for (int v = 0; v < nv; ++v) work[v] = prog.add_var(std::max(c[v], 0.0), 0.0, lp::kInf);
    // Clamp negative-coefficient jobs to zero rate (downward closure).
    for (int v = 0; v < nv; ++v)
        if (c[v] <= 0) prog.upper[work[v]] = 0.0;
    PhaseSeparator sep = add_phase_rows(prog, env, element_of, work, 1.0);
    lp::LpSolution sol = solve_with_separation(prog, sep);
    if (!sol.optimal()) throw std::runtime_error("max_linear: LP not optimal");
    out.value = sol.objective;
    for (int v = 0; v < nv; ++v) out.rates[v] = std::max(0.0, sol.primal[work[v]]);
    return out;
}

inline LinearMaxResult max_linear(const EnvironmentSpec& env, const std::vector<double>& c) {
    std::vector<int> id(c.size());
    std::iota(id.begin(), id.end(), 0);
    for (double v : c)
        if (v < 0) throw std::invalid_argument("max_linear: c must be nonnegative");
    return max_linear_virtual(env, id, c);
}

/// Max sustainable rate of one virtual job (all others idle).
inline double max_rate_of(const EnvironmentSpec& env, const std::vector<int>& element_of, int vjob) {
    std::vector<double> c(element_of.size(), 0.0);
    c[vjob] = 1.0;
    return max_linear_virtual(env, element_of, c).value;
}

// ---------------------------------------------------------------------------
// Feasibility of a concrete rate vector (one entry per environment job).
// ---------------------------------------------------------------------------

inline bool is_feasible_rate(const EnvironmentSpec& env, const std::vector<double>& z,
                             double tol = 1e-7) {
    const int cap = env_job_capacity(env);
    if (cap >= 0 && static_cast<int>(z.size()) != cap)
        throw std::invalid_argument("is_feasible_rate: dimension mismatch");
    for (double v : z)
        if (v < -tol) return false;

    if (std::holds_alternative<SingleMachine>(env)) {
        double s = 0.0;
        for (double v : z) s += std::max(v, 0.0);
        return s <= 1.0 + tol;
    }
    if (const auto* ident = std::get_if<IdenticalMachines>(&env)) {
        double s = 0.0;
        for (double v : z) {
            if (v > 1.0 + tol) return false;
            s += std::max(v, 0.0);
        }
        return s <= ident->machines + tol;
    }
    if (const auto* mat = std::get_if<MatroidEnv>(&env)) {
        const int n = mat->num_elements;
        if (n > kVertexCap) throw std::invalid_argument("matroid feasibility: ground set too large");
        for (uint32_t s = 1; s < (1u << n); ++s) {
            std::vector<int> subset;
            double tot = 0.0;
            for (int e = 0; e < n; ++e)
                if (s & (1u << e)) {
                    subset.push_back(e);
                    tot += std::max(z[e], 0.0);
                }
            if (tot > matroid_rank(*mat, subset) + tol) return false;
        }
        return true;
    }
    // LP feasibility for the remaining environments: can the polytope cover z?
    lp::LinearProgram prog;
    prog.maximize = true;
    const int n = static_cast<int>(z.size());
    std::vector<int> work(n), elem(n);
    std::iota(elem.begin(), elem.end(), 0);
    for (int j = 0; j < n; ++j) work[j] = prog.add_var(1.0, 0.0, std::max(z[j], 0.0));
    PhaseSeparator sep = add_phase_rows(prog, env, elem, work, 1.0);
    lp::LpSolution sol = solve_with_separation(prog, sep);
    if (!sol.optimal()) return false;
    double want = 0.0;
    for (int j = 0; j < n; ++j) want += std::max(z[j], 0.0);
    return sol.objective >= want - tol;
}

// ---------------------------------------------------------------------------
// Vertex enumeration (matroid / identical machines).
// ---------------------------------------------------------------------------

/// Identical machines as a uniform matroid over n jobs (vertex-form helper).
inline MatroidEnv identical_as_matroid(const IdenticalMachines& m, int num_jobs) {
    MatroidEnv out;
    out.kind = MatroidEnv::Kind::Uniform;
    out.num_elements = num_jobs;
    out.uniform_rank = std::min(m.machines, num_jobs);
    return out;
}

/// Extreme rate vectors.  Matroid environments enumerate independent-set
/// indicators; identical machines (given the job count) enumerate subsets of
/// size <= m.  Other environments use direct LP formulations instead.
inline std::vector<std::vector<double>> enumerate_vertices(const EnvironmentSpec& env,
                                                           int num_jobs = -1, int cap = kVertexCap) {
    MatroidEnv mat;
    if (const auto* m = std::get_if<MatroidEnv>(&env)) {
        mat = *m;
    } else if (const auto* ident = std::get_if<IdenticalMachines>(&env)) {
        if (num_jobs < 0)
            throw std::invalid_argument("enumerate_vertices: identical machines need a job count");
        mat = identical_as_matroid(*ident, num_jobs);
    } else {
        throw std::invalid_argument("enumerate_vertices: unsupported environment");
    }
    const int n = mat.num_elements;
    if (n > cap) throw std::invalid_argument("enumerate_vertices: cap exceeded");
    std::vector<std::vector<double>> verts;
    for (uint32_t s = 0; s < (1u << n); ++s) {
        std::vector<int> subset;
        for (int e = 0; e < n; ++e)
            if (s & (1u << e)) subset.push_back(e);
        if (matroid_independent(mat, subset)) {
            std::vector<double> v(n, 0.0);
            for (int e : subset) v[e] = 1.0;
            verts.push_back(std::move(v));
        }
    }
    return verts;
}

// ---------------------------------------------------------------------------
// Demand oracle for speed-up curve utilities.
// ---------------------------------------------------------------------------

struct DemandResult {
    std::vector<double> allocation;  // y in [0,1]^D
    double valuation = 0.0;          // u(y)
    double utility = 0.0;            // u(y) - q . y
};

inline double speedup_utility(const SpeedupEnv& env, int job, const std::vector<double>& y) {
    const auto& ju = env.jobs[job];
    double total = 0.0;
    for (const auto& grp : ju.groups) {
        double L = 0.0;
        for (size_t r = 0; r < grp.resources.size(); ++r) L += grp.coeffs[r] * y[grp.resources[r]];
        total += grp.g.eval(L);
    }
    return total;
}

/// Greedy demand: per group, buy resources fractionally in decreasing order of
/// a_d / q_d until the marginal gain drops below the price.  Ties break by
/// resource index.
inline DemandResult speedup_demand(const SpeedupEnv& env, int job, const std::vector<double>& q) {
    if (static_cast<int>(q.size()) != env.num_resources)
        throw std::invalid_argument("speedup_demand: price dimension mismatch");
    for (double p : q)
        if (p <= 0) throw std::invalid_argument("speedup_demand: prices must be strictly positive");
    DemandResult out;
    out.allocation.assign(env.num_resources, 0.0);
    const auto& ju = env.jobs[job];
    for (const auto& grp : ju.groups) {
        std::vector<int> order(grp.resources.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double ra = grp.coeffs[a] / q[grp.resources[a]];
            const double rb = grp.coeffs[b] / q[grp.resources[b]];
            if (ra != rb) return ra > rb;
            return grp.resources[a] < grp.resources[b];
        });
        double L = 0.0;
        for (int r : order) {
            const double a = grp.coeffs[r];
            const double price = q[grp.resources[r]];
            if (a <= 0) continue;
            double y = 0.0;
            while (y < 1.0 - 1e-15) {
                const double slope = grp.g.slope_at(L);
                if (a * slope <= price + 1e-15) break;
                // advance to the next g breakpoint or to y = 1
                double next_bp = lp::kInf;
                for (double x : grp.g.xs)
                    if (x > L + 1e-15) { next_bp = x; break; }
                double dy = 1.0 - y;
                if (std::isfinite(next_bp)) dy = std::min(dy, (next_bp - L) / a);
                y += dy;
                L += a * dy;
            }
            out.allocation[grp.resources[r]] = y;
            if (y < 1.0 - 1e-15) break;  // marginal dropped below price; later items are dominated
        }
    }
    out.valuation = speedup_utility(env, job, out.allocation);
    out.utility = out.valuation;
    for (int d = 0; d < env.num_resources; ++d) out.utility -= q[d] * out.allocation[d];
    return out;
}

// ---------------------------------------------------------------------------
// Concave closure of a set valuation, solved over all subsets.
// ---------------------------------------------------------------------------

inline double concave_closure_value(const std::function<double(uint32_t)>& valuation, int n,
                                    const std::vector<double>& x) {
    if (n > kVertexCap) throw std::invalid_argument("concave_closure_value: n too large");
    if (static_cast<int>(x.size()) != n) throw std::invalid_argument("concave_closure_value: dim");
    lp::LinearProgram prog;
    prog.maximize = true;
    const uint32_t full = 1u << n;
    for (uint32_t s = 0; s < full; ++s) prog.add_var(valuation(s), 0.0, 1.0);
    for (int j = 0; j < n; ++j) {
        std::vector<std::pair<int, double>> row;
        for (uint32_t s = 0; s < full; ++s)
            if (s & (1u << j)) row.push_back({static_cast<int>(s), 1.0});
        prog.add_row(row, lp::Sense::Equal, x[j]);
    }
    std::vector<std::pair<int, double>> conv;
    for (uint32_t s = 0; s < full; ++s) conv.push_back({static_cast<int>(s), 1.0});
    prog.add_row(conv, lp::Sense::Equal, 1.0);
    lp::LpSolution sol = lp::solve(prog);
    if (!sol.optimal()) throw std::runtime_error("concave_closure_value: LP failed");
    return sol.objective;
}

}  // namespace envs
}  // namespace gdsched

#endif  // GDSCHED_ENVS_HPP
