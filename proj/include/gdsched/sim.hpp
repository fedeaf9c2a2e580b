#ifndef GDSCHED_SIM_HPP
#define GDSCHED_SIM_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdsched/core.hpp"
#include "gdsched/policies.hpp"
#include "gdsched/residual.hpp"

namespace gdsched::sim {

struct SimConfig {
    double speed = 1.0;
    bool audit_feasibility = false;       // check every decision against the polytope
    bool audit_work_conservation = false; // single machine: rates sum to speed while work remains
    int max_events = 200000;
};

struct Event {
    enum class Kind { Arrival, Completion, PlanBreakpoint, FractionCompletion, Recompute };
    Kind kind;
    double t = 0.0;
    int job = -1;
};

struct EventLog {
    std::vector<Event> events;
};

/// Residual-value sample at an event boundary (GD-style policies only).
struct RateSample {
    double t = 0.0;
    double f = 0.0;        // remaining-plan residual value
    double wint = 0.0;     // W(t)
    double wfrac = 0.0;    // W~(t)
    int alive = 0;
};

struct SimResult {
    ScheduleTrace trace;
    EventLog log;
    std::vector<RateSample> samples;  // pre/post pairs at each event time
};

inline SimResult simulate(const Instance& inst, policies::Policy& policy, const SimConfig& cfg = {}) {
    {
        auto issues = validate_instance(inst);
        if (!issues.empty()) throw std::invalid_argument("simulate: invalid instance: " + issues[0]);
    }
    const size_t n = inst.jobs.size();
    SimResult out;
    out.trace.speed = cfg.speed;
    out.trace.completions.assign(n, std::nullopt);
    policy.reset(inst, cfg.speed);

    std::vector<double> remaining(n, 0.0);
    std::vector<char> arrived(n, false), completed(n, false);
    std::vector<std::pair<double, int>> arrivals;  // (release, job) sorted
    for (size_t j = 0; j < n; ++j) arrivals.push_back({inst.jobs[j].release, static_cast<int>(j)});
    std::sort(arrivals.begin(), arrivals.end());
    size_t next_arrival = 0;

    auto* tracker = dynamic_cast<policies::ResidualTracking*>(&policy);
    auto snapshot = [&](double t) {
        RateSample s;
        s.t = t;
        s.f = tracker ? tracker->residual_value_at(t) : 0.0;
        for (size_t j = 0; j < n; ++j) {
            if (!arrived[j] || completed[j]) continue;
            s.wint += inst.jobs[j].weight;
            s.wfrac += inst.jobs[j].weight * remaining[j] / inst.jobs[j].size;
            ++s.alive;
        }
        return s;
    };

    double t = 0.0;
    std::vector<policies::PolicyEvent> pevents;
    size_t done = 0;
    for (int iter = 0; iter < cfg.max_events; ++iter) {
        if (tracker) out.samples.push_back(snapshot(t));  // pre-event state
        while (next_arrival < arrivals.size() && arrivals[next_arrival].first <= t + 1e-12) {
            const int j = arrivals[next_arrival].second;
            arrived[j] = true;
            remaining[j] = inst.jobs[j].size;
            out.log.events.push_back({Event::Kind::Arrival, t, j});
            policy.on_arrival(j, t, remaining);
            ++next_arrival;
        }
        if (done == n) {
            if (tracker) out.samples.push_back(snapshot(t));
            break;
        }

        policies::PolicyDecision dec = policy.decide(t, remaining);
        policy.drain_events(pevents);
        for (const auto& pe : pevents) {
            Event::Kind k = pe.kind == policies::PolicyEvent::Kind::Recompute
                                ? Event::Kind::Recompute
                                : (pe.kind == policies::PolicyEvent::Kind::FractionCompletion
                                       ? Event::Kind::FractionCompletion
                                       : Event::Kind::PlanBreakpoint);
            out.log.events.push_back({k, pe.t, -1});
        }
        if (tracker) out.samples.push_back(snapshot(t));  // post-decision state
        if (dec.rates.size() != n) throw std::runtime_error("simulate: decision dimension mismatch");
        for (size_t j = 0; j < n; ++j) {
            if (dec.rates[j] < -1e-12) throw std::runtime_error("simulate: negative rate");
            if (dec.rates[j] > 1e-12 && (!arrived[j] || completed[j]))
                throw std::runtime_error("simulate: policy processes an absent job");
        }
        if (cfg.audit_feasibility && !envs::is_feasible_rate(inst.env, dec.rates, 1e-6))
            throw std::runtime_error("simulate: policy emitted infeasible rates");
        if (cfg.audit_work_conservation && std::holds_alternative<SingleMachine>(inst.env)) {
            double total = 0.0, alive = 0.0;
            for (size_t j = 0; j < n; ++j) {
                total += dec.rates[j];
                if (arrived[j] && !completed[j]) alive += 1.0;
            }
            if (alive > 0 && std::fabs(total - 1.0) > 1e-9)
                throw std::runtime_error("simulate: work conservation violated");
        }

        double t_next = dec.valid_until;
        if (next_arrival < arrivals.size())
            t_next = std::min(t_next, arrivals[next_arrival].first);
        for (size_t j = 0; j < n; ++j) {
            if (dec.rates[j] > 1e-12 && arrived[j] && !completed[j])
                t_next = std::min(t_next, t + remaining[j] / (cfg.speed * dec.rates[j]));
        }
        if (!std::isfinite(t_next)) {
            if (done == n) break;
            throw std::runtime_error("simulate: policy idles with unfinished work");
        }
        if (t_next <= t + 1e-15) {
            t_next = t + 1e-12;  // guard against zero-length stalls
        }

        ScheduleTrace::Segment seg;
        seg.start = t;
        seg.end = t_next;
        seg.rates.assign(n, 0.0);
        for (size_t j = 0; j < n; ++j) seg.rates[j] = dec.rates[j] * cfg.speed;
        const double dt = t_next - t;
        bool progressed = false;
        for (size_t j = 0; j < n; ++j) {
            if (seg.rates[j] <= 0) continue;
            remaining[j] -= seg.rates[j] * dt;
            progressed = true;
        }
        if (!out.trace.segments.empty() && !progressed && dt <= 1e-12) {
            // zero-length idle guard: drop
        } else {
            out.trace.segments.push_back(seg);
        }
        t = t_next;
        for (size_t j = 0; j < n; ++j) {
            if (arrived[j] && !completed[j] && remaining[j] <= kCompletionTol) {
                remaining[j] = 0.0;
                completed[j] = true;
                ++done;
                out.trace.completions[j] = t;
                out.log.events.push_back({Event::Kind::Completion, t, static_cast<int>(j)});
                policy.on_completion(static_cast<int>(j), t, remaining);
            }
        }
        if (done == n && next_arrival == arrivals.size()) {
            if (tracker) out.samples.push_back(snapshot(t));
            break;
        }
    }
    if (done != n) throw std::runtime_error("simulate: event budget exhausted before completion");
    return out;
}

// ---------------------------------------------------------------------------
// Offline fractional optimum: release-constrained continuous LP over global
// time, solved exactly with the same certificate machinery as the residual.
// ---------------------------------------------------------------------------

struct OfflineFractional {
    double value = 0.0;  // total fractional weighted flow time
    ScheduleTrace trace;
};

namespace detail {

struct OfflineSegmentResult {
    double completion_objective = 0.0;  // sum d_j int t z dt
    std::vector<std::vector<double>> work;
    std::vector<double> alpha;
};

inline OfflineSegmentResult solve_offline_segment_lp(const Instance& inst,
                                                     const std::vector<double>& cuts) {
    const int n = static_cast<int>(inst.jobs.size());
    const int K = static_cast<int>(cuts.size()) - 1;
    lp::LinearProgram prog;
    std::vector<int> elem(n);
    std::iota(elem.begin(), elem.end(), 0);
    std::vector<std::vector<int>> uvar(K, std::vector<int>(n));
    for (int k = 0; k < K; ++k) {
        const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
        for (int j = 0; j < n; ++j) {
            const double d = inst.jobs[j].weight / inst.jobs[j].size;
            uvar[k][j] = prog.add_var(d * mid, 0.0,
                                      inst.jobs[j].release >= cuts[k + 1] - 1e-12 ? 0.0 : lp::kInf);
        }
    }
    std::vector<envs::PhaseSeparator> seps;
    for (int k = 0; k < K; ++k)
        seps.push_back(envs::add_phase_rows(prog, inst.env, elem, uvar[k], cuts[k + 1] - cuts[k]));
    std::vector<int> eq(n);
    for (int j = 0; j < n; ++j) {
        std::vector<std::pair<int, double>> row;
        for (int k = 0; k < K; ++k) row.push_back({uvar[k][j], 1.0});
        eq[j] = static_cast<int>(prog.rows.size());
        prog.add_row(row, lp::Sense::Equal, inst.jobs[j].size);
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
    if (!sol.optimal()) throw std::runtime_error("offline fractional: LP not optimal");
    OfflineSegmentResult out;
    out.completion_objective = sol.objective;
    out.work.assign(K, std::vector<double>(n, 0.0));
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < n; ++j) out.work[k][j] = std::max(0.0, sol.primal[uvar[k][j]]);
    out.alpha.assign(n, 0.0);
    for (int j = 0; j < n; ++j) out.alpha[j] = sol.dual[eq[j]];
    return out;
}

}  // namespace detail

inline OfflineFractional offline_opt_fractional(const Instance& inst) {
    OfflineFractional out;
    const int n = static_cast<int>(inst.jobs.size());
    out.trace.speed = 1.0;
    out.trace.completions.assign(n, std::nullopt);
    if (n == 0) return out;

    std::vector<int> elem(n);
    std::iota(elem.begin(), elem.end(), 0);
    double total = 0.0, min_rate = lp::kInf, max_release = 0.0;
    for (int j = 0; j < n; ++j) {
        total += inst.jobs[j].size;
        min_rate = std::min(min_rate, envs::max_rate_of(inst.env, elem, j));
        max_release = std::max(max_release, inst.jobs[j].release);
    }
    if (min_rate <= 1e-12) throw std::invalid_argument("offline fractional: unprocessable job");
    double horizon = max_release + total / min_rate + 1.0;

    std::vector<double> cuts{0.0, horizon};
    for (int j = 0; j < n; ++j)
        if (inst.jobs[j].release > 1e-12) cuts.push_back(inst.jobs[j].release);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::fabs(a - b) < 1e-10; }),
               cuts.end());

    detail::OfflineSegmentResult res;
    bool certified = false;
    for (int round = 0; round < 80; ++round) {
        res = detail::solve_offline_segment_lp(inst, cuts);
        double need = cuts.back();
        for (int j = 0; j < n; ++j)
            need = std::max(need, res.alpha[j] / (inst.jobs[j].weight / inst.jobs[j].size));
        if (need > cuts.back() + 1e-9) {
            cuts.back() = need * 1.25;
            continue;
        }
        std::vector<double> to_add;
        const int K = static_cast<int>(cuts.size()) - 1;
        for (int k = 0; k < K; ++k) {
            const double tau = cuts[k + 1] - cuts[k];
            std::vector<double> zhat(n);
            for (int j = 0; j < n; ++j) zhat[j] = res.work[k][j] / tau;
            bool violated = false;
            const size_t seg_candidates_begin = to_add.size();
            envs::LinearMaxResult left_best;
            for (int side = 0; side < 2; ++side) {
                const double tt = side == 0 ? cuts[k] : cuts[k + 1];
                std::vector<double> c(n);
                for (int j = 0; j < n; ++j) {
                    const double d = inst.jobs[j].weight / inst.jobs[j].size;
                    c[j] = inst.jobs[j].release >= cuts[k + 1] - 1e-12 ? 0.0 : res.alpha[j] - d * tt;
                }
                auto best = envs::max_linear_virtual(inst.env, elem, c);
                if (side == 0) left_best = best;
                double mine = 0.0;
                for (int j = 0; j < n; ++j) mine += c[j] * zhat[j];
                if (best.value > mine + 1e-8 * (1.0 + std::fabs(best.value))) {
                    violated = true;
                    double num = 0.0, den = 0.0;
                    for (int j = 0; j < n; ++j) {
                        num += res.alpha[j] * (best.rates[j] - zhat[j]);
                        den += inst.jobs[j].weight / inst.jobs[j].size * (best.rates[j] - zhat[j]);
                    }
                    if (std::fabs(den) > 1e-12) {
                        const double tc = num / den;
                        if (tc > cuts[k] + 1e-9 && tc < cuts[k + 1] - 1e-9) to_add.push_back(tc);
                    }
                }
            }
            if (violated) {
                double dwork = 0.0, drate = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double d = inst.jobs[j].weight / inst.jobs[j].size;
                    dwork += d * res.work[k][j];
                    drate += d * left_best.rates[j];
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
        for (double v : to_add) cuts.push_back(v);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end(),
                               [](double a, double b) { return std::fabs(a - b) < 1e-9; }),
                   cuts.end());
        if (cuts.size() > 260) throw std::runtime_error("offline fractional: segment budget exceeded");
    }
    if (!certified) throw std::runtime_error("offline fractional: certificate not reached");

    double shift = 0.0;
    for (int j = 0; j < n; ++j) shift += inst.jobs[j].weight * inst.jobs[j].release;
    out.value = res.completion_objective - shift;

    std::vector<double> done(n, 0.0);
    const int K = static_cast<int>(cuts.size()) - 1;
    for (int k = 0; k < K; ++k) {
        const double tau = cuts[k + 1] - cuts[k];
        ScheduleTrace::Segment seg;
        seg.start = cuts[k];
        seg.end = cuts[k + 1];
        seg.rates.assign(n, 0.0);
        for (int j = 0; j < n; ++j) {
            const double r = res.work[k][j] / tau;
            seg.rates[j] = r > 1e-12 ? r : 0.0;
        }
        // merge with the previous segment when the rates agree
        if (!out.trace.segments.empty()) {
            auto& prev = out.trace.segments.back();
            bool same = true;
            for (int j = 0; j < n; ++j)
                if (std::fabs(prev.rates[j] - seg.rates[j]) > 1e-10) same = false;
            if (same) {
                prev.end = seg.end;
            } else {
                out.trace.segments.push_back(seg);
            }
        } else {
            out.trace.segments.push_back(seg);
        }
        for (int j = 0; j < n; ++j) {
            done[j] += res.work[k][j];
            if (!out.trace.completions[j] && done[j] >= inst.jobs[j].size - kCompletionTol)
                out.trace.completions[j] = out.trace.segments.back().end;
        }
    }
    // drop the idle tail
    while (!out.trace.segments.empty()) {
        double tot = 0.0;
        for (double r : out.trace.segments.back().rates) tot += r;
        if (tot > 1e-12) break;
        out.trace.segments.pop_back();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Offline integral optimum by unit-step dynamic programming (single machine or
// a small number of identical machines; integer data, desk scale).
// ---------------------------------------------------------------------------

struct DpLimits {
    int max_jobs = 5;
    int max_total_size = 14;
};

inline double offline_opt_integral_dp(const Instance& inst, int machines = 1,
                                      const DpLimits& limits = {}) {
    const int n = static_cast<int>(inst.jobs.size());
    if (n == 0) return 0.0;
    if (n > limits.max_jobs) throw std::invalid_argument("integral DP: too many jobs");
    int total = 0;
    int max_release = 0;
    std::vector<int> size(n), release(n);
    for (int j = 0; j < n; ++j) {
        const double p = inst.jobs[j].size, r = inst.jobs[j].release;
        if (std::fabs(p - std::round(p)) > 1e-9 || std::fabs(r - std::round(r)) > 1e-9)
            throw std::invalid_argument("integral DP: integer sizes and releases required");
        size[j] = static_cast<int>(std::round(p));
        release[j] = static_cast<int>(std::round(r));
        total += size[j];
        max_release = std::max(max_release, release[j]);
    }
    if (total > limits.max_total_size) throw std::invalid_argument("integral DP: total size cap exceeded");

    // state: time step + remaining vector (mixed radix)
    std::vector<long long> radix(n);
    long long stride = 1;
    for (int j = 0; j < n; ++j) {
        radix[j] = stride;
        stride *= size[j] + 1;
    }
    const int horizon = max_release + total + 1;
    std::map<long long, double> memo;

    std::vector<int> rem(size);
    std::function<double(int, std::vector<int>&)> go = [&](int t, std::vector<int>& r) -> double {
        long long code = 0;
        for (int j = 0; j < n; ++j) code += r[j] * radix[j];
        const long long key = code * (horizon + 2) + t;
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        bool all_done = true;
        double alive_weight = 0.0;
        std::vector<int> alive;
        for (int j = 0; j < n; ++j) {
            if (r[j] > 0) all_done = false;
            if (r[j] > 0 && release[j] <= t) {
                alive.push_back(j);
                alive_weight += inst.jobs[j].weight;
            }
        }
        if (all_done) return memo[key] = 0.0;
        if (t > horizon) return memo[key] = 1e18;
        double best = 1e18;
        const int a = static_cast<int>(alive.size());
        for (uint32_t s = 0; s < (1u << a); ++s) {
            if (__builtin_popcount(s) > machines) continue;
            for (int i = 0; i < a; ++i)
                if (s & (1u << i)) --r[alive[i]];
            best = std::min(best, alive_weight + go(t + 1, r));
            for (int i = 0; i < a; ++i)
                if (s & (1u << i)) ++r[alive[i]];
        }
        return memo[key] = best;
    };
    return go(0, rem);
}

}  // namespace gdsched::sim

#endif  // GDSCHED_SIM_HPP
