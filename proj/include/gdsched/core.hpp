#ifndef GDSCHED_CORE_HPP
#define GDSCHED_CORE_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdsched/envs.hpp"

namespace gdsched {

constexpr double kCompletionTol = 1e-9;  // remaining <= tol counts as complete

struct Job {
    int id = 0;
    double release = 0.0;  // r_j
    double size = 0.0;     // p_j
    double weight = 1.0;   // w_j
};

struct Instance {
    std::vector<Job> jobs;
    EnvironmentSpec env;
};

/// Realized schedule over global time: contiguous segments of constant rates.
/// Rates include the speed factor; rates/speed must lie in the environment.
struct ScheduleTrace {
    struct Segment {
        double start = 0.0;
        double end = 0.0;
        std::vector<double> rates;  // per job, realized (speed included)
    };
    std::vector<Segment> segments;
    std::vector<std::optional<double>> completions;  // per job
    double speed = 1.0;

    double horizon() const { return segments.empty() ? 0.0 : segments.back().end; }

    double work_done(int job, double t) const {
        double acc = 0.0;
        for (const auto& s : segments) {
            if (s.start >= t) break;
            acc += s.rates[job] * (std::min(t, s.end) - s.start);
        }
        return acc;
    }
};

struct Metrics {
    double integral_weighted_flow = 0.0;
    double fractional_weighted_flow = 0.0;
    std::vector<double> integral_flows;    // per job, C_j - r_j
    std::vector<double> fractional_flows;  // per job
};

struct AliveWeights {
    double integral = 0.0;    // W(t)
    double fractional = 0.0;  // W~(t)
    std::vector<double> remaining;
};

// ---------------------------------------------------------------------------

inline std::vector<std::string> validate_instance(const Instance& inst) {
    std::vector<std::string> out;
    std::set<int> ids;
    for (const Job& j : inst.jobs) {
        if (!(j.size > 0)) out.push_back("job " + std::to_string(j.id) + ": size must be > 0");
        if (j.release < 0) out.push_back("job " + std::to_string(j.id) + ": release must be >= 0");
        if (j.weight < 0) out.push_back("job " + std::to_string(j.id) + ": weight must be >= 0");
        if (!ids.insert(j.id).second)
            out.push_back("duplicate job id " + std::to_string(j.id));
    }
    const int cap = env_job_capacity(inst.env);
    if (cap >= 0 && cap != static_cast<int>(inst.jobs.size()))
        out.push_back("environment is dimensioned for " + std::to_string(cap) + " jobs, instance has " +
                      std::to_string(inst.jobs.size()));
    if (const auto* u = std::get_if<UnrelatedMachines>(&inst.env)) {
        const int m = u->num_machines();
        for (size_t j = 0; j < u->rates.size(); ++j) {
            if (static_cast<int>(u->rates[j].size()) != m)
                out.push_back("unrelated rate matrix is ragged");
            for (double r : u->rates[j])
                if (r < 0) out.push_back("unrelated rates must be >= 0");
        }
    }
    if (const auto* m = std::get_if<MatroidEnv>(&inst.env)) {
        if (m->kind == MatroidEnv::Kind::Uniform && m->uniform_rank < 0)
            out.push_back("uniform matroid rank must be >= 0");
        if (m->kind == MatroidEnv::Kind::Partition) {
            for (int c : m->capacities)
                if (c < 0) out.push_back("partition capacities must be >= 0");
        }
        if (m->num_elements <= envs::kVertexCap && !envs::matroid_axioms_hold(*m))
            out.push_back("matroid axioms fail on the enumerated ground set");
    }
    if (const auto* g = std::get_if<GenFlowEnv>(&inst.env)) {
        for (const auto& a : g->arcs) {
            if (a.capacity < 0) out.push_back("genflow arc capacity must be >= 0");
            if (a.gain < 0) out.push_back("genflow arc gain must be >= 0");
            if (a.from < 0 || a.from >= g->num_nodes || a.to < 0 || a.to >= g->num_nodes)
                out.push_back("genflow arc endpoint out of range");
        }
        for (int s : g->source_of_job)
            if (s < 0 || s >= g->num_nodes) out.push_back("genflow job source out of range");
    }
    if (const auto* sp = std::get_if<SpeedupEnv>(&inst.env)) {
        for (size_t j = 0; j < sp->jobs.size(); ++j) {
            std::set<int> seen;
            for (const auto& grp : sp->jobs[j].groups) {
                if (!grp.g.valid())
                    out.push_back("speedup job " + std::to_string(j) + ": g must be concave nondecreasing with g(0)=0");
                if (grp.resources.size() != grp.coeffs.size())
                    out.push_back("speedup job " + std::to_string(j) + ": coeffs misaligned");
                for (double a : grp.coeffs)
                    if (a < 0) out.push_back("speedup coefficients must be >= 0");
                for (int d : grp.resources) {
                    if (d < 0 || d >= sp->num_resources)
                        out.push_back("speedup resource index out of range");
                    if (!seen.insert(d).second)
                        out.push_back("speedup job " + std::to_string(j) + ": groups must be disjoint");
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trace metrics.  Integrals are closed-form over piecewise-constant segments.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> event_times(const ScheduleTrace& tr, const Instance& inst) {
    std::vector<double> ts;
    for (const auto& s : tr.segments) {
        ts.push_back(s.start);
        ts.push_back(s.end);
    }
    for (const Job& j : inst.jobs) ts.push_back(j.release);
    for (const auto& c : tr.completions)
        if (c) ts.push_back(*c);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](double a, double b) { return std::fabs(a - b) < 1e-12; }),
             ts.end());
    return ts;
}

}  // namespace detail

inline Metrics compute_metrics(const ScheduleTrace& tr, const Instance& inst) {
    Metrics m;
    const size_t n = inst.jobs.size();
    m.integral_flows.assign(n, 0.0);
    m.fractional_flows.assign(n, 0.0);
    for (size_t j = 0; j < n; ++j) {
        const Job& job = inst.jobs[j];
        if (tr.completions.size() > j && tr.completions[j])
            m.integral_flows[j] = *tr.completions[j] - job.release;
        double frac = 0.0;
        for (const auto& s : tr.segments) {
            const double z = s.rates[j];
            if (z == 0.0) continue;
            // (w/p) * integral of (t - r_j) z dt over the segment
            frac += z * ((s.end * s.end - s.start * s.start) / 2.0 - job.release * (s.end - s.start));
        }
        m.fractional_flows[j] = frac / job.size;
        m.integral_weighted_flow += job.weight * m.integral_flows[j];
        m.fractional_weighted_flow += job.weight * m.fractional_flows[j];
    }
    return m;
}

inline double integral_weighted_flow(const ScheduleTrace& tr, const Instance& inst) {
    for (size_t j = 0; j < inst.jobs.size(); ++j)
        if (tr.completions.size() <= j || !tr.completions[j])
            throw std::runtime_error("integral_weighted_flow: job " +
                                     std::to_string(inst.jobs[j].id) + " unfinished");
    return compute_metrics(tr, inst).integral_weighted_flow;
}

inline double fractional_weighted_flow(const ScheduleTrace& tr, const Instance& inst) {
    return compute_metrics(tr, inst).fractional_weighted_flow;
}

inline AliveWeights alive_weights(const ScheduleTrace& tr, const Instance& inst, double t) {
    AliveWeights out;
    out.remaining.assign(inst.jobs.size(), 0.0);
    for (size_t j = 0; j < inst.jobs.size(); ++j) {
        const Job& job = inst.jobs[j];
        if (t < job.release) continue;  // not in the system yet
        const double rem = std::max(0.0, job.size - tr.work_done(static_cast<int>(j), t));
        out.remaining[j] = rem <= kCompletionTol ? 0.0 : rem;
        if (out.remaining[j] > 0.0) {
            out.integral += job.weight;
            out.fractional += job.weight * out.remaining[j] / job.size;
        }
    }
    return out;
}

/// Exact integral of W(t) dt over the trace horizon (alive weight).
inline double integrate_alive_weight(const ScheduleTrace& tr, const Instance& inst) {
    const auto ts = detail::event_times(tr, inst);
    double acc = 0.0;
    for (size_t k = 0; k + 1 < ts.size(); ++k) {
        const double mid = 0.5 * (ts[k] + ts[k + 1]);
        double w = 0.0;
        for (size_t j = 0; j < inst.jobs.size(); ++j) {
            const Job& job = inst.jobs[j];
            const bool done = tr.completions.size() > j && tr.completions[j] && *tr.completions[j] <= mid;
            if (job.release <= mid && !done) w += job.weight;
        }
        acc += w * (ts[k + 1] - ts[k]);
    }
    return acc;
}

/// Exact integral of W~(t) dt (alive fractional weight; piecewise linear).
inline double integrate_alive_fractional_weight(const ScheduleTrace& tr, const Instance& inst) {
    const auto ts = detail::event_times(tr, inst);
    double acc = 0.0;
    for (size_t k = 0; k + 1 < ts.size(); ++k) {
        const AliveWeights a = alive_weights(tr, inst, ts[k] + 1e-13);
        const AliveWeights b = alive_weights(tr, inst, ts[k + 1] - 1e-13);
        acc += 0.5 * (a.fractional + b.fractional) * (ts[k + 1] - ts[k]);
    }
    return acc;
}

/// Structural validity of a trace against its instance and environment.
inline std::vector<std::string> validate_trace(const ScheduleTrace& tr, const Instance& inst,
                                               double tol = 1e-6) {
    std::vector<std::string> out;
    double prev_end = 0.0;
    bool first = true;
    for (const auto& s : tr.segments) {
        if (s.rates.size() != inst.jobs.size()) {
            out.push_back("segment rate dimension mismatch");
            return out;
        }
        if (!(s.start < s.end)) out.push_back("segment must have start < end");
        if (!first && std::fabs(s.start - prev_end) > 1e-9)
            out.push_back("segments must be contiguous");
        first = false;
        prev_end = s.end;
        std::vector<double> z(s.rates.size());
        for (size_t j = 0; j < z.size(); ++j) z[j] = s.rates[j] / tr.speed;
        if (!envs::is_feasible_rate(inst.env, z, tol))
            out.push_back("segment rates infeasible at t=" + std::to_string(s.start));
        for (size_t j = 0; j < z.size(); ++j) {
            if (s.rates[j] < -tol) out.push_back("negative rate");
            if (s.rates[j] > tol) {
                if (s.start < inst.jobs[j].release - 1e-9)
                    out.push_back("job " + std::to_string(inst.jobs[j].id) + " processed before release");
                if (tr.completions.size() > j && tr.completions[j] &&
                    s.start > *tr.completions[j] + 1e-9)
                    out.push_back("job " + std::to_string(inst.jobs[j].id) + " processed after completion");
            }
        }
    }
    for (size_t j = 0; j < inst.jobs.size(); ++j) {
        if (tr.completions.size() > j && tr.completions[j]) {
            const double done = tr.work_done(static_cast<int>(j), tr.horizon() + 1.0);
            if (std::fabs(done - inst.jobs[j].size) > tol * (1.0 + inst.jobs[j].size))
                out.push_back("job " + std::to_string(inst.jobs[j].id) +
                              " completed with wrong total work");
        }
    }
    return out;
}

}  // namespace gdsched

#endif  // GDSCHED_CORE_HPP
