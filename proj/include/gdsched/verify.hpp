#ifndef GDSCHED_VERIFY_HPP
#define GDSCHED_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gdsched/core.hpp"
#include "gdsched/residual.hpp"
#include "gdsched/sim.hpp"

namespace gdsched::verify {

struct Violation {
    std::string witness;
    double residual = 0.0;
};

struct PropertyReport {
    std::string property;
    int instances_tested = 0;
    std::vector<Violation> violations;
    double max_residual = 0.0;

    bool ok() const { return violations.empty(); }

    void observe(double residual, double tol, const std::function<std::string()>& witness) {
        max_residual = std::max(max_residual, residual);
        if (residual > tol) violations.push_back({witness(), residual});
    }
};

// ---------------------------------------------------------------------------
// Set-function property checkers over precomputed 2^n tables.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> tabulate(const std::function<double(uint32_t)>& f, int n) {
    std::vector<double> vals(1u << n);
    for (uint32_t s = 0; s < vals.size(); ++s) vals[s] = f(s);
    return vals;
}

inline std::string mask_name(uint32_t s, int n) {
    std::string out = "{";
    bool first = true;
    for (int e = 0; e < n; ++e)
        if (s & (1u << e)) {
            if (!first) out += ",";
            out += std::to_string(e);
            first = false;
        }
    return out + "}";
}

}  // namespace detail

/// Supermodularity in increment form: for every j and Y subset of X (both
/// avoiding j), g(X + j) - g(X) >= g(Y + j) - g(Y).
inline PropertyReport check_supermodularity(const std::function<double(uint32_t)>& g, int n,
                                            double tol) {
    PropertyReport rep;
    rep.property = "supermodularity";
    rep.instances_tested = 1;
    const auto vals = detail::tabulate(g, n);
    for (int j = 0; j < n; ++j) {
        const uint32_t jb = 1u << j;
        const uint32_t universe = (1u << n) - 1;
        const uint32_t rest = universe & ~jb;
        for (uint32_t x = rest;; x = (x - 1) & rest) {
            const double inc_x = vals[x | jb] - vals[x];
            for (uint32_t y = x;; y = (y - 1) & x) {
                const double inc_y = vals[y | jb] - vals[y];
                rep.observe(inc_y - inc_x, tol, [&] {
                    std::ostringstream os;
                    os << "j=" << j << " Y=" << detail::mask_name(y, n)
                       << " X=" << detail::mask_name(x, n) << " increments " << inc_y << " > "
                       << inc_x;
                    return os.str();
                });
                if (y == 0) break;
            }
            if (x == 0) break;
        }
    }
    return rep;
}

/// Gross substitutes via submodularity plus the triple condition
/// v(S+{a,b}) + v(S+{c}) <= max{v(S+{a,c}) + v(S+{b}), v(S+{b,c}) + v(S+{a})}.
inline PropertyReport check_gs(const std::function<double(uint32_t)>& v, int n, double tol) {
    PropertyReport rep;
    rep.property = "gross_substitutes";
    rep.instances_tested = 1;
    const auto vals = detail::tabulate(v, n);
    // submodularity (increment form, opposite sense of supermodularity)
    for (int j = 0; j < n; ++j) {
        const uint32_t jb = 1u << j;
        const uint32_t rest = ((1u << n) - 1) & ~jb;
        for (uint32_t x = rest;; x = (x - 1) & rest) {
            const double inc_x = vals[x | jb] - vals[x];
            for (uint32_t y = x;; y = (y - 1) & x) {
                const double inc_y = vals[y | jb] - vals[y];
                rep.observe(inc_x - inc_y, tol, [&] {
                    std::ostringstream os;
                    os << "submodularity: j=" << j << " Y=" << detail::mask_name(y, n)
                       << " X=" << detail::mask_name(x, n);
                    return os.str();
                });
                if (y == 0) break;
            }
            if (x == 0) break;
        }
    }
    // triple condition
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                if (c == a || c == b) continue;
                const uint32_t abc = (1u << a) | (1u << b) | (1u << c);
                const uint32_t rest = ((1u << n) - 1) & ~abc;
                for (uint32_t s = rest;; s = (s - 1) & rest) {
                    const double lhs = vals[s | (1u << a) | (1u << b)] + vals[s | (1u << c)];
                    const double rhs =
                        std::max(vals[s | (1u << a) | (1u << c)] + vals[s | (1u << b)],
                                 vals[s | (1u << b) | (1u << c)] + vals[s | (1u << a)]);
                    rep.observe(lhs - rhs, tol, [&] {
                        std::ostringstream os;
                        os << "triple: S=" << detail::mask_name(s, n) << " a=" << a << " b=" << b
                           << " c=" << c;
                        return os.str();
                    });
                    if (s == 0) break;
                }
            }
    return rep;
}

/// Linear substitutes via demand monotonicity on a finite price grid: raising
/// one price must not decrease any other item's demanded quantity.
inline PropertyReport check_ls_demand(
    const std::function<std::vector<double>(const std::vector<double>&)>& demand, int n_items,
    const std::vector<double>& grid, double tol) {
    PropertyReport rep;
    rep.property = "linear_substitutes_demand";
    for (double q : grid)
        if (q <= 0) throw std::invalid_argument("check_ls_demand: grid prices must be positive");
    const int G = static_cast<int>(grid.size());
    std::vector<int> idx(n_items, 0);
    while (true) {
        std::vector<double> q(n_items);
        for (int d = 0; d < n_items; ++d) q[d] = grid[idx[d]];
        const auto y = demand(q);
        ++rep.instances_tested;
        for (int j = 0; j < n_items; ++j) {
            for (int g = idx[j] + 1; g < G; ++g) {
                std::vector<double> q2 = q;
                q2[j] = grid[g];
                const auto y2 = demand(q2);
                for (int k = 0; k < n_items; ++k) {
                    if (k == j) continue;
                    rep.observe(y[k] - y2[k], tol, [&] {
                        std::ostringstream os;
                        os << "raise q[" << j << "] " << q[j] << "->" << q2[j] << " drops item "
                           << k << " from " << y[k] << " to " << y2[k];
                        return os.str();
                    });
                }
            }
        }
        int d = 0;
        while (d < n_items && ++idx[d] == G) idx[d++] = 0;
        if (d == n_items) break;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// GD decrease-rate report over simulator samples.
// ---------------------------------------------------------------------------

enum class RateMode { IntegralWeight, FractionalWeight, AliveCount };

inline PropertyReport gd_rate_report(const sim::SimResult& run, double speed, RateMode mode,
                                     double tol = 1e-5) {
    PropertyReport rep;
    rep.property = "gd_decrease_rate";
    for (size_t k = 0; k + 1 < run.samples.size(); ++k) {
        const auto& a = run.samples[k];
        const auto& b = run.samples[k + 1];
        if (b.t <= a.t + 1e-12) continue;
        ++rep.instances_tested;
        const double drop = (a.f - b.f) / (b.t - a.t);
        double want = 0.0;
        switch (mode) {
            case RateMode::IntegralWeight: want = speed * a.wint; break;
            case RateMode::FractionalWeight: want = speed * 0.5 * (a.wfrac + b.wfrac); break;
            case RateMode::AliveCount: want = speed * a.alive; break;
        }
        const double rel = std::fabs(drop - want) / (1.0 + std::fabs(want));
        rep.observe(rel, tol, [&] {
            std::ostringstream os;
            os << "window [" << a.t << "," << b.t << "): drop " << drop << " expected " << want;
            return os.str();
        });
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Potential-function monitor.
// ---------------------------------------------------------------------------

enum class PotentialMode { Half, Copies };

struct PotentialOptions {
    double eps = 1.0;
    PotentialMode mode = PotentialMode::Half;
    double event_tol = 1e-6;
    double drift_tol = 1e-5;
    int samples_per_gap = 16;
    double min_step = 1e-6;
    bool assert_drift = true;  // false: drift residuals are reported, not violations
};

struct PotentialReport {
    double eps = 1.0;
    int copies = 1;
    struct EventDelta {
        double t;
        double delta;  // phi(after) - phi(before)
    };
    std::vector<EventDelta> event_deltas;
    std::vector<std::pair<double, double>> drift_residuals;  // (t, residual)
    double integral_wfrac_algo = 0.0;
    double integral_wfrac_opt = 0.0;
    double integrated_margin = 0.0;  // c_eps * int_O - int_A
    std::vector<Violation> violations;
    int samples = 0;

    bool ok() const { return violations.empty(); }
};

namespace detail {

struct TraceState {
    // remaining sizes at time t for arrived-and-unfinished jobs, else 0
    static std::vector<double> at(const ScheduleTrace& tr, const Instance& inst, double t,
                                  bool include_arrivals_at_t) {
        std::vector<double> rem(inst.jobs.size(), 0.0);
        for (size_t j = 0; j < inst.jobs.size(); ++j) {
            const double r = inst.jobs[j].release;
            const bool arrived = include_arrivals_at_t ? r <= t + 1e-12 : r < t - 1e-12;
            if (!arrived) continue;
            const double x = inst.jobs[j].size - tr.work_done(static_cast<int>(j), t);
            rem[j] = x <= kCompletionTol ? 0.0 : x;
        }
        return rem;
    }
};

// exact integral of the alive fractional weight over [t1, t2] (no arrivals or
// completions inside; rate kinks allowed)
inline double integrate_wfrac(const ScheduleTrace& tr, const Instance& inst, double t1, double t2) {
    std::vector<double> cuts{t1, t2};
    for (const auto& s : tr.segments) {
        if (s.start > t1 && s.start < t2) cuts.push_back(s.start);
        if (s.end > t1 && s.end < t2) cuts.push_back(s.end);
    }
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    auto wfrac_at = [&](double t) {
        double w = 0.0;
        for (size_t j = 0; j < inst.jobs.size(); ++j) {
            if (inst.jobs[j].release > t + 1e-12) continue;
            const double x = inst.jobs[j].size - tr.work_done(static_cast<int>(j), t);
            if (x > kCompletionTol) w += inst.jobs[j].weight * x / inst.jobs[j].size;
        }
        return w;
    };
    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
        if (cuts[k + 1] - cuts[k] < 1e-15) continue;
        acc += 0.5 * (wfrac_at(cuts[k] + 1e-13) + wfrac_at(cuts[k + 1] - 1e-13)) *
               (cuts[k + 1] - cuts[k]);
    }
    return acc;
}

}  // namespace detail

/// Residual evaluator for concatenated algorithm/adversary states.
class ConcatenatedResidual {
  public:
    ConcatenatedResidual(const Instance& inst, int opt_copies) : inst_(&inst), copies_(opt_copies) {}

    enum class Backend { ContinuousFractional, Matching, WeightedUnrelatedGrid };

    Backend backend = Backend::ContinuousFractional;

    double value(const std::vector<double>& rem_algo,
                 const std::vector<double>* rem_opt = nullptr) const {
        residual::ResidualProblem prob;
        prob.env = &inst_->env;
        auto add = [&](const std::vector<double>& rem, int times) {
            for (int c = 0; c < times; ++c)
                for (size_t j = 0; j < inst_->jobs.size(); ++j) {
                    if (rem[j] <= kCompletionTol) continue;
                    prob.element_of.push_back(static_cast<int>(j));
                    prob.remaining.push_back(rem[j]);
                    prob.weight.push_back(inst_->jobs[j].weight);
                    prob.orig_size.push_back(inst_->jobs[j].size);
                }
        };
        add(rem_algo, 1);
        if (rem_opt) add(*rem_opt, copies_);
        if (prob.size() == 0) return 0.0;
        switch (backend) {
            case Backend::ContinuousFractional:
                if (std::holds_alternative<SingleMachine>(inst_->env))
                    return residual::single_machine_residual_fractional(prob).value;
                return residual::solve_fractional_continuous(prob).value;
            case Backend::Matching:
                return residual::matching_residual(prob).value;
            case Backend::WeightedUnrelatedGrid: {
                double horizon = 0.0;
                const auto* u = std::get_if<UnrelatedMachines>(&inst_->env);
                for (int v = 0; v < prob.size(); ++v) {
                    double best = 0.0;
                    for (double lam : u->rates[prob.element_of[v]]) best = std::max(best, lam);
                    horizon += prob.remaining[v] / std::max(best, 1e-12);
                }
                auto grid = residual::build_unit_grid(horizon + 2.0);
                return residual::weighted_unrelated_residual(prob, grid).value;
            }
        }
        return 0.0;
    }

  private:
    const Instance* inst_;
    int copies_;
};

inline PotentialReport potential_monitor(const Instance& inst, const ScheduleTrace& trace_algo,
                                         const ScheduleTrace& trace_opt,
                                         const PotentialOptions& opt = {}) {
    PotentialReport rep;
    rep.eps = opt.eps;
    int copies = 1;
    double opt_scale = 0.5;  // phi = (2/eps)(f1 - opt_scale * f2)
    if (opt.mode == PotentialMode::Copies) {
        const double raw = 1.0 / opt.eps - 1.0;
        copies = static_cast<int>(std::llround(raw));
        if (std::fabs(raw - copies) > 1e-9 || copies < 0)
            throw std::invalid_argument("potential_monitor: 1/eps - 1 must be a nonnegative integer");
        opt_scale = opt.eps;
    }
    rep.copies = copies;

    ConcatenatedResidual f(inst, copies);
    if (opt.mode == PotentialMode::Copies) {
        f.backend = ConcatenatedResidual::Backend::WeightedUnrelatedGrid;
    } else if (std::holds_alternative<UnrelatedMachines>(inst.env)) {
        f.backend = ConcatenatedResidual::Backend::Matching;
    }

    auto phi = [&](double t, bool include_arrivals) {
        auto ra = detail::TraceState::at(trace_algo, inst, t, include_arrivals);
        auto ro = detail::TraceState::at(trace_opt, inst, t, include_arrivals);
        const double f1 = f.value(ra, nullptr);
        const double f2 = copies == 0 && opt.mode == PotentialMode::Copies
                              ? f1
                              : f.value(ra, &ro);
        return (2.0 / opt.eps) * (f1 - opt_scale * f2);
    };

    // merged event times: arrivals plus completions in both traces
    std::vector<double> events{0.0};
    for (const auto& j : inst.jobs) events.push_back(j.release);
    for (const auto& tr : {std::cref(trace_algo), std::cref(trace_opt)})
        for (const auto& c : tr.get().completions)
            if (c) events.push_back(*c);
    const double horizon = std::max(trace_algo.horizon(), trace_opt.horizon());
    events.push_back(horizon);
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end(),
                             [](double a, double b) { return std::fabs(a - b) < 1e-9; }),
                 events.end());

    const double c_eps = (2.0 + opt.eps) / opt.eps;
    for (size_t e = 0; e < events.size(); ++e) {
        const double te = events[e];
        const double before = phi(te, false);
        const double after = phi(te, true);
        rep.event_deltas.push_back({te, after - before});
        if (after - before > opt.event_tol)
            rep.violations.push_back(
                {"event at t=" + std::to_string(te) + " raised phi by " + std::to_string(after - before),
                 after - before});
        if (e + 1 >= events.size()) break;

        const double gap = events[e + 1] - te;
        if (gap <= 1e-12) continue;
        int steps = opt.samples_per_gap;
        double delta = gap / steps;
        if (delta < opt.min_step) {
            delta = opt.min_step;
            steps = std::max(1, static_cast<int>(std::floor(gap / delta)));
            delta = gap / steps;
        }
        double phi_left = after;
        for (int k = 0; k < steps; ++k) {
            const double t0 = te + k * delta;
            const double t1 = k + 1 == steps ? events[e + 1] : te + (k + 1) * delta;
            const double phi_right = phi(t1, false);
            const double avg_a = detail::integrate_wfrac(trace_algo, inst, t0, t1) / (t1 - t0);
            const double avg_o = detail::integrate_wfrac(trace_opt, inst, t0, t1) / (t1 - t0);
            const double d = (phi_right - phi_left) / (t1 - t0) + avg_a - c_eps * avg_o;
            rep.drift_residuals.push_back({t0, d});
            ++rep.samples;
            if (opt.assert_drift && d > opt.drift_tol)
                rep.violations.push_back(
                    {"drift residual " + std::to_string(d) + " at t=" + std::to_string(t0), d});
            phi_left = phi_right;
        }
    }

    rep.integral_wfrac_algo = fractional_weighted_flow(trace_algo, inst);
    rep.integral_wfrac_opt = fractional_weighted_flow(trace_opt, inst);
    rep.integrated_margin = c_eps * rep.integral_wfrac_opt - rep.integral_wfrac_algo;
    if (opt.mode == PotentialMode::Half && rep.integrated_margin < -1e-6)
        rep.violations.push_back({"integrated inequality violated by " +
                                      std::to_string(-rep.integrated_margin),
                                  -rep.integrated_margin});
    return rep;
}

// ---------------------------------------------------------------------------
// Competitive ratio table.
// ---------------------------------------------------------------------------

struct TableRow {
    std::string instance_id;
    std::string env_kind;
    std::string policy;
    double speed = 1.0;
    double integral_flow = 0.0;
    double fractional_flow = 0.0;
    double opt_fractional = 0.0;
    std::optional<double> opt_integral;
    double ratio_fractional = 0.0;
    std::optional<double> ratio_integral;
};

inline TableRow competitive_row(const std::string& id, const Instance& inst,
                                policies::Policy& policy, double speed,
                                std::optional<double> opt_integral = std::nullopt) {
    TableRow row;
    row.instance_id = id;
    row.env_kind = env_kind_name(inst.env);
    row.policy = policy.name();
    row.speed = speed;
    sim::SimConfig cfg;
    cfg.speed = speed;
    auto run = sim::simulate(inst, policy, cfg);
    row.integral_flow = integral_weighted_flow(run.trace, inst);
    row.fractional_flow = fractional_weighted_flow(run.trace, inst);
    row.opt_fractional = sim::offline_opt_fractional(inst).value;
    row.ratio_fractional = row.opt_fractional > 1e-12 ? row.fractional_flow / row.opt_fractional : 1.0;
    row.opt_integral = opt_integral;
    if (opt_integral && *opt_integral > 1e-12) row.ratio_integral = row.integral_flow / *opt_integral;
    return row;
}

}  // namespace gdsched::verify

#endif  // GDSCHED_VERIFY_HPP
