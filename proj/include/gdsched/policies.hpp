#ifndef GDSCHED_POLICIES_HPP
#define GDSCHED_POLICIES_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdsched/core.hpp"
#include "gdsched/residual.hpp"

namespace gdsched::policies {

struct PolicyDecision {
    std::vector<double> rates;               // 1-speed rates, must lie in the environment
    double valid_until = lp::kInf;           // global time of the next internal event
};

struct PolicyEvent {
    enum class Kind { Recompute, FractionCompletion, PlanBreakpoint };
    Kind kind;
    double t;
};

class Policy {
  public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual void reset(const Instance& inst, double speed) = 0;
    virtual void on_arrival(int job, double t, const std::vector<double>& remaining) = 0;
    virtual void on_completion(int /*job*/, double /*t*/, const std::vector<double>& /*rem*/) {}
    virtual PolicyDecision decide(double t, const std::vector<double>& remaining) = 0;
    // Internal events produced since the last drain (logged by the simulator).
    virtual void drain_events(std::vector<PolicyEvent>& out) { out.clear(); }
};

/// Implemented by policies that track a residual value along their plan; the
/// simulator samples it at event boundaries for the rate reports.
class ResidualTracking {
  public:
    virtual ~ResidualTracking() = default;
    virtual double residual_value_at(double t) const = 0;
};

namespace detail {

inline double plan_suffix_integral_value(const residual::ResidualPlan& plan,
                                         const std::vector<double>& weights, double tau) {
    // Sum of w_v * (completion - tau) over jobs still running after tau, where
    // completion is the end of the job's last active plan segment.
    std::vector<double> completion(weights.size(), 0.0);
    for (const auto& s : plan.segments)
        for (size_t v = 0; v < weights.size(); ++v)
            if (s.rates[v] > 1e-12) completion[v] = s.end;
    double acc = 0.0;
    for (size_t v = 0; v < weights.size(); ++v)
        if (completion[v] > tau + 1e-12) acc += weights[v] * (completion[v] - tau);
    return acc;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Gradient descent: recompute the residual plan at arrivals, replay it at the
// run's speed in between.
// ---------------------------------------------------------------------------

class GdPolicy : public Policy, public ResidualTracking {
  public:
    explicit GdPolicy(residual::Objective objective, bool paranoid = false)
        : objective_(objective), paranoid_(paranoid) {}

    std::string name() const override {
        return objective_ == residual::Objective::Integral ? "gd_integral" : "gd_fractional";
    }

    void reset(const Instance& inst, double speed) override {
        inst_ = &inst;
        speed_ = speed;
        plan_ = {};
        plan_start_ = 0.0;
        dirty_ = true;
    }

    void on_arrival(int, double, const std::vector<double>&) override { dirty_ = true; }

    void on_completion(int, double t, const std::vector<double>& remaining) override {
        if (!paranoid_) return;
        const double before = residual_value_at(t);
        auto prob = residual::ResidualProblem::from_state(*inst_, remaining);
        residual::SolveOptions opt;
        opt.objective = objective_;
        const double fresh = residual::solve_residual(prob, opt).value;
        if (std::fabs(fresh - before) > 1e-6 * (1.0 + std::fabs(fresh)))
            throw std::runtime_error("gd paranoid check: resolve disagrees with the running plan");
    }

    PolicyDecision decide(double t, const std::vector<double>& remaining) override {
        if (dirty_) {
            auto prob = residual::ResidualProblem::from_state(*inst_, remaining);
            residual::SolveOptions opt;
            opt.objective = objective_;
            plan_ = residual::solve_residual(prob, opt).plan;
            plan_start_ = t;
            dirty_ = false;
            events_.push_back({PolicyEvent::Kind::Recompute, t});
        }
        const double tau = (t - plan_start_) * speed_;
        PolicyDecision d;
        d.rates.assign(inst_->jobs.size(), 0.0);
        d.valid_until = lp::kInf;
        for (const auto& seg : plan_.segments) {
            if (tau < seg.end - 1e-10) {
                d.rates = seg.rates;
                d.valid_until = plan_start_ + seg.end / speed_;
                break;
            }
        }
        for (size_t j = 0; j < d.rates.size(); ++j)
            if (remaining[j] <= kCompletionTol) d.rates[j] = 0.0;
        return d;
    }

    double residual_value_at(double t) const override {
        const double tau = std::max(0.0, (t - plan_start_) * speed_);
        if (objective_ == residual::Objective::Fractional) {
            // only densities and the plan matter here
            auto prob = residual::ResidualProblem::from_state(*inst_, remaining_dummy());
            return residual::plan_suffix_fractional_value(plan_, prob, tau);
        }
        std::vector<double> w(inst_->jobs.size());
        for (size_t j = 0; j < w.size(); ++j) w[j] = inst_->jobs[j].weight;
        return detail::plan_suffix_integral_value(plan_, w, tau);
    }

    void drain_events(std::vector<PolicyEvent>& out) override {
        out = std::move(events_);
        events_.clear();
    }

    const residual::ResidualPlan& current_plan() const { return plan_; }

  private:
    std::vector<double> remaining_dummy() const {
        return std::vector<double>(inst_->jobs.size(), 0.0);
    }

    residual::Objective objective_;
    bool paranoid_;
    const Instance* inst_ = nullptr;
    double speed_ = 1.0;
    residual::ResidualPlan plan_;
    double plan_start_ = 0.0;
    bool dirty_ = true;
    std::vector<PolicyEvent> events_;
};

// ---------------------------------------------------------------------------
// Baselines.
// ---------------------------------------------------------------------------

enum class BaselineKind { Srpt, HighestDensityFirst, Fifo, ProcessorSharing };

class BaselinePolicy : public Policy {
  public:
    explicit BaselinePolicy(BaselineKind kind) : kind_(kind) {}

    std::string name() const override {
        switch (kind_) {
            case BaselineKind::Srpt: return "srpt";
            case BaselineKind::HighestDensityFirst: return "hdf";
            case BaselineKind::Fifo: return "fifo";
            default: return "processor_sharing";
        }
    }

    void reset(const Instance& inst, double) override {
        inst_ = &inst;
        machines_ = 1;
        if (const auto* m = std::get_if<IdenticalMachines>(&inst.env)) machines_ = m->machines;
        else if (!std::holds_alternative<SingleMachine>(inst.env))
            throw std::invalid_argument("baseline policies need a single- or identical-machines environment");
        arrived_.assign(inst.jobs.size(), false);
    }

    void on_arrival(int job, double, const std::vector<double>&) override { arrived_[job] = true; }

    PolicyDecision decide(double, const std::vector<double>& remaining) override {
        PolicyDecision d;
        d.rates.assign(remaining.size(), 0.0);
        std::vector<int> alive;
        for (size_t j = 0; j < remaining.size(); ++j)
            if (arrived_[j] && remaining[j] > kCompletionTol) alive.push_back(static_cast<int>(j));
        if (alive.empty()) return d;
        if (kind_ == BaselineKind::ProcessorSharing) {
            const double rate = std::min(1.0, static_cast<double>(machines_) / alive.size());
            for (int j : alive) d.rates[j] = rate;
            return d;
        }
        std::sort(alive.begin(), alive.end(), [&](int a, int b) {
            double ka = 0.0, kb = 0.0;
            switch (kind_) {
                case BaselineKind::Srpt:
                    ka = remaining[a];
                    kb = remaining[b];
                    break;
                case BaselineKind::HighestDensityFirst:
                    ka = -inst_->jobs[a].weight / remaining[a];
                    kb = -inst_->jobs[b].weight / remaining[b];
                    break;
                default:  // Fifo
                    ka = inst_->jobs[a].release;
                    kb = inst_->jobs[b].release;
                    break;
            }
            if (ka != kb) return ka < kb;
            return inst_->jobs[a].id < inst_->jobs[b].id;
        });
        for (size_t k = 0; k < alive.size() && k < static_cast<size_t>(machines_); ++k)
            d.rates[alive[k]] = 1.0;
        return d;
    }

  private:
    BaselineKind kind_;
    const Instance* inst_ = nullptr;
    int machines_ = 1;
    std::vector<char> arrived_;
};

// ---------------------------------------------------------------------------
// Immediate dispatch for unrelated machines: on arrival, assign permanently to
// the machine with the minimum residual increment; run Smith per machine.
// ---------------------------------------------------------------------------

class ImmediateDispatchPolicy : public Policy {
  public:
    std::string name() const override { return "immediate_dispatch"; }

    void reset(const Instance& inst, double) override {
        inst_ = &inst;
        env_ = std::get_if<UnrelatedMachines>(&inst.env);
        if (!env_) throw std::invalid_argument("immediate dispatch needs an unrelated environment");
        assignment_.assign(inst.jobs.size(), -1);
        arrived_.assign(inst.jobs.size(), false);
        assignment_history_.clear();
    }

    void on_arrival(int job, double t, const std::vector<double>& remaining) override {
        arrived_[job] = true;
        const int m = env_->num_machines();
        int best = -1;
        double best_delta = lp::kInf;
        for (int i = 0; i < m; ++i) {
            if (env_->rates[job][i] <= 0) continue;
            const double delta = machine_increment(i, job, remaining);
            if (delta < best_delta - 1e-12) {
                best_delta = delta;
                best = i;
            }
        }
        if (best < 0) throw std::invalid_argument("immediate dispatch: job has all-zero rates");
        assignment_[job] = best;
        assignment_history_.push_back({job, best, t});
    }

    PolicyDecision decide(double, const std::vector<double>& remaining) override {
        PolicyDecision d;
        d.rates.assign(remaining.size(), 0.0);
        const int m = env_->num_machines();
        for (int i = 0; i < m; ++i) {
            int pick = -1;
            double best = -1.0;
            for (size_t j = 0; j < remaining.size(); ++j) {
                if (assignment_[j] != i || !arrived_[j] || remaining[j] <= kCompletionTol) continue;
                const double density = inst_->jobs[j].weight * env_->rates[j][i] / remaining[j];
                if (density > best + 1e-15 ||
                    (std::fabs(density - best) <= 1e-15 &&
                     (pick < 0 || inst_->jobs[j].id < inst_->jobs[pick].id))) {
                    best = density;
                    pick = static_cast<int>(j);
                }
            }
            if (pick >= 0) d.rates[pick] = env_->rates[pick][i];
        }
        return d;
    }

    struct AssignmentRecord {
        int job, machine;
        double t;
    };
    const std::vector<AssignmentRecord>& assignment_history() const { return assignment_history_; }
    const std::vector<int>& assignment() const { return assignment_; }

  private:
    double machine_increment(int machine, int job, const std::vector<double>& remaining) const {
        std::vector<double> lam, rem, w;
        for (size_t j = 0; j < remaining.size(); ++j) {
            if (assignment_[j] == machine && arrived_[j] && remaining[j] > kCompletionTol) {
                lam.push_back(env_->rates[j][machine]);
                rem.push_back(remaining[j]);
                w.push_back(inst_->jobs[j].weight);
            }
        }
        const double before = residual::per_machine_residual(lam, rem, w);
        lam.push_back(env_->rates[job][machine]);
        rem.push_back(inst_->jobs[job].size);
        w.push_back(inst_->jobs[job].weight);
        const double after = residual::per_machine_residual(lam, rem, w);
        return after - before;
    }

    const Instance* inst_ = nullptr;
    const UnrelatedMachines* env_ = nullptr;
    std::vector<int> assignment_;
    std::vector<char> arrived_;
    std::vector<AssignmentRecord> assignment_history_;
};

// ---------------------------------------------------------------------------
// Approximate GD for weighted unrelated machines: solve the per-machine
// residual LP, extract the first unit fraction zhat per machine, realize the
// fractional matching by time-sharing its Birkhoff components.
// ---------------------------------------------------------------------------

class ApproxGdWeightedUnrelated : public Policy {
  public:
    std::string name() const override { return "approx_gd_weighted"; }

    struct Recompute {
        double t;
        std::vector<double> job_marginals;      // sum_i zhat_ij per job
        std::vector<double> machine_marginals;  // sum_j zhat_ij per machine
        double birkhoff_error = 0.0;            // max |zhat - sum w M| on support
    };

    void reset(const Instance& inst, double speed) override {
        inst_ = &inst;
        speed_ = speed;
        env_ = std::get_if<UnrelatedMachines>(&inst.env);
        if (!env_) throw std::invalid_argument("approx GD needs an unrelated environment");
        arrived_.assign(inst.jobs.size(), false);
        dirty_ = true;
        activations_.clear();
        recomputes_.clear();
    }

    void on_arrival(int job, double, const std::vector<double>&) override {
        arrived_[job] = true;
        dirty_ = true;
    }

    void on_completion(int, double, const std::vector<double>&) override { dirty_ = true; }

    PolicyDecision decide(double t, const std::vector<double>& remaining) override {
        if (!dirty_ && t >= phase_end_ - 1e-12) dirty_ = true;  // fraction completion
        if (dirty_) recompute(t, remaining);
        PolicyDecision d;
        d.rates.assign(remaining.size(), 0.0);
        if (activations_.empty()) {
            d.valid_until = lp::kInf;
            return d;
        }
        for (const auto& act : activations_) {
            if (t < act.end - 1e-12) {
                for (const auto& [machine, job] : act.pairs)
                    if (remaining[job] > kCompletionTol) d.rates[job] += env_->rates[job][machine];
                d.valid_until = act.end;
                return d;
            }
        }
        d.valid_until = lp::kInf;
        return d;
    }

    void drain_events(std::vector<PolicyEvent>& out) override {
        out = std::move(events_);
        events_.clear();
    }

    const std::vector<Recompute>& recomputes() const { return recomputes_; }

  private:
    struct Activation {
        double start, end;
        std::vector<std::pair<int, int>> pairs;  // (machine, job)
    };

    void recompute(double t, const std::vector<double>& remaining) {
        dirty_ = false;
        events_.push_back({PolicyEvent::Kind::Recompute, t});
        activations_.clear();
        phase_end_ = lp::kInf;

        auto prob = residual::ResidualProblem::from_state(*inst_, remaining);
        for (size_t j = 0; j < remaining.size(); ++j)
            if (!arrived_[j]) prob.remaining[j] = 0.0;
        bool any = false;
        for (double x : prob.remaining) any = any || x > kCompletionTol;
        if (!any) return;

        const auto grid = residual::build_unit_grid(weighted_horizon(prob) + 2.0);
        auto res = residual::weighted_unrelated_residual(prob, grid);

        const int m = env_->num_machines();
        const int n = static_cast<int>(remaining.size());
        // t_i: earliest time the first unit of job fractions completes on i;
        // zhat_ij is the fraction accumulated by then.
        std::vector<std::vector<double>> zhat(m, std::vector<double>(n, 0.0));
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            for (const auto& seg : res.segments) {
                double speed_sum = 0.0;
                std::vector<double> rates(n, 0.0);
                for (int j = 0; j < n; ++j) {
                    if (seg.z[j].empty() || seg.z[j][i] <= 0) continue;
                    const double p_ij = inst_->jobs[j].size / env_->rates[j][i];
                    rates[j] = seg.z[j][i] / p_ij;  // fraction rate
                    speed_sum += rates[j];
                }
                const double len = seg.end - seg.start;
                double take = len;
                if (speed_sum > 1e-15 && acc + speed_sum * len >= 1.0 - 1e-12)
                    take = (1.0 - acc) / speed_sum;
                for (int j = 0; j < n; ++j) zhat[i][j] += rates[j] * take;
                acc += speed_sum * take;
                if (take < len - 1e-15 || acc >= 1.0 - 1e-12) break;
            }
        }
        Recompute rec;
        rec.t = t;
        rec.machine_marginals.assign(m, 0.0);
        rec.job_marginals.assign(n, 0.0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                rec.machine_marginals[i] += zhat[i][j];
                rec.job_marginals[j] += zhat[i][j];
            }

        // Birkhoff over the padded square matrix (rows: machines).
        const int side = std::max(m, n);
        std::vector<std::vector<double>> sq(side, std::vector<double>(side, 0.0));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) sq[i][j] = std::min(1.0, std::max(0.0, zhat[i][j]));
        auto comps = lp::birkhoff_decompose(sq);
        std::vector<std::vector<double>> recomposed(side, std::vector<double>(side, 0.0));
        double wsum = 0.0;
        for (const auto& c : comps) {
            wsum += c.weight;
            for (int r = 0; r < side; ++r) recomposed[r][c.column_of_row[r]] += c.weight;
        }
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                if (zhat[i][j] > 1e-12)
                    rec.birkhoff_error = std::max(rec.birkhoff_error,
                                                  std::fabs(recomposed[i][j] - zhat[i][j]));
        recomputes_.push_back(rec);
        if (comps.empty()) return;

        // Phase length: first allotment zhat_ij * p_j exhausts under speed s
        // when the pair has received its full share, i.e. after
        // W * p_ij / s time where W = sum of component weights.
        double min_pij = lp::kInf;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                if (zhat[i][j] > 1e-9)
                    min_pij = std::min(min_pij, inst_->jobs[j].size / env_->rates[j][i]);
        if (!std::isfinite(min_pij)) return;
        const double phase_len = wsum * min_pij / speed_;
        phase_end_ = t + phase_len;
        double at = t;
        for (const auto& c : comps) {
            Activation act;
            act.start = at;
            act.end = at + phase_len * (c.weight / wsum);
            for (int i = 0; i < m && i < static_cast<int>(c.column_of_row.size()); ++i) {
                const int col = c.column_of_row[i];
                if (col >= 0 && col < n && zhat[i][col] > 1e-12) act.pairs.push_back({i, col});
            }
            at = act.end;
            activations_.push_back(std::move(act));
        }
        activations_.back().end = phase_end_;
        events_.push_back({PolicyEvent::Kind::FractionCompletion, phase_end_});
    }

    double weighted_horizon(const residual::ResidualProblem& prob) const {
        double h = 0.0;
        for (int v = 0; v < prob.size(); ++v) {
            if (prob.remaining[v] <= kCompletionTol) continue;
            double best = 0.0;
            for (double lam : env_->rates[v]) best = std::max(best, lam);
            h += prob.remaining[v] / std::max(best, 1e-12);
        }
        return h;
    }

    const Instance* inst_ = nullptr;
    const UnrelatedMachines* env_ = nullptr;
    double speed_ = 1.0;
    std::vector<char> arrived_;
    bool dirty_ = true;
    double phase_end_ = lp::kInf;
    std::vector<Activation> activations_;
    std::vector<PolicyEvent> events_;
    std::vector<Recompute> recomputes_;
};

inline std::unique_ptr<Policy> make_policy(const std::string& name) {
    if (name == "gd" || name == "gd_fractional") return std::make_unique<GdPolicy>(residual::Objective::Fractional);
    if (name == "gd_integral") return std::make_unique<GdPolicy>(residual::Objective::Integral);
    if (name == "srpt") return std::make_unique<BaselinePolicy>(BaselineKind::Srpt);
    if (name == "hdf" || name == "highest_density_first")
        return std::make_unique<BaselinePolicy>(BaselineKind::HighestDensityFirst);
    if (name == "fifo") return std::make_unique<BaselinePolicy>(BaselineKind::Fifo);
    if (name == "ps" || name == "processor_sharing")
        return std::make_unique<BaselinePolicy>(BaselineKind::ProcessorSharing);
    if (name == "immediate_dispatch") return std::make_unique<ImmediateDispatchPolicy>();
    if (name == "approx_gd_weighted") return std::make_unique<ApproxGdWeightedUnrelated>();
    throw std::invalid_argument("unknown policy: " + name);
}

}  // namespace gdsched::policies

#endif  // GDSCHED_POLICIES_HPP
