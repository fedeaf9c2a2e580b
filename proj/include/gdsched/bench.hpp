#ifndef GDSCHED_BENCH_HPP
#define GDSCHED_BENCH_HPP

#include <cstdint>
#include <fstream>
#include <random>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdsched/core.hpp"
#include "gdsched/policies.hpp"
#include "gdsched/sim.hpp"
#include "gdsched/verify.hpp"

namespace gdsched::bench {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Deterministic RNG (std::uniform_* distributions are not portable).
// ---------------------------------------------------------------------------

class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed ^ 0x9e3779b97f4a7c15ull) {}

    double real(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(gen_() >> 11) * 0x1.0p-53);
    }
    int integer(int lo, int hi) {
        return lo + static_cast<int>(gen_() % static_cast<uint64_t>(hi - lo + 1));
    }
    uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Instance generation.
// ---------------------------------------------------------------------------

struct GeneratorSpec {
    std::string kind = "single_machine";
    int n = 3;
    uint64_t seed = 0;
    int machines = 2;    // identical / unrelated
    int resources = 2;   // speedup
    bool integer_data = true;
    double size_min = 1.0, size_max = 4.0;
    double weight_min = 1.0, weight_max = 1.0;
    double release_min = 0.0, release_max = 8.0;
    double rate_min = 0.5, rate_max = 2.0;
};

namespace detail {

inline ConcavePL random_concave(Rng& rng, double scale) {
    // decreasing positive slopes over unit-length pieces
    ConcavePL g;
    g.xs.push_back(0.0);
    g.ys.push_back(0.0);
    double slope = scale * rng.real(1.0, 2.0);
    double x = 0.0, y = 0.0;
    const int pieces = rng.integer(2, 4);
    for (int k = 0; k < pieces; ++k) {
        const double dx = rng.real(0.5, 1.5);
        x += dx;
        y += slope * dx;
        g.xs.push_back(x);
        g.ys.push_back(y);
        slope *= rng.real(0.3, 0.8);
    }
    return g;
}

}  // namespace detail

inline Instance generate(const GeneratorSpec& spec) {
    Rng rng(spec.seed * 1000003ull + std::hash<std::string>{}(spec.kind));
    Instance inst;
    for (int j = 0; j < spec.n; ++j) {
        Job job;
        job.id = j;
        if (spec.integer_data) {
            job.size = rng.integer(static_cast<int>(spec.size_min), static_cast<int>(spec.size_max));
            job.release =
                rng.integer(static_cast<int>(spec.release_min), static_cast<int>(spec.release_max));
            job.weight =
                rng.integer(static_cast<int>(spec.weight_min), static_cast<int>(spec.weight_max));
        } else {
            job.size = rng.real(spec.size_min, spec.size_max);
            job.release = rng.real(spec.release_min, spec.release_max);
            job.weight = rng.real(spec.weight_min, spec.weight_max);
        }
        inst.jobs.push_back(job);
    }

    if (spec.kind == "single_machine") {
        inst.env = SingleMachine{};
    } else if (spec.kind == "identical") {
        inst.env = IdenticalMachines{spec.machines};
    } else if (spec.kind == "unrelated") {
        UnrelatedMachines u;
        u.rates.assign(spec.n, std::vector<double>(spec.machines));
        for (auto& row : u.rates)
            for (double& v : row) v = 0.25 * rng.integer(static_cast<int>(spec.rate_min * 4),
                                                         static_cast<int>(spec.rate_max * 4));
        inst.env = u;
    } else if (spec.kind == "matroid_uniform") {
        MatroidEnv m;
        m.kind = MatroidEnv::Kind::Uniform;
        m.num_elements = spec.n;
        m.uniform_rank = rng.integer(1, std::max(1, spec.n - 1));
        inst.env = m;
    } else if (spec.kind == "matroid_partition") {
        MatroidEnv m;
        m.kind = MatroidEnv::Kind::Partition;
        m.num_elements = spec.n;
        int at = 0;
        while (at < spec.n) {
            const int len = std::min(spec.n - at, rng.integer(1, 3));
            std::vector<int> block;
            for (int k = 0; k < len; ++k) block.push_back(at + k);
            m.blocks.push_back(block);
            m.capacities.push_back(rng.integer(1, len));
            at += len;
        }
        inst.env = m;
    } else if (spec.kind == "matroid_graphic") {
        MatroidEnv m;
        m.kind = MatroidEnv::Kind::Graphic;
        m.num_elements = spec.n;
        m.graph_vertices = std::max(2, spec.n / 2 + 1);
        for (int e = 0; e < spec.n; ++e) {
            const int a = rng.integer(0, m.graph_vertices - 1);
            int b = rng.integer(0, m.graph_vertices - 2);
            if (b >= a) ++b;
            m.edges.push_back({a, b});
        }
        inst.env = m;
    } else if (spec.kind == "genflow_dag") {
        // two layers: job source nodes feed shared resource sinks
        GenFlowEnv g;
        const int sinks = rng.integer(1, 2);
        g.num_nodes = spec.n + sinks;
        g.excess.assign(g.num_nodes, 0.0);
        double total = 0.0;
        for (const Job& j : inst.jobs) total += j.size;
        for (int j = 0; j < spec.n; ++j) {
            g.source_of_job.push_back(j);
            g.excess[j] = total + 1.0;  // sources never bind on their own
        }
        for (int s = 0; s < sinks; ++s)
            g.excess[spec.n + s] = -(0.5 * rng.integer(2, 6));  // absorption capacity
        for (int j = 0; j < spec.n; ++j) {
            const int arcs = rng.integer(1, sinks);
            std::vector<int> order(sinks);
            std::iota(order.begin(), order.end(), 0);
            for (int k = sinks - 1; k > 0; --k) std::swap(order[k], order[rng.integer(0, k)]);
            for (int k = 0; k < arcs; ++k) {
                GenFlowEnv::Arc a;
                a.from = j;
                a.to = spec.n + order[k];
                a.capacity = 0.5 * rng.integer(1, 6);
                a.gain = 0.25 * rng.integer(2, 8);
                g.arcs.push_back(a);
            }
        }
        inst.env = g;
        // every job must be processable; nudge capacity where it is not
        std::vector<int> elem(spec.n);
        std::iota(elem.begin(), elem.end(), 0);
        for (int j = 0; j < spec.n; ++j) {
            if (envs::max_rate_of(inst.env, elem, j) <= 1e-9) {
                GenFlowEnv g2 = std::get<GenFlowEnv>(inst.env);
                g2.arcs.push_back({j, spec.n, 1.0, 1.0});
                if (g2.excess[spec.n] > -0.5) g2.excess[spec.n] = -0.5;
                inst.env = g2;
            }
        }
    } else if (spec.kind == "speedup") {
        SpeedupEnv env;
        env.num_resources = spec.resources;
        for (int j = 0; j < spec.n; ++j) {
            SpeedupEnv::JobUtility ju;
            // random partition of the resources into one or two groups
            std::vector<int> order(spec.resources);
            std::iota(order.begin(), order.end(), 0);
            for (int k = spec.resources - 1; k > 0; --k) std::swap(order[k], order[rng.integer(0, k)]);
            const int split = spec.resources > 1 && rng.integer(0, 1) ? spec.resources / 2
                                                                      : spec.resources;
            for (int part = 0; part < (split == spec.resources ? 1 : 2); ++part) {
                SpeedupEnv::Group grp;
                const int lo = part == 0 ? 0 : split;
                const int hi = part == 0 ? split : spec.resources;
                for (int k = lo; k < hi; ++k) {
                    grp.resources.push_back(order[k]);
                    grp.coeffs.push_back(0.25 * rng.integer(1, 8));
                }
                grp.g = detail::random_concave(rng, 1.0);
                ju.groups.push_back(grp);
            }
            env.jobs.push_back(ju);
        }
        inst.env = env;
    } else {
        throw std::invalid_argument("generate: unknown kind " + spec.kind);
    }
    auto issues = validate_instance(inst);
    if (!issues.empty()) throw std::runtime_error("generate: produced invalid instance: " + issues[0]);
    return inst;
}

// ---------------------------------------------------------------------------
// Instance JSON schema: {"environment": {"kind": ...}, "jobs": [...]}.
// Unknown fields are rejected.
// ---------------------------------------------------------------------------

namespace detail {

inline void expect_keys(const json& obj, const std::vector<std::string>& allowed,
                        const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw std::invalid_argument("unknown field '" + it.key() + "' in " + where);
    }
}

}  // namespace detail

inline json environment_to_json(const EnvironmentSpec& env) {
    json e;
    e["kind"] = env_kind_name(env);
    if (const auto* m = std::get_if<IdenticalMachines>(&env)) {
        e["machines"] = m->machines;
    } else if (const auto* u = std::get_if<UnrelatedMachines>(&env)) {
        e["rates"] = u->rates;
    } else if (const auto* m = std::get_if<MatroidEnv>(&env)) {
        e["elements"] = m->num_elements;
        if (m->kind == MatroidEnv::Kind::Uniform) {
            e["rank"] = m->uniform_rank;
        } else if (m->kind == MatroidEnv::Kind::Partition) {
            e["blocks"] = m->blocks;
            e["capacities"] = m->capacities;
        } else {
            e["vertices"] = m->graph_vertices;
            json edges = json::array();
            for (auto [a, b] : m->edges) edges.push_back(json::array({a, b}));
            e["edges"] = edges;
        }
    } else if (const auto* g = std::get_if<GenFlowEnv>(&env)) {
        e["kind"] = "genflow";
        e["nodes"] = g->num_nodes;
        e["excess"] = g->excess;
        json arcs = json::array();
        for (const auto& a : g->arcs)
            arcs.push_back({{"from", a.from}, {"to", a.to}, {"capacity", a.capacity}, {"gain", a.gain}});
        e["arcs"] = arcs;
        e["sources"] = g->source_of_job;
    } else if (const auto* sp = std::get_if<SpeedupEnv>(&env)) {
        e["resources"] = sp->num_resources;
        json jobs = json::array();
        for (const auto& ju : sp->jobs) {
            json groups = json::array();
            for (const auto& grp : ju.groups)
                groups.push_back({{"resources", grp.resources},
                                  {"coeffs", grp.coeffs},
                                  {"g", {{"x", grp.g.xs}, {"y", grp.g.ys}}}});
            jobs.push_back({{"groups", groups}});
        }
        e["jobs"] = jobs;
    }
    return e;
}

inline EnvironmentSpec environment_from_json(const json& e) {
    const std::string kind = e.at("kind").get<std::string>();
    if (kind == "single_machine") {
        detail::expect_keys(e, {"kind"}, "environment");
        return SingleMachine{};
    }
    if (kind == "identical") {
        detail::expect_keys(e, {"kind", "machines"}, "environment");
        return IdenticalMachines{e.at("machines").get<int>()};
    }
    if (kind == "unrelated") {
        detail::expect_keys(e, {"kind", "rates"}, "environment");
        UnrelatedMachines u;
        u.rates = e.at("rates").get<std::vector<std::vector<double>>>();
        return u;
    }
    if (kind == "matroid_uniform") {
        detail::expect_keys(e, {"kind", "elements", "rank"}, "environment");
        MatroidEnv m;
        m.kind = MatroidEnv::Kind::Uniform;
        m.num_elements = e.at("elements").get<int>();
        m.uniform_rank = e.at("rank").get<int>();
        return m;
    }
    if (kind == "matroid_partition") {
        detail::expect_keys(e, {"kind", "elements", "blocks", "capacities"}, "environment");
        MatroidEnv m;
        m.kind = MatroidEnv::Kind::Partition;
        m.num_elements = e.at("elements").get<int>();
        m.blocks = e.at("blocks").get<std::vector<std::vector<int>>>();
        m.capacities = e.at("capacities").get<std::vector<int>>();
        return m;
    }
    if (kind == "matroid_graphic") {
        detail::expect_keys(e, {"kind", "elements", "vertices", "edges"}, "environment");
        MatroidEnv m;
        m.kind = MatroidEnv::Kind::Graphic;
        m.num_elements = e.at("elements").get<int>();
        m.graph_vertices = e.at("vertices").get<int>();
        for (const auto& edge : e.at("edges"))
            m.edges.push_back({edge.at(0).get<int>(), edge.at(1).get<int>()});
        return m;
    }
    if (kind == "genflow") {
        detail::expect_keys(e, {"kind", "nodes", "excess", "arcs", "sources"}, "environment");
        GenFlowEnv g;
        g.num_nodes = e.at("nodes").get<int>();
        g.excess = e.at("excess").get<std::vector<double>>();
        for (const auto& a : e.at("arcs")) {
            detail::expect_keys(a, {"from", "to", "capacity", "gain"}, "arc");
            g.arcs.push_back({a.at("from").get<int>(), a.at("to").get<int>(),
                              a.at("capacity").get<double>(), a.at("gain").get<double>()});
        }
        g.source_of_job = e.at("sources").get<std::vector<int>>();
        return g;
    }
    if (kind == "speedup") {
        detail::expect_keys(e, {"kind", "resources", "jobs"}, "environment");
        SpeedupEnv sp;
        sp.num_resources = e.at("resources").get<int>();
        for (const auto& j : e.at("jobs")) {
            detail::expect_keys(j, {"groups"}, "speedup job");
            SpeedupEnv::JobUtility ju;
            for (const auto& grp : j.at("groups")) {
                detail::expect_keys(grp, {"resources", "coeffs", "g"}, "speedup group");
                SpeedupEnv::Group g;
                g.resources = grp.at("resources").get<std::vector<int>>();
                g.coeffs = grp.at("coeffs").get<std::vector<double>>();
                detail::expect_keys(grp.at("g"), {"x", "y"}, "speedup curve");
                g.g.xs = grp.at("g").at("x").get<std::vector<double>>();
                g.g.ys = grp.at("g").at("y").get<std::vector<double>>();
                ju.groups.push_back(g);
            }
            sp.jobs.push_back(ju);
        }
        return sp;
    }
    throw std::invalid_argument("unknown environment kind: " + kind);
}

inline json instance_to_json(const Instance& inst) {
    json out;
    out["environment"] = environment_to_json(inst.env);
    json jobs = json::array();
    for (const Job& j : inst.jobs)
        jobs.push_back(
            {{"id", j.id}, {"release", j.release}, {"size", j.size}, {"weight", j.weight}});
    out["jobs"] = jobs;
    return out;
}

inline Instance instance_from_json(const json& in) {
    detail::expect_keys(in, {"environment", "jobs"}, "instance");
    Instance inst;
    inst.env = environment_from_json(in.at("environment"));
    for (const auto& j : in.at("jobs")) {
        detail::expect_keys(j, {"id", "release", "size", "weight"}, "job");
        Job job;
        job.id = j.at("id").get<int>();
        job.release = j.at("release").get<double>();
        job.size = j.at("size").get<double>();
        job.weight = j.contains("weight") ? j.at("weight").get<double>() : 1.0;
        inst.jobs.push_back(job);
    }
    auto issues = validate_instance(inst);
    if (!issues.empty()) throw std::invalid_argument("instance invalid: " + issues[0]);
    return inst;
}

inline void save_instance(const Instance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << instance_to_json(inst).dump(2) << "\n";
}

inline Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    json j = json::parse(in);  // throws with byte position on malformed input
    return instance_from_json(j);
}

inline json trace_to_json(const ScheduleTrace& tr) {
    json out;
    out["speed"] = tr.speed;
    json segs = json::array();
    for (const auto& s : tr.segments)
        segs.push_back({{"start", s.start}, {"end", s.end}, {"rates", s.rates}});
    out["segments"] = segs;
    json comp = json::array();
    for (const auto& c : tr.completions) {
        if (c) comp.push_back(*c);
        else comp.push_back(nullptr);
    }
    out["completions"] = comp;
    return out;
}

// ---------------------------------------------------------------------------
// Results CSV.
// ---------------------------------------------------------------------------

inline std::string results_csv_header() {
    return "instance_id,env_kind,policy,speed,integral_flow,fractional_flow,opt_fractional,"
           "opt_integral_or_blank,ratio_fractional,ratio_integral_or_blank";
}

inline std::string to_csv(const verify::TableRow& row) {
    std::ostringstream os;
    os.precision(12);
    os << row.instance_id << ',' << row.env_kind << ',' << row.policy << ',' << row.speed << ','
       << row.integral_flow << ',' << row.fractional_flow << ',' << row.opt_fractional << ',';
    if (row.opt_integral) os << *row.opt_integral;
    os << ',' << row.ratio_fractional << ',';
    if (row.ratio_integral) os << *row.ratio_integral;
    return os.str();
}

// ---------------------------------------------------------------------------
// Experiment runner.
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    struct Cell {
        GeneratorSpec gen;
        int count = 1;
    };
    std::vector<Cell> cells;
    std::vector<std::string> policies{"gd"};
    std::vector<double> speeds{2.0};
    std::vector<std::string> checkers;  // supermodularity | gs | ls | potential | rate
    bool with_integral_dp = false;
    uint64_t seed = 1;
    double checker_tol_override = -1.0;  // < 0: per-checker defaults

    double tol(double fallback) const {
        return checker_tol_override > 0 ? checker_tol_override : fallback;
    }
};

inline ExperimentConfig experiment_config_from_json(const json& cfg) {
    detail::expect_keys(cfg, {"seed", "cells", "policies", "speeds", "checkers", "integral_dp"},
                        "experiment config");
    ExperimentConfig out;
    if (cfg.contains("seed")) out.seed = cfg.at("seed").get<uint64_t>();
    if (cfg.contains("policies")) out.policies = cfg.at("policies").get<std::vector<std::string>>();
    if (cfg.contains("speeds")) out.speeds = cfg.at("speeds").get<std::vector<double>>();
    if (cfg.contains("checkers")) out.checkers = cfg.at("checkers").get<std::vector<std::string>>();
    if (cfg.contains("integral_dp")) out.with_integral_dp = cfg.at("integral_dp").get<bool>();
    if (cfg.contains("cells")) {
        for (const auto& c : cfg.at("cells")) {
            detail::expect_keys(c,
                                {"kind", "n", "count", "machines", "resources", "integer_data",
                                 "size_max", "weight_max", "release_max"},
                                "cell");
            ExperimentConfig::Cell cell;
            cell.gen.kind = c.at("kind").get<std::string>();
            if (c.contains("n")) cell.gen.n = c.at("n").get<int>();
            if (c.contains("count")) cell.count = c.at("count").get<int>();
            if (c.contains("machines")) cell.gen.machines = c.at("machines").get<int>();
            if (c.contains("resources")) cell.gen.resources = c.at("resources").get<int>();
            if (c.contains("integer_data")) cell.gen.integer_data = c.at("integer_data").get<bool>();
            if (c.contains("size_max")) cell.gen.size_max = c.at("size_max").get<double>();
            if (c.contains("weight_max")) cell.gen.weight_max = c.at("weight_max").get<double>();
            if (c.contains("release_max")) cell.gen.release_max = c.at("release_max").get<double>();
            out.cells.push_back(cell);
        }
    }
    return out;
}

struct ExperimentResult {
    std::string csv;       // results table (no timestamp line)
    json reports;          // property report bundle
    int violations = 0;
};

inline json property_report_to_json(const verify::PropertyReport& rep) {
    json out;
    out["property"] = rep.property;
    out["instances_tested"] = rep.instances_tested;
    out["max_residual"] = rep.max_residual;
    json v = json::array();
    for (const auto& viol : rep.violations)
        v.push_back({{"witness", viol.witness}, {"residual", viol.residual}});
    out["violations"] = v;
    return out;
}

/// Environment-aware residual objective/method used by the checker suites.
inline residual::SolveOptions suite_residual_options(const Instance& inst) {
    residual::SolveOptions opt;
    if (std::holds_alternative<SingleMachine>(inst.env)) {
        opt.objective = residual::Objective::Integral;
    } else if (std::holds_alternative<UnrelatedMachines>(inst.env)) {
        opt.objective = residual::Objective::Integral;  // matching residual
    } else {
        opt.objective = residual::Objective::Fractional;
        opt.method = residual::Method::GridLp;
    }
    return opt;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult out;
    std::ostringstream csv;
    csv << results_csv_header() << "\n";
    json reports = json::array();

    int cell_idx = 0;
    for (const auto& cell : cfg.cells) {
        for (int k = 0; k < cell.count; ++k) {
            GeneratorSpec gen = cell.gen;
            gen.seed = cfg.seed + 7919ull * cell_idx + k;
            Instance inst = generate(gen);
            const std::string id = gen.kind + "-" + std::to_string(gen.seed);

            std::optional<double> dp;
            if (cfg.with_integral_dp) {
                try {
                    int machines = 1;
                    if (const auto* m = std::get_if<IdenticalMachines>(&inst.env)) machines = m->machines;
                    if (std::holds_alternative<SingleMachine>(inst.env) ||
                        std::holds_alternative<IdenticalMachines>(inst.env))
                        dp = sim::offline_opt_integral_dp(inst, machines);
                } catch (const std::exception&) {
                    dp.reset();
                }
            }
            for (const auto& pname : cfg.policies) {
                for (double s : cfg.speeds) {
                    auto policy = policies::make_policy(pname);
                    csv << to_csv(verify::competitive_row(id, inst, *policy, s, dp)) << "\n";
                }
            }

            for (const auto& checker : cfg.checkers) {
                if (checker == "supermodularity" && inst.jobs.size() <= 6) {
                    auto prob = residual::ResidualProblem::from_state(
                        inst, [&] {
                            std::vector<double> x;
                            for (const auto& j : inst.jobs) x.push_back(j.size);
                            return x;
                        }());
                    residual::SolveOptions opt = suite_residual_options(inst);
                    if (std::holds_alternative<UnrelatedMachines>(inst.env))
                        for (auto& w : prob.weight) w = 1.0;  // matching residual is unweighted
                    auto fn = [&](uint32_t mask) {
                        std::vector<char> keep(prob.size(), 0);
                        for (int v = 0; v < prob.size(); ++v)
                            if (mask & (1u << v)) keep[v] = 1;
                        return residual::residual_set_function(prob, keep, opt);
                    };
                    auto rep = verify::check_supermodularity(fn, static_cast<int>(inst.jobs.size()),
                                                             cfg.tol(1e-6));
                    rep.property = "supermodularity/" + id;
                    out.violations += static_cast<int>(rep.violations.size());
                    reports.push_back(property_report_to_json(rep));
                } else if (checker == "rate") {
                    const bool unrel = std::holds_alternative<UnrelatedMachines>(inst.env);
                    policies::GdPolicy gd(unrel ? residual::Objective::Integral
                                                : residual::Objective::Fractional);
                    sim::SimConfig scfg;
                    scfg.speed = 2.0;
                    auto run = sim::simulate(inst, gd, scfg);
                    auto rep = verify::gd_rate_report(run, scfg.speed,
                                                      unrel ? verify::RateMode::AliveCount
                                                            : verify::RateMode::FractionalWeight,
                                                      cfg.tol(1e-4));
                    rep.property = "gd_rate/" + id;
                    out.violations += static_cast<int>(rep.violations.size());
                    reports.push_back(property_report_to_json(rep));
                } else if (checker == "potential" &&
                           !std::holds_alternative<UnrelatedMachines>(inst.env) &&
                           !std::holds_alternative<SpeedupEnv>(inst.env)) {
                    policies::GdPolicy gd(residual::Objective::Fractional);
                    sim::SimConfig scfg;
                    scfg.speed = 2.0;
                    auto run = sim::simulate(inst, gd, scfg);
                    auto opt = sim::offline_opt_fractional(inst);
                    verify::PotentialOptions popt;
                    popt.eps = 1.0;
                    auto rep = verify::potential_monitor(inst, run.trace, opt.trace, popt);
                    verify::PropertyReport prep;
                    prep.property = "potential/" + id;
                    prep.instances_tested = rep.samples;
                    prep.violations = rep.violations;
                    for (const auto& v : rep.violations)
                        prep.max_residual = std::max(prep.max_residual, v.residual);
                    out.violations += static_cast<int>(prep.violations.size());
                    reports.push_back(property_report_to_json(prep));
                }
            }
        }
        ++cell_idx;
    }

    // instance-independent checker suites
    for (const auto& checker : cfg.checkers) {
        if (checker == "gs") {
            MatroidEnv m;
            m.kind = MatroidEnv::Kind::Uniform;
            m.num_elements = 4;
            m.uniform_rank = 2;
            Rng rng(cfg.seed);
            std::vector<double> w(4);
            for (double& v : w) v = rng.integer(1, 9);
            auto fn = [&](uint32_t mask) {
                std::vector<int> set;
                for (int e = 0; e < 4; ++e)
                    if (mask & (1u << e)) set.push_back(e);
                return envs::weighted_rank(m, set, w);
            };
            auto rep = verify::check_gs(fn, 4, cfg.tol(1e-9));
            rep.property = "gs/weighted_matroid_rank";
            out.violations += static_cast<int>(rep.violations.size());
            reports.push_back(property_report_to_json(rep));
        } else if (checker == "ls") {
            SpeedupEnv env;
            env.num_resources = 2;
            Rng rng(cfg.seed + 17);
            SpeedupEnv::JobUtility ju;
            SpeedupEnv::Group grp;
            grp.resources = {0, 1};
            grp.coeffs = {0.25 * rng.integer(1, 8), 0.25 * rng.integer(1, 8)};
            grp.g = detail::random_concave(rng, 1.0);
            ju.groups.push_back(grp);
            env.jobs.push_back(ju);
            auto demand = [&](const std::vector<double>& q) {
                return envs::speedup_demand(env, 0, q).allocation;
            };
            auto rep = verify::check_ls_demand(demand, 2, {0.1, 0.32, 1.0, 3.2, 10.0}, cfg.tol(1e-6));
            rep.property = "ls/speedup_demand";
            out.violations += static_cast<int>(rep.violations.size());
            reports.push_back(property_report_to_json(rep));
        }
    }

    out.csv = csv.str();
    out.reports = reports;
    return out;
}

}  // namespace gdsched::bench

#endif  // GDSCHED_BENCH_HPP
