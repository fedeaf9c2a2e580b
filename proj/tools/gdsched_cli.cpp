// Command-line harness: instance generation, simulation, offline optima,
// property-check suites, and batch experiments.
//
// Exit codes: 0 ok, 1 property violation, 2 usage or input error.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gdsched/bench.hpp"
#include "gdsched/policies.hpp"
#include "gdsched/sim.hpp"
#include "gdsched/verify.hpp"

using namespace gdsched;

namespace {

double global_tolerance(double fallback) {
    if (const char* env = std::getenv("GDSCHED_TOLERANCE")) {
        try {
            return std::stod(env);
        } catch (...) {
            throw CLI::ValidationError("GDSCHED_TOLERANCE must be a number");
        }
    }
    return fallback;
}

int run_gen(const std::string& kind, int n, uint64_t seed, int machines,
            const std::string& out_path) {
    bench::GeneratorSpec spec;
    spec.kind = kind;
    spec.n = n;
    spec.seed = seed;
    spec.machines = machines;
    Instance inst = bench::generate(spec);
    if (out_path.empty() || out_path == "-")
        std::cout << bench::instance_to_json(inst).dump(2) << "\n";
    else
        bench::save_instance(inst, out_path);
    return 0;
}

int run_simulate(const std::string& instance_path, const std::string& policy_name, double speed,
                 const std::string& trace_path) {
    Instance inst = bench::load_instance(instance_path);
    auto policy = policies::make_policy(policy_name);
    sim::SimConfig cfg;
    cfg.speed = speed;
    auto run = sim::simulate(inst, *policy, cfg);
    auto metrics = compute_metrics(run.trace, inst);
    nlohmann::json out;
    out["policy"] = policy->name();
    out["speed"] = speed;
    out["integral_weighted_flow"] = metrics.integral_weighted_flow;
    out["fractional_weighted_flow"] = metrics.fractional_weighted_flow;
    std::cout << out.dump(2) << "\n";
    if (!trace_path.empty()) {
        std::ofstream tf(trace_path);
        if (!tf) throw std::runtime_error("cannot write " + trace_path);
        tf << bench::trace_to_json(run.trace).dump(2) << "\n";
    }
    return 0;
}

int run_opt(const std::string& instance_path, const std::string& mode) {
    Instance inst = bench::load_instance(instance_path);
    nlohmann::json out;
    if (mode == "fractional") {
        out["opt_fractional"] = sim::offline_opt_fractional(inst).value;
    } else if (mode == "dp") {
        int machines = 1;
        if (const auto* m = std::get_if<IdenticalMachines>(&inst.env)) machines = m->machines;
        out["opt_integral_dp"] = sim::offline_opt_integral_dp(inst, machines);
    } else {
        throw CLI::ValidationError("--mode must be fractional or dp");
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_verify(const std::string& suite, uint64_t seed) {
    bench::ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.checker_tol_override = global_tolerance(-1.0);
    cfg.policies.clear();
    bench::ExperimentConfig::Cell cell;
    cell.count = 5;
    cell.gen.n = 4;
    cell.gen.size_max = 3;
    cell.gen.release_max = 4;
    if (suite == "supermodularity") {
        cfg.checkers = {"supermodularity"};
        for (const char* kind : {"single_machine", "unrelated", "matroid_partition", "genflow_dag"}) {
            cell.gen.kind = kind;
            cfg.cells.push_back(cell);
        }
    } else if (suite == "rate") {
        cfg.checkers = {"rate"};
        for (const char* kind : {"single_machine", "matroid_uniform", "genflow_dag", "unrelated"}) {
            cell.gen.kind = kind;
            cfg.cells.push_back(cell);
        }
    } else if (suite == "potential") {
        cfg.checkers = {"potential"};
        cell.count = 3;
        for (const char* kind : {"single_machine", "matroid_uniform", "genflow_dag"}) {
            cell.gen.kind = kind;
            cfg.cells.push_back(cell);
        }
    } else if (suite == "gs") {
        cfg.checkers = {"gs"};
    } else if (suite == "ls") {
        cfg.checkers = {"ls"};
    } else {
        throw CLI::ValidationError("unknown suite: " + suite);
    }
    auto res = bench::run_experiment(cfg);
    std::cout << res.reports.dump(2) << "\n";
    return res.violations == 0 ? 0 : 1;
}

int run_bench(const std::string& config_path, const std::string& out_dir) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot read " + config_path);
    auto cfg = bench::experiment_config_from_json(nlohmann::json::parse(in));
    cfg.checker_tol_override = global_tolerance(-1.0);
    auto res = bench::run_experiment(cfg);
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream csv(out_dir + "/results.csv");
        const std::time_t now = std::time(nullptr);
        char buf[64];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        csv << "# generated_at " << buf << "\n" << res.csv;
    }
    {
        std::ofstream rep(out_dir + "/reports.json");
        rep << res.reports.dump(2) << "\n";
    }
    std::cout << "wrote " << out_dir << "/results.csv and reports.json; violations: "
              << res.violations << "\n";
    return res.violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polytope scheduling harness"};
    app.require_subcommand(1);

    std::string kind = "single_machine", out_path, instance_path, policy = "gd",
                trace_path, opt_mode = "fractional", suite = "supermodularity",
                config_path, out_dir = "bench_out";
    int n = 3, machines = 2;
    uint64_t seed = 1;
    double speed = 1.0;

    auto* gen = app.add_subcommand("gen", "generate an instance");
    gen->add_option("--kind", kind, "environment kind")->required();
    gen->add_option("--n", n, "number of jobs");
    gen->add_option("--seed", seed, "rng seed");
    gen->add_option("--machines", machines, "machine count (identical/unrelated)");
    gen->add_option("-o,--output", out_path, "output file (default stdout)");

    auto* simc = app.add_subcommand("simulate", "simulate a policy on an instance");
    simc->add_option("--instance", instance_path, "instance json")->required();
    simc->add_option("--policy", policy, "policy name");
    simc->add_option("--speed", speed, "speed augmentation factor");
    simc->add_option("--trace", trace_path, "write the trace json here");

    auto* opt = app.add_subcommand("opt", "offline optimum");
    opt->add_option("--instance", instance_path, "instance json")->required();
    opt->add_option("--mode", opt_mode, "fractional | dp");

    auto* ver = app.add_subcommand("verify", "run a property-check suite");
    ver->add_option("--suite", suite, "supermodularity | gs | ls | potential | rate")->required();
    ver->add_option("--seed", seed, "rng seed");

    auto* ben = app.add_subcommand("bench", "run an experiment config");
    ben->add_option("--config", config_path, "experiment config json")->required();
    ben->add_option("-o,--output", out_dir, "output directory");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return run_gen(kind, n, seed, machines, out_path);
        if (simc->parsed()) return run_simulate(instance_path, policy, speed, trace_path);
        if (opt->parsed()) return run_opt(instance_path, opt_mode);
        if (ver->parsed()) return run_verify(suite, seed);
        if (ben->parsed()) return run_bench(config_path, out_dir);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
