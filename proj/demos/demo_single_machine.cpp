// Small tour: generate a single-machine instance, run a few policies at two
// speeds, and print the competitive table against the fractional optimum.

#include <cstdio>

#include "gdsched/bench.hpp"

using namespace gdsched;

int main() {
    bench::GeneratorSpec spec;
    spec.kind = "single_machine";
    spec.n = 4;
    spec.size_max = 3;
    spec.release_max = 5;
    spec.seed = 2024;
    spec.weight_max = 3;
    Instance inst = bench::generate(spec);

    std::printf("jobs:\n");
    for (const Job& j : inst.jobs)
        std::printf("  id=%d release=%g size=%g weight=%g\n", j.id, j.release, j.size, j.weight);

    const double opt_frac = sim::offline_opt_fractional(inst).value;
    const double opt_dp = sim::offline_opt_integral_dp(inst);
    std::printf("\nopt fractional: %.4f   opt integral (DP): %.4f\n\n", opt_frac, opt_dp);

    std::printf("%-16s %-6s %-12s %-12s %-10s\n", "policy", "speed", "integral", "fractional",
                "frac ratio");
    for (const char* name : {"gd", "gd_integral", "srpt", "hdf", "fifo", "ps"}) {
        for (double speed : {1.0, 2.0}) {
            auto policy = policies::make_policy(name);
            sim::SimConfig cfg;
            cfg.speed = speed;
            auto run = sim::simulate(inst, *policy, cfg);
            auto m = compute_metrics(run.trace, inst);
            std::printf("%-16s %-6g %-12.4f %-12.4f %-10.4f\n", name, speed,
                        m.integral_weighted_flow, m.fractional_weighted_flow,
                        m.fractional_weighted_flow / opt_frac);
        }
    }
    return 0;
}
