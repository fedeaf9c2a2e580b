#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <deque>
#include <random>

#include "gdsched/policies.hpp"
#include "gdsched/sim.hpp"
#include "gdsched/verify.hpp"

using namespace gdsched;

namespace {

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(uint64_t seed) : gen(seed) {}
    double real(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
    }
    int integer(int lo, int hi) { return lo + static_cast<int>(gen() % (hi - lo + 1)); }
};

residual::ResidualProblem make_problem(const EnvironmentSpec& env, std::vector<double> x,
                                       std::vector<double> w, std::vector<double> p = {}) {
    static std::deque<EnvironmentSpec> keep;
    keep.push_back(env);
    residual::ResidualProblem prob;
    prob.env = &keep.back();
    for (size_t v = 0; v < x.size(); ++v) {
        prob.element_of.push_back(static_cast<int>(v));
        prob.remaining.push_back(x[v]);
        prob.weight.push_back(w.empty() ? 1.0 : w[v]);
        prob.orig_size.push_back(p.empty() ? x[v] : p[v]);
    }
    return prob;
}

std::function<double(uint32_t)> subset_residual(const residual::ResidualProblem& prob,
                                                residual::SolveOptions opt) {
    return [prob, opt](uint32_t mask) {
        std::vector<char> keep(prob.size(), 0);
        for (int v = 0; v < prob.size(); ++v)
            if (mask & (1u << v)) keep[v] = 1;
        return residual::residual_set_function(prob, keep, opt);
    };
}

}  // namespace

TEST_CASE("supermodularity holds for the single-machine closed form") {
    auto prob = make_problem(SingleMachine{}, {1, 2, 3}, {1, 1, 1});
    residual::SolveOptions opt;
    opt.objective = residual::Objective::Integral;
    auto rep = verify::check_supermodularity(subset_residual(prob, opt), 3, 1e-9);
    CHECK(rep.ok());
}

TEST_CASE("square-root-cardinality oracle is caught as non-supermodular") {
    auto sqrt_size = [](uint32_t mask) { return std::sqrt(static_cast<double>(__builtin_popcount(mask))); };
    auto rep = verify::check_supermodularity(sqrt_size, 3, 1e-9);
    CHECK_FALSE(rep.ok());
    CHECK(rep.max_residual > 0.1);
}

TEST_CASE("supermodularity of the matching residual on random unrelated instances") {
    Rng rng(808);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 4, m = rng.integer(2, 2);
        UnrelatedMachines u;
        u.rates.assign(n, std::vector<double>(m));
        std::vector<double> x(n);
        for (int j = 0; j < n; ++j) {
            x[j] = rng.integer(1, 5);
            for (int i = 0; i < m; ++i) u.rates[j][i] = 0.5 * rng.integer(1, 4);
        }
        auto prob = make_problem(u, x, std::vector<double>(n, 1.0));
        residual::SolveOptions opt;
        opt.objective = residual::Objective::Integral;
        auto rep = verify::check_supermodularity(subset_residual(prob, opt), n, 1e-9);
        CHECK(rep.ok());
    }
}

TEST_CASE("supermodularity of the interval-LP residual on matroids and genflow") {
    Rng rng(4242);
    for (int trial = 0; trial < 2; ++trial) {
        MatroidEnv mat;
        mat.kind = MatroidEnv::Kind::Partition;
        mat.num_elements = 4;
        mat.blocks = {{0, 1}, {2, 3}};
        mat.capacities = {1, rng.integer(1, 2)};
        std::vector<double> x(4), w(4);
        for (int v = 0; v < 4; ++v) {
            x[v] = rng.integer(1, 3);
            w[v] = rng.integer(1, 3);
        }
        auto prob = make_problem(mat, x, w);
        residual::SolveOptions opt;
        opt.objective = residual::Objective::Fractional;
        opt.method = residual::Method::GridLp;
        opt.inv_rho = 4;
        auto rep = verify::check_supermodularity(subset_residual(prob, opt), 4, 1e-6);
        CHECK(rep.ok());
    }
    {
        GenFlowEnv g;
        g.num_nodes = 5;
        g.excess = {5, 5, 5, 0, -2};
        g.arcs.push_back({0, 3, 2.0, 1.0});
        g.arcs.push_back({1, 3, 1.0, 0.5});
        g.arcs.push_back({2, 3, 1.0, 2.0});
        g.arcs.push_back({3, 4, 2.0, 1.0});
        g.source_of_job = {0, 1, 2};
        auto prob = make_problem(g, {2, 1, 1}, {1, 2, 1});
        residual::SolveOptions opt;
        opt.objective = residual::Objective::Fractional;
        opt.method = residual::Method::GridLp;
        auto rep = verify::check_supermodularity(subset_residual(prob, opt), 3, 1e-6);
        CHECK(rep.ok());
    }
}

TEST_CASE("gs check passes for additive and weighted-rank valuations") {
    auto additive = [](uint32_t mask) {
        double v = 0.0;
        if (mask & 1u) v += 2.0;
        if (mask & 2u) v += 1.5;
        if (mask & 4u) v += 1.0;
        return v;
    };
    CHECK(verify::check_gs(additive, 3, 1e-9).ok());

    MatroidEnv m;
    m.kind = MatroidEnv::Kind::Uniform;
    m.num_elements = 3;
    m.uniform_rank = 1;
    std::vector<double> w{2.0, 1.0, 1.0};
    auto wr = [&](uint32_t mask) {
        std::vector<int> set;
        for (int e = 0; e < 3; ++e)
            if (mask & (1u << e)) set.push_back(e);
        return envs::weighted_rank(m, set, w);
    };
    CHECK(verify::check_gs(wr, 3, 1e-9).ok());
}

TEST_CASE("gs check rejects a matroid-intersection valuation") {
    // two partition matroids on 4 elements; the weighted rank of their
    // intersection fails the triple condition
    MatroidEnv m1, m2;
    m1.kind = m2.kind = MatroidEnv::Kind::Partition;
    m1.num_elements = m2.num_elements = 4;
    m1.blocks = {{0, 1}, {2, 3}};
    m1.capacities = {1, 1};
    m2.blocks = {{0, 3}, {1, 2}};
    m2.capacities = {1, 1};
    auto common_rank = [&](uint32_t mask) {
        double best = 0.0;
        for (uint32_t s = mask;; s = (s - 1) & mask) {
            std::vector<int> set;
            for (int e = 0; e < 4; ++e)
                if (s & (1u << e)) set.push_back(e);
            if (envs::matroid_independent(m1, set) && envs::matroid_independent(m2, set))
                best = std::max(best, static_cast<double>(set.size()));
            if (s == 0) break;
        }
        return best;
    };
    auto rep = verify::check_gs(common_rank, 4, 1e-9);
    CHECK_FALSE(rep.ok());
}

TEST_CASE("ls demand check: separable demands pass, complements fail") {
    // thresholded separable demand: buy item k fully when its price < v_k
    std::vector<double> value{3.0, 1.0};
    auto separable = [&](const std::vector<double>& q) {
        std::vector<double> y(q.size(), 0.0);
        for (size_t k = 0; k < q.size(); ++k) y[k] = q[k] < value[k] ? 1.0 : 0.0;
        return y;
    };
    std::vector<double> grid{0.1, 0.5, 2.0, 5.0};
    CHECK(verify::check_ls_demand(separable, 2, grid, 1e-9).ok());

    // perfect complements: raise one price and the other item is dropped too
    auto complements = [&](const std::vector<double>& q) {
        const double marginal = 2.0;  // valuation 2*min(y1,y2)
        const double y = (q[0] + q[1] < marginal) ? 1.0 : 0.0;
        return std::vector<double>{y, y};
    };
    CHECK_FALSE(verify::check_ls_demand(complements, 2, grid, 1e-9).ok());
}

TEST_CASE("ls demand check passes for speedup utilities") {
    SpeedupEnv env;
    env.num_resources = 2;
    SpeedupEnv::JobUtility ju;
    SpeedupEnv::Group grp;
    grp.resources = {0, 1};
    grp.coeffs = {1.0, 0.7};
    ConcavePL g;
    for (int k = 0; k <= 32; ++k) {
        g.xs.push_back(2.0 * k / 32);
        g.ys.push_back(2.0 * std::sqrt(2.0 * k / 32));
    }
    grp.g = g;
    ju.groups.push_back(grp);
    env.jobs.push_back(ju);
    auto demand = [&](const std::vector<double>& q) {
        return envs::speedup_demand(env, 0, q).allocation;
    };
    std::vector<double> grid{0.1, 0.32, 1.0, 3.2, 10.0};
    CHECK(verify::check_ls_demand(demand, 2, grid, 1e-9).ok());
}

TEST_CASE("gd rate report is clean in integral and fractional modes") {
    Instance inst;
    inst.env = SingleMachine{};
    inst.jobs = {{0, 0.0, 3.0, 1.0}, {1, 1.0, 2.0, 2.0}, {2, 2.0, 1.0, 1.0}};
    {
        policies::GdPolicy gd(residual::Objective::Integral);
        auto run = sim::simulate(inst, gd, {});
        auto rep = verify::gd_rate_report(run, 1.0, verify::RateMode::IntegralWeight, 1e-5);
        CHECK(rep.ok());
        CHECK(rep.instances_tested > 0);
    }
    {
        policies::GdPolicy gd(residual::Objective::Fractional);
        sim::SimConfig cfg;
        cfg.speed = 1.5;
        auto run = sim::simulate(inst, gd, cfg);
        auto rep = verify::gd_rate_report(run, 1.5, verify::RateMode::FractionalWeight, 1e-5);
        CHECK(rep.ok());
    }
}

TEST_CASE("gd rate report in matching mode counts alive jobs") {
    Instance inst;
    UnrelatedMachines u;
    u.rates = {{1.0, 0.5}, {0.5, 1.0}, {1.0, 1.0}};
    inst.env = u;
    inst.jobs = {{0, 0.0, 2.0, 1.0}, {1, 0.0, 1.0, 1.0}, {2, 1.0, 1.0, 1.0}};
    policies::GdPolicy gd(residual::Objective::Integral);
    sim::SimConfig cfg;
    cfg.speed = 2.0;
    auto run = sim::simulate(inst, gd, cfg);
    auto rep = verify::gd_rate_report(run, 2.0, verify::RateMode::AliveCount, 1e-5);
    CHECK(rep.ok());
}

TEST_CASE("concatenated residual matches the hand formula for one job") {
    Instance inst;
    inst.env = SingleMachine{};
    inst.jobs = {{0, 0.0, 2.0, 1.0}};
    verify::ConcatenatedResidual f(inst, 1);
    // x_A = 1.2, x_O = 1.7: jobs share density 1/2, A copy runs first
    std::vector<double> ra{1.2}, ro{1.7};
    const double f1 = f.value(ra, nullptr);
    CHECK(f1 == Catch::Approx(0.5 * 1.2 * 1.2 / 2.0).margin(1e-12));
    const double f2 = f.value(ra, &ro);
    const double hand = 0.5 * (1.2 * 1.2 / 2.0) + 0.5 * (1.2 * 1.7 + 1.7 * 1.7 / 2.0);
    CHECK(f2 == Catch::Approx(hand).margin(1e-9));
    CHECK(f.value(std::vector<double>{0.0}, nullptr) == 0.0);  // boundary
}

TEST_CASE("potential monitor is clean for gd against the fractional optimum") {
    Rng rng(99);
    for (int trial = 0; trial < 3; ++trial) {
        Instance inst;
        inst.env = SingleMachine{};
        const int n = rng.integer(2, 4);
        for (int j = 0; j < n; ++j)
            inst.jobs.push_back({j, static_cast<double>(rng.integer(0, 4)),
                                 static_cast<double>(rng.integer(1, 3)),
                                 static_cast<double>(rng.integer(1, 3))});
        const double eps = trial % 2 == 0 ? 1.0 : 0.5;
        policies::GdPolicy gd(residual::Objective::Fractional);
        sim::SimConfig cfg;
        cfg.speed = 1.0 + eps;
        auto run = sim::simulate(inst, gd, cfg);
        auto opt = sim::offline_opt_fractional(inst);
        verify::PotentialOptions popt;
        popt.eps = eps;
        auto rep = verify::potential_monitor(inst, run.trace, opt.trace, popt);
        INFO("violations: " << (rep.violations.empty() ? "" : rep.violations[0].witness));
        CHECK(rep.ok());
        CHECK(rep.samples > 0);
        CHECK(rep.integrated_margin >= -1e-6);
    }
}

TEST_CASE("potential monitor on a matroid environment") {
    Instance inst;
    MatroidEnv m;
    m.kind = MatroidEnv::Kind::Uniform;
    m.num_elements = 3;
    m.uniform_rank = 2;
    inst.env = m;
    inst.jobs = {{0, 0.0, 2.0, 1.0}, {1, 0.0, 1.0, 2.0}, {2, 1.0, 2.0, 1.0}};
    policies::GdPolicy gd(residual::Objective::Fractional);
    sim::SimConfig cfg;
    cfg.speed = 2.0;
    auto run = sim::simulate(inst, gd, cfg);
    auto opt = sim::offline_opt_fractional(inst);
    verify::PotentialOptions popt;
    popt.eps = 1.0;
    auto rep = verify::potential_monitor(inst, run.trace, opt.trace, popt);
    INFO("violations: " << (rep.violations.empty() ? "" : rep.violations[0].witness));
    CHECK(rep.ok());
}

TEST_CASE("potential monitor with identical traces has vanishing boundaries") {
    Instance inst;
    inst.env = SingleMachine{};
    inst.jobs = {{0, 0.0, 1.0, 1.0}, {1, 0.5, 1.0, 1.0}};
    policies::BaselinePolicy srpt(policies::BaselineKind::Srpt);
    auto run = sim::simulate(inst, srpt, {});
    verify::PotentialOptions popt;
    popt.eps = 0.5;
    popt.assert_drift = false;  // same speed on both sides, drift bound not applicable
    auto rep = verify::potential_monitor(inst, run.trace, run.trace, popt);
    for (const auto& ed : rep.event_deltas) CHECK(ed.delta <= 1e-9);
}

TEST_CASE("copies-mode potential requires an integer multiplicity") {
    Instance inst;
    UnrelatedMachines u;
    u.rates = {{1.0}};
    inst.env = u;
    inst.jobs = {{0, 0.0, 1.0, 1.0}};
    policies::BaselinePolicy srpt(policies::BaselineKind::Srpt);  // wrong env on purpose
    verify::PotentialOptions popt;
    popt.eps = 0.4;  // 1/eps - 1 = 1.5, not integral
    popt.mode = verify::PotentialMode::Copies;
    ScheduleTrace dummy;
    dummy.completions.assign(1, 0.0);
    CHECK_THROWS(verify::potential_monitor(inst, dummy, dummy, popt));
}
