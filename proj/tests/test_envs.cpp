#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "gdsched/envs.hpp"

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

MatroidEnv uniform_matroid(int n, int rank) {
    MatroidEnv m;
    m.kind = MatroidEnv::Kind::Uniform;
    m.num_elements = n;
    m.uniform_rank = rank;
    return m;
}

MatroidEnv partition_matroid(int n, std::vector<std::vector<int>> blocks, std::vector<int> caps) {
    MatroidEnv m;
    m.kind = MatroidEnv::Kind::Partition;
    m.num_elements = n;
    m.blocks = std::move(blocks);
    m.capacities = std::move(caps);
    return m;
}

ConcavePL sqrt_curve(double scale, int segments, double xmax) {
    // piecewise-linear sampling of scale * sqrt(x)
    ConcavePL g;
    for (int k = 0; k <= segments; ++k) {
        const double x = xmax * k / segments;
        g.xs.push_back(x);
        g.ys.push_back(scale * std::sqrt(x));
    }
    return g;
}

double brute_force_demand_utility(const SpeedupEnv& env, int job, const std::vector<double>& q,
                                  int steps) {
    // grid search over [0,1]^D
    const int D = env.num_resources;
    std::vector<int> idx(D, 0);
    double best = -lp::kInf;
    while (true) {
        std::vector<double> y(D);
        for (int d = 0; d < D; ++d) y[d] = static_cast<double>(idx[d]) / steps;
        double u = envs::speedup_utility(env, job, y);
        for (int d = 0; d < D; ++d) u -= q[d] * y[d];
        best = std::max(best, u);
        int d = 0;
        while (d < D && ++idx[d] > steps) idx[d++] = 0;
        if (d == D) break;
    }
    return best;
}

}  // namespace

TEST_CASE("single machine feasibility") {
    EnvironmentSpec env = SingleMachine{};
    CHECK(envs::is_feasible_rate(env, {0.5, 0.5}));
    CHECK_FALSE(envs::is_feasible_rate(env, {0.6, 0.6}));
}

TEST_CASE("uniform matroid rank-1 feasibility") {
    EnvironmentSpec env = uniform_matroid(2, 1);
    CHECK_FALSE(envs::is_feasible_rate(env, {0.7, 0.4}));  // sum 1.1 > r = 1
    CHECK(envs::is_feasible_rate(env, {0.7, 0.3}));
}

TEST_CASE("max_linear picks the best coefficient on a single machine") {
    EnvironmentSpec env = SingleMachine{};
    auto r = envs::max_linear(env, {3.0, 1.0});
    CHECK(r.value == Catch::Approx(3.0));
    CHECK(r.rates[0] == Catch::Approx(1.0));
    CHECK(r.rates[1] == Catch::Approx(0.0));
}

TEST_CASE("max_linear on a uniform matroid equals the greedy value") {
    EnvironmentSpec env = uniform_matroid(3, 2);
    auto r = envs::max_linear(env, {5.0, 4.0, 1.0});
    CHECK(r.value == Catch::Approx(9.0));
    CHECK(r.rates[0] == Catch::Approx(1.0));
    CHECK(r.rates[1] == Catch::Approx(1.0));
    CHECK(r.rates[2] == Catch::Approx(0.0));
}

TEST_CASE("max_linear on unrelated machines routes jobs to their machines") {
    UnrelatedMachines u;
    u.rates = {{1.0, 0.0}, {0.0, 2.0}};
    EnvironmentSpec env = u;
    auto r = envs::max_linear(env, {1.0, 1.0});
    CHECK(r.value == Catch::Approx(3.0));
    CHECK(r.rates[0] == Catch::Approx(1.0));
    CHECK(r.rates[1] == Catch::Approx(2.0));
}

TEST_CASE("weighted rank greedy matches brute force") {
    MatroidEnv m1 = uniform_matroid(2, 1);
    CHECK(envs::weighted_rank(m1, {0, 1}, {2.0, 1.0}) == Catch::Approx(2.0));
    CHECK(envs::weighted_rank(m1, {}, {2.0, 1.0}) == Catch::Approx(0.0));

    MatroidEnv m2 = partition_matroid(3, {{0, 1}, {2}}, {1, 1});
    CHECK(envs::weighted_rank(m2, {0, 1, 2}, {3.0, 2.0, 5.0}) == Catch::Approx(8.0));
}

TEST_CASE("weighted rank equals exhaustive max over subsets") {
    Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = rng.integer(2, 8);
        MatroidEnv m;
        const int pick = rng.integer(0, 2);
        if (pick == 0) {
            m = uniform_matroid(n, rng.integer(1, n));
        } else if (pick == 1) {
            std::vector<std::vector<int>> blocks;
            std::vector<int> caps;
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            int at = 0;
            while (at < n) {
                const int len = std::min(n - at, rng.integer(1, 3));
                blocks.push_back(std::vector<int>(perm.begin() + at, perm.begin() + at + len));
                caps.push_back(rng.integer(1, len));
                at += len;
            }
            m = partition_matroid(n, blocks, caps);
        } else {
            m.kind = MatroidEnv::Kind::Graphic;
            m.num_elements = n;
            m.graph_vertices = rng.integer(2, 4);
            for (int e = 0; e < n; ++e) {
                const int a = rng.integer(0, m.graph_vertices - 1);
                int b = rng.integer(0, m.graph_vertices - 2);
                if (b >= a) ++b;
                m.edges.push_back({a, b});
            }
        }
        std::vector<double> w(n);
        for (double& v : w) v = rng.integer(0, 8);
        std::vector<int> all(n);
        std::iota(all.begin(), all.end(), 0);
        const double greedy = envs::weighted_rank(m, all, w);
        double best = 0.0;
        for (uint32_t s = 0; s < (1u << n); ++s) {
            std::vector<int> subset;
            double tot = 0.0;
            for (int e = 0; e < n; ++e)
                if (s & (1u << e)) {
                    subset.push_back(e);
                    tot += w[e];
                }
            if (envs::matroid_independent(m, subset)) best = std::max(best, tot);
        }
        CHECK(greedy == Catch::Approx(best));
    }
}

TEST_CASE("vertex enumeration counts independent sets") {
    EnvironmentSpec r1 = uniform_matroid(2, 1);
    CHECK(envs::enumerate_vertices(r1).size() == 3);  // {}, {1}, {2}
    EnvironmentSpec r2 = uniform_matroid(2, 2);
    CHECK(envs::enumerate_vertices(r2).size() == 4);
    EnvironmentSpec part = partition_matroid(3, {{0, 1}, {2}}, {1, 1});
    CHECK(envs::enumerate_vertices(part).size() == 6);
}

TEST_CASE("downward closure holds on random feasible points") {
    Rng rng(17);
    std::vector<EnvironmentSpec> envs_to_try;
    envs_to_try.push_back(SingleMachine{});
    envs_to_try.push_back(IdenticalMachines{2});
    envs_to_try.push_back(uniform_matroid(4, 2));
    {
        UnrelatedMachines u;
        u.rates = {{1.0, 0.5}, {0.25, 2.0}, {1.0, 1.0}};
        envs_to_try.push_back(u);
    }
    for (const auto& env : envs_to_try) {
        const int n = env_job_capacity(env) >= 0 ? env_job_capacity(env) : 3;
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> c(n);
            for (double& v : c) v = rng.real(0.1, 2.0);
            auto z = envs::max_linear(env, c).rates;  // a vertex of P
            std::vector<double> shrunk(n);
            for (int j = 0; j < n; ++j) shrunk[j] = z[j] * rng.real(0.0, 1.0);
            CHECK(envs::is_feasible_rate(env, shrunk));
        }
    }
}

TEST_CASE("genflow max_linear respects capacities, gains and absorption") {
    // jobs 0,1 -> shared relay 2 -> sink 3; relay arc capacity limits total
    GenFlowEnv g;
    g.num_nodes = 4;
    g.excess = {10.0, 10.0, 0.0, -1.5};
    g.arcs.push_back({0, 2, 5.0, 1.0});
    g.arcs.push_back({1, 2, 5.0, 1.0});
    g.arcs.push_back({2, 3, 2.0, 0.75});
    g.source_of_job = {0, 1};
    EnvironmentSpec env = g;
    // sink absorbs at most 1.5; arc 2->3 carries up to 2 becoming 1.5 -> total
    // source outflow limited to 2 by the relay arc
    auto r = envs::max_linear(env, {1.0, 1.0});
    CHECK(r.value == Catch::Approx(2.0));
    CHECK(envs::is_feasible_rate(env, {1.0, 1.0}));
    CHECK_FALSE(envs::is_feasible_rate(env, {1.5, 1.0}));
}

TEST_CASE("speedup demand follows the greedy and beats the grid oracle") {
    SpeedupEnv env;
    env.num_resources = 2;
    SpeedupEnv::JobUtility ju;
    SpeedupEnv::Group grp;
    grp.resources = {0, 1};
    grp.coeffs = {1.0, 1.0};
    grp.g = sqrt_curve(2.0, 64, 2.0);
    ju.groups.push_back(grp);
    env.jobs.push_back(ju);

    auto d = envs::speedup_demand(env, 0, {1.0, 4.0});
    CHECK(d.allocation[0] == Catch::Approx(1.0).margin(1e-9));
    CHECK(d.allocation[1] == Catch::Approx(0.0).margin(1e-9));
    const double oracle = brute_force_demand_utility(env, 0, {1.0, 4.0}, 256);
    CHECK(d.utility >= oracle - 1e-4);

    // scaling the prices by 10 can only shrink the allocation
    auto d10 = envs::speedup_demand(env, 0, {10.0, 40.0});
    CHECK(d10.allocation[0] <= d.allocation[0] + 1e-12);
    CHECK(d10.allocation[1] <= d.allocation[1] + 1e-12);

    // zero coefficients demand nothing
    SpeedupEnv env0 = env;
    env0.jobs[0].groups[0].coeffs = {0.0, 0.0};
    auto dz = envs::speedup_demand(env0, 0, {1.0, 1.0});
    CHECK(dz.allocation[0] == 0.0);
    CHECK(dz.allocation[1] == 0.0);
    CHECK(dz.utility == Catch::Approx(0.0));

    CHECK_THROWS(envs::speedup_demand(env, 0, {0.0, 1.0}));
}

TEST_CASE("speedup demand utility dominates the grid oracle on random inputs") {
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        SpeedupEnv env;
        env.num_resources = 2;
        SpeedupEnv::JobUtility ju;
        SpeedupEnv::Group grp;
        grp.resources = {0, 1};
        grp.coeffs = {rng.real(0.2, 2.0), rng.real(0.2, 2.0)};
        grp.g = sqrt_curve(rng.real(0.5, 3.0), 64, 4.0);
        ju.groups.push_back(grp);
        env.jobs.push_back(ju);
        std::vector<double> q = {rng.real(0.1, 3.0), rng.real(0.1, 3.0)};
        auto d = envs::speedup_demand(env, 0, q);
        const double oracle = brute_force_demand_utility(env, 0, q, 256);
        CHECK(d.utility >= oracle - 1e-4);

        // price raise on one coordinate never increases achieved utility
        std::vector<double> q2 = q;
        q2[trial % 2] *= 2.0;
        auto d2 = envs::speedup_demand(env, 0, q2);
        CHECK(d2.utility <= d.utility + 1e-6);
    }
}

TEST_CASE("concave closure of the unit-demand valuation") {
    auto unit_demand = [](uint32_t mask) {
        double best = 0.0;
        if (mask & 1u) best = std::max(best, 2.0);
        if (mask & 2u) best = std::max(best, 1.0);
        return best;
    };
    CHECK(envs::concave_closure_value(unit_demand, 2, {0.5, 0.5}) == Catch::Approx(1.5));
    CHECK(envs::concave_closure_value(unit_demand, 2, {1.0, 0.0}) == Catch::Approx(2.0));
    CHECK(envs::concave_closure_value(unit_demand, 2, {0.0, 0.0}) == Catch::Approx(0.0));
}

TEST_CASE("speedup feasibility via the piecewise-linear LP") {
    SpeedupEnv env;
    env.num_resources = 1;
    for (int j = 0; j < 2; ++j) {
        SpeedupEnv::JobUtility ju;
        SpeedupEnv::Group grp;
        grp.resources = {0};
        grp.coeffs = {1.0};
        grp.g = ConcavePL{{0.0, 1.0}, {0.0, 1.0}};  // g(x) = x on [0,1]
        ju.groups.push_back(grp);
        env.jobs.push_back(ju);
    }
    EnvironmentSpec e = env;
    CHECK(envs::is_feasible_rate(e, {0.5, 0.5}));
    CHECK_FALSE(envs::is_feasible_rate(e, {0.7, 0.6}));
}
