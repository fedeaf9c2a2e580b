#include <catch2/catch_amalgamated.hpp>

#include "gdsched/core.hpp"

using namespace gdsched;

namespace {

Instance single_machine_instance(std::vector<Job> jobs) {
    Instance inst;
    inst.jobs = std::move(jobs);
    inst.env = SingleMachine{};
    return inst;
}

ScheduleTrace make_trace(std::vector<ScheduleTrace::Segment> segs,
                         std::vector<std::optional<double>> completions, double speed = 1.0) {
    ScheduleTrace tr;
    tr.segments = std::move(segs);
    tr.completions = std::move(completions);
    tr.speed = speed;
    return tr;
}

}  // namespace

TEST_CASE("validate_instance flags the spec violations") {
    Instance ok = single_machine_instance({{0, 0.0, 1.0, 1.0}});
    CHECK(validate_instance(ok).empty());

    Instance zero_size = single_machine_instance({{0, 0.0, 0.0, 1.0}});
    CHECK_FALSE(validate_instance(zero_size).empty());

    Instance shape;
    UnrelatedMachines u;
    u.rates = {{1.0, 1.0}, {1.0, 1.0}};  // 2x2 matrix
    shape.env = u;
    shape.jobs = {{0, 0, 1, 1}, {1, 0, 1, 1}, {2, 0, 1, 1}};  // 3 jobs
    CHECK_FALSE(validate_instance(shape).empty());

    Instance dup = single_machine_instance({{3, 0.0, 1.0, 1.0}, {3, 0.0, 1.0, 1.0}});
    CHECK_FALSE(validate_instance(dup).empty());
}

TEST_CASE("integral weighted flow of a single job") {
    Instance inst = single_machine_instance({{0, 0.0, 2.0, 1.0}});
    auto tr = make_trace({{0.0, 2.0, {1.0}}}, {2.0});
    CHECK(integral_weighted_flow(tr, inst) == Catch::Approx(2.0));
}

TEST_CASE("integral weighted flow for the SRPT pair") {
    Instance inst = single_machine_instance({{0, 0.0, 1.0, 1.0}, {1, 0.0, 2.0, 1.0}});
    auto tr = make_trace({{0.0, 1.0, {1.0, 0.0}}, {1.0, 3.0, {0.0, 1.0}}}, {1.0, 3.0});
    CHECK(integral_weighted_flow(tr, inst) == Catch::Approx(4.0));  // 1 + 3, beats 5
    CHECK(integrate_alive_weight(tr, inst) == Catch::Approx(4.0).margin(1e-9));
}

TEST_CASE("integral flow errors on unfinished jobs, empty instance is zero") {
    Instance inst = single_machine_instance({{0, 0.0, 2.0, 1.0}});
    auto tr = make_trace({{0.0, 1.0, {1.0}}}, {std::nullopt});
    CHECK_THROWS(integral_weighted_flow(tr, inst));

    Instance empty = single_machine_instance({});
    auto tr0 = make_trace({}, {});
    CHECK(integral_weighted_flow(tr0, empty) == 0.0);
    CHECK(fractional_weighted_flow(tr0, empty) == 0.0);
}

TEST_CASE("fractional weighted flow closed forms") {
    Instance inst = single_machine_instance({{0, 0.0, 2.0, 1.0}});
    auto tr = make_trace({{0.0, 2.0, {1.0}}}, {2.0});
    CHECK(fractional_weighted_flow(tr, inst) == Catch::Approx(1.0));  // int_0^2 t/2

    auto idle = make_trace({{0.0, 1.0, {0.0}}, {1.0, 3.0, {1.0}}}, {3.0});
    CHECK(fractional_weighted_flow(idle, inst) == Catch::Approx(2.0));  // int_1^3 t/2
}

TEST_CASE("fractional flow equals the integral of the alive fractional weight") {
    Instance inst = single_machine_instance({{0, 0.0, 2.0, 1.0}, {1, 1.0, 1.0, 3.0}});
    // run j0 on [0,1], j1 on [1,2], j0 on [2,3]
    auto tr = make_trace({{0.0, 1.0, {1.0, 0.0}}, {1.0, 2.0, {0.0, 1.0}}, {2.0, 3.0, {1.0, 0.0}}},
                         {3.0, 2.0});
    const double frac = fractional_weighted_flow(tr, inst);
    const double integrated = integrate_alive_fractional_weight(tr, inst);
    CHECK(std::fabs(frac - integrated) <= 1e-9 * (1.0 + std::fabs(frac)));
    const double integral = integral_weighted_flow(tr, inst);
    CHECK(std::fabs(integral - integrate_alive_weight(tr, inst)) <= 1e-9 * (1.0 + integral));
    CHECK(frac <= integral + 1e-9);
}

TEST_CASE("alive_weights snapshots") {
    Instance inst = single_machine_instance({{0, 1.0, 2.0, 3.0}});
    auto tr = make_trace({{1.0, 3.0, {1.0}}}, {3.0});
    auto before = alive_weights(tr, inst, 0.5);
    CHECK(before.integral == 0.0);
    CHECK(before.fractional == 0.0);
    CHECK(before.remaining[0] == 0.0);

    auto half = alive_weights(tr, inst, 2.0);  // half processed
    CHECK(half.integral == Catch::Approx(3.0));
    CHECK(half.fractional == Catch::Approx(1.5));
    CHECK(half.remaining[0] == Catch::Approx(1.0));

    Instance pair = single_machine_instance({{0, 0.0, 1.0, 1.0}, {1, 0.0, 2.0, 1.0}});
    auto tr2 = make_trace({{0.0, 3.0, {1.0 / 3, 2.0 / 3}}}, {3.0, 3.0});
    auto at0 = alive_weights(tr2, pair, 0.0);
    CHECK(at0.integral == Catch::Approx(2.0));
    CHECK(at0.fractional == Catch::Approx(2.0));
}

TEST_CASE("trace validation catches infeasible and inconsistent traces") {
    Instance inst = single_machine_instance({{0, 0.0, 1.0, 1.0}, {1, 0.0, 1.0, 1.0}});
    auto bad = make_trace({{0.0, 1.0, {0.8, 0.8}}}, {std::nullopt, std::nullopt});
    CHECK_FALSE(validate_trace(bad, inst).empty());

    auto good = make_trace({{0.0, 2.0, {0.5, 0.5}}}, {2.0, 2.0});
    CHECK(validate_trace(good, inst).empty());

    // speed divides out before the feasibility check
    auto sped = make_trace({{0.0, 1.0, {1.0, 1.0}}}, {1.0, 1.0}, 2.0);
    CHECK(validate_trace(sped, inst).empty());
}
