#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <random>

#include "bilo/problems.hpp"

using namespace bilo;

TEST_CASE("kip generation respects invariants") {
    auto inst = std::get<KipInstance>(generate_instance(Kind::kip, {18, 5}, 1));
    CHECK(inst.n == 18);
    CHECK(inst.budget == 5);
    for (int p : inst.profit) CHECK(p >= 1);
    for (int a : inst.weight) CHECK(a >= 1);
    long total = std::accumulate(inst.weight.begin(), inst.weight.end(), 0L);
    CHECK(inst.capacity < total);
    CHECK(inst.capacity >= 0);
}

TEST_CASE("generation is deterministic in the seed") {
    for (std::uint64_t s : {0ULL, 7ULL, 123456789ULL}) {
        auto a = instance_to_json(generate_instance(Kind::kip, {3, 3}, s));
        auto b = instance_to_json(generate_instance(Kind::kip, {3, 3}, s));
        CHECK(a == b);
        auto c = instance_to_json(generate_instance(Kind::cnp, {10}, s));
        auto d = instance_to_json(generate_instance(Kind::cnp, {10}, s));
        CHECK(c == d);
        auto e = instance_to_json(generate_instance(Kind::drp, {6}, s));
        auto f = instance_to_json(generate_instance(Kind::drp, {6}, s));
        CHECK(e == f);
    }
}

TEST_CASE("cnp budgets are binding by construction") {
    auto inst = std::get<CnpInstance>(generate_instance(Kind::cnp, {10}, 7));
    long dsum = std::accumulate(inst.defender_cost.begin(), inst.defender_cost.end(), 0L);
    long asum = std::accumulate(inst.attacker_cost.begin(), inst.attacker_cost.end(), 0L);
    CHECK(inst.defender_budget < dsum);
    CHECK(inst.attacker_budget < asum);
    CHECK(inst.gamma >= 0.05);
    CHECK(inst.delta <= 0.95);
}

TEST_CASE("invalid sizes are rejected") {
    CHECK_THROWS_AS(generate_instance(Kind::kip, {0, 0}, 1), ParameterError);
    CHECK_THROWS_AS(generate_instance(Kind::kip, {3, 4}, 1), ParameterError);
}

TEST_CASE("leader_feasible boundary cases") {
    KipInstance kip;
    kip.n = 6;
    kip.profit = {1, 1, 1, 1, 1, 1};
    kip.weight = {1, 1, 1, 1, 1, 1};
    kip.capacity = 3;
    kip.budget = 5;
    Instance inst = kip;
    CHECK(leader_feasible(inst, {1, 1, 1, 1, 1, 0}));
    CHECK_FALSE(leader_feasible(inst, {1, 1, 1, 1, 1, 1}));
    CHECK_THROWS_AS(leader_feasible(inst, {1, 0}), ParameterError);

    DrpInstance drp;
    drp.n = 1;
    drp.donor_profit = {1};
    drp.recipient_profit = {1};
    drp.cost = {4};
    drp.donor_budget = 1;
    drp.recipient_budget = 1;
    CHECK_FALSE(leader_feasible(drp, {0.5}));  // cost 2 > 1
    CHECK(leader_feasible(drp, {0.25}));
}

TEST_CASE("leader objective values") {
    KipInstance kip;
    kip.n = 3;
    kip.profit = {6, 5, 4};
    kip.weight = {3, 4, 5};
    kip.capacity = 7;
    kip.budget = 1;
    CHECK(leader_objective(kip, {0, 0, 0}, {1, 1, 0}) == doctest::Approx(11));
    CHECK(leader_objective(kip, {0, 0, 0}, {0, 0, 0}) == doctest::Approx(0));

    CnpInstance cnp;
    cnp.n = 1;
    cnp.defender_profit = {10};
    cnp.attacker_profit = {8};
    cnp.defender_cost = {1};
    cnp.attacker_cost = {1};
    cnp.defender_budget = 1;
    cnp.attacker_budget = 1;
    cnp.gamma = 0.5;
    cnp.eta = 0.6;
    cnp.epsilon = 0.2;
    cnp.delta = 0.1;
    CHECK(leader_objective(cnp, {1}, {1}) == doctest::Approx(6.0));
    CHECK(follower_objective(cnp, {0}, {0}) == doctest::Approx(-4.0));
}

TEST_CASE("kip leader and follower objectives coincide") {
    auto inst = generate_instance(Kind::kip, {8, 3}, 11);
    std::mt19937_64 rng(5);
    std::bernoulli_distribution coin;
    for (int trial = 0; trial < 50; ++trial) {
        LeaderDecision x(8);
        FollowerDecision y(8);
        for (auto& v : x) v = coin(rng);
        for (auto& v : y) v = coin(rng);
        CHECK(leader_objective(inst, x, y) == follower_objective(inst, x, y));
    }
}

TEST_CASE("drp follower objective includes the external project") {
    DrpInstance drp;
    drp.n = 1;
    drp.donor_profit = {2};
    drp.recipient_profit = {5};
    drp.cost = {1};
    drp.external_profit = 1;
    drp.external_cost = 1;
    drp.donor_budget = 1;
    drp.recipient_budget = 10;
    CHECK(follower_objective(drp, {0.0}, {1, 1}) == doctest::Approx(6.0));
}

TEST_CASE("all-zero follower decision is always feasible (assumption 1(i))") {
    std::vector<Instance> insts = {
        generate_instance(Kind::kip, {10, 4}, 1),
        generate_instance(Kind::cnp, {10}, 2),
        generate_instance(Kind::drp, {10}, 3),
    };
    for (const auto& inst : insts) {
        FollowerDecision zero(static_cast<size_t>(follower_dimension(inst)), 0.0);
        LeaderDecision x(static_cast<size_t>(dimension(inst)), 0.0);
        CHECK(follower_feasible(inst, x, zero));
    }
}

TEST_CASE("objectives are affine in y (finite differences in y)") {
    std::vector<Instance> insts = {
        generate_instance(Kind::kip, {6, 2}, 4),
        generate_instance(Kind::cnp, {6}, 4),
        generate_instance(Kind::drp, {6}, 4),
    };
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0, 1);
    for (const auto& inst : insts) {
        int nf = follower_dimension(inst);
        LeaderDecision x(static_cast<size_t>(dimension(inst)));
        for (auto& v : x) v = kind_of(inst) == Kind::drp ? 0.3 * u(rng) : std::floor(u(rng) + 0.5);
        FollowerDecision y(static_cast<size_t>(nf));
        for (auto& v : y) v = u(rng);
        // Affine in y: second difference along each coordinate is zero.
        for (int i = 0; i < nf; ++i) {
            auto ym = y, yp = y;
            ym[static_cast<size_t>(i)] -= 0.25;
            yp[static_cast<size_t>(i)] += 0.25;
            double second = leader_objective(inst, x, yp) - 2 * leader_objective(inst, x, y) +
                            leader_objective(inst, x, ym);
            CHECK(std::abs(second) < 1e-9);
            double second_f = follower_objective(inst, x, yp) - 2 * follower_objective(inst, x, y) +
                              follower_objective(inst, x, ym);
            CHECK(std::abs(second_f) < 1e-9);
        }
    }
}

TEST_CASE("instance json round trip") {
    for (Kind k : {Kind::kip, Kind::cnp, Kind::drp}) {
        auto inst = generate_instance(k, {7, 3}, 42);
        auto j = instance_to_json(inst);
        auto back = instance_from_json(j);
        CHECK(instance_to_json(back) == j);
    }
}
