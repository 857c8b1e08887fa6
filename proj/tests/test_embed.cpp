#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "bilo/embed.hpp"
#include "bilo/oracle.hpp"

using namespace bilo;
using namespace bilo::embed;

namespace {

mlp::Mlp2 relu_diff_net() {
    // computes ReLU(x1 - x2)
    mlp::Mlp2 net;
    net.hidden.w = {{1.0, -1.0}};
    net.hidden.b = {0.0};
    net.out.w = {{1.0}};
    net.out.b = {0.0};
    return net;
}

mlp::Mlp2 random_mlp2(int in, int hid, int out, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    mlp::Mlp2 net;
    net.hidden.w.assign(static_cast<size_t>(hid), std::vector<double>(static_cast<size_t>(in)));
    net.hidden.b.assign(static_cast<size_t>(hid), 0.0);
    net.out.w.assign(static_cast<size_t>(out), std::vector<double>(static_cast<size_t>(hid)));
    net.out.b.assign(static_cast<size_t>(out), 0.0);
    for (auto* l : {&net.hidden, &net.out}) {
        for (auto& row : l->w)
            for (auto& x : row) x = u(rng);
        for (auto& x : l->b) x = u(rng);
    }
    return net;
}

}  // namespace

TEST_CASE("propagate_bounds hand examples") {
    auto net = relu_diff_net();
    auto t = propagate_bounds(net, {{0, 1}, {0, 1}});
    CHECK(t.hidden[0].lo == doctest::Approx(-1));
    CHECK(t.hidden[0].hi == doctest::Approx(1));
    CHECK(t.out[0].lo == doctest::Approx(0));
    CHECK(t.out[0].hi == doctest::Approx(1));

    mlp::Mlp2 z;
    z.hidden.w = {{0.0, 0.0}};
    z.hidden.b = {3.0};
    z.out.w = {{0.0}};
    z.out.b = {-2.0};
    auto tz = propagate_bounds(z, {{-5, 5}, {-5, 5}});
    CHECK(tz.hidden[0].lo == 3.0);
    CHECK(tz.hidden[0].hi == 3.0);
    CHECK(tz.out[0].lo == -2.0);
    CHECK(tz.out[0].hi == -2.0);
}

TEST_CASE("widening the input box never tightens bounds") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
        auto net = random_mlp2(3, 4, 2, rng);
        std::vector<Interval> narrow, wide;
        std::uniform_real_distribution<double> u(0, 1);
        for (int j = 0; j < 3; ++j) {
            double a = u(rng), b = a + u(rng);
            narrow.push_back({a, b});
            wide.push_back({a - u(rng), b + u(rng)});
        }
        auto tn = propagate_bounds(net, narrow);
        auto tw = propagate_bounds(net, wide);
        for (size_t j = 0; j < tn.hidden.size(); ++j) {
            CHECK(tw.hidden[j].lo <= tn.hidden[j].lo + 1e-12);
            CHECK(tw.hidden[j].hi >= tn.hidden[j].hi - 1e-12);
        }
    }
}

TEST_CASE("relu difference network encodes exactly on all binary points") {
    for (int x1 = 0; x1 <= 1; ++x1)
        for (int x2 = 0; x2 <= 1; ++x2) {
            milp::Model model;
            int v1 = model.add_binary("x1");
            int v2 = model.add_binary("x2");
            model.fix(v1, x1);
            model.fix(v2, x2);
            milp::LinExpr e1, e2;
            e1.add(v1, 1.0);
            e2.add(v2, 1.0);
            auto outs = encode_mlp(model, relu_diff_net(), {e1, e2}, "n");
            model.set_objective({}, milp::ObjSense::minimize);
            auto sol = milp::solve(model, {});
            REQUIRE(sol.status == milp::Status::optimal);
            CHECK(milp::check(model, sol.assignment).empty());
            double expect = std::max(0, x1 - x2);
            CHECK(outs[0].eval(sol.assignment) == doctest::Approx(expect).epsilon(1e-7));
        }
}

TEST_CASE("random networks: encoded output equals forward within 1e-5") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 15; ++t) {
        auto net = random_mlp2(3, 5, 1, rng);
        for (int probe = 0; probe < 10; ++probe) {
            milp::Model model;
            std::vector<milp::LinExpr> in;
            std::vector<double> point;
            for (int j = 0; j < 3; ++j) {
                int v = model.add_continuous("x" + std::to_string(j), 0.0, 1.0);
                double val = u(rng);
                model.fix(v, val);
                point.push_back(val);
                milp::LinExpr e;
                e.add(v, 1.0);
                in.push_back(e);
            }
            int binaries = 0;
            auto outs = encode_mlp(model, net, in, "n", &binaries);
            CHECK(binaries <= 5);
            model.set_objective({}, milp::ObjSense::minimize);
            auto sol = milp::solve(model, {});
            REQUIRE(sol.status == milp::Status::optimal);
            double expect = mlp::mlp2_eval(net, point)[0];
            CHECK(std::abs(outs[0].eval(sol.assignment) - expect) < 1e-5);
        }
    }
}

TEST_CASE("phase fixing never changes the encoded function") {
    // A network whose hidden neurons include always-active and always-dead
    // ones: compare against the plain forward pass on interior points.
    mlp::Mlp2 net;
    net.hidden.w = {{1.0, 0.0}, {-1.0, 0.0}, {0.5, -0.5}};
    net.hidden.b = {2.0, -3.0, 0.0};  // neuron 0 always on, neuron 1 always off
    net.out.w = {{1.0, 1.0, 1.0}};
    net.out.b = {0.3};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int probe = 0; probe < 20; ++probe) {
        milp::Model model;
        std::vector<milp::LinExpr> in;
        std::vector<double> point;
        std::vector<int> vars;
        for (int j = 0; j < 2; ++j) {
            int v = model.add_continuous("x" + std::to_string(j), 0.0, 1.0);
            vars.push_back(v);
            point.push_back(u(rng));
            milp::LinExpr e;
            e.add(v, 1.0);
            in.push_back(e);
        }
        int binaries = 0;
        auto outs = encode_mlp(model, net, in, "n", &binaries);
        CHECK(binaries == 1);  // only the sign-indefinite neuron needs a phase binary
        for (int j = 0; j < 2; ++j)
            model.fix(vars[static_cast<size_t>(j)], point[static_cast<size_t>(j)]);
        model.set_objective({}, milp::ObjSense::minimize);
        auto sol = milp::solve(model, {});
        REQUIRE(sol.status == milp::Status::optimal);
        CHECK(std::abs(outs[0].eval(sol.assignment) - mlp::mlp2_eval(net, point)[0]) < 1e-7);
    }
}

TEST_CASE("set network encoding applies label scaling and aggregation") {
    std::mt19937_64 rng(11);
    mlp::TrainConfig cfg;
    cfg.h_d = 4;
    cfg.h_s = 4;
    cfg.h_v = 4;
    cfg.m = 3;
    cfg.k_emb = 2;
    cfg.seed = 5;
    auto net = mlp::init_network(2, 2, cfg);
    net.label_mu = 1.5;
    net.label_sigma = 0.75;
    std::uniform_real_distribution<double> u(0, 1);
    mlp::Sample s;
    for (int i = 0; i < 3; ++i) {
        s.statics.push_back({u(rng), u(rng)});
        s.decisions.push_back({u(rng), u(rng)});
        s.coeff.push_back(1.0 + u(rng));
        s.mask.push_back(1.0);
    }
    auto emb = mlp::instance_embedding(net, s);
    milp::Model model;
    std::vector<std::vector<milp::LinExpr>> inputs;
    for (int i = 0; i < 3; ++i) {
        std::vector<milp::LinExpr> row;
        for (double h : s.decisions[static_cast<size_t>(i)]) row.emplace_back(h);
        for (double e : emb) row.emplace_back(e);
        inputs.push_back(std::move(row));
    }
    auto enc = encode_set_network(model, net, inputs, s.coeff, "nn");
    model.set_objective({}, milp::ObjSense::minimize);
    auto sol = milp::solve(model, {});
    REQUIRE(sol.status == milp::Status::optimal);
    CHECK(enc.output.eval(sol.assignment) == doctest::Approx(mlp::forward(net, s)).epsilon(1e-9));
}

TEST_CASE("greedy encoding matches the hand example") {
    KipInstance inst;
    inst.n = 3;
    inst.profit = {6, 5, 4};
    inst.weight = {3, 4, 5};
    inst.capacity = 7;
    inst.budget = 1;

    for (auto xfix : {LeaderDecision{0, 0, 0}, LeaderDecision{1, 1, 1}}) {
        milp::Model model;
        std::vector<int> xv;
        for (int i = 0; i < 3; ++i) xv.push_back(model.add_binary("x" + std::to_string(i)));
        for (int i = 0; i < 3; ++i) model.fix(xv[static_cast<size_t>(i)], xfix[static_cast<size_t>(i)]);
        auto enc = encode_greedy(model, inst, xv);
        model.set_objective({}, milp::ObjSense::minimize);
        auto sol = milp::solve(model, {});
        REQUIRE(sol.status == milp::Status::optimal);
        auto g = greedy_knapsack(inst, xfix);
        for (int i = 0; i < 3; ++i)
            CHECK(sol.assignment[static_cast<size_t>(enc.y[static_cast<size_t>(i)])] ==
                  doctest::Approx(g.y[static_cast<size_t>(i)]));
        CHECK(enc.value.eval(sol.assignment) == doctest::Approx(g.value));
    }
}

TEST_CASE("greedy encoding equals procedural greedy on random pairs") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 3 + static_cast<int>(rng() % 6);
        auto inst = std::get<KipInstance>(generate_instance(Kind::kip, {n, n / 2}, rng()));
        LeaderDecision x(static_cast<size_t>(n), 0.0);
        for (auto& v : x) v = (rng() % 3 == 0) ? 1.0 : 0.0;
        if (!leader_feasible(Instance{inst}, x)) continue;
        milp::Model model;
        std::vector<int> xv;
        for (int i = 0; i < n; ++i) xv.push_back(model.add_binary("x" + std::to_string(i)));
        for (int i = 0; i < n; ++i) model.fix(xv[static_cast<size_t>(i)], x[static_cast<size_t>(i)]);
        auto enc = encode_greedy(model, inst, xv);
        model.set_objective({}, milp::ObjSense::minimize);
        auto sol = milp::solve(model, {});
        REQUIRE(sol.status == milp::Status::optimal);
        auto g = greedy_knapsack(inst, x);
        for (int i = 0; i < n; ++i)
            CHECK(sol.assignment[static_cast<size_t>(enc.y[static_cast<size_t>(i)])] ==
                  doctest::Approx(g.y[static_cast<size_t>(i)]));
        CHECK(enc.value.eval(sol.assignment) == doctest::Approx(g.value));
    }
}

TEST_CASE("mccormick product is exact") {
    struct Case {
        double u, v, expect;
    };
    for (auto c : {Case{1, 1, 1}, Case{0.5, 1, 0.5}, Case{0.7, 0, 0}, Case{0, 1, 0}}) {
        milp::Model model;
        int u = model.add_continuous("u", 0, 1);
        int v = model.add_binary("v");
        model.fix(u, c.u);
        model.fix(v, c.v);
        int z = linearize_product(model, u, v, "z");
        model.set_objective({}, milp::ObjSense::minimize);
        auto sol = milp::solve(model, {});
        REQUIRE(sol.status == milp::Status::optimal);
        CHECK(sol.assignment[static_cast<size_t>(z)] == doctest::Approx(c.expect));
    }
}

TEST_CASE("product linearization rejects bad operands") {
    milp::Model model;
    int u = model.add_continuous("u", -1, 1);
    int v = model.add_binary("v");
    int w = model.add_continuous("w", 0, 1);
    CHECK_THROWS_AS(linearize_product(model, u, v, "z1"), EmbedError);
    CHECK_THROWS_AS(linearize_product(model, w, u, "z2"), EmbedError);
}
