#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bilo/dataset.hpp"
#include "bilo/harness.hpp"

using namespace bilo;
using namespace bilo::harness;

namespace {

KipInstance toy_kip() {
    KipInstance k;
    k.n = 3;
    k.profit = {6, 5, 4};
    k.weight = {3, 4, 5};
    k.capacity = 7;
    k.budget = 1;
    return k;
}

surrogate::NetworkPredictor trained_kip_predictor(int n, std::uint64_t seed) {
    auto data = dataset::collect(Kind::kip, n, -1, 4, 15, seed, true);
    mlp::TrainConfig tc;
    tc.max_epochs = 60;
    tc.patience = 60;
    tc.h_d = 6;
    tc.h_s = 6;
    tc.h_v = 6;
    tc.m = 4;
    tc.k_emb = 3;
    tc.seed = seed;
    auto [net, rep] = mlp::train(dataset::to_training_set(data, "lower", "train"),
                                 dataset::to_training_set(data, "lower", "val"), tc);
    net.feature_config = dataset::feature_config_to_json(data.config);
    return surrogate::NetworkPredictor(std::move(net));
}

}  // namespace

TEST_CASE("relative error formula and the zero-best convention") {
    CHECK(relative_error(103, 100) == doctest::Approx(3.0));
    CHECK(relative_error(100, 100) == doctest::Approx(0.0));
    CHECK(relative_error(-97, -100) == doctest::Approx(3.0));
    CHECK(relative_error(0, 0) == 0.0);
    CHECK(std::isnan(relative_error(1, 0)));
}

TEST_CASE("evaluate with bruteforce only gives zero MRE") {
    std::vector<std::pair<std::string, Instance>> instances;
    for (int i = 0; i < 3; ++i)
        instances.emplace_back("kip-" + std::to_string(i),
                               generate_instance(Kind::kip, {6, 2}, 40 + i));
    EvalConfig cfg;
    cfg.methods = {"bruteforce"};
    auto res = evaluate(instances, cfg);
    REQUIRE(res.rows.size() == 3);
    for (const auto& row : res.rows) CHECK(row.mre_pct == 0.0);
    REQUIRE(res.summary.size() == 1);
    CHECK(res.summary[0].mre_pct == 0.0);
    CHECK(res.summary[0].count == 3);
}

TEST_CASE("evaluate: perfect lower predictor ties brute force") {
    auto inst = toy_kip();
    surrogate::AffinePredictor perfect(11.0, {-6.0, -5.0, 0.0});
    EvalConfig cfg;
    cfg.methods = {"NN_l", "GVFA", "bruteforce"};
    cfg.lower = &perfect;
    cfg.surrogate.lambda = 2.0;
    auto res = evaluate({{"kip-toy", Instance{inst}}}, cfg);
    REQUIRE(res.rows.size() == 3);
    for (const auto& row : res.rows) {
        CHECK(row.instance_id == "kip-toy");
        if (row.method == "NN_l" || row.method == "bruteforce")
            CHECK(row.mre_pct == doctest::Approx(0.0));
        if (row.method == "GVFA") CHECK(row.mre_pct == doctest::Approx(0.0));
    }
}

TEST_CASE("evaluate records per-row failures without aborting") {
    ToyInstance toy;
    surrogate::AffinePredictor stub(2.0, {-2.0});
    EvalConfig cfg;
    cfg.methods = {"NN_u", "NN_l"};
    cfg.upper = &stub;
    cfg.lower = &stub;
    cfg.surrogate.lambda = 2.0;
    auto res = evaluate({{"toy", Instance{toy}}}, cfg);
    REQUIRE(res.rows.size() == 2);
    for (const auto& row : res.rows) {
        if (row.method == "NN_u") {
            CHECK(row.status == "infeasible");
            CHECK(std::isnan(row.objective));
        } else {
            CHECK(row.status == "heuristic");
            CHECK(row.objective == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("csv round trip preserves the table") {
    auto inst = toy_kip();
    surrogate::AffinePredictor perfect(11.0, {-6.0, -5.0, 0.0});
    EvalConfig cfg;
    cfg.methods = {"NN_l", "bruteforce"};
    cfg.lower = &perfect;
    cfg.surrogate.lambda = 2.0;
    auto res = evaluate({{"kip-toy", Instance{inst}}}, cfg);
    auto text = to_csv(res);
    auto back = from_csv(text);
    REQUIRE(back.rows.size() == res.rows.size());
    for (size_t i = 0; i < res.rows.size(); ++i) {
        CHECK(back.rows[i].instance_id == res.rows[i].instance_id);
        CHECK(back.rows[i].method == res.rows[i].method);
        CHECK(back.rows[i].objective == res.rows[i].objective);
        CHECK(back.rows[i].mre_pct == res.rows[i].mre_pct);
        CHECK(back.rows[i].surrogate_time_s == res.rows[i].surrogate_time_s);
        CHECK(back.rows[i].repair_time_s == res.rows[i].repair_time_s);
        CHECK(back.rows[i].status == res.rows[i].status);
    }
    CHECK(to_csv(back) == text);
}

TEST_CASE("record_times=false zeroes the time columns") {
    EvalConfig cfg;
    cfg.methods = {"bruteforce"};
    cfg.record_times = false;
    auto res = evaluate({{"kip", generate_instance(Kind::kip, {5, 2}, 3)}}, cfg);
    CHECK(res.rows[0].surrogate_time_s == 0.0);
    CHECK(res.rows[0].repair_time_s == 0.0);
}

TEST_CASE("delta of the 3-item instance by hand") {
    auto delta = compute_delta(toy_kip());
    CHECK(delta == doctest::Approx(5.0));
    KipInstance big;
    big.n = 13;
    big.profit.assign(13, 1);
    big.weight.assign(13, 1);
    big.capacity = 13;
    big.budget = 1;
    CHECK_THROWS_AS(compute_delta(big), HarnessError);
}

TEST_CASE("theorem bound: perfect and offset predictors achieve the optimum") {
    auto inst = toy_kip();
    surrogate::SurrogateConfig cfg;
    cfg.lambda = 100.0;
    surrogate::AffinePredictor perfect(11.0, {-6.0, -5.0, 0.0});
    auto rep = verify_theorem1(inst, perfect, cfg);
    CHECK(rep.alpha == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(rep.achieved == doctest::Approx(rep.opt));
    CHECK(rep.holds);

    surrogate::AffinePredictor offset(21.0, {-6.0, -5.0, 0.0});  // Phi + 10 everywhere
    cfg.lambda = 2.0;
    auto rep2 = verify_theorem1(inst, offset, cfg);
    CHECK(rep2.alpha == doctest::Approx(10.0));
    CHECK(rep2.achieved == doctest::Approx(rep2.opt));
    CHECK(rep2.holds);

    cfg.lambda = 1.0;
    CHECK_THROWS_AS(verify_theorem1(inst, perfect, cfg), HarnessError);
}

TEST_CASE("theorem and lemma hold for a trained network on an enumerable instance") {
    auto pred = trained_kip_predictor(10, 12345);
    auto inst = std::get<KipInstance>(generate_instance(Kind::kip, {10, 3}, 999));
    surrogate::SurrogateConfig cfg;
    cfg.lambda = 2.0;
    auto t = verify_theorem1(inst, pred, cfg);
    CHECK(t.holds);
    CHECK(t.alpha >= 0.0);
    CHECK(t.delta >= 0.0);
    auto l = verify_lemma1(inst, pred, cfg);
    CHECK(l.holds);
    CHECK(l.cases.size() == 176);  // C(10,0)+C(10,1)+C(10,2)+C(10,3)
    auto j = bound_report_to_json(t);
    CHECK(j.at("holds").get<bool>());
    auto jl = lemma_report_to_json(l);
    CHECK(jl.at("cases").size() == 176);
}

TEST_CASE("lemma case 1 with an all-interdicted decision") {
    auto inst = toy_kip();
    inst.budget = 3;  // full interdiction becomes feasible
    surrogate::SurrogateConfig cfg;
    cfg.lambda = 2.0;
    surrogate::AffinePredictor nonneg(1.0, {0.0, 0.0, 0.0});
    auto rep = verify_lemma1(inst, nonneg, cfg);
    CHECK(rep.holds);
    bool saw_full = false;
    for (const auto& c : rep.cases) {
        if (c.x == LeaderDecision{1, 1, 1}) {
            saw_full = true;
            CHECK(c.which == 1);  // Phi = 0 <= any nonnegative prediction
            CHECK(c.phi == doctest::Approx(0.0));
            CHECK(c.response == doctest::Approx(0.0));
        }
    }
    CHECK(saw_full);
}
