// Command-line front end: instance generation, data collection, training,
// surrogate solving, oracles, evaluation, and guarantee verification.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bilo/dataset.hpp"
#include "bilo/harness.hpp"
#include "bilo/milp.hpp"
#include "bilo/mlp.hpp"
#include "bilo/oracle.hpp"
#include "bilo/problems.hpp"
#include "bilo/surrogate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bilo::Kind parse_kind(const std::string& s) {
    if (s == "kip") return bilo::Kind::kip;
    if (s == "cnp") return bilo::Kind::cnp;
    if (s == "drp") return bilo::Kind::drp;
    if (s == "toy") return bilo::Kind::toy;
    throw CLI::ValidationError("kind", "expected kip, cnp, drp or toy");
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return json::parse(in);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << text;
}

bilo::Instance load_instance(const std::string& path) {
    return bilo::instance_from_json(read_json(path));
}

bilo::mlp::SetNetwork load_network(const std::string& path) {
    return bilo::mlp::network_from_json(read_json(path));
}

bilo::surrogate::SlackMode parse_slack(const std::string& s) {
    if (s == "slack") return bilo::surrogate::SlackMode::slack;
    if (s == "none") return bilo::surrogate::SlackMode::none;
    if (s == "dampened") return bilo::surrogate::SlackMode::dampened;
    throw CLI::ValidationError("slack", "expected slack, none or dampened");
}

std::string status_name(bilo::BilevelStatus s) {
    switch (s) {
        case bilo::BilevelStatus::optimal: return "optimal";
        case bilo::BilevelStatus::grid_optimal: return "grid_optimal";
        case bilo::BilevelStatus::heuristic: return "heuristic";
        case bilo::BilevelStatus::infeasible: return "infeasible";
    }
    return "?";
}

/// Instance files of a directory in lexicographic order.
std::vector<std::pair<std::string, bilo::Instance>> load_instance_dir(const std::string& dir) {
    std::vector<std::string> paths;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());
    std::vector<std::pair<std::string, bilo::Instance>> out;
    for (const auto& p : paths) out.emplace_back(fs::path(p).stem().string(), load_instance(p));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learning-augmented bilevel optimization toolkit"};
    app.require_subcommand(1);

    // ---- gen-instances ----
    std::string kind_s = "kip", out_path;
    int gen_n = 10, gen_k = -1, gen_count = 1;
    std::uint64_t seed = 0;
    auto* gen = app.add_subcommand("gen-instances", "Generate benchmark instances");
    gen->add_option("--kind", kind_s);
    gen->add_option("--n", gen_n);
    gen->add_option("--k", gen_k);
    gen->add_option("--count", gen_count);
    gen->add_option("--seed", seed);
    gen->add_option("--out", out_path)->required();

    // ---- collect ----
    int col_instances = 100, col_decisions = 50;
    bool greedy_features = true;
    std::string meta_path;
    auto* col = app.add_subcommand("collect", "Sample decisions and label them with the oracle");
    col->add_option("--kind", kind_s);
    col->add_option("--n", gen_n);
    col->add_option("--k", gen_k);
    col->add_option("--instances", col_instances);
    col->add_option("--decisions", col_decisions);
    col->add_option("--seed", seed);
    col->add_option("--greedy-features", greedy_features);
    col->add_option("--out", out_path)->required();
    col->add_option("--meta", meta_path);

    // ---- train ----
    std::string data_path, target = "lower";
    bilo::mlp::TrainConfig tc;
    auto* trn = app.add_subcommand("train", "Fit the set-network regressor");
    trn->add_option("--data", data_path)->required();
    trn->add_option("--meta", meta_path);
    trn->add_option("--target", target)->check(CLI::IsMember({"upper", "lower"}));
    trn->add_option("--epochs", tc.max_epochs);
    trn->add_option("--patience", tc.patience);
    trn->add_option("--seed", tc.seed);
    trn->add_option("--batch", tc.batch_size);
    trn->add_option("--lr", tc.learning_rate);
    trn->add_option("--hidden", tc.h_d, "hidden width for all three blocks");
    trn->add_option("--m", tc.m);
    trn->add_option("--k-emb", tc.k_emb);
    trn->add_option("--out", out_path)->required();

    // ---- solve ----
    std::string instance_path, model_path, approx = "lower", slack_s = "slack",
                times_mode = "record";
    double lambda = 1.0, dampening = -1.0, time_limit = -1.0;
    auto* slv = app.add_subcommand("solve", "Solve a surrogate and repair");
    slv->add_option("--instance", instance_path)->required();
    slv->add_option("--model", model_path);
    slv->add_option("--approx", approx)->check(CLI::IsMember({"upper", "lower", "gvfa"}));
    slv->add_option("--lambda", lambda);
    slv->add_option("--slack", slack_s);
    slv->add_option("--dampening", dampening);
    slv->add_option("--time-limit", time_limit);
    slv->add_option("--times", times_mode)->check(CLI::IsMember({"record", "none"}));
    slv->add_option("--out", out_path);

    // ---- oracle ----
    std::string x_path;
    auto* orc = app.add_subcommand("oracle", "Follower optimum for a fixed leader decision");
    orc->add_option("--instance", instance_path)->required();
    orc->add_option("--x", x_path)->required();

    // ---- bruteforce ----
    std::int64_t cap = 2'000'000;
    auto* bf = app.add_subcommand("bruteforce", "Exact optimum by leader enumeration");
    bf->add_option("--instance", instance_path)->required();
    bf->add_option("--cap", cap);

    // ---- evaluate ----
    std::string instances_dir, methods_s = "NN_l,bruteforce", upper_model_path;
    auto* ev = app.add_subcommand("evaluate", "Compare methods over an instance directory");
    ev->add_option("--instances", instances_dir)->required();
    ev->add_option("--methods", methods_s);
    ev->add_option("--model", model_path);
    ev->add_option("--upper-model", upper_model_path);
    ev->add_option("--lambda", lambda);
    ev->add_option("--slack", slack_s);
    ev->add_option("--dampening", dampening);
    ev->add_option("--time-limit", time_limit);
    ev->add_option("--times", times_mode)->check(CLI::IsMember({"record", "none"}));
    ev->add_option("--out", out_path);

    // ---- verify ----
    std::string suite = "thm1";
    int ver_count = 10;
    auto* ver = app.add_subcommand("verify", "Empirical guarantee verification");
    ver->add_option("--suite", suite)->check(CLI::IsMember({"thm1", "lemma1", "obs1"}));
    ver->add_option("--model", model_path)->required();
    ver->add_option("--n", gen_n);
    ver->add_option("--k", gen_k);
    ver->add_option("--count", ver_count);
    ver->add_option("--seed", seed);
    ver->add_option("--lambda", lambda);
    ver->add_option("--out", out_path);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            auto kind = parse_kind(kind_s);
            fs::create_directories(out_path);
            for (int i = 0; i < gen_count; ++i) {
                auto inst = bilo::generate_instance(kind, {gen_n, gen_k},
                                                    seed + static_cast<std::uint64_t>(i));
                std::ostringstream name;
                name << kind_s << "-n" << gen_n << "-" << std::setw(3) << std::setfill('0') << i
                     << ".json";
                write_text((fs::path(out_path) / name.str()).string(),
                           bilo::instance_to_json(inst).dump(2) + "\n");
            }
            std::cout << "wrote " << gen_count << " instances to " << out_path << "\n";
        } else if (col->parsed()) {
            auto data = bilo::dataset::collect(parse_kind(kind_s), gen_n, gen_k, col_instances,
                                               col_decisions, seed, greedy_features);
            if (meta_path.empty()) meta_path = out_path + ".meta.json";
            bilo::dataset::save_dataset(data, out_path, meta_path);
            std::cout << "collected " << data.samples.size() << " samples\n";
        } else if (trn->parsed()) {
            if (meta_path.empty()) meta_path = data_path + ".meta.json";
            auto data = bilo::dataset::load_dataset(data_path, meta_path);
            tc.h_s = tc.h_v = tc.h_d;
            auto [net, report] =
                bilo::mlp::train(bilo::dataset::to_training_set(data, target, "train"),
                                 bilo::dataset::to_training_set(data, target, "val"), tc);
            net.prediction_target = target;
            net.feature_config = bilo::dataset::feature_config_to_json(data.config);
            write_text(out_path, bilo::mlp::network_to_json(net).dump() + "\n");
            std::cout << "epochs " << report.epochs << " val MAE " << report.best_val_mae
                      << " MAL " << report.val_mal << "\n";
        } else if (slv->parsed()) {
            auto inst = load_instance(instance_path);
            bilo::surrogate::SurrogateConfig cfg;
            cfg.lambda = lambda;
            cfg.slack_mode = parse_slack(slack_s);
            cfg.dampening = dampening;
            cfg.milp.time_limit = time_limit;
            cfg.approx = approx == "upper"   ? bilo::surrogate::Approx::upper
                         : approx == "gvfa" ? bilo::surrogate::Approx::gvfa
                                            : bilo::surrogate::Approx::lower;
            std::unique_ptr<bilo::surrogate::Predictor> pred;
            if (!model_path.empty())
                pred = std::make_unique<bilo::surrogate::NetworkPredictor>(
                    load_network(model_path));
            else if (cfg.approx != bilo::surrogate::Approx::gvfa)
                throw std::runtime_error("--model is required unless --approx gvfa");
            else
                pred = std::make_unique<bilo::surrogate::AffinePredictor>(
                    0.0, std::vector<double>{});
            auto res = bilo::surrogate::solve_end_to_end(inst, *pred, cfg);
            json j{{"x", res.solution.x},
                   {"y", res.solution.y},
                   {"leader_value", res.solution.leader_value},
                   {"follower_value", res.solution.follower_value},
                   {"status", status_name(res.solution.status)},
                   {"milp_status", bilo::milp::to_string(res.milp_status)},
                   {"surrogate_objective", res.surrogate_objective},
                   {"nodes", res.nodes},
                   {"relu_binaries", res.binaries}};
            if (times_mode == "record") {
                j["surrogate_time_s"] = res.surrogate_time_s;
                j["repair_time_s"] = res.repair_time_s;
            }
            auto text = j.dump(2) + "\n";
            if (!out_path.empty()) write_text(out_path, text);
            std::cout << text;
        } else if (orc->parsed()) {
            auto inst = load_instance(instance_path);
            auto x = read_json(x_path).get<bilo::LeaderDecision>();
            auto sol = bilo::solve_follower(inst, x);
            json j{{"phi", sol.value}, {"y", sol.y}};
            std::cout << j.dump(2) << "\n";
        } else if (bf->parsed()) {
            auto inst = load_instance(instance_path);
            auto sol = bilo::solve_bruteforce(inst, cap);
            json j{{"x", sol.x},
                   {"y", sol.y},
                   {"leader_value", sol.leader_value},
                   {"follower_value", sol.follower_value},
                   {"status", status_name(sol.status)}};
            std::cout << j.dump(2) << "\n";
        } else if (ev->parsed()) {
            bilo::harness::EvalConfig cfg;
            std::istringstream ms(methods_s);
            std::string m;
            while (std::getline(ms, m, ',')) cfg.methods.push_back(m);
            cfg.surrogate.lambda = lambda;
            cfg.surrogate.slack_mode = parse_slack(slack_s);
            cfg.surrogate.dampening = dampening;
            cfg.surrogate.milp.time_limit = time_limit;
            cfg.record_times = times_mode == "record";
            std::unique_ptr<bilo::surrogate::NetworkPredictor> lower, upper;
            if (!model_path.empty()) {
                lower = std::make_unique<bilo::surrogate::NetworkPredictor>(
                    load_network(model_path));
                cfg.lower = lower.get();
            }
            if (!upper_model_path.empty()) {
                upper = std::make_unique<bilo::surrogate::NetworkPredictor>(
                    load_network(upper_model_path));
                cfg.upper = upper.get();
            }
            auto res = bilo::harness::evaluate(load_instance_dir(instances_dir), cfg);
            auto csv = bilo::harness::to_csv(res);
            if (!out_path.empty()) write_text(out_path, csv);
            std::cout << bilo::harness::summary_table(res);
        } else if (ver->parsed()) {
            bilo::surrogate::NetworkPredictor pred(load_network(model_path));
            bilo::surrogate::SurrogateConfig cfg;
            cfg.lambda = lambda;
            json reports = json::array();
            bool all_hold = true;
            std::mt19937_64 rng(seed ^ 0xabcdefULL);
            for (int i = 0; i < ver_count; ++i) {
                auto inst = std::get<bilo::KipInstance>(bilo::generate_instance(
                    bilo::Kind::kip, {gen_n, gen_k}, seed + static_cast<std::uint64_t>(i)));
                if (suite == "thm1") {
                    auto r = bilo::harness::verify_theorem1(inst, pred, cfg);
                    all_hold = all_hold && r.holds;
                    reports.push_back(bilo::harness::bound_report_to_json(r));
                } else if (suite == "lemma1") {
                    auto r = bilo::harness::verify_lemma1(inst, pred, cfg);
                    all_hold = all_hold && r.holds;
                    reports.push_back(bilo::harness::lemma_report_to_json(r));
                } else {  // obs1: solved slack equals max(0, NN - f) at fixed (x, y)
                    bilo::Instance wrapped{inst};
                    auto x = bilo::dataset::sample_decision(wrapped, rng);
                    auto built = bilo::surrogate::build_lower(wrapped, pred, cfg);
                    bilo::FollowerDecision y(x.size(), 0.0);
                    for (size_t t = 0; t < y.size(); ++t)
                        if (x[t] == 0.0 && rng() % 2) y[t] = 1.0;
                    if (!bilo::follower_feasible(wrapped, x, y)) y.assign(x.size(), 0.0);
                    for (size_t t = 0; t < x.size(); ++t) {
                        built.model.fix(built.x_vars[t], x[t]);
                        built.model.fix(built.y_vars[t], y[t]);
                    }
                    auto sol = bilo::milp::solve(built.model, cfg.milp);
                    double nn = pred.predict(wrapped, x);
                    double f = bilo::follower_objective(wrapped, x, y);
                    double slack = sol.assignment[static_cast<size_t>(built.slack_var)];
                    double expect = std::max(0.0, nn - f);
                    bool holds = sol.status == bilo::milp::Status::optimal &&
                                 std::abs(slack - expect) <= 1e-6;
                    all_hold = all_hold && holds;
                    reports.push_back({{"instance_seed", inst.seed},
                                       {"slack", slack},
                                       {"expected", expect},
                                       {"holds", holds}});
                }
            }
            json out{{"suite", suite}, {"holds", all_hold}, {"reports", reports}};
            auto text = out.dump(2) + "\n";
            if (!out_path.empty()) write_text(out_path, text);
            std::cout << "suite " << suite << (all_hold ? " holds" : " FAILED") << "\n";
            return all_hold ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
