#include "bilo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "bilo/oracle.hpp"

namespace bilo::dataset {

namespace {

std::string kind_name(Kind k) {
    switch (k) {
        case Kind::kip: return "kip";
        case Kind::cnp: return "cnp";
        case Kind::drp: return "drp";
        case Kind::toy: return "toy";
    }
    return "?";
}

Kind kind_from_name(const std::string& s) {
    if (s == "kip") return Kind::kip;
    if (s == "cnp") return Kind::cnp;
    if (s == "drp") return Kind::drp;
    if (s == "toy") return Kind::toy;
    throw DatasetError("unknown problem kind: " + s);
}

/// Greedy interdiction-then-fill strategy used for the KIP static features:
/// the leader removes the k best-ratio items, the follower greedily fills the
/// remainder.  Returns (x^dg, y^dg, obj^dg).
struct GreedyTriple {
    std::vector<double> x, y;
    double obj = 0;
};

GreedyTriple kip_greedy_triple(const KipInstance& inst) {
    GreedyTriple t;
    t.x.assign(static_cast<size_t>(inst.n), 0.0);
    auto order = greedy_item_order(inst);
    for (int j = 0; j < inst.budget && j < inst.n; ++j) t.x[static_cast<size_t>(order[j])] = 1.0;
    auto g = greedy_knapsack(inst, t.x);
    t.y = g.y;
    t.obj = g.value;
    return t;
}

double ratio_norm(const std::vector<double>& num, const std::vector<double>& den, size_t i) {
    double best = 0;
    for (size_t j = 0; j < num.size(); ++j) best = std::max(best, num[j] / den[j]);
    return (num[i] / den[i]) / best;
}

std::vector<double> to_doubles(const std::vector<int>& v) {
    return std::vector<double>(v.begin(), v.end());
}

}  // namespace

int FeatureConfig::static_dim() const {
    switch (kind) {
        case Kind::kip: return use_greedy_features ? 7 : 4;
        case Kind::cnp: return 12;
        case Kind::drp: return 7;
        case Kind::toy: return 1;
    }
    return 0;
}

int FeatureConfig::decision_dim() const {
    switch (kind) {
        case Kind::kip: return static_dim() + (use_greedy_features ? 2 : 1);
        case Kind::cnp: return static_dim() + 4;
        case Kind::drp: return static_dim() + 1;
        case Kind::toy: return 2;
    }
    return 0;
}

FeatureConfig make_feature_config(Kind kind, bool use_greedy_features) {
    FeatureConfig cfg;
    cfg.kind = kind;
    cfg.use_greedy_features = kind == Kind::kip && use_greedy_features;
    switch (kind) {
        case Kind::kip:
            cfg.scaled_columns = cfg.use_greedy_features ? std::vector<int>{1, 2, 6}
                                                         : std::vector<int>{1, 2};
            break;
        case Kind::cnp: cfg.scaled_columns = {2, 3, 4, 5, 10, 11}; break;
        case Kind::drp: cfg.scaled_columns = {2, 3, 4, 5, 6}; break;
        case Kind::toy: cfg.scaled_columns = {}; break;
    }
    return cfg;
}

LeaderDecision sample_decision(const Instance& inst, std::mt19937_64& rng) {
    int n = dimension(inst);
    LeaderDecision x(static_cast<size_t>(n), 0.0);
    if (const auto* kip = std::get_if<KipInstance>(&inst)) {
        std::uniform_int_distribution<int> du(0, kip->budget);
        int target = du(rng);
        std::vector<int> idx(static_cast<size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int j = 0; j < target; ++j) x[static_cast<size_t>(idx[static_cast<size_t>(j)])] = 1.0;
    } else if (const auto* cnp = std::get_if<CnpInstance>(&inst)) {
        std::uniform_int_distribution<int> du(0, cnp->defender_budget);
        int target_cost = du(rng);
        std::vector<int> idx(static_cast<size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        int spent = 0;
        for (int i : idx) {
            int c = cnp->defender_cost[static_cast<size_t>(i)];
            if (spent + c > target_cost) continue;
            x[static_cast<size_t>(i)] = 1.0;
            spent += c;
        }
    } else if (const auto* drp = std::get_if<DrpInstance>(&inst)) {
        std::uniform_real_distribution<double> u(0, 1);
        for (auto& v : x) v = u(rng);
        double spend = 0;
        for (int i = 0; i < n; ++i) spend += drp->cost[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
        if (spend > drp->donor_budget) {
            double shrink = drp->donor_budget / spend;
            for (auto& v : x) v *= shrink;
        }
    } else {
        x[0] = static_cast<double>(rng() % 2);
    }
    return x;
}

std::vector<std::vector<double>> features_static(const Instance& inst, const FeatureConfig& cfg) {
    std::vector<std::vector<double>> rows;
    if (const auto* kip = std::get_if<KipInstance>(&inst)) {
        auto p = to_doubles(kip->profit);
        auto a = to_doubles(kip->weight);
        GreedyTriple dg;
        if (cfg.use_greedy_features) dg = kip_greedy_triple(*kip);
        double n = static_cast<double>(kip->n);
        for (size_t i = 0; i < p.size(); ++i) {
            std::vector<double> f{ratio_norm(p, a, i), p[i], a[i], kip->budget / n};
            if (cfg.use_greedy_features) {
                f.push_back(dg.x[i]);
                f.push_back(dg.y[i]);
                f.push_back(dg.obj / n);
            }
            rows.push_back(std::move(f));
        }
    } else if (const auto* cnp = std::get_if<CnpInstance>(&inst)) {
        auto d = to_doubles(cnp->defender_cost);
        auto a = to_doubles(cnp->attacker_cost);
        for (size_t i = 0; i < d.size(); ++i)
            rows.push_back({ratio_norm(cnp->defender_profit, d, i),
                            ratio_norm(cnp->attacker_profit, a, i), d[i], a[i],
                            cnp->attacker_profit[i], cnp->defender_profit[i], cnp->gamma, cnp->eta,
                            cnp->epsilon, cnp->delta, static_cast<double>(cnp->attacker_budget),
                            static_cast<double>(cnp->defender_budget)});
    } else if (const auto* drp = std::get_if<DrpInstance>(&inst)) {
        for (size_t i = 0; i < drp->cost.size(); ++i)
            rows.push_back({ratio_norm(drp->donor_profit, drp->cost, i),
                            ratio_norm(drp->recipient_profit, drp->cost, i), drp->donor_profit[i],
                            drp->recipient_profit[i], drp->cost[i], drp->donor_budget,
                            drp->recipient_budget});
    } else {
        rows.push_back({1.0});
    }
    return rows;
}

std::vector<std::vector<double>> features_decision(const Instance& inst, const FeatureConfig& cfg,
                                                   const LeaderDecision& x) {
    auto rows = features_static(inst, cfg);
    if (const auto* kip = std::get_if<KipInstance>(&inst)) {
        std::vector<double> yg;
        if (cfg.use_greedy_features) yg = greedy_knapsack(*kip, x).y;
        for (size_t i = 0; i < rows.size(); ++i) {
            rows[i].push_back(x[i]);
            if (cfg.use_greedy_features) rows[i].push_back(yg[i]);
        }
    } else if (const auto* cnp = std::get_if<CnpInstance>(&inst)) {
        for (size_t i = 0; i < rows.size(); ++i) {
            rows[i].push_back(x[i]);
            rows[i].push_back(-cnp->gamma * (1.0 - x[i]));
            rows[i].push_back(1.0 - x[i]);
            rows[i].push_back((1.0 - cnp->eta) * x[i]);
        }
    } else if (std::holds_alternative<DrpInstance>(inst)) {
        for (size_t i = 0; i < rows.size(); ++i) rows[i].push_back(x[i]);
    } else {
        for (auto& r : rows) r.push_back(x[0]);
    }
    return rows;
}

void fit_scaling(FeatureConfig& cfg, const std::vector<std::vector<std::vector<double>>>& raw) {
    cfg.col_min.assign(cfg.scaled_columns.size(), std::numeric_limits<double>::infinity());
    cfg.col_max.assign(cfg.scaled_columns.size(), -std::numeric_limits<double>::infinity());
    for (const auto& inst_rows : raw)
        for (const auto& row : inst_rows)
            for (size_t c = 0; c < cfg.scaled_columns.size(); ++c) {
                double v = row[static_cast<size_t>(cfg.scaled_columns[c])];
                cfg.col_min[c] = std::min(cfg.col_min[c], v);
                cfg.col_max[c] = std::max(cfg.col_max[c], v);
            }
}

std::vector<std::vector<double>> apply_scaling(const FeatureConfig& cfg,
                                               const std::vector<std::vector<double>>& raw_rows,
                                               bool /*decision_rows*/) {
    // Decision rows start with the static features, so the same column indices
    // apply; the appended decision columns are already in [-1, 1].
    auto rows = raw_rows;
    for (auto& row : rows)
        for (size_t c = 0; c < cfg.scaled_columns.size(); ++c) {
            auto col = static_cast<size_t>(cfg.scaled_columns[c]);
            double range = cfg.col_max[c] - cfg.col_min[c];
            row[col] = range > 0 ? (row[col] - cfg.col_min[c]) / range : 0.0;
        }
    return rows;
}

Dataset collect(Kind kind, int n, int k, int n_instances, int decisions_per_instance, std::uint64_t seed,
                bool use_greedy_features) {
    if (kind == Kind::toy) throw DatasetError("collect: the appendix toy has no feature map");
    if (n <= 0 || n_instances <= 0 || decisions_per_instance <= 0)
        throw DatasetError("collect: counts must be positive");
    Dataset data;
    data.config = make_feature_config(kind, use_greedy_features);
    std::mt19937_64 rng(seed);

    std::vector<std::vector<std::vector<double>>> raw_statics;
    for (int i = 0; i < n_instances; ++i) {
        auto inst = generate_instance(kind, {n, k}, seed * 1000003ULL + static_cast<std::uint64_t>(i));
        raw_statics.push_back(features_static(inst, data.config));
        data.instances.push_back(std::move(inst));
    }
    fit_scaling(data.config, raw_statics);
    for (const auto& raw : raw_statics)
        data.statics.push_back(apply_scaling(data.config, raw, false));

    for (int i = 0; i < n_instances; ++i) {
        const auto& inst = data.instances[static_cast<size_t>(i)];
        std::string id = kind_name(kind) + "-n" + std::to_string(n) + "-i" + std::to_string(i);
        for (int d = 0; d < decisions_per_instance; ++d) {
            Row row;
            row.instance_index = i;
            row.instance_id = id;
            row.x = sample_decision(inst, rng);
            auto sol = repair(inst, row.x);
            if (sol.status == BilevelStatus::infeasible)
                throw DatasetError("collect: oracle found no follower response for instance " + id);
            row.F_label = sol.leader_value;
            row.f_label = sol.follower_value;
            row.decisions = apply_scaling(data.config, features_decision(inst, data.config, row.x), true);
            data.samples.push_back(std::move(row));
        }
    }

    std::vector<size_t> order(data.samples.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::mt19937_64 split_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::shuffle(order.begin(), order.end(), split_rng);
    size_t n_val = std::max<size_t>(1, data.samples.size() / 10);
    for (size_t t = 0; t < order.size(); ++t)
        data.samples[order[t]].split = t < n_val ? "val" : "train";
    return data;
}

std::vector<double> aggregation_coefficients(const Instance& inst, const std::string& target) {
    if (const auto* kip = std::get_if<KipInstance>(&inst)) return to_doubles(kip->profit);
    if (const auto* cnp = std::get_if<CnpInstance>(&inst))
        return target == "upper" ? cnp->defender_profit : cnp->attacker_profit;
    if (const auto* drp = std::get_if<DrpInstance>(&inst))
        return target == "upper" ? drp->donor_profit : drp->recipient_profit;
    return {1.0};
}

mlp::Dataset to_training_set(const Dataset& data, const std::string& target,
                             const std::string& split) {
    if (target != "upper" && target != "lower")
        throw DatasetError("prediction target must be 'upper' or 'lower'");
    mlp::Dataset out;
    for (const auto& row : data.samples) {
        if (!split.empty() && row.split != split) continue;
        mlp::Sample s;
        const auto& inst = data.instances[static_cast<size_t>(row.instance_index)];
        s.statics = data.statics[static_cast<size_t>(row.instance_index)];
        s.decisions = row.decisions;
        s.coeff = aggregation_coefficients(inst, target);
        s.mask.assign(row.x.size(), 1.0);
        if (data.config.kind == Kind::kip)
            for (size_t i = 0; i < row.x.size(); ++i) s.mask[i] = 1.0 - row.x[i];
        s.label = target == "upper" ? row.F_label : row.f_label;
        out.push_back(std::move(s));
    }
    return out;
}

nlohmann::json feature_config_to_json(const FeatureConfig& cfg) {
    return {{"kind", kind_name(cfg.kind)},
            {"use_greedy_features", cfg.use_greedy_features},
            {"scaled_columns", cfg.scaled_columns},
            {"col_min", cfg.col_min},
            {"col_max", cfg.col_max}};
}

FeatureConfig feature_config_from_json(const nlohmann::json& j) {
    FeatureConfig cfg;
    cfg.kind = kind_from_name(j.at("kind").get<std::string>());
    cfg.use_greedy_features = j.at("use_greedy_features").get<bool>();
    cfg.scaled_columns = j.at("scaled_columns").get<std::vector<int>>();
    cfg.col_min = j.at("col_min").get<std::vector<double>>();
    cfg.col_max = j.at("col_max").get<std::vector<double>>();
    return cfg;
}

void save_dataset(const Dataset& data, const std::string& samples_path,
                  const std::string& meta_path) {
    std::ofstream samples(samples_path);
    if (!samples) throw DatasetError("cannot open " + samples_path);
    for (const auto& row : data.samples) {
        nlohmann::json j{{"instance_id", row.instance_id},
                         {"instance_index", row.instance_index},
                         {"x", row.x},
                         {"F", row.F_label},
                         {"f", row.f_label},
                         {"h_features", row.decisions},
                         {"split", row.split}};
        samples << j.dump() << '\n';
    }
    nlohmann::json meta{{"feature_config", feature_config_to_json(data.config)},
                        {"statics", data.statics}};
    nlohmann::json insts = nlohmann::json::array();
    for (const auto& inst : data.instances) insts.push_back(instance_to_json(inst));
    meta["instances"] = std::move(insts);
    std::ofstream mf(meta_path);
    if (!mf) throw DatasetError("cannot open " + meta_path);
    mf << meta.dump(2) << '\n';
}

Dataset load_dataset(const std::string& samples_path, const std::string& meta_path) {
    std::ifstream mf(meta_path);
    if (!mf) throw DatasetError("cannot open " + meta_path);
    nlohmann::json meta = nlohmann::json::parse(mf);
    Dataset data;
    data.config = feature_config_from_json(meta.at("feature_config"));
    data.statics = meta.at("statics").get<std::vector<std::vector<std::vector<double>>>>();
    for (const auto& j : meta.at("instances")) data.instances.push_back(instance_from_json(j));

    std::ifstream samples(samples_path);
    if (!samples) throw DatasetError("cannot open " + samples_path);
    std::string line;
    while (std::getline(samples, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        Row row;
        row.instance_id = j.at("instance_id").get<std::string>();
        row.instance_index = j.at("instance_index").get<int>();
        row.x = j.at("x").get<LeaderDecision>();
        row.F_label = j.at("F").get<double>();
        row.f_label = j.at("f").get<double>();
        row.decisions = j.at("h_features").get<std::vector<std::vector<double>>>();
        row.split = j.at("split").get<std::string>();
        data.samples.push_back(std::move(row));
    }
    return data;
}

}  // namespace bilo::dataset
