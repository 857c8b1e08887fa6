#pragma once

// Data collection for value-function regression: leader-decision sampling,
// oracle labeling, the per-problem feature maps, and JSONL persistence.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bilo/mlp.hpp"
#include "bilo/problems.hpp"

namespace bilo::dataset {

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Describes the feature layout plus the per-dataset min-max scaling applied to
/// raw coefficient columns.  The scaling is affine and re-applied verbatim when
/// the network is compiled into a MILP.
struct FeatureConfig {
    Kind kind = Kind::kip;
    bool use_greedy_features = true;  ///< KIP only: static/decision greedy features
    std::vector<int> scaled_columns;  ///< static-feature columns that get min-max scaled
    std::vector<double> col_min;      ///< one entry per scaled column
    std::vector<double> col_max;

    int static_dim() const;
    int decision_dim() const;
};

struct Row {
    int instance_index = 0;
    std::string instance_id;
    LeaderDecision x;
    double F_label = 0;
    double f_label = 0;
    std::vector<std::vector<double>> decisions;  ///< scaled h(x_i) rows
    std::string split;                           ///< "train" or "val"
};

struct Dataset {
    FeatureConfig config;
    std::vector<Instance> instances;
    std::vector<std::vector<std::vector<double>>> statics;  ///< scaled f rows per instance
    std::vector<Row> samples;
};

FeatureConfig make_feature_config(Kind kind, bool use_greedy_features);

/// Uniformly random leader-feasible decision.  Binary problems draw a target
/// budget usage uniformly in [0, budget] and then a random subset attaining
/// it; DRP draws i.i.d. uniform components and rescales into the budget.
LeaderDecision sample_decision(const Instance& inst, std::mt19937_64& rng);

/// Raw (unscaled) static features f_i, one row per follower variable.
std::vector<std::vector<double>> features_static(const Instance& inst, const FeatureConfig& cfg);

/// Raw decision-dependent features h(x_i).
std::vector<std::vector<double>> features_decision(const Instance& inst, const FeatureConfig& cfg,
                                                   const LeaderDecision& x);

/// Fits the min-max constants of `cfg` over the given raw static rows.
void fit_scaling(FeatureConfig& cfg, const std::vector<std::vector<std::vector<double>>>& raw);

std::vector<std::vector<double>> apply_scaling(const FeatureConfig& cfg,
                                               const std::vector<std::vector<double>>& raw_rows,
                                               bool decision_rows);

/// Algorithm: generate instances, sample decisions, label each with the
/// optimistic repair oracle, attach scaled features and a seeded 90/10 split.
/// k < 0 lets the generator pick its per-seed budget rotation; a fixed k
/// yields a single-configuration corpus.
Dataset collect(Kind kind, int n, int k, int n_instances, int decisions_per_instance, std::uint64_t seed,
                bool use_greedy_features);

/// Aggregation-coefficient vector for one instance: the leader's per-variable
/// objective coefficients for the upper target, the follower's for lower.
std::vector<double> aggregation_coefficients(const Instance& inst, const std::string& target);

/// Converts rows of the given split ("" = all) into training samples for the
/// requested prediction target ("upper" or "lower").
mlp::Dataset to_training_set(const Dataset& data, const std::string& target,
                             const std::string& split);

/// Writes samples as JSONL to `samples_path` and config/instances/static
/// features to `meta_path`.
void save_dataset(const Dataset& data, const std::string& samples_path,
                  const std::string& meta_path);
Dataset load_dataset(const std::string& samples_path, const std::string& meta_path);

nlohmann::json feature_config_to_json(const FeatureConfig& cfg);
FeatureConfig feature_config_from_json(const nlohmann::json& j);

}  // namespace bilo::dataset
