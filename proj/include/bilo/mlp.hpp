#pragma once

// Set-based value-function regressor: a per-variable static encoder pooled by
// summation into an instance embedding, followed by a per-variable value head
// whose outputs are aggregated with a coefficient dot product.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace bilo::mlp {

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense affine layer, out = W·in + b.  Weights are stored row-major:
/// w[r] is the input-sized row producing output component r.
struct Layer {
    std::vector<std::vector<double>> w;
    std::vector<double> b;

    int in_dim() const { return w.empty() ? 0 : static_cast<int>(w.front().size()); }
    int out_dim() const { return static_cast<int>(b.size()); }
};

/// Two-layer perceptron: rectified hidden layer, affine output layer.
struct Mlp2 {
    Layer hidden;
    Layer out;
};

/// One training/evaluation record.  `statics` and `decisions` hold one row per
/// follower variable; `coeff` is the objective vector used for aggregation and
/// `mask` a per-variable multiplier on the value-head input (all ones when the
/// problem does not mask, 1 - x_i for knapsack interdiction).
struct Sample {
    std::vector<std::vector<double>> statics;
    std::vector<std::vector<double>> decisions;
    std::vector<double> coeff;
    std::vector<double> mask;
    double label = 0;
};

using Dataset = std::vector<Sample>;

struct SetNetwork {
    Mlp2 psi_d;  ///< static encoder, static_dim -> h_d -> m
    Mlp2 psi_s;  ///< pooled instance encoder, m -> h_s -> k_emb
    Mlp2 psi_v;  ///< value head, decision_dim + k_emb -> h_v -> 1
    int static_dim = 0;
    int decision_dim = 0;
    std::string prediction_target = "lower";  // "upper" or "lower"
    // Labels are standardized for training; predictions re-apply the inverse
    // affine map label_mu + label_sigma * (standardized output).
    double label_mu = 0;
    double label_sigma = 1;
    nlohmann::json feature_config;
};

struct TrainConfig {
    int batch_size = 32;
    double learning_rate = 0.01;
    int max_epochs = 1000;
    int patience = 200;
    std::uint64_t seed = 0;
    int h_d = 16;
    int h_s = 16;
    int h_v = 16;
    int m = 16;
    int k_emb = 8;
};

struct TrainReport {
    std::vector<double> train_loss;  ///< per-epoch mean squared error
    double best_val_mae = 0;
    double val_mal = 0;
    int epochs = 0;
    bool stopped_early = false;
};

/// Parameter gradients (and Adam moments) share the network's layout.
struct NetGrad {
    Mlp2 psi_d;
    Mlp2 psi_s;
    Mlp2 psi_v;
};

/// Fresh network with uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] weights.
SetNetwork init_network(int static_dim, int decision_dim, const TrainConfig& cfg);

/// Evaluates a two-layer perceptron (rectified hidden, affine output).
std::vector<double> mlp2_eval(const Mlp2& net, const std::vector<double>& in);

/// Instance embedding Ψs(Σ_i Ψd(f_i)) for one sample.
std::vector<double> instance_embedding(const SetNetwork& net, const Sample& s);

double forward(const SetNetwork& net, const Sample& s);

/// Forward pass that also accumulates d(prediction)/d(parameter) into `grad`
/// (which must be zero-initialized with the network's shape).
double forward_backward(const SetNetwork& net, const Sample& s, NetGrad& grad);

std::pair<SetNetwork, TrainReport> train(const Dataset& train_set, const Dataset& val_set,
                                         const TrainConfig& cfg);

/// (mean absolute error, mean absolute label), both in the raw label scale.
std::pair<double, double> evaluate_regressor(const SetNetwork& net, const Dataset& data);

nlohmann::json network_to_json(const SetNetwork& net);
SetNetwork network_from_json(const nlohmann::json& j);

}  // namespace bilo::mlp
