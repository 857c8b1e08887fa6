#pragma once

// Compilation of trained networks, the ratio-greedy heuristic, and bilinear
// terms into MILP constraints.

#include <stdexcept>
#include <string>
#include <vector>

#include "bilo/milp.hpp"
#include "bilo/mlp.hpp"
#include "bilo/problems.hpp"

namespace bilo::embed {

struct EmbedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Pre-activation interval bounds per layer of a two-layer perceptron.
struct BoundsTable {
    std::vector<Interval> hidden;
    std::vector<Interval> out;
};

/// Interval arithmetic layer by layer; post-activation bounds are the
/// pre-activation ones clamped at zero.
BoundsTable propagate_bounds(const mlp::Mlp2& net, const std::vector<Interval>& input_box);

/// Bounds of an affine expression under the model's variable bounds.
Interval expr_bounds(const milp::Model& model, const milp::LinExpr& e);

/// Big-M ReLU encoding of a two-layer perceptron applied to affine input
/// expressions.  Neurons whose pre-activation is sign-fixed by the bounds are
/// folded away (zero or linear); the rest get one binary each.  Returns one
/// affine expression per output; `binaries`, when given, accumulates the
/// number of phase binaries introduced.
std::vector<milp::LinExpr> encode_mlp(milp::Model& model, const mlp::Mlp2& net,
                                      const std::vector<milp::LinExpr>& inputs,
                                      const std::string& prefix, int* binaries = nullptr,
                                      const std::vector<std::vector<double>>* support = nullptr);

/// Full set-network encoding for one instance: the static branch is evaluated
/// to constants (it is decision-independent) and only the value head is
/// encoded, once per variable on the caller-supplied masked input expressions.
struct EncodedNetwork {
    milp::LinExpr output;  ///< prediction with the label-scaling inverse applied
    int binaries = 0;
};

/// `value_inputs[i]` must hold decision_dim + k_emb affine expressions — the
/// (possibly masked) concatenation of h(x_i) and the instance embedding.
EncodedNetwork encode_set_network(milp::Model& model, const mlp::SetNetwork& net,
                                  const std::vector<std::vector<milp::LinExpr>>& value_inputs,
                                  const std::vector<double>& coeff, const std::string& prefix,
                                  const std::vector<std::vector<std::vector<double>>>* supports = nullptr);

/// MILP representation of the ratio-greedy knapsack response: y^g follows the
/// deterministic greedy pass for whichever x the solver picks.  Requires
/// integer weights.  Returns the y^g variable ids (original item order) and
/// the greedy value expression.
struct EncodedGreedy {
    std::vector<int> y;
    milp::LinExpr value;
};

EncodedGreedy encode_greedy(milp::Model& model, const KipInstance& inst,
                            const std::vector<int>& x_vars);

/// Exact McCormick product z = u·v for u in [0,1] and binary v.
int linearize_product(milp::Model& model, int u, int v, const std::string& name);

}  // namespace bilo::embed
