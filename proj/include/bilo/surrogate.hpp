#pragma once

// Single-level surrogates of the bilevel problem: the upper-level value
// approximation, the learned value-function reformulation with slack, and the
// greedy value-function baseline, plus the end-to-end solve-and-repair driver.

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "bilo/dataset.hpp"
#include "bilo/embed.hpp"
#include "bilo/milp.hpp"
#include "bilo/mlp.hpp"
#include "bilo/oracle.hpp"
#include "bilo/problems.hpp"

namespace bilo::surrogate {

struct SurrogateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Approx { upper, lower, gvfa };
enum class SlackMode { slack, none, dampened };

struct SurrogateConfig {
    Approx approx = Approx::lower;
    double lambda = 1.0;      ///< slack penalty; theorem verification needs > 1
    SlackMode slack_mode = SlackMode::slack;
    double dampening = -1.0;  ///< max validation absolute error, dampened mode only
    milp::SolveConfig milp;

    SurrogateConfig() {
        // Leader variables are created first; deciding them first settles most
        // of the embedded ReLU binaries through bound propagation in the LP.
        milp.branching = "pseudocost";
    }
};

/// A value-function estimate that can be both evaluated pointwise and compiled
/// into affine MILP constraints over the leader variables.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual bool needs_greedy() const { return false; }
    virtual double predict(const Instance& inst, const LeaderDecision& x) const = 0;
    /// Prediction as an expression in the model's leader variables.
    /// `greedy_y` holds the encoded greedy-response variable ids when
    /// needs_greedy() is true, and is empty otherwise.
    virtual milp::LinExpr encode(milp::Model& model, const Instance& inst,
                                 const std::vector<int>& x_vars,
                                 const std::vector<int>& greedy_y, int* binaries) const = 0;
};

/// Trained set network + the feature pipeline it was fitted with.  The
/// network's feature_config must carry the dataset scaling constants.
class NetworkPredictor : public Predictor {
public:
    explicit NetworkPredictor(mlp::SetNetwork net);
    bool needs_greedy() const override;
    double predict(const Instance& inst, const LeaderDecision& x) const override;
    milp::LinExpr encode(milp::Model& model, const Instance& inst,
                         const std::vector<int>& x_vars, const std::vector<int>& greedy_y,
                         int* binaries) const override;
    const mlp::SetNetwork& network() const { return net_; }

private:
    mlp::SetNetwork net_;
    dataset::FeatureConfig fc_;
};

/// Affine stub NN(x) = c0 + c·x (hosts the appendix toy's NN(0)=2, NN(1)=0).
class AffinePredictor : public Predictor {
public:
    AffinePredictor(double c0, std::vector<double> c) : c0_(c0), c_(std::move(c)) {}
    double predict(const Instance& inst, const LeaderDecision& x) const override;
    milp::LinExpr encode(milp::Model& model, const Instance& inst,
                         const std::vector<int>& x_vars, const std::vector<int>& greedy_y,
                         int* binaries) const override;

private:
    double c0_;
    std::vector<double> c_;
};

struct BuiltModel {
    milp::Model model;
    std::vector<int> x_vars;
    std::vector<int> y_vars;  ///< follower variables (y0 last for DRP); empty for upper/gvfa-free
    int slack_var = -1;
    int binaries = 0;  ///< ReLU phase binaries introduced by the encoding
};

BuiltModel build_upper(const Instance& inst, const Predictor& pred);
BuiltModel build_lower(const Instance& inst, const Predictor& pred, const SurrogateConfig& cfg);
BuiltModel build_gvfa(const KipInstance& inst);

/// The lower surrogate restricted to a fixed leader decision; the prediction
/// is then the constant pred.predict(inst, x), so no network encoding is
/// needed.  `feasible` is false when the follower itself has no response.
struct LowerResponse {
    FollowerDecision y;
    double follower_value = 0;
    double leader_value = 0;
    double slack = 0;
    bool feasible = true;
};

LowerResponse solve_lower_fixed(const Instance& inst, const Predictor& pred,
                                const SurrogateConfig& cfg, const LeaderDecision& x);

struct EndToEndResult {
    BilevelSolution solution;
    double surrogate_objective = 0;
    double surrogate_time_s = 0;
    double repair_time_s = 0;
    milp::Status milp_status = milp::Status::optimal;
    std::int64_t nodes = 0;
    int binaries = 0;
};

/// Builds the configured surrogate, solves it, and repairs the leader decision
/// to bilevel feasibility with the follower oracle.
EndToEndResult solve_end_to_end(const Instance& inst, const Predictor& pred,
                                const SurrogateConfig& cfg);

}  // namespace bilo::surrogate
