#include "bilo/surrogate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace bilo::surrogate {

namespace {

using milp::LinExpr;
using milp::Model;
using milp::Sense;

LinExpr var_expr(int v) {
    LinExpr e;
    e.add(v, 1.0);
    return e;
}

std::vector<int> add_leader_vars(Model& model, const Instance& inst) {
    int n = dimension(inst);
    bool continuous = std::holds_alternative<DrpInstance>(inst);
    std::vector<int> x;
    for (int i = 0; i < n; ++i) {
        std::string name = "x" + std::to_string(i);
        x.push_back(continuous ? model.add_continuous(name, 0.0, 1.0)
                               : model.add_binary(name));
    }
    return x;
}

void add_leader_budget(Model& model, const Instance& inst, const std::vector<int>& x) {
    LinExpr lhs;
    if (const auto* kip = std::get_if<KipInstance>(&inst)) {
        for (int v : x) lhs.add(v, 1.0);
        model.add_constraint(lhs, Sense::le, kip->budget, "leader_budget");
    } else if (const auto* cnp = std::get_if<CnpInstance>(&inst)) {
        for (size_t i = 0; i < x.size(); ++i) lhs.add(x[i], cnp->defender_cost[i]);
        model.add_constraint(lhs, Sense::le, cnp->defender_budget, "leader_budget");
    } else if (const auto* drp = std::get_if<DrpInstance>(&inst)) {
        for (size_t i = 0; i < x.size(); ++i) lhs.add(x[i], drp->cost[i]);
        model.add_constraint(lhs, Sense::le, drp->donor_budget, "leader_budget");
    }
    // the appendix toy has no leader constraint
}

struct FollowerPart {
    std::vector<int> y;  // y0 last for DRP
    LinExpr f;           // follower objective
    LinExpr F;           // leader objective
};

/// Follower variables, feasibility rows g(x,y) >= 0, and both objectives with
/// bilinear x*y terms linearized exactly.
FollowerPart add_follower(Model& model, const Instance& inst, const std::vector<int>& x) {
    FollowerPart part;
    if (const auto* kip = std::get_if<KipInstance>(&inst)) {
        LinExpr wsum;
        for (int i = 0; i < kip->n; ++i) {
            int y = model.add_binary("y" + std::to_string(i));
            part.y.push_back(y);
            model.add_constraint(var_expr(y) + var_expr(x[static_cast<size_t>(i)]), Sense::le,
                                 1.0, "ymask" + std::to_string(i));
            wsum.add(y, kip->weight[static_cast<size_t>(i)]);
            part.f.add(y, kip->profit[static_cast<size_t>(i)]);
        }
        model.add_constraint(wsum, Sense::le, kip->capacity, "follower_budget");
        part.F = part.f;
    } else if (const auto* cnp = std::get_if<CnpInstance>(&inst)) {
        LinExpr csum;
        for (int i = 0; i < cnp->n; ++i) {
            auto idx = static_cast<size_t>(i);
            int y = model.add_binary("y" + std::to_string(i));
            part.y.push_back(y);
            csum.add(y, cnp->attacker_cost[idx]);
            int z = embed::linearize_product(model, x[idx], y, "z" + std::to_string(i));
            double pa = cnp->attacker_profit[idx], pd = cnp->defender_profit[idx];
            // attacker: pa * (-gamma(1-x)(1-y) + (1-x)y + (1-eta)xy), expanded in z = xy
            part.f += LinExpr{-cnp->gamma * pa};
            part.f.add(x[idx], cnp->gamma * pa);
            part.f.add(y, (1.0 + cnp->gamma) * pa);
            part.f.add(z, -(cnp->gamma + cnp->eta) * pa);
            // defender: pd * ((1-x)(1-y) + eta*xy + eps*x(1-y) + delta*(1-x)y)
            part.F += LinExpr{pd};
            part.F.add(x[idx], (cnp->epsilon - 1.0) * pd);
            part.F.add(y, (cnp->delta - 1.0) * pd);
            part.F.add(z, (1.0 + cnp->eta - cnp->epsilon - cnp->delta) * pd);
        }
        model.add_constraint(csum, Sense::le, cnp->attacker_budget, "follower_budget");
    } else if (const auto* drp = std::get_if<DrpInstance>(&inst)) {
        LinExpr csum;
        for (int i = 0; i < drp->n; ++i) {
            auto idx = static_cast<size_t>(i);
            int y = model.add_binary("y" + std::to_string(i));
            part.y.push_back(y);
            int z = embed::linearize_product(model, x[idx], y, "z" + std::to_string(i));
            // c_i (1 - x_i) y_i = c_i (y_i - z_i)
            csum.add(y, drp->cost[idx]);
            csum.add(z, -drp->cost[idx]);
            part.f.add(y, drp->recipient_profit[idx]);
            part.F.add(y, drp->donor_profit[idx]);
        }
        int y0 = model.add_continuous("y0", 0.0, 1.0);
        part.y.push_back(y0);
        csum.add(y0, drp->external_cost);
        part.f.add(y0, drp->external_profit);
        model.add_constraint(csum, Sense::le, drp->recipient_budget, "follower_budget");
    } else {
        int y = model.add_binary("y0");
        part.y.push_back(y);
        model.add_constraint(var_expr(y) + var_expr(x[0]) * 2.0, Sense::le, 1.0,
                             "follower_row");
        part.f.add(y, 1.0);
        part.F = part.f;
    }
    return part;
}

milp::ObjSense leader_sense(const Instance& inst) {
    return leader_maximizes(kind_of(inst)) ? milp::ObjSense::maximize
                                           : milp::ObjSense::minimize;
}

}  // namespace

NetworkPredictor::NetworkPredictor(mlp::SetNetwork net) : net_(std::move(net)) {
    if (net_.feature_config.is_null() || net_.feature_config.empty())
        throw SurrogateError("network carries no feature configuration");
    fc_ = dataset::feature_config_from_json(net_.feature_config);
}

bool NetworkPredictor::needs_greedy() const {
    return fc_.kind == Kind::kip && fc_.use_greedy_features;
}

double NetworkPredictor::predict(const Instance& inst, const LeaderDecision& x) const {
    mlp::Sample s;
    s.statics = dataset::apply_scaling(fc_, dataset::features_static(inst, fc_), false);
    s.decisions = dataset::apply_scaling(fc_, dataset::features_decision(inst, fc_, x), true);
    s.coeff = dataset::aggregation_coefficients(inst, net_.prediction_target);
    s.mask.assign(x.size(), 1.0);
    if (fc_.kind == Kind::kip)
        for (size_t i = 0; i < x.size(); ++i) s.mask[i] = 1.0 - x[i];
    return mlp::forward(net_, s);
}

milp::LinExpr NetworkPredictor::encode(Model& model, const Instance& inst,
                                       const std::vector<int>& x_vars,
                                       const std::vector<int>& greedy_y, int* binaries) const {
    if (kind_of(inst) != fc_.kind) throw SurrogateError("network/instance kind mismatch");
    auto statics = dataset::apply_scaling(fc_, dataset::features_static(inst, fc_), false);
    std::vector<double> pooled(static_cast<size_t>(net_.psi_d.out.out_dim()), 0.0);
    for (const auto& row : statics) {
        auto d = mlp::mlp2_eval(net_.psi_d, row);
        for (size_t j = 0; j < pooled.size(); ++j) pooled[j] += d[j];
    }
    auto emb = mlp::mlp2_eval(net_.psi_s, pooled);

    std::vector<std::vector<LinExpr>> inputs;
    size_t n = statics.size();
    for (size_t i = 0; i < n; ++i) {
        std::vector<LinExpr> row;
        LinExpr xi = var_expr(x_vars[i]);
        if (fc_.kind == Kind::kip) {
            // masked inputs (1-x_i) * concat(h, E); x_i(1-x_i) vanishes for
            // binary x and y^g(1-x_i) = y^g because the greedy mask row
            // already enforces y^g <= 1-x.
            for (double sf : statics[i]) {
                LinExpr e{sf};
                e.add(x_vars[i], -sf);
                row.push_back(std::move(e));
            }
            row.emplace_back(0.0);
            if (fc_.use_greedy_features) {
                if (greedy_y.size() != n)
                    throw SurrogateError("greedy response variables required for KIP features");
                row.push_back(var_expr(greedy_y[i]));
            }
            for (double ek : emb) {
                LinExpr e{ek};
                e.add(x_vars[i], -ek);
                row.push_back(std::move(e));
            }
        } else {
            for (double sf : statics[i]) row.emplace_back(sf);
            if (fc_.kind == Kind::cnp) {
                const auto& cnp = std::get<CnpInstance>(inst);
                row.push_back(xi);
                LinExpr t1{-cnp.gamma};
                t1.add(x_vars[i], cnp.gamma);
                row.push_back(std::move(t1));
                LinExpr t2{1.0};
                t2.add(x_vars[i], -1.0);
                row.push_back(std::move(t2));
                row.push_back(xi * (1.0 - cnp.eta));
            } else {
                row.push_back(xi);
            }
            for (double ek : emb) row.emplace_back(ek);
        }
        inputs.push_back(std::move(row));
    }
    auto coeff = dataset::aggregation_coefficients(inst, net_.prediction_target);
    // For KIP every input row is affine in the two binaries (x_i, y^g_i),
    // which only realize (0,0), (0,1) and (1,0): enumerating that support
    // gives exact per-neuron bounds, so most phase binaries fold away and
    // the remaining big-M constants are tight.
    std::vector<std::vector<std::vector<double>>> supports;
    const std::vector<std::vector<std::vector<double>>>* supports_ptr = nullptr;
    if (fc_.kind == Kind::kip) {
        for (size_t i = 0; i < n; ++i) {
            auto eval_at = [&](const LinExpr& e, double xi, double gi) {
                double v = e.constant;
                for (const auto& [var, c] : e.terms) {
                    if (var == x_vars[i])
                        v += c * xi;
                    else if (fc_.use_greedy_features && var == greedy_y[i])
                        v += c * gi;
                }
                return v;
            };
            std::vector<std::vector<double>> pts;
            for (auto [xi, gi] : {std::pair{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}}) {
                std::vector<double> pt;
                for (const auto& e : inputs[i]) pt.push_back(eval_at(e, xi, gi));
                pts.push_back(std::move(pt));
            }
            supports.push_back(std::move(pts));
        }
        supports_ptr = &supports;
    }
    auto enc = embed::encode_set_network(model, net_, inputs, coeff, "nn", supports_ptr);
    if (binaries) *binaries += enc.binaries;
    return enc.output;
}

double AffinePredictor::predict(const Instance&, const LeaderDecision& x) const {
    double v = c0_;
    for (size_t i = 0; i < c_.size(); ++i) v += c_[i] * x[i];
    return v;
}

milp::LinExpr AffinePredictor::encode(Model&, const Instance&, const std::vector<int>& x_vars,
                                      const std::vector<int>&, int*) const {
    LinExpr e{c0_};
    for (size_t i = 0; i < c_.size(); ++i) e.add(x_vars[i], c_[i]);
    return e;
}

BuiltModel build_upper(const Instance& inst, const Predictor& pred) {
    BuiltModel built;
    built.x_vars = add_leader_vars(built.model, inst);
    add_leader_budget(built.model, inst, built.x_vars);
    std::vector<int> greedy_y;
    if (pred.needs_greedy()) {
        const auto* kip = std::get_if<KipInstance>(&inst);
        if (!kip) throw SurrogateError("greedy features are KIP-only");
        greedy_y = embed::encode_greedy(built.model, *kip, built.x_vars).y;
    }
    auto nn = pred.encode(built.model, inst, built.x_vars, greedy_y, &built.binaries);
    built.model.set_objective(nn, leader_sense(inst));
    return built;
}

BuiltModel build_lower(const Instance& inst, const Predictor& pred, const SurrogateConfig& cfg) {
    if (cfg.lambda < 0) throw SurrogateError("slack penalty must be nonnegative");
    BuiltModel built;
    Model& model = built.model;
    built.x_vars = add_leader_vars(model, inst);
    add_leader_budget(model, inst, built.x_vars);
    auto part = add_follower(model, inst, built.x_vars);
    built.y_vars = part.y;

    std::vector<int> greedy_y;
    if (pred.needs_greedy()) {
        const auto* kip = std::get_if<KipInstance>(&inst);
        if (!kip) throw SurrogateError("greedy features are KIP-only");
        greedy_y = embed::encode_greedy(model, *kip, built.x_vars).y;
    }
    auto nn = pred.encode(model, inst, built.x_vars, greedy_y, &built.binaries);

    LinExpr objective = part.F;
    bool maximize = leader_maximizes(kind_of(inst));
    if (cfg.slack_mode == SlackMode::slack) {
        auto nn_bounds = embed::expr_bounds(model, nn);
        auto f_bounds = embed::expr_bounds(model, part.f);
        double s_ub = std::max(1.0, nn_bounds.hi - f_bounds.lo);
        built.slack_var = model.add_continuous("s", 0.0, s_ub);
        // f(x,y) >= NN - s
        model.add_constraint(part.f + var_expr(built.slack_var) + nn * -1.0, Sense::ge, 0.0,
                             "value_function");
        objective += var_expr(built.slack_var) * (maximize ? -cfg.lambda : cfg.lambda);
    } else {
        LinExpr rhs = nn;
        if (cfg.slack_mode == SlackMode::dampened) {
            if (cfg.dampening < 0)
                throw SurrogateError("dampened mode needs a nonnegative dampening constant");
            rhs += LinExpr{-cfg.dampening};
        }
        model.add_constraint(part.f + rhs * -1.0, Sense::ge, 0.0, "value_function");
    }
    model.set_objective(objective, maximize ? milp::ObjSense::maximize
                                            : milp::ObjSense::minimize);
    return built;
}

BuiltModel build_gvfa(const KipInstance& inst) {
    BuiltModel built;
    Model& model = built.model;
    Instance wrapped{inst};
    built.x_vars = add_leader_vars(model, wrapped);
    add_leader_budget(model, wrapped, built.x_vars);
    auto part = add_follower(model, wrapped, built.x_vars);
    built.y_vars = part.y;
    auto greedy = embed::encode_greedy(model, inst, built.x_vars);
    // p.y >= greedy value: the greedy response itself is a witness, so no slack
    model.add_constraint(part.f + greedy.value * -1.0, Sense::ge, 0.0, "value_function");
    model.set_objective(part.F, milp::ObjSense::minimize);
    return built;
}

LowerResponse solve_lower_fixed(const Instance& inst, const Predictor& pred,
                                const SurrogateConfig& cfg, const LeaderDecision& x) {
    if (!leader_feasible(inst, x)) throw SurrogateError("solve_lower_fixed: infeasible x");
    double nn = pred.predict(inst, x);
    if (cfg.slack_mode == SlackMode::dampened) {
        if (cfg.dampening < 0)
            throw SurrogateError("dampened mode needs a nonnegative dampening constant");
        nn -= cfg.dampening;
    }

    Model model;
    std::vector<int> xv;
    // leader variables fixed to the probe point; keeps the row builders shared
    for (size_t i = 0; i < x.size(); ++i) {
        int v = model.add_continuous("x" + std::to_string(i), x[i], x[i]);
        xv.push_back(v);
    }
    auto part = add_follower(model, inst, xv);
    LinExpr objective = part.F;
    bool maximize = leader_maximizes(kind_of(inst));
    int slack = -1;
    if (cfg.slack_mode == SlackMode::slack) {
        auto f_bounds = embed::expr_bounds(model, part.f);
        slack = model.add_continuous("s", 0.0, std::max(1.0, nn - f_bounds.lo));
        model.add_constraint(part.f + var_expr(slack), Sense::ge, nn, "value_function");
        objective += var_expr(slack) * (maximize ? -cfg.lambda : cfg.lambda);
    } else {
        model.add_constraint(part.f, Sense::ge, nn, "value_function");
    }
    model.set_objective(objective, maximize ? milp::ObjSense::maximize
                                            : milp::ObjSense::minimize);
    auto sol = milp::solve(model, cfg.milp);
    LowerResponse resp;
    if (sol.status != milp::Status::optimal) {
        resp.feasible = false;
        return resp;
    }
    for (int y : part.y) resp.y.push_back(sol.assignment[static_cast<size_t>(y)]);
    for (size_t i = 0; i + (std::holds_alternative<DrpInstance>(inst) ? 1 : 0) < resp.y.size();
         ++i)
        resp.y[i] = std::round(resp.y[i]);
    resp.follower_value = follower_objective(inst, x, resp.y);
    resp.leader_value = leader_objective(inst, x, resp.y);
    if (slack >= 0) resp.slack = sol.assignment[static_cast<size_t>(slack)];
    return resp;
}

EndToEndResult solve_end_to_end(const Instance& inst, const Predictor& pred,
                                const SurrogateConfig& cfg) {
    using clock = std::chrono::steady_clock;
    EndToEndResult res;
    auto t0 = clock::now();
    BuiltModel built;
    switch (cfg.approx) {
        case Approx::upper: built = build_upper(inst, pred); break;
        case Approx::lower: built = build_lower(inst, pred, cfg); break;
        case Approx::gvfa: {
            const auto* kip = std::get_if<KipInstance>(&inst);
            if (!kip) throw SurrogateError("the greedy value-function baseline is KIP-only");
            built = build_gvfa(*kip);
            break;
        }
    }
    res.binaries = built.binaries;
    auto sol = milp::solve(built.model, cfg.milp);
    res.surrogate_time_s = std::chrono::duration<double>(clock::now() - t0).count();
    res.milp_status = sol.status;
    res.nodes = sol.nodes;
    if (sol.assignment.empty()) {
        res.solution.status = BilevelStatus::infeasible;
        res.solution.wall_time = res.surrogate_time_s;
        return res;
    }
    res.surrogate_objective = sol.value;

    LeaderDecision x;
    bool continuous = std::holds_alternative<DrpInstance>(inst);
    for (int v : built.x_vars) {
        double val = sol.assignment[static_cast<size_t>(v)];
        x.push_back(continuous ? std::clamp(val, 0.0, 1.0) : std::round(val));
    }
    if (const auto* drp = std::get_if<DrpInstance>(&inst)) {
        double spend = 0;
        for (size_t i = 0; i < x.size(); ++i) spend += drp->cost[i] * x[i];
        if (spend > drp->donor_budget && spend > 0) {
            double shrink = drp->donor_budget / spend;
            for (auto& v : x) v *= shrink;
        }
    }

    auto t1 = clock::now();
    res.solution = repair(inst, x);
    res.repair_time_s = std::chrono::duration<double>(clock::now() - t1).count();
    res.solution.wall_time = std::chrono::duration<double>(clock::now() - t0).count();
    return res;
}

}  // namespace bilo::surrogate
