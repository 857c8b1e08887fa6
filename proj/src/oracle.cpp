#include "bilo/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "bilo/milp.hpp"

namespace bilo {

namespace {

/// 0/1 knapsack DP over integer capacity, maximizing real-valued gains.
/// Items with gain 0 and weight 0 are skipped implicitly by the recursion.
/// Returns the chosen subset via back-pointers.
struct KnapsackResult {
    std::vector<char> take;
    double value = 0.0;
};

KnapsackResult knapsack_dp(const std::vector<double>& gain, const std::vector<int>& weight,
                           int capacity) {
    const int n = static_cast<int>(gain.size());
    if (capacity < 0) throw OracleError("knapsack: negative capacity");
    for (int w : weight)
        if (w < 0) throw OracleError("knapsack: negative weight");
    const size_t cols = static_cast<size_t>(capacity) + 1;
    std::vector<double> dp(cols, 0.0);
    std::vector<char> took(static_cast<size_t>(n) * cols, 0);
    for (int i = 0; i < n; ++i) {
        const int w = weight[static_cast<size_t>(i)];
        const double g = gain[static_cast<size_t>(i)];
        char* row = took.data() + static_cast<size_t>(i) * cols;
        if (w > capacity) continue;
        for (int c = capacity; c >= w; --c) {
            double with = dp[static_cast<size_t>(c - w)] + g;
            if (with > dp[static_cast<size_t>(c)]) {
                dp[static_cast<size_t>(c)] = with;
                row[c] = 1;
            }
        }
    }
    KnapsackResult res;
    res.value = dp[static_cast<size_t>(capacity)];
    res.take.assign(static_cast<size_t>(n), 0);
    int c = capacity;
    for (int i = n - 1; i >= 0; --i) {
        if (took[static_cast<size_t>(i) * cols + static_cast<size_t>(c)]) {
            res.take[static_cast<size_t>(i)] = 1;
            c -= weight[static_cast<size_t>(i)];
        }
    }
    return res;
}

void require_leader(const Instance& inst, const LeaderDecision& x, const char* who) {
    if (static_cast<int>(x.size()) != dimension(inst))
        throw OracleError(std::string(who) + ": leader decision has wrong dimension");
}

milp::SolveConfig tight_milp() {
    milp::SolveConfig cfg;
    cfg.gap_tol = 1e-9;
    return cfg;
}

}  // namespace

std::string to_string(BilevelStatus s) {
    switch (s) {
        case BilevelStatus::optimal: return "optimal";
        case BilevelStatus::grid_optimal: return "grid-optimal";
        case BilevelStatus::heuristic: return "heuristic";
        case BilevelStatus::infeasible: return "infeasible";
    }
    return "?";
}

FollowerSolution solve_follower(const Instance& inst, const LeaderDecision& x) {
    require_leader(inst, x, "solve_follower");
    FollowerSolution sol;
    switch (kind_of(inst)) {
        case Kind::kip: {
            const auto& v = std::get<KipInstance>(inst);
            std::vector<double> gain(static_cast<size_t>(v.n));
            for (int i = 0; i < v.n; ++i)
                gain[static_cast<size_t>(i)] =
                    x[static_cast<size_t>(i)] == 0.0 ? v.profit[static_cast<size_t>(i)] : 0.0;
            std::vector<int> weight = v.weight;
            // Interdicted items are excluded outright, not just zeroed.
            for (int i = 0; i < v.n; ++i)
                if (x[static_cast<size_t>(i)] != 0.0) weight[static_cast<size_t>(i)] = v.capacity + 1;
            auto dp = knapsack_dp(gain, weight, v.capacity);
            sol.y.assign(dp.take.begin(), dp.take.end());
            sol.value = dp.value;
            break;
        }
        case Kind::cnp: {
            const auto& v = std::get<CnpInstance>(inst);
            std::vector<double> gain(static_cast<size_t>(v.n));
            double constant = 0.0;
            for (int i = 0; i < v.n; ++i) {
                double xi = x[static_cast<size_t>(i)];
                double pa = v.attacker_profit[static_cast<size_t>(i)];
                gain[static_cast<size_t>(i)] = pa * ((1 + v.gamma) * (1 - xi) + (1 - v.eta) * xi);
                constant += -v.gamma * pa * (1 - xi);
            }
            auto dp = knapsack_dp(gain, v.attacker_cost, v.attacker_budget);
            sol.y.assign(dp.take.begin(), dp.take.end());
            sol.value = dp.value + constant;
            break;
        }
        case Kind::drp: {
            const auto& v = std::get<DrpInstance>(inst);
            milp::Model m;
            std::vector<int> yv;
            for (int i = 0; i < v.n; ++i) yv.push_back(m.add_binary("y" + std::to_string(i)));
            int y0 = m.add_continuous("y0", 0, 1);
            milp::LinExpr budget, obj;
            for (int i = 0; i < v.n; ++i) {
                budget.add(yv[static_cast<size_t>(i)],
                           v.cost[static_cast<size_t>(i)] * (1.0 - x[static_cast<size_t>(i)]));
                obj.add(yv[static_cast<size_t>(i)], v.recipient_profit[static_cast<size_t>(i)]);
            }
            budget.add(y0, v.external_cost);
            obj.add(y0, v.external_profit);
            m.add_constraint(budget, milp::Sense::le, v.recipient_budget);
            m.set_objective(obj, milp::ObjSense::maximize);
            auto s = milp::solve(m, tight_milp());
            if (s.status != milp::Status::optimal)
                throw OracleError("solve_follower(drp): MILP status " + milp::to_string(s.status));
            sol.y.assign(s.assignment.begin(), s.assignment.end());
            sol.value = s.value;
            break;
        }
        case Kind::toy: {
            // max y s.t. 2x + y <= 1, y binary.
            if (x[0] != 0.0) {
                sol.feasible = false;
                sol.optimal = false;
                return sol;
            }
            sol.y = {1.0};
            sol.value = 1.0;
            break;
        }
    }
    return sol;
}

namespace {
// Ratio order shared with the MILP greedy encoding: strictly decreasing
// p_i/a_i, ties toward the lower index.
std::vector<int> ratio_order(const KipInstance& inst) {
    std::vector<int> order(static_cast<size_t>(inst.n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        double ra = static_cast<double>(inst.profit[static_cast<size_t>(a)]) / inst.weight[static_cast<size_t>(a)];
        double rb = static_cast<double>(inst.profit[static_cast<size_t>(b)]) / inst.weight[static_cast<size_t>(b)];
        return ra > rb;
    });
    return order;
}
}  // namespace

std::vector<int> greedy_item_order(const KipInstance& inst) { return ratio_order(inst); }

FollowerSolution greedy_knapsack(const KipInstance& inst, const LeaderDecision& x) {
    require_leader(inst, x, "greedy_knapsack");
    FollowerSolution sol;
    sol.optimal = false;
    sol.y.assign(static_cast<size_t>(inst.n), 0.0);
    int remaining = inst.capacity;
    for (int i : ratio_order(inst)) {
        if (x[static_cast<size_t>(i)] != 0.0) continue;
        if (inst.weight[static_cast<size_t>(i)] <= remaining) {
            sol.y[static_cast<size_t>(i)] = 1.0;
            remaining -= inst.weight[static_cast<size_t>(i)];
            sol.value += inst.profit[static_cast<size_t>(i)];
        }
    }
    return sol;
}

BilevelSolution repair(const Instance& inst, const LeaderDecision& x) {
    const auto t0 = std::chrono::steady_clock::now();
    BilevelSolution out;
    out.x = x;
    if (!leader_feasible(inst, x)) {
        out.status = BilevelStatus::infeasible;
        return out;
    }
    FollowerSolution phi = solve_follower(inst, x);
    if (!phi.feasible) {
        out.status = BilevelStatus::infeasible;
        return out;
    }
    switch (kind_of(inst)) {
        case Kind::kip:
        case Kind::toy:
            // Leader and follower objectives coincide: the follower optimum is
            // already the optimistic response.
            out.y = phi.y;
            break;
        case Kind::cnp: {
            const auto& v = std::get<CnpInstance>(inst);
            milp::Model m;
            std::vector<int> yv;
            for (int i = 0; i < v.n; ++i) yv.push_back(m.add_binary("y" + std::to_string(i)));
            milp::LinExpr budget, fexpr, lead;
            for (int i = 0; i < v.n; ++i) {
                double xi = x[static_cast<size_t>(i)];
                double pa = v.attacker_profit[static_cast<size_t>(i)];
                double pd = v.defender_profit[static_cast<size_t>(i)];
                budget.add(yv[static_cast<size_t>(i)], v.attacker_cost[static_cast<size_t>(i)]);
                // f and F as affine functions of y for this fixed x.
                fexpr.constant += -v.gamma * pa * (1 - xi);
                fexpr.add(yv[static_cast<size_t>(i)],
                          pa * ((1 + v.gamma) * (1 - xi) + (1 - v.eta) * xi));
                lead.constant += pd * ((1 - xi) + v.epsilon * xi);
                lead.add(yv[static_cast<size_t>(i)],
                         pd * (-(1 - xi) + v.eta * xi - v.epsilon * xi + v.delta * (1 - xi)));
            }
            m.add_constraint(budget, milp::Sense::le, v.attacker_budget);
            m.add_constraint(fexpr, milp::Sense::ge, phi.value - 1e-9);
            m.set_objective(lead, milp::ObjSense::maximize);
            auto s = milp::solve(m, tight_milp());
            if (s.status != milp::Status::optimal)
                throw OracleError("repair(cnp): MILP status " + milp::to_string(s.status));
            out.y.assign(s.assignment.begin(), s.assignment.end());
            break;
        }
        case Kind::drp: {
            const auto& v = std::get<DrpInstance>(inst);
            milp::Model m;
            std::vector<int> yv;
            for (int i = 0; i < v.n; ++i) yv.push_back(m.add_binary("y" + std::to_string(i)));
            int y0 = m.add_continuous("y0", 0, 1);
            milp::LinExpr budget, fexpr, lead;
            for (int i = 0; i < v.n; ++i) {
                budget.add(yv[static_cast<size_t>(i)],
                           v.cost[static_cast<size_t>(i)] * (1.0 - x[static_cast<size_t>(i)]));
                fexpr.add(yv[static_cast<size_t>(i)], v.recipient_profit[static_cast<size_t>(i)]);
                lead.add(yv[static_cast<size_t>(i)], v.donor_profit[static_cast<size_t>(i)]);
            }
            budget.add(y0, v.external_cost);
            fexpr.add(y0, v.external_profit);
            m.add_constraint(budget, milp::Sense::le, v.recipient_budget);
            m.add_constraint(fexpr, milp::Sense::ge, phi.value - 1e-9);
            m.set_objective(lead, milp::ObjSense::maximize);
            auto s = milp::solve(m, tight_milp());
            if (s.status != milp::Status::optimal)
                throw OracleError("repair(drp): MILP status " + milp::to_string(s.status));
            out.y.assign(s.assignment.begin(), s.assignment.end());
            break;
        }
    }
    out.leader_value = leader_objective(inst, x, out.y);
    out.follower_value = follower_objective(inst, x, out.y);
    out.status = BilevelStatus::heuristic;
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

namespace {

void enumerate_subsets_budgeted(int n, const std::vector<int>& cost, double budget,
                                std::int64_t cap, std::vector<LeaderDecision>& out) {
    LeaderDecision x(static_cast<size_t>(n), 0.0);
    // Depth-first over items in index order; prune on the budget.
    auto rec = [&](auto&& self, int i, double used) -> void {
        if (i == n) {
            if (static_cast<std::int64_t>(out.size()) >= cap)
                throw SizeError("leader enumeration exceeds cap");
            out.push_back(x);
            return;
        }
        self(self, i + 1, used);
        double c = cost.empty() ? 1.0 : cost[static_cast<size_t>(i)];
        if (used + c <= budget) {
            x[static_cast<size_t>(i)] = 1.0;
            self(self, i + 1, used + c);
            x[static_cast<size_t>(i)] = 0.0;
        }
    };
    rec(rec, 0, 0.0);
}

}  // namespace

std::vector<LeaderDecision> enumerate_leader_decisions(const Instance& inst, std::int64_t cap) {
    std::vector<LeaderDecision> out;
    switch (kind_of(inst)) {
        case Kind::kip: {
            const auto& v = std::get<KipInstance>(inst);
            enumerate_subsets_budgeted(v.n, {}, v.budget, cap, out);
            break;
        }
        case Kind::cnp: {
            const auto& v = std::get<CnpInstance>(inst);
            enumerate_subsets_budgeted(v.n, v.defender_cost, v.defender_budget, cap, out);
            break;
        }
        case Kind::drp: {
            const auto& v = std::get<DrpInstance>(inst);
            LeaderDecision x(static_cast<size_t>(v.n), 0.0);
            const double grid[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
            auto rec = [&](auto&& self, int i, double used) -> void {
                if (i == v.n) {
                    if (static_cast<std::int64_t>(out.size()) >= cap)
                        throw SizeError("leader grid enumeration exceeds cap");
                    out.push_back(x);
                    return;
                }
                for (double g : grid) {
                    double c = used + g * v.cost[static_cast<size_t>(i)];
                    if (c > v.donor_budget + 1e-9) break;
                    x[static_cast<size_t>(i)] = g;
                    self(self, i + 1, c);
                }
                x[static_cast<size_t>(i)] = 0.0;
            };
            rec(rec, 0, 0.0);
            break;
        }
        case Kind::toy:
            out.push_back({0.0});
            out.push_back({1.0});
            break;
    }
    return out;
}

BilevelSolution solve_bruteforce(const Instance& inst, std::int64_t cap) {
    const auto t0 = std::chrono::steady_clock::now();
    const Kind kind = kind_of(inst);
    const bool maximize = leader_maximizes(kind);
    auto decisions = enumerate_leader_decisions(inst, cap);
    BilevelSolution best;
    best.status = BilevelStatus::infeasible;
    bool have = false;
    for (const auto& x : decisions) {
        BilevelSolution cand = repair(inst, x);
        if (cand.status == BilevelStatus::infeasible) continue;
        if (!have || (maximize ? cand.leader_value > best.leader_value
                               : cand.leader_value < best.leader_value)) {
            best = cand;
            have = true;
        }
    }
    if (have)
        best.status = kind == Kind::drp ? BilevelStatus::grid_optimal : BilevelStatus::optimal;
    best.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return best;
}

}  // namespace bilo
