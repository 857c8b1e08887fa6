#ifndef BILO_ORACLE_HPP
#define BILO_ORACLE_HPP

#include <optional>
#include <string>
#include <vector>

#include "bilo/problems.hpp"

namespace bilo {

class OracleError : public std::runtime_error {
public:
    explicit OracleError(const std::string& what) : std::runtime_error(what) {}
};

struct FollowerSolution {
    FollowerDecision y;
    double value = 0.0;   // f(x, y)
    bool optimal = true;
    bool feasible = true; // false only when the follower problem is empty (toy, x=1)
};

enum class BilevelStatus { optimal, grid_optimal, heuristic, infeasible };

std::string to_string(BilevelStatus s);

struct BilevelSolution {
    LeaderDecision x;
    FollowerDecision y;
    double leader_value = 0.0;
    double follower_value = 0.0;
    BilevelStatus status = BilevelStatus::infeasible;
    double wall_time = 0.0;
};

/// Exact follower optimum Phi(x). KIP and CNP are solved by knapsack dynamic
/// programming over the integer capacity; DRP by the embedded MILP solver.
FollowerSolution solve_follower(const Instance& inst, const LeaderDecision& x);

/// Item order used by every ratio-greedy pass: profit/weight descending,
/// ties broken toward the lower index.
std::vector<int> greedy_item_order(const KipInstance& inst);

/// Ratio-greedy knapsack on the non-interdicted items; value <= Phi(x).
/// Ties in p_i/a_i break toward the lower index.
FollowerSolution greedy_knapsack(const KipInstance& inst, const LeaderDecision& x);

/// Bilevel-feasibility repair: computes Phi(x), then the optimistic follower
/// response (among follower optima, the one best for the leader).
BilevelSolution repair(const Instance& inst, const LeaderDecision& x);

/// Ground-truth bilevel optimum by enumerating all leader-feasible decisions.
/// Refuses (SizeError) if the enumeration would exceed `cap` decisions.
/// DRP enumerates the grid {0, 0.25, 0.5, 0.75, 1}^n and reports grid_optimal.
class SizeError : public std::runtime_error {
public:
    explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

BilevelSolution solve_bruteforce(const Instance& inst, std::int64_t cap = 2'000'000);

/// All leader-feasible decisions (the x-enumeration behind solve_bruteforce);
/// also used by the guarantee-verification suites.
std::vector<LeaderDecision> enumerate_leader_decisions(const Instance& inst, std::int64_t cap);

}  // namespace bilo

#endif
