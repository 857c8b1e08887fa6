#ifndef BILO_PROBLEMS_HPP
#define BILO_PROBLEMS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace bilo {

class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

enum class Kind { kip, cnp, drp, toy };

std::string to_string(Kind k);
Kind kind_from_string(const std::string& s);

/// Knapsack interdiction: the leader removes up to k items, the follower
/// packs the rest; both levels share the profit vector p.
struct KipInstance {
    int n = 0;
    std::vector<int> profit;   // p_i >= 1
    std::vector<int> weight;   // a_i >= 1
    int capacity = 0;          // b, follower knapsack budget
    int budget = 0;            // k, max interdicted items
    std::uint64_t seed = 0;
};

/// Critical node game: defender covers nodes, attacker strikes within its
/// budget; payoffs mix the four defend/attack outcomes.
struct CnpInstance {
    int n = 0;
    std::vector<double> defender_profit;  // p^d_i
    std::vector<double> attacker_profit;  // p^a_i
    std::vector<int> defender_cost;       // d_i
    std::vector<int> attacker_cost;       // a_i
    int defender_budget = 0;              // D
    int attacker_budget = 0;              // A
    double gamma = 0.0, eta = 0.0, epsilon = 0.0, delta = 0.0;
    std::uint64_t seed = 0;
};

/// Donor-recipient budget allocation; the leader share x_i is continuous.
struct DrpInstance {
    int n = 0;
    std::vector<double> donor_profit;      // w_i
    std::vector<double> recipient_profit;  // v_i
    std::vector<double> cost;              // c_i
    double external_profit = 0.0;          // v_0
    double external_cost = 0.0;            // c_0
    double donor_budget = 0.0;             // B_d
    double recipient_budget = 0.0;         // B_r
    std::uint64_t seed = 0;
};

/// One-item interdiction toy (min y s.t. y in argmax{y : 2x + y <= 1}).
/// The follower is infeasible for x = 1; used to exercise repair and the
/// upper/lower surrogate contrast.
struct ToyInstance {};

using Instance = std::variant<KipInstance, CnpInstance, DrpInstance, ToyInstance>;

/// Leader decision: binary entries for KIP/CNP/toy, fractions in [0,1] for DRP.
using LeaderDecision = std::vector<double>;
/// Follower decision: length n, except DRP where entry n is the external y0.
using FollowerDecision = std::vector<double>;

Kind kind_of(const Instance& inst);
int dimension(const Instance& inst);            // leader variables
int follower_dimension(const Instance& inst);   // follower variables
/// True when the leader maximizes (CNP, DRP); KIP and the toy minimize.
bool leader_maximizes(Kind k);

struct GenSize {
    int n = 0;
    int k = -1;      // KIP interdiction budget; -1 picks from {n/4, n/2, 3n/4} by seed
};

/// Deterministic instance generator; identical (kind, size, seed) gives a
/// bitwise-identical instance.
Instance generate_instance(Kind kind, const GenSize& size, std::uint64_t seed);

bool leader_feasible(const Instance& inst, const LeaderDecision& x);
double leader_objective(const Instance& inst, const LeaderDecision& x,
                        const FollowerDecision& y);
double follower_objective(const Instance& inst, const LeaderDecision& x,
                          const FollowerDecision& y);

/// True iff y satisfies the follower constraints g(x, y) >= 0.
bool follower_feasible(const Instance& inst, const LeaderDecision& x,
                       const FollowerDecision& y);

nlohmann::json instance_to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& j);

}  // namespace bilo

#endif
