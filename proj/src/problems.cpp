#include "bilo/problems.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace bilo {

namespace {

void check_dim(const char* who, size_t got, size_t want) {
    if (got != want)
        throw ParameterError(std::string(who) + ": dimension mismatch (got " +
                             std::to_string(got) + ", expected " + std::to_string(want) + ")");
}

bool is_binary(double v) { return v == 0.0 || v == 1.0; }

}  // namespace

std::string to_string(Kind k) {
    switch (k) {
        case Kind::kip: return "kip";
        case Kind::cnp: return "cnp";
        case Kind::drp: return "drp";
        case Kind::toy: return "toy";
    }
    return "?";
}

Kind kind_from_string(const std::string& s) {
    if (s == "kip") return Kind::kip;
    if (s == "cnp") return Kind::cnp;
    if (s == "drp") return Kind::drp;
    if (s == "toy") return Kind::toy;
    throw ParameterError("unknown problem kind '" + s + "'");
}

Kind kind_of(const Instance& inst) {
    return std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, KipInstance>) return Kind::kip;
            else if constexpr (std::is_same_v<T, CnpInstance>) return Kind::cnp;
            else if constexpr (std::is_same_v<T, DrpInstance>) return Kind::drp;
            else return Kind::toy;
        },
        inst);
}

int dimension(const Instance& inst) {
    return std::visit(
        [](const auto& v) -> int {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ToyInstance>) return 1;
            else return v.n;
        },
        inst);
}

int follower_dimension(const Instance& inst) {
    if (kind_of(inst) == Kind::drp) return dimension(inst) + 1;  // + external y0
    return dimension(inst);
}

bool leader_maximizes(Kind k) { return k == Kind::cnp || k == Kind::drp; }

Instance generate_instance(Kind kind, const GenSize& size, std::uint64_t seed) {
    if (kind == Kind::toy) return ToyInstance{};
    if (size.n < 1) throw ParameterError("generate_instance: n must be >= 1");
    std::mt19937_64 rng(seed);
    switch (kind) {
        case Kind::kip: {
            KipInstance inst;
            inst.n = size.n;
            inst.seed = seed;
            std::uniform_int_distribution<int> coeff(1, 100);
            for (int i = 0; i < size.n; ++i) inst.profit.push_back(coeff(rng));
            for (int i = 0; i < size.n; ++i) inst.weight.push_back(coeff(rng));
            long total = std::accumulate(inst.weight.begin(), inst.weight.end(), 0L);
            inst.capacity = static_cast<int>(std::lround(0.5 * static_cast<double>(total)));
            if (size.k >= 0) {
                if (size.k > size.n) throw ParameterError("generate_instance: k > n");
                inst.budget = size.k;
            } else {
                // Budget triple {n/4, n/2, 3n/4}, rotated by seed.
                int opts[3] = {static_cast<int>(std::ceil(size.n / 4.0)),
                               static_cast<int>(std::ceil(size.n / 2.0)),
                               static_cast<int>(std::ceil(3.0 * size.n / 4.0))};
                inst.budget = opts[seed % 3];
            }
            return inst;
        }
        case Kind::cnp: {
            CnpInstance inst;
            inst.n = size.n;
            inst.seed = seed;
            std::uniform_int_distribution<int> cost(1, 25), profit(1, 100);
            for (int i = 0; i < size.n; ++i) inst.defender_cost.push_back(cost(rng));
            for (int i = 0; i < size.n; ++i) inst.attacker_cost.push_back(cost(rng));
            for (int i = 0; i < size.n; ++i) inst.defender_profit.push_back(profit(rng));
            for (int i = 0; i < size.n; ++i) inst.attacker_profit.push_back(profit(rng));
            long dsum = std::accumulate(inst.defender_cost.begin(), inst.defender_cost.end(), 0L);
            long asum = std::accumulate(inst.attacker_cost.begin(), inst.attacker_cost.end(), 0L);
            inst.defender_budget = static_cast<int>(std::lround(0.3 * static_cast<double>(dsum)));
            inst.attacker_budget = static_cast<int>(std::lround(0.3 * static_cast<double>(asum)));
            std::uniform_real_distribution<double> factor(0.05, 0.95);
            inst.gamma = factor(rng);
            inst.eta = factor(rng);
            inst.epsilon = factor(rng);
            inst.delta = factor(rng);
            return inst;
        }
        case Kind::drp: {
            DrpInstance inst;
            inst.n = size.n;
            inst.seed = seed;
            std::uniform_int_distribution<int> profit(1, 100), cost(1, 50);
            for (int i = 0; i < size.n; ++i) inst.donor_profit.push_back(profit(rng));
            for (int i = 0; i < size.n; ++i) inst.recipient_profit.push_back(profit(rng));
            for (int i = 0; i < size.n; ++i) inst.cost.push_back(cost(rng));
            double csum = std::accumulate(inst.cost.begin(), inst.cost.end(), 0.0);
            double vsum = std::accumulate(inst.recipient_profit.begin(), inst.recipient_profit.end(), 0.0);
            inst.external_cost = csum / size.n;
            inst.external_profit = vsum / size.n / 2.0;
            inst.donor_budget = 0.3 * csum;
            inst.recipient_budget = 0.5 * csum;
            return inst;
        }
        default:
            throw ParameterError("generate_instance: unsupported kind");
    }
}

bool leader_feasible(const Instance& inst, const LeaderDecision& x) {
    check_dim("leader_feasible", x.size(), static_cast<size_t>(dimension(inst)));
    return std::visit(
        [&](const auto& v) -> bool {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, KipInstance>) {
                double sum = 0;
                for (double xi : x) {
                    if (!is_binary(xi)) return false;
                    sum += xi;
                }
                return sum <= v.budget;
            } else if constexpr (std::is_same_v<T, CnpInstance>) {
                double sum = 0;
                for (int i = 0; i < v.n; ++i) {
                    if (!is_binary(x[static_cast<size_t>(i)])) return false;
                    sum += v.defender_cost[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
                }
                return sum <= v.defender_budget;
            } else if constexpr (std::is_same_v<T, DrpInstance>) {
                double sum = 0;
                for (int i = 0; i < v.n; ++i) {
                    double xi = x[static_cast<size_t>(i)];
                    if (xi < 0.0 || xi > 1.0) return false;
                    sum += v.cost[static_cast<size_t>(i)] * xi;
                }
                return sum <= v.donor_budget + 1e-9;
            } else {
                return is_binary(x[0]);
            }
        },
        inst);
}

double leader_objective(const Instance& inst, const LeaderDecision& x,
                        const FollowerDecision& y) {
    check_dim("leader_objective/x", x.size(), static_cast<size_t>(dimension(inst)));
    check_dim("leader_objective/y", y.size(), static_cast<size_t>(follower_dimension(inst)));
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, KipInstance>) {
                double s = 0;
                for (int i = 0; i < v.n; ++i) s += v.profit[static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
                return s;
            } else if constexpr (std::is_same_v<T, CnpInstance>) {
                double s = 0;
                for (int i = 0; i < v.n; ++i) {
                    double xi = x[static_cast<size_t>(i)], yi = y[static_cast<size_t>(i)];
                    s += v.defender_profit[static_cast<size_t>(i)] *
                         ((1 - xi) * (1 - yi) + v.eta * xi * yi + v.epsilon * xi * (1 - yi) +
                          v.delta * (1 - xi) * yi);
                }
                return s;
            } else if constexpr (std::is_same_v<T, DrpInstance>) {
                double s = 0;
                for (int i = 0; i < v.n; ++i) s += v.donor_profit[static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
                return s;
            } else {
                (void)x;
                return y[0];
            }
        },
        inst);
}

double follower_objective(const Instance& inst, const LeaderDecision& x,
                          const FollowerDecision& y) {
    check_dim("follower_objective/x", x.size(), static_cast<size_t>(dimension(inst)));
    check_dim("follower_objective/y", y.size(), static_cast<size_t>(follower_dimension(inst)));
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, KipInstance>) {
                double s = 0;
                for (int i = 0; i < v.n; ++i) s += v.profit[static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
                return s;
            } else if constexpr (std::is_same_v<T, CnpInstance>) {
                double s = 0;
                for (int i = 0; i < v.n; ++i) {
                    double xi = x[static_cast<size_t>(i)], yi = y[static_cast<size_t>(i)];
                    s += v.attacker_profit[static_cast<size_t>(i)] *
                         (-v.gamma * (1 - xi) * (1 - yi) + (1 - xi) * yi + (1 - v.eta) * xi * yi);
                }
                return s;
            } else if constexpr (std::is_same_v<T, DrpInstance>) {
                double s = v.external_profit * y[static_cast<size_t>(v.n)];
                for (int i = 0; i < v.n; ++i)
                    s += v.recipient_profit[static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
                return s;
            } else {
                (void)x;
                return y[0];
            }
        },
        inst);
}

bool follower_feasible(const Instance& inst, const LeaderDecision& x,
                       const FollowerDecision& y) {
    check_dim("follower_feasible/x", x.size(), static_cast<size_t>(dimension(inst)));
    check_dim("follower_feasible/y", y.size(), static_cast<size_t>(follower_dimension(inst)));
    return std::visit(
        [&](const auto& v) -> bool {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, KipInstance>) {
                double wsum = 0;
                for (int i = 0; i < v.n; ++i) {
                    double yi = y[static_cast<size_t>(i)];
                    if (!is_binary(yi)) return false;
                    if (yi + x[static_cast<size_t>(i)] > 1.0) return false;
                    wsum += v.weight[static_cast<size_t>(i)] * yi;
                }
                return wsum <= v.capacity;
            } else if constexpr (std::is_same_v<T, CnpInstance>) {
                double csum = 0;
                for (int i = 0; i < v.n; ++i) {
                    double yi = y[static_cast<size_t>(i)];
                    if (!is_binary(yi)) return false;
                    csum += v.attacker_cost[static_cast<size_t>(i)] * yi;
                }
                return csum <= v.attacker_budget;
            } else if constexpr (std::is_same_v<T, DrpInstance>) {
                double y0 = y[static_cast<size_t>(v.n)];
                if (y0 < -1e-9 || y0 > 1.0 + 1e-9) return false;
                double csum = v.external_cost * y0;
                for (int i = 0; i < v.n; ++i) {
                    double yi = y[static_cast<size_t>(i)];
                    if (!is_binary(yi)) return false;
                    csum += v.cost[static_cast<size_t>(i)] * (1.0 - x[static_cast<size_t>(i)]) * yi;
                }
                return csum <= v.recipient_budget + 1e-9;
            } else {
                if (!is_binary(y[0])) return false;
                return 2.0 * x[0] + y[0] <= 1.0;
            }
        },
        inst);
}

nlohmann::json instance_to_json(const Instance& inst) {
    nlohmann::json j;
    j["kind"] = to_string(kind_of(inst));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, KipInstance>) {
                j["n"] = v.n;
                j["profit"] = v.profit;
                j["weight"] = v.weight;
                j["capacity"] = v.capacity;
                j["budget"] = v.budget;
                j["seed"] = v.seed;
            } else if constexpr (std::is_same_v<T, CnpInstance>) {
                j["n"] = v.n;
                j["defender_profit"] = v.defender_profit;
                j["attacker_profit"] = v.attacker_profit;
                j["defender_cost"] = v.defender_cost;
                j["attacker_cost"] = v.attacker_cost;
                j["defender_budget"] = v.defender_budget;
                j["attacker_budget"] = v.attacker_budget;
                j["gamma"] = v.gamma;
                j["eta"] = v.eta;
                j["epsilon"] = v.epsilon;
                j["delta"] = v.delta;
                j["seed"] = v.seed;
            } else if constexpr (std::is_same_v<T, DrpInstance>) {
                j["n"] = v.n;
                j["donor_profit"] = v.donor_profit;
                j["recipient_profit"] = v.recipient_profit;
                j["cost"] = v.cost;
                j["external_profit"] = v.external_profit;
                j["external_cost"] = v.external_cost;
                j["donor_budget"] = v.donor_budget;
                j["recipient_budget"] = v.recipient_budget;
                j["seed"] = v.seed;
            }
        },
        inst);
    return j;
}

Instance instance_from_json(const nlohmann::json& j) {
    Kind kind = kind_from_string(j.at("kind").get<std::string>());
    switch (kind) {
        case Kind::kip: {
            KipInstance v;
            v.n = j.at("n").get<int>();
            v.profit = j.at("profit").get<std::vector<int>>();
            v.weight = j.at("weight").get<std::vector<int>>();
            v.capacity = j.at("capacity").get<int>();
            v.budget = j.at("budget").get<int>();
            v.seed = j.value("seed", std::uint64_t{0});
            return v;
        }
        case Kind::cnp: {
            CnpInstance v;
            v.n = j.at("n").get<int>();
            v.defender_profit = j.at("defender_profit").get<std::vector<double>>();
            v.attacker_profit = j.at("attacker_profit").get<std::vector<double>>();
            v.defender_cost = j.at("defender_cost").get<std::vector<int>>();
            v.attacker_cost = j.at("attacker_cost").get<std::vector<int>>();
            v.defender_budget = j.at("defender_budget").get<int>();
            v.attacker_budget = j.at("attacker_budget").get<int>();
            v.gamma = j.at("gamma").get<double>();
            v.eta = j.at("eta").get<double>();
            v.epsilon = j.at("epsilon").get<double>();
            v.delta = j.at("delta").get<double>();
            v.seed = j.value("seed", std::uint64_t{0});
            return v;
        }
        case Kind::drp: {
            DrpInstance v;
            v.n = j.at("n").get<int>();
            v.donor_profit = j.at("donor_profit").get<std::vector<double>>();
            v.recipient_profit = j.at("recipient_profit").get<std::vector<double>>();
            v.cost = j.at("cost").get<std::vector<double>>();
            v.external_profit = j.at("external_profit").get<double>();
            v.external_cost = j.at("external_cost").get<double>();
            v.donor_budget = j.at("donor_budget").get<double>();
            v.recipient_budget = j.at("recipient_budget").get<double>();
            v.seed = j.value("seed", std::uint64_t{0});
            return v;
        }
        case Kind::toy:
            return ToyInstance{};
    }
    throw ParameterError("instance_from_json: bad kind");
}

}  // namespace bilo
