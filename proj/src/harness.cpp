#include "bilo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace bilo::harness {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string status_name(BilevelStatus s) {
    switch (s) {
        case BilevelStatus::optimal: return "optimal";
        case BilevelStatus::grid_optimal: return "grid_optimal";
        case BilevelStatus::heuristic: return "heuristic";
        case BilevelStatus::infeasible: return "infeasible";
    }
    return "?";
}

std::string fmt17(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double relative_error(double obj, double best) {
    if (best == 0.0) return obj == 0.0 ? 0.0 : kNan;
    return 100.0 * std::abs(obj - best) / std::abs(best);
}

EvalResult evaluate(const std::vector<std::pair<std::string, Instance>>& instances,
                    const EvalConfig& cfg) {
    using clock = std::chrono::steady_clock;
    EvalResult res;
    for (const auto& [id, inst] : instances) {
        std::vector<MethodResult> rows;
        for (const auto& method : cfg.methods) {
            MethodResult row;
            row.instance_id = id;
            row.method = method;
            try {
                if (method == "bruteforce") {
                    auto t0 = clock::now();
                    auto sol = solve_bruteforce(inst);
                    row.surrogate_time_s = std::chrono::duration<double>(clock::now() - t0).count();
                    row.objective = sol.leader_value;
                    row.status = status_name(sol.status);
                } else {
                    auto sc = cfg.surrogate;
                    const surrogate::Predictor* pred = nullptr;
                    if (method == "NN_l") {
                        sc.approx = surrogate::Approx::lower;
                        pred = cfg.lower;
                    } else if (method == "NN_u") {
                        sc.approx = surrogate::Approx::upper;
                        pred = cfg.upper;
                    } else if (method == "GVFA") {
                        sc.approx = surrogate::Approx::gvfa;
                        pred = cfg.lower ? cfg.lower : cfg.upper;
                    } else {
                        throw HarnessError("unknown method: " + method);
                    }
                    if (!pred && method != "GVFA")
                        throw HarnessError("no predictor configured for " + method);
                    static const surrogate::AffinePredictor kNoop(0.0, {});
                    auto r = surrogate::solve_end_to_end(inst, pred ? *pred : kNoop, sc);
                    row.surrogate_time_s = r.surrogate_time_s;
                    row.repair_time_s = r.repair_time_s;
                    row.status = status_name(r.solution.status);
                    row.objective = r.solution.status == BilevelStatus::infeasible
                                        ? kNan
                                        : r.solution.leader_value;
                }
            } catch (const std::exception& e) {
                row.objective = kNan;
                row.status = std::string("error: ") + e.what();
            }
            if (!cfg.record_times) {
                row.surrogate_time_s = 0;
                row.repair_time_s = 0;
            }
            rows.push_back(std::move(row));
        }

        double best = kNan;
        bool maximize = leader_maximizes(kind_of(inst));
        for (const auto& row : rows) {
            if (std::isnan(row.objective)) continue;
            if (row.method == "bruteforce" &&
                (row.status == "optimal" || row.status == "grid_optimal")) {
                best = row.objective;
                break;
            }
        }
        if (std::isnan(best))
            for (const auto& row : rows) {
                if (std::isnan(row.objective)) continue;
                if (std::isnan(best) || (maximize ? row.objective > best : row.objective < best))
                    best = row.objective;
            }
        for (auto& row : rows)
            row.mre_pct = std::isnan(row.objective) || std::isnan(best)
                              ? kNan
                              : relative_error(row.objective, best);
        for (auto& row : rows) res.rows.push_back(std::move(row));
    }

    std::stable_sort(res.rows.begin(), res.rows.end(), [](const auto& a, const auto& b) {
        return std::tie(a.instance_id, a.method) < std::tie(b.instance_id, b.method);
    });

    for (const auto& method : cfg.methods) {
        MethodSummary sum;
        sum.method = method;
        for (const auto& row : res.rows) {
            if (row.method != method || std::isnan(row.mre_pct)) continue;
            ++sum.count;
            sum.mre_pct += row.mre_pct;
            sum.mean_surrogate_time_s += row.surrogate_time_s;
            sum.mean_repair_time_s += row.repair_time_s;
        }
        if (sum.count > 0) {
            sum.mre_pct /= sum.count;
            sum.mean_surrogate_time_s /= sum.count;
            sum.mean_repair_time_s /= sum.count;
        }
        res.summary.push_back(std::move(sum));
    }
    return res;
}

std::string to_csv(const EvalResult& result) {
    std::ostringstream out;
    out << "instance_id,method,objective,mre_pct,surrogate_time_s,repair_time_s,status\n";
    for (const auto& row : result.rows)
        out << row.instance_id << ',' << row.method << ',' << fmt17(row.objective) << ','
            << fmt17(row.mre_pct) << ',' << fmt17(row.surrogate_time_s) << ','
            << fmt17(row.repair_time_s) << ',' << row.status << '\n';
    return out.str();
}

EvalResult from_csv(const std::string& text) {
    EvalResult res;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        while (fields.size() < 7) fields.emplace_back();
        auto num = [](const std::string& s) { return s.empty() ? kNan : std::stod(s); };
        MethodResult row;
        row.instance_id = fields[0];
        row.method = fields[1];
        row.objective = num(fields[2]);
        row.mre_pct = num(fields[3]);
        row.surrogate_time_s = num(fields[4]);
        row.repair_time_s = num(fields[5]);
        row.status = fields[6];
        res.rows.push_back(std::move(row));
    }
    return res;
}

std::string summary_table(const EvalResult& result) {
    std::ostringstream out;
    char buf[128];
    out << "method        n    MRE%   sur_s   rep_s\n";
    for (const auto& s : result.summary) {
        std::snprintf(buf, sizeof buf, "%-12s %3d %7.2f %7.2f %7.2f\n", s.method.c_str(),
                      s.count, s.mre_pct, s.mean_surrogate_time_s, s.mean_repair_time_s);
        out << buf;
    }
    return out.str();
}

double compute_delta(const KipInstance& inst) {
    if (inst.n > 12) throw HarnessError("delta enumeration capped at 12 follower variables");
    Instance wrapped{inst};
    auto xs = enumerate_leader_decisions(wrapped, 1 << 20);
    double delta = 0;
    for (const auto& x : xs) {
        // achievable follower values at x: all feasible packings of free items
        std::vector<double> values;
        int n = inst.n;
        for (int mask = 0; mask < (1 << n); ++mask) {
            double w = 0, p = 0;
            bool ok = true;
            for (int i = 0; i < n && ok; ++i) {
                if (!(mask >> i & 1)) continue;
                if (x[static_cast<size_t>(i)] > 0.5) ok = false;
                w += inst.weight[static_cast<size_t>(i)];
                p += inst.profit[static_cast<size_t>(i)];
            }
            if (ok && w <= inst.capacity) values.push_back(p);
        }
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end(),
                                 [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                     values.end());
        for (size_t j = 1; j < values.size(); ++j)
            delta = std::max(delta, values[j] - values[j - 1]);
    }
    return delta;
}

BoundReport verify_theorem1(const KipInstance& inst, const surrogate::Predictor& pred,
                            const surrogate::SurrogateConfig& cfg) {
    if (cfg.lambda <= 1.0) throw HarnessError("the bound requires lambda > 1");
    Instance wrapped{inst};
    BoundReport rep;
    rep.instance_id = "kip-s" + std::to_string(inst.seed);
    rep.lambda = cfg.lambda;
    rep.delta = compute_delta(inst);

    auto xs = enumerate_leader_decisions(wrapped, 1 << 20);
    double best_obj = std::numeric_limits<double>::infinity();
    LeaderDecision best_x;
    for (const auto& x : xs) {
        double nn = pred.predict(wrapped, x);
        double phi = solve_follower(wrapped, x).value;
        rep.alpha = std::max(rep.alpha, std::abs(nn - phi));
        auto resp = surrogate::solve_lower_fixed(wrapped, pred, cfg, x);
        if (!resp.feasible) continue;
        double obj = resp.leader_value + cfg.lambda * resp.slack;
        if (obj < best_obj - 1e-12) {
            best_obj = obj;
            best_x = x;
        }
    }
    if (best_x.empty()) throw HarnessError("surrogate had no feasible leader decision");

    rep.opt = solve_bruteforce(wrapped).leader_value;
    rep.achieved = repair(wrapped, best_x).follower_value;
    rep.bound = rep.opt + 3.0 * rep.alpha + (2.0 / cfg.lambda) * rep.delta;
    rep.holds = rep.achieved <= rep.bound + 1e-6;
    return rep;
}

Lemma1Report verify_lemma1(const KipInstance& inst, const surrogate::Predictor& pred,
                           const surrogate::SurrogateConfig& cfg) {
    if (cfg.lambda <= 1.0) throw HarnessError("the bound requires lambda > 1");
    Instance wrapped{inst};
    Lemma1Report rep;
    rep.instance_id = "kip-s" + std::to_string(inst.seed);
    rep.delta = compute_delta(inst);
    rep.holds = true;
    for (const auto& x : enumerate_leader_decisions(wrapped, 1 << 20)) {
        LemmaCase c;
        c.x = x;
        c.nn = pred.predict(wrapped, x);
        c.phi = solve_follower(wrapped, x).value;
        auto resp = surrogate::solve_lower_fixed(wrapped, pred, cfg, x);
        c.response = resp.follower_value;
        if (c.nn >= c.phi) {
            c.which = 1;
            c.holds = std::abs(c.response - c.phi) <= 1e-6;
        } else {
            c.which = 2;
            c.holds = c.nn - rep.delta / cfg.lambda <= c.response + 1e-6 &&
                      c.response <= c.phi + 1e-6;
        }
        rep.holds = rep.holds && c.holds;
        rep.cases.push_back(std::move(c));
    }
    return rep;
}

nlohmann::json bound_report_to_json(const BoundReport& r) {
    return {{"instance_id", r.instance_id}, {"alpha", r.alpha},   {"delta", r.delta},
            {"opt", r.opt},                 {"achieved", r.achieved}, {"lambda", r.lambda},
            {"bound", r.bound},             {"holds", r.holds}};
}

nlohmann::json lemma_report_to_json(const Lemma1Report& r) {
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& c : r.cases)
        cases.push_back({{"x", c.x},
                         {"case", c.which},
                         {"nn", c.nn},
                         {"phi", c.phi},
                         {"response", c.response},
                         {"holds", c.holds}});
    return {{"instance_id", r.instance_id}, {"delta", r.delta}, {"cases", cases},
            {"holds", r.holds}};
}

}  // namespace bilo::harness
