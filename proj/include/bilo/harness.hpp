#pragma once

// Experiment driver: method evaluation with mean-relative-error reporting, and
// empirical verification of the approximation guarantees on enumerable
// instances.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bilo/oracle.hpp"
#include "bilo/problems.hpp"
#include "bilo/surrogate.hpp"

namespace bilo::harness {

struct HarnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 100 * |obj - best| / |best|.  A best of exactly 0 yields 0 when obj is
/// also 0 and NaN ("undefined") otherwise.
double relative_error(double obj, double best);

struct MethodResult {
    std::string instance_id;
    std::string method;  ///< NN_l, NN_u, GVFA, bruteforce
    double objective = 0;
    double mre_pct = 0;  ///< NaN when undefined or the method failed
    double surrogate_time_s = 0;
    double repair_time_s = 0;
    std::string status;
};

struct MethodSummary {
    std::string method;
    int count = 0;       ///< rows with a defined relative error
    double mre_pct = 0;  ///< mean over defined rows
    double mean_surrogate_time_s = 0;
    double mean_repair_time_s = 0;
};

struct EvalResult {
    std::vector<MethodResult> rows;      ///< ordered by (instance id, method)
    std::vector<MethodSummary> summary;  ///< ordered by method list
};

struct EvalConfig {
    std::vector<std::string> methods;  ///< subset of {NN_l, NN_u, GVFA, bruteforce}
    surrogate::SurrogateConfig surrogate;
    const surrogate::Predictor* lower = nullptr;  ///< required for NN_l
    const surrogate::Predictor* upper = nullptr;  ///< required for NN_u
    bool record_times = true;  ///< false zeroes the time columns for byte-stable output
};

EvalResult evaluate(const std::vector<std::pair<std::string, Instance>>& instances,
                    const EvalConfig& cfg);

/// Full-precision CSV with header instance_id,method,objective,mre_pct,
/// surrogate_time_s,repair_time_s,status.
std::string to_csv(const EvalResult& result);
EvalResult from_csv(const std::string& text);

/// Two-decimal summary table for terminal output.
std::string summary_table(const EvalResult& result);

struct BoundReport {
    std::string instance_id;
    double alpha = 0;     ///< max |NN - Phi| over feasible x
    double delta = 0;     ///< max adjacent gap in achievable follower values
    double opt = 0;       ///< brute-force optimum
    double achieved = 0;  ///< repaired value of the surrogate's leader decision
    double lambda = 0;
    double bound = 0;  ///< opt + 3*alpha + (2/lambda)*delta
    bool holds = false;
};

/// Empirical check of the approximation bound on one enumerable instance.
/// The surrogate optimum is found by exact enumeration of leader decisions
/// (identical to the MILP optimum, with no big-M numerics in the loop).
BoundReport verify_theorem1(const KipInstance& inst, const surrogate::Predictor& pred,
                            const surrogate::SurrogateConfig& cfg);

struct LemmaCase {
    LeaderDecision x;
    int which = 1;  ///< 1: NN >= Phi, 2: NN < Phi
    double nn = 0;
    double phi = 0;
    double response = 0;  ///< follower value of the fixed-x surrogate response
    bool holds = false;
};

struct Lemma1Report {
    std::string instance_id;
    double delta = 0;
    std::vector<LemmaCase> cases;
    bool holds = false;
};

Lemma1Report verify_lemma1(const KipInstance& inst, const surrogate::Predictor& pred,
                           const surrogate::SurrogateConfig& cfg);

/// Max adjacent gap between achievable follower objective values, over all
/// feasible leader decisions.  Refuses above 12 follower variables.
double compute_delta(const KipInstance& inst);

nlohmann::json bound_report_to_json(const BoundReport& r);
nlohmann::json lemma_report_to_json(const Lemma1Report& r);

}  // namespace bilo::harness
