#ifndef BILO_MILP_HPP
#define BILO_MILP_HPP

#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bilo::milp {

/// Error raised on malformed models or solver misuse.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

enum class Sense { le, eq, ge };
enum class ObjSense { minimize, maximize };

enum class Status {
    optimal,
    infeasible,
    node_limit,
    time_limit,
    degraded,  // simplex lost precision (pivot below threshold)
};

std::string to_string(Status s);

/// Affine expression: sum of (variable, coefficient) terms plus a constant.
/// Terms may repeat; they are merged on use.
struct LinExpr {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    LinExpr() = default;
    /*implicit*/ LinExpr(double c) : constant(c) {}

    LinExpr& add(int var, double coeff) {
        if (coeff != 0.0) terms.emplace_back(var, coeff);
        return *this;
    }
    LinExpr& operator+=(const LinExpr& o);
    LinExpr& operator*=(double s);
    friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
    friend LinExpr operator*(LinExpr a, double s) { return a *= s; }
    friend LinExpr operator*(double s, LinExpr a) { return a *= s; }

    /// Merged (variable -> coefficient) view with zero coefficients dropped.
    std::map<int, double> merged() const;
    /// Evaluate at a full assignment.
    double eval(const std::vector<double>& assignment) const;
};

struct Variable {
    std::string name;
    double lb = 0.0;
    double ub = 1.0;
    bool integer = false;
};

struct Constraint {
    std::vector<std::pair<int, double>> terms;  // merged, sorted by variable
    Sense sense = Sense::le;
    double rhs = 0.0;
    std::string name;
};

/// A bounded mixed-integer linear program. All variable bounds must be finite.
class Model {
public:
    int add_var(const std::string& name, double lb, double ub, bool integer);
    int add_binary(const std::string& name) { return add_var(name, 0.0, 1.0, true); }
    int add_continuous(const std::string& name, double lb, double ub) {
        return add_var(name, lb, ub, false);
    }

    /// Adds "expr sense rhs"; the expression's constant is folded into the rhs.
    void add_constraint(const LinExpr& expr, Sense sense, double rhs,
                        const std::string& name = "");
    void set_objective(const LinExpr& expr, ObjSense sense);

    int num_vars() const { return static_cast<int>(vars_.size()); }
    int num_constraints() const { return static_cast<int>(cons_.size()); }
    const std::vector<Variable>& vars() const { return vars_; }
    const std::vector<Constraint>& constraints() const { return cons_; }
    const std::vector<double>& objective() const { return obj_; }
    double objective_offset() const { return obj_offset_; }
    ObjSense objective_sense() const { return obj_sense_; }

    void set_bounds(int var, double lb, double ub);
    void fix(int var, double value) { set_bounds(var, value, value); }

    /// CPLEX LP-format text, coefficients printed with 17 significant digits.
    std::string to_lp_string() const;

private:
    std::vector<Variable> vars_;
    std::vector<Constraint> cons_;
    std::vector<double> obj_;
    double obj_offset_ = 0.0;
    ObjSense obj_sense_ = ObjSense::minimize;
};

struct SolveConfig {
    double feas_tol = 1e-6;
    double int_tol = 1e-6;
    double gap_tol = 1e-9;  // absolute optimality gap
    std::int64_t node_limit = -1;   // <0: unlimited
    double time_limit = -1.0;       // seconds, <0: unlimited
    std::string branching = "most_fractional";
    std::string node_selection = "best_bound";
};

struct LpResult {
    Status status = Status::optimal;
    std::vector<double> assignment;
    double value = 0.0;
    std::int64_t iterations = 0;
};

struct Solution {
    Status status = Status::infeasible;
    bool has_solution = false;
    std::vector<double> assignment;
    double value = 0.0;
    std::int64_t nodes = 0;
    double wall_time = 0.0;
};

/// Solves the LP relaxation (integrality dropped) by bounded-variable
/// primal simplex with a Bland anti-cycling fallback.
LpResult solve_lp(const Model& model);

/// Best-bound branch and bound with a depth-first plunge on the floor child.
Solution solve(const Model& model, const SolveConfig& cfg = {});

struct Violation {
    std::string what;
    double magnitude = 0.0;
};

/// Reports every bound, integrality, and constraint violation beyond tolerance.
std::vector<Violation> check(const Model& model, const std::vector<double>& assignment,
                             double feas_tol = 1e-6, double int_tol = 1e-6);

}  // namespace bilo::milp

#endif
