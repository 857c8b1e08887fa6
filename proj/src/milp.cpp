#include "bilo/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <queue>
#include <sstream>

namespace bilo::milp {

namespace {

constexpr double kInf = 1e30;
constexpr double kPivotTol = 1e-10;
constexpr double kDualTol = 1e-9;

bool is_finite_bound(double v) { return std::abs(v) < kInf * 0.5; }

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::node_limit: return "node-limit";
        case Status::time_limit: return "time-limit";
        case Status::degraded: return "degraded";
    }
    return "unknown";
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
}

LinExpr& LinExpr::operator*=(double s) {
    for (auto& [v, c] : terms) c *= s;
    constant *= s;
    return *this;
}

std::map<int, double> LinExpr::merged() const {
    std::map<int, double> out;
    for (const auto& [v, c] : terms) out[v] += c;
    for (auto it = out.begin(); it != out.end();) {
        if (it->second == 0.0) it = out.erase(it);
        else ++it;
    }
    return out;
}

double LinExpr::eval(const std::vector<double>& assignment) const {
    double v = constant;
    for (const auto& [var, c] : terms) v += c * assignment.at(static_cast<size_t>(var));
    return v;
}

int Model::add_var(const std::string& name, double lb, double ub, bool integer) {
    if (!std::isfinite(lb) || !std::isfinite(ub))
        throw ModelError("variable '" + name + "' must have finite bounds");
    if (lb > ub) throw ModelError("variable '" + name + "' has lb > ub");
    vars_.push_back({name, lb, ub, integer});
    obj_.push_back(0.0);
    return static_cast<int>(vars_.size()) - 1;
}

void Model::add_constraint(const LinExpr& expr, Sense sense, double rhs,
                           const std::string& name) {
    Constraint c;
    for (const auto& [v, coeff] : expr.merged()) {
        if (v < 0 || v >= num_vars()) throw ModelError("constraint references unknown variable");
        if (!std::isfinite(coeff)) throw ModelError("non-finite constraint coefficient");
        c.terms.emplace_back(v, coeff);
    }
    c.sense = sense;
    c.rhs = rhs - expr.constant;
    c.name = name.empty() ? ("c" + std::to_string(cons_.size())) : name;
    cons_.push_back(std::move(c));
}

void Model::set_objective(const LinExpr& expr, ObjSense sense) {
    std::fill(obj_.begin(), obj_.end(), 0.0);
    for (const auto& [v, coeff] : expr.merged()) {
        if (v < 0 || v >= num_vars()) throw ModelError("objective references unknown variable");
        obj_[static_cast<size_t>(v)] = coeff;
    }
    obj_offset_ = expr.constant;
    obj_sense_ = sense;
}

void Model::set_bounds(int var, double lb, double ub) {
    if (lb > ub) throw ModelError("set_bounds: lb > ub");
    vars_[static_cast<size_t>(var)].lb = lb;
    vars_[static_cast<size_t>(var)].ub = ub;
}

std::string Model::to_lp_string() const {
    std::ostringstream os;
    os << (obj_sense_ == ObjSense::minimize ? "Minimize" : "Maximize") << "\n obj:";
    bool any = false;
    for (int j = 0; j < num_vars(); ++j) {
        double c = obj_[static_cast<size_t>(j)];
        if (c == 0.0) continue;
        os << (c >= 0 ? " + " : " - ") << fmt17(std::abs(c)) << " " << vars_[static_cast<size_t>(j)].name;
        any = true;
    }
    if (!any) os << " 0";
    os << "\nSubject To\n";
    for (const auto& con : cons_) {
        os << " " << con.name << ":";
        for (const auto& [v, c] : con.terms)
            os << (c >= 0 ? " + " : " - ") << fmt17(std::abs(c)) << " " << vars_[static_cast<size_t>(v)].name;
        switch (con.sense) {
            case Sense::le: os << " <= "; break;
            case Sense::eq: os << " = "; break;
            case Sense::ge: os << " >= "; break;
        }
        os << fmt17(con.rhs) << "\n";
    }
    os << "Bounds\n";
    for (const auto& v : vars_)
        os << " " << fmt17(v.lb) << " <= " << v.name << " <= " << fmt17(v.ub) << "\n";
    bool has_int = false;
    for (const auto& v : vars_) has_int = has_int || v.integer;
    if (has_int) {
        os << "Generals\n";
        for (const auto& v : vars_)
            if (v.integer) os << " " << v.name << "\n";
    }
    os << "End\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Bounded-variable primal simplex on a dense tableau.
// Columns: structural | one slack per row | artificials (phase 1 only).
// Row form: a.x + s = rhs with slack bounds chosen per constraint sense.
// ---------------------------------------------------------------------------
namespace {

enum class VarState : std::uint8_t { at_lb, at_ub, basic };

class Simplex {
public:
    Simplex(const Model& model, const std::vector<double>& lb, const std::vector<double>& ub)
        : model_(model), n_(model.num_vars()), m_(model.num_constraints()) {
        lb_.assign(lb.begin(), lb.end());
        ub_.assign(ub.begin(), ub.end());
        for (int i = 0; i < m_; ++i) {
            const auto& con = model.constraints()[static_cast<size_t>(i)];
            switch (con.sense) {
                case Sense::le: lb_.push_back(0.0); ub_.push_back(kInf); break;
                case Sense::ge: lb_.push_back(-kInf); ub_.push_back(0.0); break;
                case Sense::eq: lb_.push_back(0.0); ub_.push_back(0.0); break;
            }
        }
    }

    LpResult run() {
        LpResult res;
        if (!setup()) {  // a variable box was empty
            res.status = Status::infeasible;
            return res;
        }
        if (num_art_ > 0) {
            std::vector<double> c1(static_cast<size_t>(ncols_), 0.0);
            for (int j = ncols_ - num_art_; j < ncols_; ++j) c1[static_cast<size_t>(j)] = 1.0;
            Status st = optimize(c1);
            if (st != Status::optimal) { res.status = st; res.iterations = iters_; return res; }
            if (objective_value(c1) > 1e-7) {
                res.status = Status::infeasible;
                res.iterations = iters_;
                return res;
            }
            // Pin artificials to zero for phase 2.
            for (int j = ncols_ - num_art_; j < ncols_; ++j) {
                lb_[static_cast<size_t>(j)] = 0.0;
                ub_[static_cast<size_t>(j)] = 0.0;
            }
        }
        std::vector<double> c2(static_cast<size_t>(ncols_), 0.0);
        double sign = model_.objective_sense() == ObjSense::minimize ? 1.0 : -1.0;
        for (int j = 0; j < n_; ++j) c2[static_cast<size_t>(j)] = sign * model_.objective()[static_cast<size_t>(j)];
        Status st = optimize(c2);
        res.status = st;
        res.iterations = iters_;
        if (st != Status::optimal) return res;
        res.assignment.resize(static_cast<size_t>(n_));
        for (int j = 0; j < n_; ++j) res.assignment[static_cast<size_t>(j)] = value(j);
        res.value = 0.0;
        for (int j = 0; j < n_; ++j)
            res.value += model_.objective()[static_cast<size_t>(j)] * res.assignment[static_cast<size_t>(j)];
        res.value += model_.objective_offset();
        return res;
    }

private:
    const Model& model_;
    int n_;
    int m_;
    int ncols_ = 0;
    int num_art_ = 0;
    std::vector<double> lb_, ub_;
    std::vector<double> tab_;  // m_ rows x ncols_, row-major
    std::vector<int> basic_;   // per row
    std::vector<double> xb_;   // per row: value of basic variable
    std::vector<VarState> state_;
    std::int64_t iters_ = 0;
    bool bland_ = false;

    double* row(int i) { return tab_.data() + static_cast<size_t>(i) * static_cast<size_t>(ncols_); }

    double value(int j) const {
        if (state_[static_cast<size_t>(j)] == VarState::basic) {
            for (int i = 0; i < m_; ++i)
                if (basic_[static_cast<size_t>(i)] == j) return xb_[static_cast<size_t>(i)];
            return 0.0;
        }
        return state_[static_cast<size_t>(j)] == VarState::at_lb ? nonbasic_bound_lb(j) : ub_[static_cast<size_t>(j)];
    }

    // Nonbasic resting value for a variable whose lower bound may be -inf.
    double nonbasic_bound_lb(int j) const {
        double l = lb_[static_cast<size_t>(j)];
        return is_finite_bound(l) ? l : 0.0;
    }

    double objective_value(const std::vector<double>& c) const {
        double z = 0.0;
        for (int j = 0; j < ncols_; ++j) {
            double cj = c[static_cast<size_t>(j)];
            if (cj != 0.0) z += cj * value(j);
        }
        return z;
    }

    bool setup() {
        for (int j = 0; j < n_ + m_; ++j)
            if (lb_[static_cast<size_t>(j)] > ub_[static_cast<size_t>(j)] + 1e-12) return false;
        // Nonbasic structural variables rest at their lower bound.
        state_.assign(static_cast<size_t>(n_ + m_), VarState::at_lb);
        std::vector<double> act(static_cast<size_t>(m_), 0.0);
        for (int i = 0; i < m_; ++i)
            for (const auto& [v, c] : model_.constraints()[static_cast<size_t>(i)].terms)
                act[static_cast<size_t>(i)] += c * lb_[static_cast<size_t>(v)];

        // Decide slack basics vs artificials.
        std::vector<int> art_row;
        std::vector<double> art_sign, art_val;
        std::vector<double> slack_rest(static_cast<size_t>(m_), 0.0);
        basic_.assign(static_cast<size_t>(m_), -1);
        xb_.assign(static_cast<size_t>(m_), 0.0);
        for (int i = 0; i < m_; ++i) {
            int sj = n_ + i;
            double s = model_.constraints()[static_cast<size_t>(i)].rhs - act[static_cast<size_t>(i)];
            double sl = lb_[static_cast<size_t>(sj)], su = ub_[static_cast<size_t>(sj)];
            if (s >= sl - 1e-12 && s <= su + 1e-12) {
                basic_[static_cast<size_t>(i)] = sj;
                xb_[static_cast<size_t>(i)] = s;
                state_[static_cast<size_t>(sj)] = VarState::basic;
            } else {
                double rest = s < sl ? sl : su;
                if (!is_finite_bound(rest)) rest = 0.0;
                slack_rest[static_cast<size_t>(i)] = rest;
                state_[static_cast<size_t>(sj)] = (s < sl) ? VarState::at_lb : VarState::at_ub;
                double residual = s - rest;
                art_row.push_back(i);
                art_sign.push_back(residual >= 0 ? 1.0 : -1.0);
                art_val.push_back(std::abs(residual));
            }
        }
        num_art_ = static_cast<int>(art_row.size());
        ncols_ = n_ + m_ + num_art_;
        tab_.assign(static_cast<size_t>(m_) * static_cast<size_t>(ncols_), 0.0);
        for (int i = 0; i < m_; ++i) {
            double* r = row(i);
            for (const auto& [v, c] : model_.constraints()[static_cast<size_t>(i)].terms)
                r[v] += c;
            r[n_ + i] = 1.0;
        }
        for (int a = 0; a < num_art_; ++a) {
            int i = art_row[static_cast<size_t>(a)];
            int col = n_ + m_ + a;
            row(i)[col] = art_sign[static_cast<size_t>(a)];
            // Keep the tableau equal to B^-1 [A | I | S]: a -1 artificial in the
            // basis means its row must be negated.
            if (art_sign[static_cast<size_t>(a)] < 0) {
                double* r = row(i);
                for (int j = 0; j < ncols_; ++j) r[j] = -r[j];
            }
            lb_.push_back(0.0);
            ub_.push_back(kInf);
            state_.push_back(VarState::basic);
            basic_[static_cast<size_t>(i)] = col;
            xb_[static_cast<size_t>(i)] = art_val[static_cast<size_t>(a)];
        }
        return true;
    }

    // Minimizes c over the current basis; returns optimal or degraded.
    Status optimize(const std::vector<double>& c) {
        std::vector<double> d(static_cast<size_t>(ncols_), 0.0);
        compute_reduced_costs(c, d);
        bland_ = false;
        std::int64_t stall = 0;
        const std::int64_t max_iters = 200000;
        for (;;) {
            if (++iters_ > max_iters) return Status::degraded;
            int q = pick_entering(d);
            if (q < 0) return Status::optimal;
            double dir = (state_[static_cast<size_t>(q)] == VarState::at_lb) ? 1.0 : -1.0;
#ifdef BILO_SIMPLEX_DEBUG
            std::fprintf(stderr, "iter %lld enter q=%d d=%g dir=%g state=%d\n",
                         (long long)iters_, q, d[(size_t)q], dir, (int)state_[(size_t)q]);
#endif

            // Ratio test.
            double limit = kInf;
            int leave_row = -1;
            bool leave_to_ub = false;
            if (is_finite_bound(lb_[static_cast<size_t>(q)]) && is_finite_bound(ub_[static_cast<size_t>(q)]))
                limit = ub_[static_cast<size_t>(q)] - lb_[static_cast<size_t>(q)];
            for (int i = 0; i < m_; ++i) {
                double a = row(i)[q] * dir;
                if (std::abs(a) <= kPivotTol) continue;
                int bj = basic_[static_cast<size_t>(i)];
                double t;
                bool to_ub;
                if (a > 0) {  // basic decreases toward its lower bound
                    double l = lb_[static_cast<size_t>(bj)];
                    if (!is_finite_bound(l)) continue;
                    t = (xb_[static_cast<size_t>(i)] - l) / a;
                    to_ub = false;
                } else {  // basic increases toward its upper bound
                    double u = ub_[static_cast<size_t>(bj)];
                    if (!is_finite_bound(u)) continue;
                    t = (xb_[static_cast<size_t>(i)] - u) / a;
                    to_ub = true;
                }
                if (t < 0.0) t = 0.0;
                if (t < limit - 1e-12) {
                    limit = t;
                    leave_row = i;
                    leave_to_ub = to_ub;
                } else if (leave_row >= 0 && t <= limit + 1e-12) {
                    bool prefer = bland_
                        ? basic_[static_cast<size_t>(i)] < basic_[static_cast<size_t>(leave_row)]
                        : std::abs(row(i)[q]) > std::abs(row(leave_row)[q]);
                    if (prefer) {
                        leave_row = i;
                        leave_to_ub = to_ub;
                    }
                }
            }
            if (!is_finite_bound(limit)) {
#ifdef BILO_SIMPLEX_DEBUG
                std::fprintf(stderr, "  no finite ratio for q=%d; column:", q);
                for (int i = 0; i < m_; ++i)
                    std::fprintf(stderr, " [%d b=%d a=%g xb=%g]", i, basic_[(size_t)i], row(i)[q], xb_[(size_t)i]);
                std::fprintf(stderr, "\n");
#endif
                return Status::degraded;  // bounded models never ray out
            }
            double t = std::max(0.0, limit);

            // Move the entering variable and update basic values.
            if (t != 0.0) {
                for (int i = 0; i < m_; ++i) {
                    double a = row(i)[q];
                    if (a != 0.0) xb_[static_cast<size_t>(i)] -= a * dir * t;
                }
            }
            if (t <= 1e-12) {
                if (++stall > 500) bland_ = true;
            } else {
                stall = 0;
            }

            if (leave_row < 0) {
                // Bound flip: entering moved across its whole range.
                state_[static_cast<size_t>(q)] =
                    (state_[static_cast<size_t>(q)] == VarState::at_lb) ? VarState::at_ub : VarState::at_lb;
                continue;
            }

            // Pivot q into the basis at leave_row.
            int lv = basic_[static_cast<size_t>(leave_row)];
            double entering_value = value_at_rest(q) + dir * t;
            double piv = row(leave_row)[q];
            if (std::abs(piv) < kPivotTol) return Status::degraded;
            double inv = 1.0 / piv;
            double* pr = row(leave_row);
            for (int j = 0; j < ncols_; ++j) pr[j] *= inv;
            for (int i = 0; i < m_; ++i) {
                if (i == leave_row) continue;
                double f = row(i)[q];
                if (f == 0.0) continue;
                double* ri = row(i);
                for (int j = 0; j < ncols_; ++j) ri[j] -= f * pr[j];
                ri[q] = 0.0;
            }
            double dq = d[static_cast<size_t>(q)];
            if (dq != 0.0)
                for (int j = 0; j < ncols_; ++j) d[static_cast<size_t>(j)] -= dq * pr[j];
            d[static_cast<size_t>(q)] = 0.0;

            basic_[static_cast<size_t>(leave_row)] = q;
            state_[static_cast<size_t>(q)] = VarState::basic;
            state_[static_cast<size_t>(lv)] = leave_to_ub ? VarState::at_ub : VarState::at_lb;
            xb_[static_cast<size_t>(leave_row)] = entering_value;
        }
    }

    double value_at_rest(int j) const {
        return state_[static_cast<size_t>(j)] == VarState::at_ub ? ub_[static_cast<size_t>(j)]
                                                                 : nonbasic_bound_lb(j);
    }

    void compute_reduced_costs(const std::vector<double>& c, std::vector<double>& d) {
        d.assign(static_cast<size_t>(ncols_), 0.0);
        for (int j = 0; j < ncols_; ++j) d[static_cast<size_t>(j)] = c[static_cast<size_t>(j)];
        for (int i = 0; i < m_; ++i) {
            double cb = c[static_cast<size_t>(basic_[static_cast<size_t>(i)])];
            if (cb == 0.0) continue;
            const double* ri = row(i);
            for (int j = 0; j < ncols_; ++j) d[static_cast<size_t>(j)] -= cb * ri[j];
        }
        for (int i = 0; i < m_; ++i) d[static_cast<size_t>(basic_[static_cast<size_t>(i)])] = 0.0;
    }

    int pick_entering(const std::vector<double>& d) const {
        int best = -1;
        double best_score = kDualTol;
        for (int j = 0; j < ncols_; ++j) {
            if (state_[static_cast<size_t>(j)] == VarState::basic) continue;
            if (lb_[static_cast<size_t>(j)] == ub_[static_cast<size_t>(j)]) continue;  // fixed
            double dj = d[static_cast<size_t>(j)];
            double score = 0.0;
            if (state_[static_cast<size_t>(j)] == VarState::at_lb && dj < -kDualTol) score = -dj;
            if (state_[static_cast<size_t>(j)] == VarState::at_ub && dj > kDualTol) score = dj;
            if (score <= 0.0) continue;
            if (bland_) return j;
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        return best;
    }
};

LpResult solve_lp_bounds(const Model& model, const std::vector<double>& lb,
                         const std::vector<double>& ub) {
    Simplex s(model, lb, ub);
    return s.run();
}

/// Substitutes variables whose node bounds have collapsed, drops rows left
/// without free support, solves the reduced LP, and expands the assignment.
/// Node propagation pins most encoding variables once the structural binaries
/// are decided, so this shrinks the tableau by an order of magnitude deep in
/// the tree.
LpResult solve_lp_condensed(const Model& model, const std::vector<double>& lb,
                            const std::vector<double>& ub) {
    const int n = model.num_vars();
    std::vector<int> red_index(static_cast<size_t>(n), -1);
    std::vector<double> fixed_val(static_cast<size_t>(n), 0.0);
    Model rm;
    for (int j = 0; j < n; ++j) {
        auto ju = static_cast<size_t>(j);
        if (ub[ju] - lb[ju] <= 1e-12) {
            fixed_val[ju] = 0.5 * (lb[ju] + ub[ju]);
        } else {
            red_index[ju] = rm.add_var(model.vars()[ju].name, lb[ju], ub[ju], false);
        }
    }
    LinExpr obj;
    obj.constant = model.objective_offset();
    for (int j = 0; j < n; ++j) {
        double c = model.objective()[static_cast<size_t>(j)];
        if (c == 0.0) continue;
        if (red_index[static_cast<size_t>(j)] >= 0)
            obj.add(red_index[static_cast<size_t>(j)], c);
        else
            obj.constant += c * fixed_val[static_cast<size_t>(j)];
    }
    rm.set_objective(obj, model.objective_sense());
    LpResult res;
    for (const auto& con : model.constraints()) {
        LinExpr e;
        double rhs = con.rhs;
        for (const auto& [j, c] : con.terms) {
            if (red_index[static_cast<size_t>(j)] >= 0)
                e.add(red_index[static_cast<size_t>(j)], c);
            else
                rhs -= c * fixed_val[static_cast<size_t>(j)];
        }
        if (e.terms.empty()) {
            bool ok = (con.sense == Sense::le && 0.0 <= rhs + 1e-7) ||
                      (con.sense == Sense::ge && 0.0 >= rhs - 1e-7) ||
                      (con.sense == Sense::eq && std::abs(rhs) <= 1e-7);
            if (!ok) {
                res.status = Status::infeasible;
                return res;
            }
            continue;
        }
        rm.add_constraint(e, con.sense, rhs);
    }
    LpResult red = solve_lp(rm);
    res.status = red.status;
    res.iterations = red.iterations;
    if (red.status != Status::optimal) return res;
    res.value = red.value;
    res.assignment.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        auto ju = static_cast<size_t>(j);
        res.assignment[ju] = red_index[ju] >= 0
                                 ? red.assignment[static_cast<size_t>(red_index[ju])]
                                 : fixed_val[ju];
    }
    return res;
}

}  // namespace

LpResult solve_lp(const Model& model) {
    std::vector<double> lb, ub;
    lb.reserve(static_cast<size_t>(model.num_vars()));
    for (const auto& v : model.vars()) {
        lb.push_back(v.lb);
        ub.push_back(v.ub);
    }
    return solve_lp_bounds(model, lb, ub);
}

// ---------------------------------------------------------------------------
// Branch and bound: best-bound node selection with a depth-first plunge on the
// floor child. Deterministic for identical model and config.
// ---------------------------------------------------------------------------
namespace {

struct Node {
    std::vector<std::pair<int, std::pair<double, double>>> changes;  // (var, (lb, ub))
    double parent_bound;  // min-form
    std::int64_t seq;
    int branch_var = -1;      // variable whose change created this node
    double branch_dist = 0.0; // |LP value - enforced bound| at the parent
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.parent_bound != b.parent_bound) return a.parent_bound > b.parent_bound;
        return a.seq > b.seq;
    }
};

/// Activity-based bound tightening over all rows, iterated to a fixed point.
/// Integer-variable bounds are rounded inward. Returns false when some
/// variable's bounds cross, proving the node infeasible without an LP solve.
bool propagate_node_bounds(const Model& model, std::vector<double>& lb,
                           std::vector<double>& ub, double int_tol,
                           const Constraint* cutoff = nullptr) {
    const double tol = 1e-9;
    const auto& vars = model.vars();
    const int extra = cutoff ? 1 : 0;
    for (int round = 0; round < 20; ++round) {
        bool changed = false;
        for (int ci = -extra; ci < model.num_constraints(); ++ci) {
            const auto& con =
                ci < 0 ? *cutoff : model.constraints()[static_cast<size_t>(ci)];
            for (int pass = 0; pass < 2; ++pass) {
                // Pass 0 handles "<= rhs" rows, pass 1 the ">= rhs" side
                // (negated); equalities run both.
                if (pass == 0 && con.sense == Sense::ge) continue;
                if (pass == 1 && con.sense == Sense::le) continue;
                double sign = pass == 0 ? 1.0 : -1.0;
                double rhs = sign * con.rhs;
                double min_act = 0.0;
                for (const auto& [j, c0] : con.terms) {
                    double c = sign * c0;
                    min_act += c > 0 ? c * lb[static_cast<size_t>(j)]
                                     : c * ub[static_cast<size_t>(j)];
                }
                if (min_act > rhs + 1e-7) return false;
                for (const auto& [j, c0] : con.terms) {
                    double c = sign * c0;
                    auto ju = static_cast<size_t>(j);
                    double others = min_act - (c > 0 ? c * lb[ju] : c * ub[ju]);
                    double limit = (rhs - others) / c;
                    if (c > 0) {
                        if (vars[ju].integer) limit = std::floor(limit + int_tol);
                        if (limit < ub[ju] - tol) {
                            ub[ju] = limit;
                            changed = true;
                            if (lb[ju] > ub[ju] + 1e-7) return false;
                        }
                    } else {
                        if (vars[ju].integer) limit = std::ceil(limit - int_tol);
                        if (limit > lb[ju] + tol) {
                            lb[ju] = limit;
                            changed = true;
                            if (lb[ju] > ub[ju] + 1e-7) return false;
                        }
                    }
                }
            }
        }
        if (!changed) break;
    }
    return true;
}

}  // namespace

Solution solve(const Model& model, const SolveConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    const double obj_sign = model.objective_sense() == ObjSense::minimize ? 1.0 : -1.0;

    std::vector<double> lb0, ub0;
    for (const auto& v : model.vars()) {
        lb0.push_back(v.lb);
        ub0.push_back(v.ub);
    }
    std::vector<int> int_vars;
    for (int j = 0; j < model.num_vars(); ++j)
        if (model.vars()[static_cast<size_t>(j)].integer) int_vars.push_back(j);

    Solution sol;
    sol.nodes = 0;
    double incumbent = kInf;  // min-form
    std::vector<double> inc_assign;
    bool degraded = false;
    std::int64_t dbg_degraded = 0, dbg_infeasible = 0, dbg_pruned = 0, dbg_leaves = 0;

    std::priority_queue<Node, std::vector<Node>, NodeOrder> heap;
    std::int64_t seq = 0;
    bool limit_hit = false;
    Status limit_status = Status::optimal;

    auto hit_limit = [&] {
        if (cfg.node_limit >= 0 && sol.nodes >= cfg.node_limit) {
            limit_hit = true;
            limit_status = Status::node_limit;
            return true;
        }
        if (cfg.time_limit >= 0 && elapsed() > cfg.time_limit) {
            limit_hit = true;
            limit_status = Status::time_limit;
            return true;
        }
        return false;
    };

    // Pseudocosts: mean objective degradation per unit of enforced bound change,
    // learned from solved child nodes. Unseen variables inherit the global mean.
    std::vector<double> pc_sum(static_cast<size_t>(model.num_vars()), 0.0);
    std::vector<int> pc_cnt(static_cast<size_t>(model.num_vars()), 0);
    double pc_all_sum = 0.0;
    int pc_all_cnt = 0;
    auto pc_update = [&](int j, double dist, double degradation) {
        if (j < 0 || dist <= 1e-9) return;
        double unit = std::max(0.0, degradation) / dist;
        pc_sum[static_cast<size_t>(j)] += unit;
        ++pc_cnt[static_cast<size_t>(j)];
        pc_all_sum += unit;
        ++pc_all_cnt;
    };
    auto pc_estimate = [&](int j) {
        if (pc_cnt[static_cast<size_t>(j)] > 0)
            return pc_sum[static_cast<size_t>(j)] / pc_cnt[static_cast<size_t>(j)];
        return pc_all_cnt > 0 ? pc_all_sum / pc_all_cnt : 1.0;
    };

    auto pick_branch_var = [&](const std::vector<double>& x) -> int {
        int best = -1;
        double best_frac = cfg.int_tol;
        double best_score = -1.0;
        for (int j : int_vars) {
            double v = x[static_cast<size_t>(j)];
            double frac = std::abs(v - std::round(v));
            if (frac <= cfg.int_tol) continue;
            if (cfg.branching == "lowest_index") return j;
            if (cfg.branching == "pseudocost") {
                double down = v - std::floor(v), up = std::ceil(v) - v;
                double score = std::max(1e-6, pc_estimate(j) * down) *
                               std::max(1e-6, pc_estimate(j) * up);
                if (score > best_score + 1e-15) {
                    best_score = score;
                    best = j;
                }
            } else if (frac > best_frac + 1e-12) {
                best_frac = frac;
                best = j;
            }
        }
        return best;
    };

    // Objective cutoff row (min form), tightened whenever the incumbent
    // improves; feeds the node propagation so dominated boxes die early.
    Constraint cutoff;
    cutoff.sense = Sense::le;
    for (int j = 0; j < model.num_vars(); ++j) {
        double c = obj_sign * model.objective()[static_cast<size_t>(j)];
        if (c != 0.0) cutoff.terms.emplace_back(j, c);
    }
    auto cutoff_rhs = [&] {
        cutoff.rhs = incumbent - cfg.gap_tol - obj_sign * model.objective_offset();
    };

    auto accept = [&](double bound, const std::vector<double>& assign) {
        incumbent = bound;
        inc_assign = assign;
        for (int j : int_vars)
            inc_assign[static_cast<size_t>(j)] = std::round(inc_assign[static_cast<size_t>(j)]);
        cutoff_rhs();
    };

    // Propagate-and-round dive: fix integer variables one by one to their
    // rounded LP value, re-propagating after each fix and flipping a binary
    // once when a fix proves infeasible. Yields early incumbents that the
    // best-bound search then only has to beat.
    auto round_dive = [&](const std::vector<double>& frac, std::vector<double> hlb,
                          std::vector<double> hub) {
        for (int j : int_vars) {
            auto ju = static_cast<size_t>(j);
            if (hub[ju] - hlb[ju] <= 1e-12) continue;
            double v = std::clamp(std::round(frac[ju]), hlb[ju], hub[ju]);
            auto saved_lb = hlb, saved_ub = hub;
            hlb[ju] = hub[ju] = v;
            if (propagate_node_bounds(model, hlb, hub, cfg.int_tol,
                                      incumbent < kInf * 0.5 ? &cutoff : nullptr))
                continue;
            double alt = v == saved_lb[ju] ? saved_ub[ju] : saved_lb[ju];
            hlb = saved_lb;
            hub = saved_ub;
            hlb[ju] = hub[ju] = std::round(alt);
            if (!propagate_node_bounds(model, hlb, hub, cfg.int_tol,
                                       incumbent < kInf * 0.5 ? &cutoff : nullptr))
                return;
        }
        LpResult lp = solve_lp_condensed(model, hlb, hub);
        if (lp.status != Status::optimal) return;
        double bound = obj_sign * lp.value;
        if (bound < incumbent - cfg.gap_tol) accept(bound, lp.assignment);
    };

    Node current{{}, -kInf, seq++};
    bool have_current = true;
    while (!limit_hit) {
        if (!have_current) {
            if (heap.empty()) break;
            current = heap.top();
            heap.pop();
            if (current.parent_bound >= incumbent - cfg.gap_tol) continue;  // pruned by bound
            have_current = true;
        }
        std::vector<double> lb = lb0, ub = ub0;
        for (const auto& [v, b] : current.changes) {
            lb[static_cast<size_t>(v)] = std::max(lb[static_cast<size_t>(v)], b.first);
            ub[static_cast<size_t>(v)] = std::min(ub[static_cast<size_t>(v)], b.second);
        }
        Node node = std::move(current);
        have_current = false;
        int entry_bv = node.branch_var;
        double entry_dist = node.branch_dist;
        double entry_parent = node.parent_bound;
        // Dive: solve the node, then keep descending through floor children.
        while (!hit_limit()) {
            ++sol.nodes;
            if (!propagate_node_bounds(model, lb, ub, cfg.int_tol,
                                       incumbent < kInf * 0.5 ? &cutoff : nullptr)) {
                ++dbg_infeasible;
                break;
            }
            LpResult lp = solve_lp_condensed(model, lb, ub);
            if (lp.status == Status::degraded) {
                degraded = true;
                ++dbg_degraded;
                break;
            }
            if (lp.status == Status::infeasible) {
                ++dbg_infeasible;
                break;
            }
            double bound = obj_sign * lp.value;
            if (entry_bv >= 0) {
                pc_update(entry_bv, entry_dist, bound - entry_parent);
                entry_bv = -1;
            }
            if (bound >= incumbent - cfg.gap_tol) {
                ++dbg_pruned;
                break;
            }
            int bv = pick_branch_var(lp.assignment);
            if (bv < 0) {
                ++dbg_leaves;
                accept(bound, lp.assignment);
                break;
            }
            if (sol.nodes == 1 || sol.nodes % 128 == 0) round_dive(lp.assignment, lb, ub);
            double v = lp.assignment[static_cast<size_t>(bv)];
            double fl = std::floor(v), ce = std::ceil(v);
            // Dive toward the nearest integer; queue the sibling.
            bool dive_up = v - fl >= 0.5;
            Node sib = node;
            if (dive_up)
                sib.changes.emplace_back(bv, std::make_pair(-kInf, fl));
            else
                sib.changes.emplace_back(bv, std::make_pair(ce, kInf));
            sib.parent_bound = bound;
            sib.seq = seq++;
            sib.branch_var = bv;
            sib.branch_dist = dive_up ? v - fl : ce - v;
            heap.push(std::move(sib));
            if (dive_up) {
                node.changes.emplace_back(bv, std::make_pair(ce, kInf));
                lb[static_cast<size_t>(bv)] = std::max(lb[static_cast<size_t>(bv)], ce);
            } else {
                node.changes.emplace_back(bv, std::make_pair(-kInf, fl));
                ub[static_cast<size_t>(bv)] = std::min(ub[static_cast<size_t>(bv)], fl);
            }
            node.parent_bound = bound;
            node.seq = seq++;
            entry_bv = bv;
            entry_dist = dive_up ? ce - v : v - fl;
            entry_parent = bound;
        }
    }

    if (std::getenv("BILO_MILP_DEBUG"))
        std::cerr << "[milp] nodes=" << sol.nodes << " leaves=" << dbg_leaves
                  << " infeasible=" << dbg_infeasible << " degraded=" << dbg_degraded
                  << " pruned=" << dbg_pruned << "\n";
    sol.wall_time = elapsed();
    sol.has_solution = incumbent < kInf * 0.5;
    if (sol.has_solution) {
        sol.assignment = inc_assign;
        sol.value = obj_sign * incumbent;
    }
    if (limit_hit) {
        sol.status = limit_status;
    } else if (degraded && !sol.has_solution) {
        sol.status = Status::degraded;
    } else {
        sol.status = sol.has_solution ? Status::optimal : Status::infeasible;
    }
    return sol;
}

std::vector<Violation> check(const Model& model, const std::vector<double>& assignment,
                             double feas_tol, double int_tol) {
    if (static_cast<int>(assignment.size()) != model.num_vars())
        throw ModelError("check: assignment does not cover all variables");
    std::vector<Violation> out;
    for (int j = 0; j < model.num_vars(); ++j) {
        const auto& v = model.vars()[static_cast<size_t>(j)];
        double x = assignment[static_cast<size_t>(j)];
        if (x < v.lb - feas_tol)
            out.push_back({"lower bound of " + v.name, v.lb - x});
        if (x > v.ub + feas_tol)
            out.push_back({"upper bound of " + v.name, x - v.ub});
        if (v.integer) {
            double frac = std::abs(x - std::round(x));
            if (frac > int_tol) out.push_back({"integrality of " + v.name, frac});
        }
    }
    for (const auto& con : model.constraints()) {
        double lhs = 0.0;
        for (const auto& [v, c] : con.terms) lhs += c * assignment[static_cast<size_t>(v)];
        double viol = 0.0;
        switch (con.sense) {
            case Sense::le: viol = lhs - con.rhs; break;
            case Sense::ge: viol = con.rhs - lhs; break;
            case Sense::eq: viol = std::abs(lhs - con.rhs); break;
        }
        if (viol > feas_tol) out.push_back({"constraint " + con.name, viol});
    }
    return out;
}

}  // namespace bilo::milp
