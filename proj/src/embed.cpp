#include "bilo/embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bilo/oracle.hpp"

namespace bilo::embed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Interval affine_bounds(const std::vector<double>& w, double b,
                       const std::vector<Interval>& box) {
    Interval r{b, b};
    for (size_t j = 0; j < w.size(); ++j) {
        double a = w[j] * box[j].lo, c = w[j] * box[j].hi;
        r.lo += std::min(a, c);
        r.hi += std::max(a, c);
    }
    return r;
}

}  // namespace

BoundsTable propagate_bounds(const mlp::Mlp2& net, const std::vector<Interval>& input_box) {
    if (static_cast<int>(input_box.size()) != net.hidden.in_dim())
        throw EmbedError("propagate_bounds: input box dimension mismatch");
    for (const auto& iv : input_box)
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi)
            throw EmbedError("propagate_bounds: input box must be finite and ordered");
    BoundsTable t;
    std::vector<Interval> post;
    for (int r = 0; r < net.hidden.out_dim(); ++r) {
        auto iv = affine_bounds(net.hidden.w[static_cast<size_t>(r)],
                                net.hidden.b[static_cast<size_t>(r)], input_box);
        t.hidden.push_back(iv);
        post.push_back({std::max(iv.lo, 0.0), std::max(iv.hi, 0.0)});
    }
    for (int r = 0; r < net.out.out_dim(); ++r)
        t.out.push_back(affine_bounds(net.out.w[static_cast<size_t>(r)],
                                      net.out.b[static_cast<size_t>(r)], post));
    return t;
}

Interval expr_bounds(const milp::Model& model, const milp::LinExpr& e) {
    Interval r{e.constant, e.constant};
    for (const auto& [var, coeff] : e.merged()) {
        const auto& v = model.vars()[static_cast<size_t>(var)];
        double a = coeff * v.lb, b = coeff * v.ub;
        r.lo += std::min(a, b);
        r.hi += std::max(a, b);
    }
    return r;
}

std::vector<milp::LinExpr> encode_mlp(milp::Model& model, const mlp::Mlp2& net,
                                      const std::vector<milp::LinExpr>& inputs,
                                      const std::string& prefix, int* binaries,
                                      const std::vector<std::vector<double>>* support) {
    if (static_cast<int>(inputs.size()) != net.hidden.in_dim())
        throw EmbedError("encode_mlp: input count mismatch");
    BoundsTable bounds;
    if (support && !support->empty()) {
        // The caller certifies the inputs only ever realize these points
        // (e.g. they are driven by a couple of binaries), so exact forward
        // passes give the tightest valid big-M constants.
        bounds.hidden.assign(static_cast<size_t>(net.hidden.out_dim()),
                             {kInf, -kInf});
        for (const auto& pt : *support) {
            if (static_cast<int>(pt.size()) != net.hidden.in_dim())
                throw EmbedError("encode_mlp: support point dimension mismatch");
            for (int r = 0; r < net.hidden.out_dim(); ++r) {
                double pre = net.hidden.b[static_cast<size_t>(r)];
                for (size_t j = 0; j < pt.size(); ++j)
                    pre += net.hidden.w[static_cast<size_t>(r)][j] * pt[j];
                auto& iv = bounds.hidden[static_cast<size_t>(r)];
                iv.lo = std::min(iv.lo, pre);
                iv.hi = std::max(iv.hi, pre);
            }
        }
    } else {
        std::vector<Interval> box;
        for (const auto& e : inputs) {
            auto iv = expr_bounds(model, e);
            if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi))
                throw EmbedError("encode_mlp: unbounded input expression");
            box.push_back(iv);
        }
        bounds = propagate_bounds(net, box);
    }

    std::vector<milp::LinExpr> hidden;
    for (int r = 0; r < net.hidden.out_dim(); ++r) {
        milp::LinExpr pre{net.hidden.b[static_cast<size_t>(r)]};
        for (size_t j = 0; j < inputs.size(); ++j)
            pre += inputs[j] * net.hidden.w[static_cast<size_t>(r)][j];
        const auto& iv = bounds.hidden[static_cast<size_t>(r)];
        if (iv.hi <= 0) {
            hidden.emplace_back(0.0);
        } else if (iv.lo >= 0) {
            hidden.push_back(pre);
        } else {
            std::string base = prefix + "_h" + std::to_string(r);
            int h = model.add_continuous(base, 0.0, iv.hi);
            int z = model.add_binary(base + "_z");
            double m_neg = -iv.lo, m_pos = iv.hi;
            milp::LinExpr hv;
            hv.add(h, 1.0);
            model.add_constraint(hv + pre * -1.0, milp::Sense::ge, 0.0, base + "_lb");
            milp::LinExpr off = hv + pre * -1.0;
            off.add(z, m_neg);
            model.add_constraint(off, milp::Sense::le, m_neg, base + "_ub");
            milp::LinExpr cap = hv;
            cap.add(z, -m_pos);
            model.add_constraint(cap, milp::Sense::le, 0.0, base + "_cap");
            hidden.push_back(hv);
            if (binaries) ++*binaries;
        }
    }

    std::vector<milp::LinExpr> out;
    for (int r = 0; r < net.out.out_dim(); ++r) {
        milp::LinExpr e{net.out.b[static_cast<size_t>(r)]};
        for (size_t j = 0; j < hidden.size(); ++j)
            e += hidden[j] * net.out.w[static_cast<size_t>(r)][j];
        out.push_back(std::move(e));
    }
    return out;
}

EncodedNetwork encode_set_network(milp::Model& model, const mlp::SetNetwork& net,
                                  const std::vector<std::vector<milp::LinExpr>>& value_inputs,
                                  const std::vector<double>& coeff, const std::string& prefix,
                                  const std::vector<std::vector<std::vector<double>>>* supports) {
    if (value_inputs.size() != coeff.size())
        throw EmbedError("encode_set_network: one input row and coefficient per variable");
    if (supports && supports->size() != value_inputs.size())
        throw EmbedError("encode_set_network: one support set per variable");
    EncodedNetwork enc;
    milp::LinExpr std_out{0.0};
    for (size_t i = 0; i < value_inputs.size(); ++i) {
        auto outs = encode_mlp(model, net.psi_v, value_inputs[i],
                               prefix + "_v" + std::to_string(i), &enc.binaries,
                               supports ? &(*supports)[i] : nullptr);
        std_out += outs[0] * coeff[i];
    }
    enc.output = std_out * net.label_sigma + milp::LinExpr{net.label_mu};
    return enc;
}

EncodedGreedy encode_greedy(milp::Model& model, const KipInstance& inst,
                            const std::vector<int>& x_vars) {
    if (static_cast<int>(x_vars.size()) != inst.n)
        throw EmbedError("encode_greedy: one x variable per item");
    auto order = greedy_item_order(inst);
    double b = inst.capacity;
    EncodedGreedy enc;
    enc.y.assign(static_cast<size_t>(inst.n), -1);
    // Remaining capacity before considering the j-th item in ratio order.
    milp::LinExpr remaining{b};
    for (int pos = 0; pos < inst.n; ++pos) {
        int i = order[static_cast<size_t>(pos)];
        double a = inst.weight[static_cast<size_t>(i)];
        std::string base = "yg" + std::to_string(i);
        int y = model.add_binary(base);
        enc.y[static_cast<size_t>(i)] = y;
        milp::LinExpr ye;
        ye.add(y, 1.0);
        milp::LinExpr xe;
        xe.add(x_vars[static_cast<size_t>(i)], 1.0);
        model.add_constraint(ye + xe, milp::Sense::le, 1.0, base + "_mask");
        // take only if it fits: a*y <= r
        model.add_constraint(ye * a + remaining * -1.0, milp::Sense::le, 0.0, base + "_fit");
        // forced take when it fits and is not interdicted:
        // r - a + 1 <= (b+1)(y + x), valid for integer data
        model.add_constraint(remaining + (ye + xe) * -(b + 1.0), milp::Sense::le, a - 1.0,
                             base + "_force");
        remaining += ye * -a;
        enc.value += ye * static_cast<double>(inst.profit[static_cast<size_t>(i)]);
    }
    return enc;
}

int linearize_product(milp::Model& model, int u, int v, const std::string& name) {
    const auto& uv = model.vars()[static_cast<size_t>(u)];
    const auto& vv = model.vars()[static_cast<size_t>(v)];
    if (uv.lb < 0 || uv.ub > 1) throw EmbedError("linearize_product: u must lie in [0,1]");
    if (!vv.integer || vv.lb < 0 || vv.ub > 1)
        throw EmbedError("linearize_product: v must be binary");
    int z = model.add_continuous(name, 0.0, 1.0);
    milp::LinExpr ze, ue, ve;
    ze.add(z, 1.0);
    ue.add(u, 1.0);
    ve.add(v, 1.0);
    model.add_constraint(ze + ue * -1.0, milp::Sense::le, 0.0, name + "_u");
    model.add_constraint(ze + ve * -1.0, milp::Sense::le, 0.0, name + "_v");
    model.add_constraint(ze + ue * -1.0 + ve * -1.0, milp::Sense::ge, -1.0, name + "_lo");
    return z;
}

}  // namespace bilo::embed
