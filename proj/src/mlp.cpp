#include "bilo/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace bilo::mlp {

namespace {

void check_layer(const Layer& l, int in, int out, const char* name) {
    if (l.out_dim() != out || (out > 0 && l.in_dim() != in))
        throw TrainError(std::string("layer dimension mismatch in ") + name);
}

std::vector<double> affine(const Layer& l, const std::vector<double>& in) {
    std::vector<double> out(l.b);
    for (int r = 0; r < l.out_dim(); ++r)
        out[static_cast<size_t>(r)] +=
            std::inner_product(l.w[static_cast<size_t>(r)].begin(),
                               l.w[static_cast<size_t>(r)].end(), in.begin(), 0.0);
    return out;
}

std::vector<double> relu(std::vector<double> v) {
    for (auto& x : v) x = std::max(x, 0.0);
    return v;
}

struct Mlp2Cache {
    std::vector<double> input;
    std::vector<double> pre;   // hidden pre-activation
    std::vector<double> act;   // rectified hidden
    std::vector<double> out;
};

Mlp2Cache mlp2_forward(const Mlp2& net, std::vector<double> in) {
    Mlp2Cache c;
    c.input = std::move(in);
    c.pre = affine(net.hidden, c.input);
    c.act = relu(c.pre);
    c.out = affine(net.out, c.act);
    return c;
}

/// Backpropagates `dout` through a cached two-layer pass, accumulating
/// parameter gradients and returning the gradient at the input.
std::vector<double> mlp2_backward(const Mlp2& net, const Mlp2Cache& c,
                                  const std::vector<double>& dout, Mlp2& grad) {
    std::vector<double> dact(c.act.size(), 0.0);
    for (size_t r = 0; r < dout.size(); ++r) {
        grad.out.b[r] += dout[r];
        for (size_t j = 0; j < c.act.size(); ++j) {
            grad.out.w[r][j] += dout[r] * c.act[j];
            dact[j] += dout[r] * net.out.w[r][j];
        }
    }
    std::vector<double> din(c.input.size(), 0.0);
    for (size_t r = 0; r < dact.size(); ++r) {
        if (c.pre[r] <= 0) continue;
        grad.hidden.b[r] += dact[r];
        for (size_t j = 0; j < c.input.size(); ++j) {
            grad.hidden.w[r][j] += dact[r] * c.input[j];
            din[j] += dact[r] * net.hidden.w[r][j];
        }
    }
    return din;
}

Layer zero_like(const Layer& l) {
    Layer z;
    z.b.assign(l.b.size(), 0.0);
    z.w.assign(l.w.size(), std::vector<double>(l.w.empty() ? 0 : l.w.front().size(), 0.0));
    return z;
}

Mlp2 zero_like(const Mlp2& m) { return {zero_like(m.hidden), zero_like(m.out)}; }

NetGrad zero_grad(const SetNetwork& net) {
    return {zero_like(net.psi_d), zero_like(net.psi_s), zero_like(net.psi_v)};
}

template <typename Fn>
void for_each_param(Mlp2& m, Fn&& fn) {
    for (auto* layer : {&m.hidden, &m.out}) {
        for (auto& row : layer->w)
            for (auto& x : row) fn(x);
        for (auto& x : layer->b) fn(x);
    }
}

template <typename Fn>
void zip_params(SetNetwork& net, NetGrad& a, NetGrad& b, NetGrad& c, Fn&& fn) {
    Mlp2* nets[] = {&net.psi_d, &net.psi_s, &net.psi_v};
    Mlp2* g1[] = {&a.psi_d, &a.psi_s, &a.psi_v};
    Mlp2* g2[] = {&b.psi_d, &b.psi_s, &b.psi_v};
    Mlp2* g3[] = {&c.psi_d, &c.psi_s, &c.psi_v};
    for (int p = 0; p < 3; ++p) {
        Mlp2& n = *nets[p];
        Mlp2& x = *g1[p];
        Mlp2& y = *g2[p];
        Mlp2& z = *g3[p];
        for (int part = 0; part < 2; ++part) {
            Layer& ln = part == 0 ? n.hidden : n.out;
            Layer& lx = part == 0 ? x.hidden : x.out;
            Layer& ly = part == 0 ? y.hidden : y.out;
            Layer& lz = part == 0 ? z.hidden : z.out;
            for (size_t r = 0; r < ln.w.size(); ++r)
                for (size_t j = 0; j < ln.w[r].size(); ++j)
                    fn(ln.w[r][j], lx.w[r][j], ly.w[r][j], lz.w[r][j]);
            for (size_t r = 0; r < ln.b.size(); ++r) fn(ln.b[r], lx.b[r], ly.b[r], lz.b[r]);
        }
    }
}

Layer random_layer(int in, int out, std::mt19937_64& rng) {
    double bound = in > 0 ? 1.0 / std::sqrt(static_cast<double>(in)) : 1.0;
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer l;
    l.b.resize(static_cast<size_t>(out));
    l.w.assign(static_cast<size_t>(out), std::vector<double>(static_cast<size_t>(in)));
    for (auto& row : l.w)
        for (auto& x : row) x = u(rng);
    for (auto& x : l.b) x = u(rng);
    return l;
}

void check_sample(const SetNetwork& net, const Sample& s) {
    size_t n = s.statics.size();
    if (s.decisions.size() != n || s.coeff.size() != n || s.mask.size() != n)
        throw TrainError("sample row counts disagree");
    for (const auto& f : s.statics)
        if (static_cast<int>(f.size()) != net.static_dim)
            throw TrainError("static feature dimension mismatch");
    for (const auto& h : s.decisions)
        if (static_cast<int>(h.size()) != net.decision_dim)
            throw TrainError("decision feature dimension mismatch");
}

struct ForwardCache {
    std::vector<Mlp2Cache> d;  // per variable
    Mlp2Cache s;
    std::vector<Mlp2Cache> v;  // per variable
    double std_out = 0;
};

ForwardCache full_forward(const SetNetwork& net, const Sample& s) {
    check_sample(net, s);
    ForwardCache c;
    size_t n = s.statics.size();
    std::vector<double> pooled(static_cast<size_t>(net.psi_d.out.out_dim()), 0.0);
    c.d.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        c.d.push_back(mlp2_forward(net.psi_d, s.statics[i]));
        for (size_t j = 0; j < pooled.size(); ++j) pooled[j] += c.d.back().out[j];
    }
    c.s = mlp2_forward(net.psi_s, std::move(pooled));
    c.v.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        std::vector<double> vin;
        vin.reserve(s.decisions[i].size() + c.s.out.size());
        for (double x : s.decisions[i]) vin.push_back(s.mask[i] * x);
        for (double e : c.s.out) vin.push_back(s.mask[i] * e);
        c.v.push_back(mlp2_forward(net.psi_v, std::move(vin)));
        c.std_out += s.coeff[i] * c.v.back().out[0];
    }
    return c;
}

}  // namespace

std::vector<double> mlp2_eval(const Mlp2& net, const std::vector<double>& in) {
    return affine(net.out, relu(affine(net.hidden, in)));
}

SetNetwork init_network(int static_dim, int decision_dim, const TrainConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    SetNetwork net;
    net.static_dim = static_dim;
    net.decision_dim = decision_dim;
    net.psi_d = {random_layer(static_dim, cfg.h_d, rng), random_layer(cfg.h_d, cfg.m, rng)};
    net.psi_s = {random_layer(cfg.m, cfg.h_s, rng), random_layer(cfg.h_s, cfg.k_emb, rng)};
    net.psi_v = {random_layer(decision_dim + cfg.k_emb, cfg.h_v, rng),
                 random_layer(cfg.h_v, 1, rng)};
    return net;
}

std::vector<double> instance_embedding(const SetNetwork& net, const Sample& s) {
    return full_forward(net, s).s.out;
}

double forward(const SetNetwork& net, const Sample& s) {
    return net.label_mu + net.label_sigma * full_forward(net, s).std_out;
}

double forward_backward(const SetNetwork& net, const Sample& s, NetGrad& grad) {
    ForwardCache c = full_forward(net, s);
    size_t n = s.statics.size();
    std::vector<double> dE(c.s.out.size(), 0.0);
    for (size_t i = 0; i < n; ++i) {
        std::vector<double> dout{net.label_sigma * s.coeff[i]};
        auto dvin = mlp2_backward(net.psi_v, c.v[i], dout, grad.psi_v);
        size_t off = s.decisions[i].size();
        for (size_t j = 0; j < dE.size(); ++j) dE[j] += s.mask[i] * dvin[off + j];
    }
    auto dpooled = mlp2_backward(net.psi_s, c.s, dE, grad.psi_s);
    for (size_t i = 0; i < n; ++i) mlp2_backward(net.psi_d, c.d[i], dpooled, grad.psi_d);
    return net.label_mu + net.label_sigma * c.std_out;
}

std::pair<SetNetwork, TrainReport> train(const Dataset& train_set, const Dataset& val_set,
                                         const TrainConfig& cfg) {
    if (train_set.empty() || val_set.empty()) throw TrainError("empty training or validation split");
    SetNetwork net = init_network(static_cast<int>(train_set.front().statics.front().size()),
                                  static_cast<int>(train_set.front().decisions.front().size()), cfg);

    double mu = 0, sq = 0;
    for (const auto& s : train_set) mu += s.label;
    mu /= static_cast<double>(train_set.size());
    for (const auto& s : train_set) sq += (s.label - mu) * (s.label - mu);
    double sigma = std::sqrt(sq / static_cast<double>(train_set.size()));
    if (sigma < 1e-12) sigma = 1.0;
    net.label_mu = mu;
    net.label_sigma = sigma;

    TrainReport report;
    auto val_score = [&] {
        double mae = 0;
        for (const auto& s : val_set) mae += std::abs(forward(net, s) - s.label);
        return mae / static_cast<double>(val_set.size());
    };
    SetNetwork best = net;
    double best_mae = val_score();
    int best_epoch = -1;

    NetGrad grad = zero_grad(net);
    NetGrad adam_m = zero_grad(net);
    NetGrad adam_v = zero_grad(net);
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5deece66dULL);
    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), size_t{0});
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    long step = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            double inv = 1.0 / static_cast<double>(end - start);
            for_each_param(grad.psi_d, [](double& x) { x = 0; });
            for_each_param(grad.psi_s, [](double& x) { x = 0; });
            for_each_param(grad.psi_v, [](double& x) { x = 0; });
            NetGrad sample_grad = zero_grad(net);
            double scale_loss = 0;
            for (size_t t = start; t < end; ++t) {
                const Sample& s = train_set[order[t]];
                for_each_param(sample_grad.psi_d, [](double& x) { x = 0; });
                for_each_param(sample_grad.psi_s, [](double& x) { x = 0; });
                for_each_param(sample_grad.psi_v, [](double& x) { x = 0; });
                double pred = forward_backward(net, s, sample_grad);
                // MSE on the standardized scale; d(loss)/d(pred_std) folds the
                // sigma factor already present in forward_backward's gradient.
                double resid = (pred - s.label) / sigma;
                scale_loss += resid * resid;
                double w = 2.0 * resid / sigma * inv;
                zip_params(net, grad, sample_grad, sample_grad,
                           [&](double&, double& g, double& sg, double&) { g += w * sg; });
            }
            epoch_loss += scale_loss;
            if (!std::isfinite(scale_loss))
                throw TrainError("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch));
            ++step;
            double corr1 = 1.0 - std::pow(b1, static_cast<double>(step));
            double corr2 = 1.0 - std::pow(b2, static_cast<double>(step));
            zip_params(net, grad, adam_m, adam_v,
                       [&](double& p, double& g, double& m1, double& v1) {
                           m1 = b1 * m1 + (1 - b1) * g;
                           v1 = b2 * v1 + (1 - b2) * g * g;
                           p -= cfg.learning_rate * (m1 / corr1) /
                                (std::sqrt(v1 / corr2) + eps);
                       });
        }
        report.train_loss.push_back(epoch_loss / static_cast<double>(train_set.size()));
        report.epochs = epoch + 1;
        double mae = val_score();
        if (mae < best_mae - 1e-12) {
            best_mae = mae;
            best = net;
            best_epoch = epoch;
        } else if (epoch - std::max(best_epoch, 0) >= cfg.patience) {
            report.stopped_early = true;
            break;
        }
    }
    report.best_val_mae = best_mae;
    double mal = 0;
    for (const auto& s : val_set) mal += std::abs(s.label);
    report.val_mal = mal / static_cast<double>(val_set.size());
    return {std::move(best), report};
}

std::pair<double, double> evaluate_regressor(const SetNetwork& net, const Dataset& data) {
    if (data.empty()) throw TrainError("evaluate_regressor: empty dataset");
    double mae = 0, mal = 0;
    for (const auto& s : data) {
        mae += std::abs(forward(net, s) - s.label);
        mal += std::abs(s.label);
    }
    double n = static_cast<double>(data.size());
    return {mae / n, mal / n};
}

namespace {

nlohmann::json layer_to_json(const Layer& l) {
    return {{"w", l.w}, {"b", l.b}};
}

Layer layer_from_json(const nlohmann::json& j) {
    Layer l;
    l.w = j.at("w").get<std::vector<std::vector<double>>>();
    l.b = j.at("b").get<std::vector<double>>();
    return l;
}

nlohmann::json mlp2_to_json(const Mlp2& m) {
    return {{"hidden", layer_to_json(m.hidden)}, {"out", layer_to_json(m.out)}};
}

Mlp2 mlp2_from_json(const nlohmann::json& j) {
    return {layer_from_json(j.at("hidden")), layer_from_json(j.at("out"))};
}

}  // namespace

nlohmann::json network_to_json(const SetNetwork& net) {
    return {{"psi_d", mlp2_to_json(net.psi_d)},
            {"psi_s", mlp2_to_json(net.psi_s)},
            {"psi_v", mlp2_to_json(net.psi_v)},
            {"static_dim", net.static_dim},
            {"decision_dim", net.decision_dim},
            {"prediction_target", net.prediction_target},
            {"label_mu", net.label_mu},
            {"label_sigma", net.label_sigma},
            {"feature_config", net.feature_config}};
}

SetNetwork network_from_json(const nlohmann::json& j) {
    SetNetwork net;
    net.psi_d = mlp2_from_json(j.at("psi_d"));
    net.psi_s = mlp2_from_json(j.at("psi_s"));
    net.psi_v = mlp2_from_json(j.at("psi_v"));
    net.static_dim = j.at("static_dim").get<int>();
    net.decision_dim = j.at("decision_dim").get<int>();
    net.prediction_target = j.at("prediction_target").get<std::string>();
    net.label_mu = j.at("label_mu").get<double>();
    net.label_sigma = j.at("label_sigma").get<double>();
    net.feature_config = j.at("feature_config");
    check_layer(net.psi_d.hidden, net.static_dim, net.psi_d.hidden.out_dim(), "psi_d.hidden");
    check_layer(net.psi_v.out, net.psi_v.hidden.out_dim(), 1, "psi_v.out");
    return net;
}

}  // namespace bilo::mlp
