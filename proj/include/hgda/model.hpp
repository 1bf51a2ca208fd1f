#pragma once

#include "hgda/autodiff.hpp"
#include "hgda/graph.hpp"
#include "hgda/losses.hpp"
#include "hgda/rng.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hgda {

/// Propagation channel: homophilic (low-pass, Ã), full-pass (I) or
/// heterophilic (high-pass, L̃).
enum class Channel : int { L = 0, F = 1, H = 2 };

inline constexpr std::array<Channel, 3> kAllChannels{Channel::L, Channel::F, Channel::H};

inline const char* channel_name(Channel c) {
    switch (c) {
        case Channel::L: return "L";
        case Channel::F: return "F";
        case Channel::H: return "H";
    }
    return "?";
}

inline Channel parse_channel(const std::string& s) {
    if (s == "L") return Channel::L;
    if (s == "F") return Channel::F;
    if (s == "H") return Channel::H;
    throw std::invalid_argument("unknown channel '" + s + "' (expected L, F or H)");
}

struct HgdaConfig {
    std::vector<Index> hidden_dims{128, 16};
    double dropout_p = 0.5;
    std::array<bool, 3> channels_enabled{true, true, true};
    /// When false the alignment term is left out of the objective (reported as 0).
    bool align = true;
    double alpha = 0.1;
    double beta = 0.1;
    double lr = 5e-4;
    double weight_decay = 5e-4;
    int epochs = 200;
    std::uint64_t seed = 0;

    [[nodiscard]] bool enabled(Channel c) const { return channels_enabled[static_cast<int>(c)]; }

    void validate() const {
        if (!(enabled(Channel::L) || enabled(Channel::F) || enabled(Channel::H)))
            throw std::invalid_argument("HgdaConfig: at least one channel must be enabled");
        if (hidden_dims.empty()) throw std::invalid_argument("HgdaConfig: hidden_dims must not be empty");
        for (Index h : hidden_dims)
            if (h < 1) throw std::invalid_argument("HgdaConfig: hidden widths must be positive");
        if (!(alpha >= 0.0) || !(beta >= 0.0)) throw std::invalid_argument("HgdaConfig: alpha and beta must be >= 0");
        if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw std::invalid_argument("HgdaConfig: dropout_p outside [0,1)");
        if (!(lr >= 0.0)) throw std::invalid_argument("HgdaConfig: lr must be >= 0");
        if (!(weight_decay >= 0.0)) throw std::invalid_argument("HgdaConfig: weight_decay must be >= 0");
        if (epochs < 0) throw std::invalid_argument("HgdaConfig: epochs must be >= 0");
    }
};

inline nlohmann::json to_json(const HgdaConfig& c) {
    nlohmann::json channels = nlohmann::json::array();
    for (Channel ch : kAllChannels)
        if (c.enabled(ch)) channels.push_back(channel_name(ch));
    return {{"hidden_dims", c.hidden_dims}, {"dropout_p", c.dropout_p}, {"channels_enabled", channels},
            {"align", c.align},             {"alpha", c.alpha},         {"beta", c.beta},
            {"lr", c.lr},                   {"weight_decay", c.weight_decay}, {"epochs", c.epochs},
            {"seed", c.seed}};
}

/// Reads a config; absent keys keep their defaults.
inline HgdaConfig config_from_json(const nlohmann::json& j, HgdaConfig c = {}) {
    if (j.contains("hidden_dims")) c.hidden_dims = j.at("hidden_dims").get<std::vector<Index>>();
    if (j.contains("dropout_p")) c.dropout_p = j.at("dropout_p").get<double>();
    if (j.contains("channels_enabled")) {
        c.channels_enabled = {false, false, false};
        for (const auto& s : j.at("channels_enabled")) c.channels_enabled[static_cast<int>(parse_channel(s.get<std::string>()))] = true;
    }
    if (j.contains("align")) c.align = j.at("align").get<bool>();
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("beta")) c.beta = j.at("beta").get<double>();
    if (j.contains("lr")) c.lr = j.at("lr").get<double>();
    if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

/// A graph with its propagation operators computed once.
struct PreparedGraph {
    const Graph* graph = nullptr;  // not owned; must outlive this object
    std::shared_ptr<const SparseOperator> adjacency;
    std::shared_ptr<const SparseOperator> laplacian;
    ad::Tensor features;

    explicit PreparedGraph(const Graph& g)
        : graph(&g),
          adjacency(std::make_shared<const SparseOperator>(normalized_adjacency(g))),
          laplacian(std::make_shared<const SparseOperator>(normalized_laplacian(g))),
          features(ad::Tensor::constant(g.features)) {}
};

struct ChannelParams {
    std::vector<ad::Tensor> weights;
    ad::Tensor gain;
};

class HgdaModel {
public:
    HgdaModel() = default;

    /// Glorot-uniform weights, channel gains 1, zero classifier bias.
    static HgdaModel init(const HgdaConfig& cfg, Index input_dim, int num_classes, SplitMix64 rng) {
        cfg.validate();
        if (input_dim < 1) throw std::invalid_argument("HgdaModel: input dimension must be positive");
        if (num_classes < 1) throw std::invalid_argument("HgdaModel: need at least one class");
        HgdaModel m;
        m.input_dim_ = input_dim;
        m.num_classes_ = num_classes;
        m.hidden_dims_ = cfg.hidden_dims;
        for (Channel ch : kAllChannels) {
            if (!cfg.enabled(ch)) continue;
            ChannelParams p;
            Index fan_in = input_dim;
            for (Index width : cfg.hidden_dims) {
                p.weights.push_back(ad::Tensor::parameter(glorot(fan_in, width, rng)));
                fan_in = width;
            }
            p.gain = ad::Tensor::scalar(1.0, true);
            m.channels_[static_cast<int>(ch)] = std::move(p);
        }
        m.clf_weight_ = ad::Tensor::parameter(glorot(cfg.hidden_dims.back(), num_classes, rng));
        m.clf_bias_ = ad::Tensor::parameter(Matrix::Zero(1, num_classes));
        return m;
    }

    [[nodiscard]] bool has_channel(Channel c) const { return channels_[static_cast<int>(c)].has_value(); }

    [[nodiscard]] const ChannelParams& channel(Channel c) const {
        if (!has_channel(c)) throw std::invalid_argument(std::string("channel ") + channel_name(c) + " is disabled");
        return *channels_[static_cast<int>(c)];
    }
    [[nodiscard]] ChannelParams& channel(Channel c) {
        return const_cast<ChannelParams&>(std::as_const(*this).channel(c));
    }

    [[nodiscard]] const ad::Tensor& classifier_weight() const { return clf_weight_; }
    [[nodiscard]] const ad::Tensor& classifier_bias() const { return clf_bias_; }
    [[nodiscard]] ad::Tensor& classifier_weight() { return clf_weight_; }
    [[nodiscard]] ad::Tensor& classifier_bias() { return clf_bias_; }
    [[nodiscard]] Index input_dim() const { return input_dim_; }
    [[nodiscard]] int num_classes() const { return num_classes_; }
    [[nodiscard]] Index embedding_dim() const { return hidden_dims_.back(); }
    [[nodiscard]] const std::vector<Index>& hidden_dims() const { return hidden_dims_; }

    /// Parameters in a fixed order with checkpoint names ("L.W0", "alpha.L", "clf.W", ...).
    [[nodiscard]] std::vector<std::pair<std::string, ad::Tensor>> named_parameters() const {
        std::vector<std::pair<std::string, ad::Tensor>> out;
        for (Channel ch : kAllChannels) {
            if (!has_channel(ch)) continue;
            const auto& p = channel(ch);
            for (std::size_t l = 0; l < p.weights.size(); ++l)
                out.emplace_back(std::string(channel_name(ch)) + ".W" + std::to_string(l), p.weights[l]);
            out.emplace_back(std::string("alpha.") + channel_name(ch), p.gain);
        }
        out.emplace_back("clf.W", clf_weight_);
        out.emplace_back("clf.b", clf_bias_);
        return out;
    }

    [[nodiscard]] std::vector<ad::Tensor> parameters() const {
        std::vector<ad::Tensor> out;
        for (auto& [name, t] : named_parameters()) out.push_back(t);
        return out;
    }

    void zero_grad() const {
        for (auto& t : parameters()) t.zero_grad();
    }

    /// Deep copy with fresh parameter tensors.
    [[nodiscard]] HgdaModel clone() const {
        HgdaModel m = *this;
        for (auto& ch : m.channels_) {
            if (!ch) continue;
            for (auto& w : ch->weights) w = ad::Tensor::parameter(w.value());
            ch->gain = ad::Tensor::parameter(ch->gain.value());
        }
        m.clf_weight_ = ad::Tensor::parameter(clf_weight_.value());
        m.clf_bias_ = ad::Tensor::parameter(clf_bias_.value());
        return m;
    }

private:
    static Matrix glorot(Index fan_in, Index fan_out, SplitMix64& rng) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_in, fan_out);
        for (Index i = 0; i < fan_in; ++i)
            for (Index j = 0; j < fan_out; ++j) w(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
        return w;
    }

    std::array<std::optional<ChannelParams>, 3> channels_;
    ad::Tensor clf_weight_;
    ad::Tensor clf_bias_;
    Index input_dim_ = 0;
    int num_classes_ = 0;
    std::vector<Index> hidden_dims_;
};

/// Stacked filter layers of one channel: H <- ReLU(gain * Op * H * W), with
/// dropout after every ReLU except the last when training. Op is Ã for L,
/// the identity for F and L̃ for H.
inline ad::Tensor forward_channel(Channel channel, const PreparedGraph& g, const HgdaModel& model, bool training,
                                  double dropout_p, SplitMix64* rng) {
    const auto& params = model.channel(channel);
    if (g.features.cols() != model.input_dim())
        throw std::invalid_argument("forward: feature width " + std::to_string(g.features.cols()) +
                                    " != model input " + std::to_string(model.input_dim()));
    if (training && dropout_p > 0.0 && rng == nullptr) throw std::invalid_argument("forward: training needs an RNG");
    std::shared_ptr<const SparseOperator> op;
    if (channel == Channel::L) op = g.adjacency;
    if (channel == Channel::H) op = g.laplacian;

    ad::Tensor h = g.features;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        const ad::Tensor& w = params.weights[l];
        ad::Tensor t;
        if (!op) {
            t = ad::matmul(h, w);
        } else if (w.cols() < w.rows()) {
            t = ad::propagate(op, ad::matmul(h, w));  // narrower side first
        } else {
            t = ad::matmul(ad::propagate(op, h), w);
        }
        h = ad::relu(ad::scale(params.gain, t));
        if (l + 1 < params.weights.size()) h = ad::dropout(h, dropout_p, training, *rng);
    }
    return h;
}

struct ForwardResult {
    std::array<ad::Tensor, 3> channel_embeddings;  // undefined for disabled channels
    ad::Tensor embedding;
    ad::Tensor logits;

    [[nodiscard]] const ad::Tensor& of(Channel c) const { return channel_embeddings[static_cast<int>(c)]; }
};

/// Sums the enabled channel embeddings and applies the shared classifier.
inline ForwardResult forward(const PreparedGraph& g, const HgdaModel& model, bool training, double dropout_p,
                             SplitMix64* rng) {
    ForwardResult r;
    for (Channel ch : kAllChannels) {
        if (!model.has_channel(ch)) continue;
        ad::Tensor z = forward_channel(ch, g, model, training, dropout_p, rng);
        r.channel_embeddings[static_cast<int>(ch)] = z;
        r.embedding = r.embedding.defined() ? ad::add(r.embedding, z) : z;
    }
    r.logits = ad::add_row(ad::matmul(r.embedding, model.classifier_weight()), model.classifier_bias());
    return r;
}

/// Eval-mode forward.
inline ForwardResult forward(const PreparedGraph& g, const HgdaModel& model) {
    return forward(g, model, false, 0.0, nullptr);
}

/// Sum over enabled channels of KL(source channel || target channel).
inline ad::Tensor alignment_loss(const ForwardResult& source, const ForwardResult& target) {
    ad::Tensor total;
    for (Channel ch : kAllChannels) {
        const auto& zs = source.of(ch);
        const auto& zt = target.of(ch);
        if (!zs.defined() || !zt.defined()) continue;
        ad::Tensor kl = ad::gaussian_kl(zs, zt);
        total = total.defined() ? ad::add(total, kl) : kl;
    }
    if (!total.defined()) throw std::invalid_argument("alignment_loss: no channel present in both domains");
    return total;
}

struct LossBreakdown {
    ad::Tensor total;
    double alignment = 0.0;       // L_H
    double classification = 0.0;  // L_S
    double entropy = 0.0;         // L_T
    ForwardResult source;
    ForwardResult target;
};

/// L = L_H + alpha * L_S + beta * L_T on one source/target forward pass.
inline LossBreakdown total_loss(const PreparedGraph& source, const PreparedGraph& target, const HgdaModel& model,
                                const HgdaConfig& cfg, bool training, SplitMix64* rng) {
    const Graph& src = *source.graph;
    if (!src.fully_labeled()) throw std::invalid_argument("source must be labeled");
    LossBreakdown out;
    out.source = forward(source, model, training, cfg.dropout_p, rng);
    out.target = forward(target, model, training, cfg.dropout_p, rng);

    const ad::Tensor l_s = ad::cross_entropy(out.source.logits, *src.labels);
    const ad::Tensor l_t = ad::mean_entropy(out.target.logits);
    ad::Tensor total = ad::add(ad::scalar_mul(l_s, cfg.alpha), ad::scalar_mul(l_t, cfg.beta));
    if (cfg.align) {
        const ad::Tensor l_h = alignment_loss(out.source, out.target);
        out.alignment = l_h.item();
        total = ad::add(l_h, total);
    }
    out.classification = l_s.item();
    out.entropy = l_t.item();
    out.total = total;
    return out;
}

}  // namespace hgda
