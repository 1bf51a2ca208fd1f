#pragma once

#include "hgda/homophily.hpp"
#include "hgda/losses.hpp"
#include "hgda/model.hpp"
#include "hgda/optim.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hgda {

struct EpochRecord {
    int epoch = 0;
    double loss_total = 0.0;
    double loss_h = 0.0;
    double loss_s = 0.0;
    double loss_t = 0.0;
    std::optional<double> src_acc;
    std::optional<double> tgt_acc;
    /// Alignment loss re-measured in eval mode after the update.
    std::optional<double> eval_loss_h;
};

/// Measurable KL terms of the homophily-aware adaptation bound.
struct BoundDiagnostics {
    double kl_ax = 0.0;
    double kl_x = 0.0;
    double kl_lx = 0.0;
    double kl_heterophily_hist = 0.0;
};

struct ExperimentReport {
    HgdaConfig config;
    std::vector<EpochRecord> epochs;
    std::optional<double> final_source_accuracy;
    std::optional<double> final_target_accuracy;
    std::optional<SubgroupProfile> subgroup;
    std::optional<BoundDiagnostics> bounds;
    double wall_clock_seconds = 0.0;
};

struct TrainOptions {
    /// Eval-mode accuracies and alignment every this many epochs (0 = never).
    int eval_every = 1;
    /// Fill subgroup profile and bound diagnostics when labels allow.
    bool analyze = true;
    std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
    HgdaModel model;
    ad::AdamState optimizer;
    ExperimentReport report;
};

struct Evaluation {
    double accuracy = 0.0;
    std::vector<int> predictions;
};

namespace train_detail {

enum Stream : std::uint64_t { kInit = 11, kDropout = 12 };

inline std::vector<int> argmax_rows(const Matrix& logits) {
    std::vector<int> preds(static_cast<std::size_t>(logits.rows()));
    for (Index i = 0; i < logits.rows(); ++i) {
        Index best = 0;
        logits.row(i).maxCoeff(&best);
        preds[i] = static_cast<int>(best);
    }
    return preds;
}

inline std::optional<double> accuracy(const Graph& g, const std::vector<int>& preds) {
    if (!g.labels) return std::nullopt;
    Index labeled = 0;
    Index correct = 0;
    for (Index v = 0; v < g.num_nodes; ++v) {
        const int y = (*g.labels)[v];
        if (y == kUnknownLabel) continue;
        ++labeled;
        if (preds[v] == y) ++correct;
    }
    if (labeled == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(labeled);
}

}  // namespace train_detail

inline Evaluation evaluate(const HgdaModel& model, const PreparedGraph& g) {
    const auto r = forward(g, model);
    Evaluation e;
    e.predictions = train_detail::argmax_rows(r.logits.value());
    const auto acc = train_detail::accuracy(*g.graph, e.predictions);
    if (!acc) throw std::invalid_argument("evaluate: graph has no labeled nodes");
    e.accuracy = *acc;
    return e;
}

/// Eval-mode predictions and accuracy over all labeled nodes.
inline Evaluation evaluate(const HgdaModel& model, const Graph& g) { return evaluate(model, PreparedGraph(g)); }

inline SubgroupProfile subgroup_accuracy(const HgdaModel& model, const Graph& source, const Graph& target) {
    const auto e = evaluate(model, target);
    return subgroup_profile(source, target, &e.predictions);
}

inline BoundDiagnostics bound_diagnostics(const Graph& source, const Graph& target) {
    if (source.feature_dim() != target.feature_dim())
        throw std::invalid_argument("bound_diagnostics: feature widths differ");
    BoundDiagnostics d;
    d.kl_ax = ad::gaussian_kl_value(spmm(normalized_adjacency(source), source.features),
                                    spmm(normalized_adjacency(target), target.features));
    d.kl_x = ad::gaussian_kl_value(source.features, target.features);
    d.kl_lx = ad::gaussian_kl_value(spmm(normalized_laplacian(source), source.features),
                                    spmm(normalized_laplacian(target), target.features));
    d.kl_heterophily_hist = kl_histogram(heterophily_histogram(source), heterophily_histogram(target));
    return d;
}

/// Full-graph training: each epoch runs both domains through every enabled
/// channel, forms L_H + alpha*L_S + beta*L_T, backpropagates and takes one
/// Adam step. Deterministic for a fixed cfg.seed.
inline TrainResult train(const Graph& source, const Graph& target, const HgdaConfig& cfg, const TrainOptions& opts = {}) {
    cfg.validate();
    if (!source.fully_labeled()) throw std::invalid_argument("source must be labeled");
    if (source.feature_dim() != target.feature_dim())
        throw std::invalid_argument("source and target feature widths differ (" + std::to_string(source.feature_dim()) +
                                    " vs " + std::to_string(target.feature_dim()) + ")");
    if (source.num_classes != target.num_classes)
        throw std::invalid_argument("source and target class counts differ");
    const auto started = std::chrono::steady_clock::now();

    const PreparedGraph src(source);
    const PreparedGraph tgt(target);
    const SplitMix64 root(cfg.seed);
    TrainResult out;
    out.model = HgdaModel::init(cfg, source.feature_dim(), source.num_classes, root.fork(train_detail::kInit));
    out.optimizer.config = {cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
    out.report.config = cfg;
    SplitMix64 dropout_rng = root.fork(train_detail::kDropout);
    auto params = out.model.parameters();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        out.model.zero_grad();
        const LossBreakdown loss = total_loss(src, tgt, out.model, cfg, true, &dropout_rng);
        const struct {
            const char* name;
            double value;
        } parts[] = {{"L_H", loss.alignment}, {"L_S", loss.classification}, {"L_T", loss.entropy}, {"total", loss.total.item()}};
        for (const auto& p : parts)
            if (!std::isfinite(p.value))
                throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": " + p.name +
                                         " is non-finite");
        ad::backward(loss.total);
        ad::adam_step(params, out.optimizer);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss_total = loss.total.item();
        rec.loss_h = loss.alignment;
        rec.loss_s = loss.classification;
        rec.loss_t = loss.entropy;
        if (opts.eval_every > 0 && ((epoch + 1) % opts.eval_every == 0 || epoch + 1 == cfg.epochs)) {
            const auto fs = forward(src, out.model);
            const auto ft = forward(tgt, out.model);
            rec.src_acc = train_detail::accuracy(source, train_detail::argmax_rows(fs.logits.value()));
            rec.tgt_acc = train_detail::accuracy(target, train_detail::argmax_rows(ft.logits.value()));
            if (cfg.align) rec.eval_loss_h = alignment_loss(fs, ft).item();
        }
        if (opts.on_epoch) opts.on_epoch(rec);
        out.report.epochs.push_back(rec);
    }

    const auto fs = forward(src, out.model);
    const auto ft = forward(tgt, out.model);
    const auto target_preds = train_detail::argmax_rows(ft.logits.value());
    out.report.final_source_accuracy = train_detail::accuracy(source, train_detail::argmax_rows(fs.logits.value()));
    out.report.final_target_accuracy = train_detail::accuracy(target, target_preds);
    if (opts.analyze && target.fully_labeled()) {
        out.report.subgroup = subgroup_profile(source, target, &target_preds);
        out.report.bounds = bound_diagnostics(source, target);
    }
    out.report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

inline nlohmann::json to_json(const BoundDiagnostics& d) {
    return {{"kl_AX", d.kl_ax}, {"kl_X", d.kl_x}, {"kl_LX", d.kl_lx}, {"kl_heterophily_hist", d.kl_heterophily_hist}};
}

namespace train_detail {
inline nlohmann::json opt(const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); }
}  // namespace train_detail

/// Report JSON. Wall-clock time is left out so reruns are byte-identical.
inline nlohmann::json to_json(const ExperimentReport& r) {
    using train_detail::opt;
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : r.epochs)
        epochs.push_back({{"epoch", e.epoch},
                          {"loss_total", e.loss_total},
                          {"loss_H", e.loss_h},
                          {"loss_S", e.loss_s},
                          {"loss_T", e.loss_t},
                          {"src_acc", opt(e.src_acc)},
                          {"tgt_acc", opt(e.tgt_acc)},
                          {"eval_loss_H", opt(e.eval_loss_h)}});
    return {{"config", to_json(r.config)},
            {"seed", r.config.seed},
            {"epochs", std::move(epochs)},
            {"final_source_accuracy", opt(r.final_source_accuracy)},
            {"final_target_accuracy", opt(r.final_target_accuracy)},
            {"subgroup", r.subgroup ? to_json(*r.subgroup) : nlohmann::json(nullptr)},
            {"bound_diagnostics", r.bounds ? to_json(*r.bounds) : nlohmann::json(nullptr)}};
}

/// Per-epoch series as CSV with header epoch,loss_total,loss_H,loss_S,loss_T,src_acc,tgt_acc.
inline std::string metrics_csv(const ExperimentReport& r) {
    std::string out = "epoch,loss_total,loss_H,loss_S,loss_T,src_acc,tgt_acc\n";
    const auto num = [&out](double x) {
        char buf[64];
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
        out.append(buf, ptr);
    };
    for (const auto& e : r.epochs) {
        out += std::to_string(e.epoch);
        for (double x : {e.loss_total, e.loss_h, e.loss_s, e.loss_t}) {
            out += ',';
            num(x);
        }
        for (const auto& x : {e.src_acc, e.tgt_acc}) {
            out += ',';
            if (x) num(*x);
        }
        out += '\n';
    }
    return out;
}

}  // namespace hgda
