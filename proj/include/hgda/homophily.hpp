#pragma once

#include "hgda/graph.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hgda {

inline constexpr int kHistogramBins = 10;
inline constexpr double kKlSmoothing = 1e-6;

/// Same-label neighbor count and neighborhood size of one node.
struct NeighborAgreement {
    Index same = 0;
    Index degree = 0;
};

/// Maps the ratio num/den in [0,1] to one of 10 uniform bins. Values on an
/// interior edge go to the higher bin and 1.0 lands in the last bin. Uses
/// integer arithmetic so ratios like 3/10 never slip below their edge.
inline int ratio_bin(Index num, Index den) {
    const Index b = (static_cast<Index>(kHistogramBins) * num) / den;
    return static_cast<int>(std::min<Index>(b, kHistogramBins - 1));
}

/// Bin for an arbitrary value in [0,1].
inline int value_bin(double h) {
    if (!(h >= 0.0 && h <= 1.0)) throw std::out_of_range("value_bin: " + std::to_string(h) + " outside [0,1]");
    int b = static_cast<int>(std::floor(h * kHistogramBins));
    // h*10 may round to just below an edge that h itself sits on
    if (b + 1 <= kHistogramBins && static_cast<double>(b + 1) / kHistogramBins <= h) ++b;
    return std::min(b, kHistogramBins - 1);
}

inline NeighborAgreement neighbor_agreement(const Graph& g, Index v) {
    if (v < 0 || v >= g.num_nodes) throw std::out_of_range("node " + std::to_string(v) + " out of range");
    if (!g.labels) throw std::invalid_argument("neighbor_agreement: graph has no labels");
    const auto& y = *g.labels;
    if (y[v] == kUnknownLabel) throw std::invalid_argument("node " + std::to_string(v) + " has no label");
    NeighborAgreement a;
    for (Index u : g.neighbors(v)) {
        if (y[u] == kUnknownLabel)
            throw std::invalid_argument("neighbor " + std::to_string(u) + " of node " + std::to_string(v) +
                                        " has no label");
        if (y[u] == y[v]) ++a.same;
        ++a.degree;
    }
    return a;
}

/// Fraction of v's neighbors sharing its label; nullopt for isolated nodes.
inline std::optional<double> node_homophily(const Graph& g, Index v) {
    const auto a = neighbor_agreement(g, v);
    if (a.degree == 0) return std::nullopt;
    return static_cast<double>(a.same) / static_cast<double>(a.degree);
}

/// Complement of node_homophily, h(v) = 1 - H(v).
inline std::optional<double> node_heterophily(const Graph& g, Index v) {
    const auto a = neighbor_agreement(g, v);
    if (a.degree == 0) return std::nullopt;
    return static_cast<double>(a.degree - a.same) / static_cast<double>(a.degree);
}

struct HomophilyHistogram {
    std::array<double, kHistogramBins + 1> bin_edges{};
    std::array<double, kHistogramBins> mass{};
    Index num_counted = 0;
    Index num_excluded = 0;

    static std::array<double, kHistogramBins + 1> uniform_edges() {
        std::array<double, kHistogramBins + 1> e{};
        for (int i = 0; i <= kHistogramBins; ++i) e[i] = static_cast<double>(i) / kHistogramBins;
        return e;
    }

    /// Histogram from raw masses (normalized here).
    static HomophilyHistogram from_mass(const std::array<double, kHistogramBins>& m) {
        HomophilyHistogram h;
        h.bin_edges = uniform_edges();
        double total = 0.0;
        for (double x : m) {
            if (!(x >= 0.0)) throw std::invalid_argument("histogram mass must be non-negative");
            total += x;
        }
        if (total <= 0.0) throw std::invalid_argument("histogram mass is empty");
        for (int i = 0; i < kHistogramBins; ++i) h.mass[i] = m[i] / total;
        return h;
    }
};

enum class Orientation { kHomophily, kHeterophily };

namespace homophily_detail {

inline HomophilyHistogram histogram(const Graph& g, Orientation orient) {
    HomophilyHistogram hist;
    hist.bin_edges = HomophilyHistogram::uniform_edges();
    std::array<Index, kHistogramBins> counts{};
    for (Index v = 0; v < g.num_nodes; ++v) {
        if (g.degree(v) == 0) {
            ++hist.num_excluded;
            continue;
        }
        const auto a = neighbor_agreement(g, v);
        const Index num = orient == Orientation::kHomophily ? a.same : a.degree - a.same;
        ++counts[ratio_bin(num, a.degree)];
        ++hist.num_counted;
    }
    if (hist.num_counted == 0) throw std::invalid_argument("histogram: graph has no labeled non-isolated nodes");
    for (int i = 0; i < kHistogramBins; ++i)
        hist.mass[i] = static_cast<double>(counts[i]) / static_cast<double>(hist.num_counted);
    return hist;
}

inline void check_same_binning(const HomophilyHistogram& p, const HomophilyHistogram& q) {
    if (p.bin_edges != q.bin_edges) throw std::invalid_argument("histograms have different bin edges");
}

}  // namespace homophily_detail

/// Empirical distribution of per-node heterophily h(v) over non-isolated nodes.
inline HomophilyHistogram heterophily_histogram(const Graph& g) {
    return homophily_detail::histogram(g, Orientation::kHeterophily);
}

/// Same as heterophily_histogram but binned on node homophily H(v).
inline HomophilyHistogram homophily_histogram(const Graph& g) {
    return homophily_detail::histogram(g, Orientation::kHomophily);
}

/// KL(p || q) in nats. Both arguments get kKlSmoothing added to every bin and
/// are renormalized, so the result is finite for any pair.
inline double kl_histogram(const HomophilyHistogram& p, const HomophilyHistogram& q) {
    homophily_detail::check_same_binning(p, q);
    const auto smooth = [](const std::array<double, kHistogramBins>& m) {
        std::array<double, kHistogramBins> s{};
        double total = 0.0;
        for (int i = 0; i < kHistogramBins; ++i) total += (s[i] = m[i] + kKlSmoothing);
        for (double& x : s) x /= total;
        return s;
    };
    const auto ps = smooth(p.mass);
    const auto qs = smooth(q.mass);
    double kl = 0.0;
    for (int i = 0; i < kHistogramBins; ++i) kl += ps[i] * std::log(ps[i] / qs[i]);
    return std::max(kl, 0.0);
}

/// 1-Wasserstein distance with mass placed at bin positions: sum of absolute
/// CDF differences times the bin width.
inline double wasserstein1_histogram(const HomophilyHistogram& p, const HomophilyHistogram& q) {
    homophily_detail::check_same_binning(p, q);
    double cdf_p = 0.0;
    double cdf_q = 0.0;
    double w = 0.0;
    for (int i = 0; i + 1 < kHistogramBins; ++i) {
        cdf_p += p.mass[i];
        cdf_q += q.mass[i];
        w += std::abs(cdf_p - cdf_q) * (p.bin_edges[i + 1] - p.bin_edges[i]);
    }
    return w;
}

/// Per-homophily-bin comparison of two domains, binned on node homophily H(v).
struct SubgroupProfile {
    std::array<double, kHistogramBins + 1> bin_edges = HomophilyHistogram::uniform_edges();
    std::array<Index, kHistogramBins> source_count{};
    std::array<Index, kHistogramBins> target_count{};
    std::array<double, kHistogramBins> source_proportion{};
    std::array<double, kHistogramBins> target_proportion{};
    std::array<double, kHistogramBins> abs_difference{};
    /// Empty when no predictions were supplied; nullopt entries mark empty bins.
    std::vector<std::optional<double>> target_accuracy;
};

inline SubgroupProfile subgroup_profile(const Graph& source, const Graph& target,
                                        const std::vector<int>* target_preds = nullptr) {
    if (!source.fully_labeled()) throw std::invalid_argument("subgroup_profile: source must be fully labeled");
    if (!target.fully_labeled()) throw std::invalid_argument("subgroup_profile: target must be fully labeled");
    if (target_preds && target_preds->size() != static_cast<std::size_t>(target.num_nodes))
        throw std::invalid_argument("subgroup_profile: prediction count " + std::to_string(target_preds->size()) +
                                    " != target nodes " + std::to_string(target.num_nodes));
    SubgroupProfile prof;
    const auto bins_of = [](const Graph& g, std::array<Index, kHistogramBins>& counts, std::vector<int>& node_bin) {
        node_bin.assign(static_cast<std::size_t>(g.num_nodes), -1);
        Index total = 0;
        for (Index v = 0; v < g.num_nodes; ++v) {
            if (g.degree(v) == 0) continue;
            const auto a = neighbor_agreement(g, v);
            const int b = ratio_bin(a.same, a.degree);
            node_bin[v] = b;
            ++counts[b];
            ++total;
        }
        return total;
    };
    std::vector<int> source_bin;
    std::vector<int> target_bin;
    const Index source_total = bins_of(source, prof.source_count, source_bin);
    const Index target_total = bins_of(target, prof.target_count, target_bin);
    if (source_total == 0 || target_total == 0)
        throw std::invalid_argument("subgroup_profile: a domain has no non-isolated nodes");
    for (int b = 0; b < kHistogramBins; ++b) {
        prof.source_proportion[b] = static_cast<double>(prof.source_count[b]) / static_cast<double>(source_total);
        prof.target_proportion[b] = static_cast<double>(prof.target_count[b]) / static_cast<double>(target_total);
        prof.abs_difference[b] = std::abs(prof.source_proportion[b] - prof.target_proportion[b]);
    }
    if (target_preds) {
        std::array<Index, kHistogramBins> correct{};
        const auto& y = *target.labels;
        for (Index v = 0; v < target.num_nodes; ++v)
            if (target_bin[v] >= 0 && (*target_preds)[v] == y[v]) ++correct[target_bin[v]];
        prof.target_accuracy.resize(kHistogramBins);
        for (int b = 0; b < kHistogramBins; ++b)
            if (prof.target_count[b] > 0)
                prof.target_accuracy[b] = static_cast<double>(correct[b]) / static_cast<double>(prof.target_count[b]);
    }
    return prof;
}

inline nlohmann::json to_json(const HomophilyHistogram& h) {
    return {{"bin_edges", h.bin_edges}, {"mass", h.mass}, {"num_counted", h.num_counted}, {"num_excluded", h.num_excluded}};
}

inline HomophilyHistogram histogram_from_json(const nlohmann::json& j) {
    HomophilyHistogram h;
    const auto edges = j.at("bin_edges").get<std::vector<double>>();
    const auto mass = j.at("mass").get<std::vector<double>>();
    if (edges.size() != kHistogramBins + 1 || mass.size() != kHistogramBins)
        throw std::invalid_argument("histogram json: expected 11 edges and 10 masses");
    std::copy(edges.begin(), edges.end(), h.bin_edges.begin());
    std::copy(mass.begin(), mass.end(), h.mass.begin());
    h.num_counted = j.at("num_counted").get<Index>();
    h.num_excluded = j.at("num_excluded").get<Index>();
    return h;
}

inline nlohmann::json to_json(const SubgroupProfile& p) {
    nlohmann::json j = {{"bin_edges", p.bin_edges},
                        {"source_count", p.source_count},
                        {"target_count", p.target_count},
                        {"source_proportion", p.source_proportion},
                        {"target_proportion", p.target_proportion},
                        {"abs_difference", p.abs_difference}};
    if (!p.target_accuracy.empty()) {
        nlohmann::json acc = nlohmann::json::array();
        for (const auto& a : p.target_accuracy) acc.push_back(a ? nlohmann::json(*a) : nlohmann::json(nullptr));
        j["target_accuracy"] = std::move(acc);
    }
    return j;
}

}  // namespace hgda
