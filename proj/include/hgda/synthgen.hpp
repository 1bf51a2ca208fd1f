#pragma once

#include "hgda/graph.hpp"
#include "hgda/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hgda {

/// One Beta(a, b) component of the per-node homophily sampling mixture.
struct MixtureComponent {
    double weight = 1.0;
    double beta_a = 1.0;
    double beta_b = 1.0;
};

/// Parameters of a synthetic attributed graph with controllable homophily.
struct GenSpec {
    std::string name = "synthetic";
    Index num_nodes = 600;
    int num_classes = 3;
    double mean_degree = 10.0;
    std::vector<MixtureComponent> homophily_mix{{1.0, 8.0, 2.0}};
    Index feature_dim = 32;
    double class_center_scale = 1.0;
    double feature_noise_sigma = 1.0;
    std::uint64_t seed = 0;

    /// Expected node homophily under the mixture.
    [[nodiscard]] double mixture_mean() const {
        double m = 0.0;
        for (const auto& c : homophily_mix) m += c.weight * c.beta_a / (c.beta_a + c.beta_b);
        return m;
    }

    void validate() const {
        if (num_classes < 1) throw std::invalid_argument("GenSpec: num_classes must be >= 1");
        if (num_nodes < num_classes)
            throw std::invalid_argument("GenSpec: num_nodes (" + std::to_string(num_nodes) +
                                        ") must be >= num_classes (" + std::to_string(num_classes) + ")");
        if (!(mean_degree >= 1.0)) throw std::invalid_argument("GenSpec: mean_degree must be >= 1");
        if (!(feature_noise_sigma > 0.0)) throw std::invalid_argument("GenSpec: feature_noise_sigma must be > 0");
        if (!(class_center_scale >= 0.0)) throw std::invalid_argument("GenSpec: class_center_scale must be >= 0");
        if (feature_dim < 1) throw std::invalid_argument("GenSpec: feature_dim must be >= 1");
        if (homophily_mix.empty()) throw std::invalid_argument("GenSpec: homophily_mix is empty");
        double total = 0.0;
        for (const auto& c : homophily_mix) {
            if (!(c.weight >= 0.0)) throw std::invalid_argument("GenSpec: mixture weight must be >= 0");
            if (!(c.beta_a > 0.0 && c.beta_b > 0.0))
                throw std::invalid_argument("GenSpec: beta parameters must be > 0");
            total += c.weight;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("GenSpec: mixture weights sum to " + std::to_string(total) + ", expected 1");
    }
};

inline nlohmann::json to_json(const GenSpec& s) {
    nlohmann::json mix = nlohmann::json::array();
    for (const auto& c : s.homophily_mix) mix.push_back({{"weight", c.weight}, {"beta_a", c.beta_a}, {"beta_b", c.beta_b}});
    return {{"name", s.name},
            {"num_nodes", s.num_nodes},
            {"num_classes", s.num_classes},
            {"mean_degree", s.mean_degree},
            {"homophily_mix", std::move(mix)},
            {"feature_dim", s.feature_dim},
            {"class_center_scale", s.class_center_scale},
            {"feature_noise_sigma", s.feature_noise_sigma},
            {"seed", s.seed}};
}

inline GenSpec gen_spec_from_json(const nlohmann::json& j) {
    GenSpec s;
    s.name = j.value("name", s.name);
    s.num_nodes = j.at("num_nodes").get<Index>();
    s.num_classes = j.at("num_classes").get<int>();
    s.mean_degree = j.at("mean_degree").get<double>();
    s.homophily_mix.clear();
    for (const auto& c : j.at("homophily_mix"))
        s.homophily_mix.push_back({c.at("weight").get<double>(), c.at("beta_a").get<double>(), c.at("beta_b").get<double>()});
    s.feature_dim = j.at("feature_dim").get<Index>();
    s.class_center_scale = j.at("class_center_scale").get<double>();
    s.feature_noise_sigma = j.at("feature_noise_sigma").get<double>();
    s.seed = j.value("seed", std::uint64_t{0});
    return s;
}

namespace synth_detail {

enum Stream : std::uint64_t { kCenters = 1, kStructure = 2, kNoise = 3 };

inline double sample_beta(double a, double b, SplitMix64& rng) {
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    if (x + y <= 0.0) return a >= b ? 1.0 : 0.0;
    return x / (x + y);
}

inline Matrix draw_centers(const GenSpec& spec) {
    SplitMix64 rng = SplitMix64(spec.seed).fork(kCenters);
    std::normal_distribution<double> normal(0.0, spec.class_center_scale > 0.0 ? spec.class_center_scale : 1.0);
    Matrix centers(spec.num_classes, spec.feature_dim);
    for (Index c = 0; c < centers.rows(); ++c)
        for (Index j = 0; j < centers.cols(); ++j) centers(c, j) = spec.class_center_scale > 0.0 ? normal(rng) : 0.0;
    return centers;
}

inline Graph generate_with_centers(const GenSpec& spec, const Matrix& centers) {
    spec.validate();
    const Index n = spec.num_nodes;
    const int num_classes = spec.num_classes;
    SplitMix64 rng = SplitMix64(spec.seed).fork(kStructure);

    // balanced labels, shuffled (Fisher-Yates)
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index v = 0; v < n; ++v) labels[v] = static_cast<int>(v % num_classes);
    for (Index i = n - 1; i > 0; --i) std::swap(labels[i], labels[rng.below(static_cast<std::uint64_t>(i + 1))]);

    std::vector<std::vector<Index>> members(static_cast<std::size_t>(num_classes));
    for (Index v = 0; v < n; ++v) members[labels[v]].push_back(v);

    // per-node target homophily from the mixture
    std::vector<double> cumulative;
    double acc = 0.0;
    for (const auto& c : spec.homophily_mix) cumulative.push_back(acc += c.weight);
    std::vector<double> target_h(static_cast<std::size_t>(n));
    for (Index v = 0; v < n; ++v) {
        const double u = rng.uniform() * acc;
        std::size_t k = 0;
        while (k + 1 < cumulative.size() && u >= cumulative[k]) ++k;
        target_h[v] = sample_beta(spec.homophily_mix[k].beta_a, spec.homophily_mix[k].beta_b, rng);
    }

    const auto stubs = static_cast<int>(std::ceil(spec.mean_degree));
    std::vector<std::pair<Index, Index>> edges;
    edges.reserve(static_cast<std::size_t>(n) * stubs);
    for (Index v = 0; v < n; ++v) {
        const int c = labels[v];
        const auto& own = members[c];
        const Index others = n - static_cast<Index>(own.size());
        for (int s = 0; s < stubs; ++s) {
            bool same = rng.uniform() < target_h[v];
            if (same && own.size() < 2) same = false;
            if (!same && others == 0) same = true;
            if (same && own.size() < 2) continue;
            Index u;
            if (same) {
                do {
                    u = own[rng.below(own.size())];
                } while (u == v);
            } else {
                // r-th node among all classes except c, in class order
                auto r = static_cast<Index>(rng.below(static_cast<std::uint64_t>(others)));
                int k = 0;
                for (;; ++k) {
                    if (k == c) continue;
                    const auto sz = static_cast<Index>(members[k].size());
                    if (r < sz) break;
                    r -= sz;
                }
                u = members[k][r];
            }
            edges.emplace_back(v, u);
        }
    }

    SplitMix64 noise_rng = SplitMix64(spec.seed).fork(kNoise);
    std::normal_distribution<double> noise(0.0, spec.feature_noise_sigma);
    Matrix features(n, spec.feature_dim);
    for (Index v = 0; v < n; ++v)
        for (Index j = 0; j < spec.feature_dim; ++j) features(v, j) = centers(labels[v], j) + noise(noise_rng);

    return Graph::from_edges(n, edges, std::move(features), std::move(labels), num_classes, spec.name);
}

}  // namespace synth_detail

/// Generates one graph. Deterministic in spec (including seed).
inline Graph generate(const GenSpec& spec) {
    spec.validate();
    return synth_detail::generate_with_centers(spec, synth_detail::draw_centers(spec));
}

/// Source/target pair sharing the class feature centers drawn from the
/// source seed. Everything else comes from each spec's own seed: different
/// seeds give independent draws, while equal seeds reuse the labels and the
/// feature noise, so a pair differing only in homophily_mix differs only in
/// its edges.
inline std::pair<Graph, Graph> generate_pair(const GenSpec& source_spec, const GenSpec& target_spec) {
    source_spec.validate();
    target_spec.validate();
    if (source_spec.num_classes != target_spec.num_classes)
        throw std::invalid_argument("generate_pair: num_classes differ (" + std::to_string(source_spec.num_classes) +
                                    " vs " + std::to_string(target_spec.num_classes) + ")");
    if (source_spec.feature_dim != target_spec.feature_dim)
        throw std::invalid_argument("generate_pair: feature_dim differs (" + std::to_string(source_spec.feature_dim) +
                                    " vs " + std::to_string(target_spec.feature_dim) + ")");
    const Matrix centers = synth_detail::draw_centers(source_spec);
    return {synth_detail::generate_with_centers(source_spec, centers),
            synth_detail::generate_with_centers(target_spec, centers)};
}

}  // namespace hgda
