#pragma once

#include "hgda/autodiff.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace hgda::ad {

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct AdamState {
    AdamConfig config;
    std::int64_t t = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
};

/// One Adam update with bias correction. Weight decay is decoupled and
/// applied to the parameter before the Adam delta. Missing gradients count
/// as zero.
inline void adam_step(std::span<Tensor> params, AdamState& state) {
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.push_back(Matrix::Zero(p.rows(), p.cols()));
            state.v.push_back(Matrix::Zero(p.rows(), p.cols()));
        }
    }
    if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: parameter count changed");
    const auto& c = state.config;
    ++state.t;
    const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
    const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = params[k];
        Matrix& m = state.m[k];
        Matrix& v = state.v[k];
        if (m.rows() != p.rows() || m.cols() != p.cols())
            throw std::invalid_argument("adam_step: moment shape does not match parameter " + std::to_string(k));
        Matrix& theta = p.mutable_value();
        if (c.weight_decay != 0.0) theta *= 1.0 - c.lr * c.weight_decay;
        if (!p.has_grad()) {
            m *= c.beta1;
            v *= c.beta2;
        } else {
            const Matrix& g = p.node().grad;
            m = c.beta1 * m + (1.0 - c.beta1) * g;
            v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
        }
        theta.array() -= c.lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + c.eps);
    }
}

}  // namespace hgda::ad
