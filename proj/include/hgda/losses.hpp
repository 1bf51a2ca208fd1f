#pragma once

#include "hgda/autodiff.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hgda::ad {

inline constexpr double kVarianceFloor = 1e-5;

namespace loss_detail {

inline void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw std::domain_error(std::string(what) + ": input contains NaN or Inf");
}

inline Matrix scalar(double x) {
    Matrix m(1, 1);
    m(0, 0) = x;
    return m;
}

}  // namespace loss_detail

/// Mean negative log-likelihood of integer labels under row-wise softmax.
inline Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
    loss_detail::require_finite(logits.value(), "cross_entropy");
    const Index n = logits.rows();
    const Index c = logits.cols();
    if (static_cast<Index>(labels.size()) != n)
        throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(n) + " rows");
    if (n == 0) throw std::invalid_argument("cross_entropy: empty batch");
    for (int y : labels)
        if (y < 0 || y >= c)
            throw std::out_of_range("cross_entropy: label " + std::to_string(y) + " outside [0," + std::to_string(c) + ")");
    const Matrix logp = log_softmax_rows_value(logits.value());
    double total = 0.0;
    for (Index i = 0; i < n; ++i) total -= logp(i, labels[i]);
    std::vector<int> ys(labels.begin(), labels.end());
    return Tensor::from_op(loss_detail::scalar(total / static_cast<double>(n)), {logits},
                           [logp, ys = std::move(ys)](Node& self) {
                               const auto rows = logp.rows();
                               Matrix g = logp.array().exp().matrix();
                               for (Index i = 0; i < rows; ++i) g(i, ys[i]) -= 1.0;
                               g *= self.grad(0, 0) / static_cast<double>(rows);
                               detail::parent(self, 0).accumulate(g);
                           });
}

/// Mean Shannon entropy (nats) of the row-wise softmax.
inline Tensor mean_entropy(const Tensor& logits) {
    loss_detail::require_finite(logits.value(), "mean_entropy");
    const Index n = logits.rows();
    if (n == 0) throw std::invalid_argument("mean_entropy: empty batch");
    const Matrix logp = log_softmax_rows_value(logits.value());
    const Matrix p = logp.array().exp().matrix();
    const Vector row_entropy = -(p.cwiseProduct(logp)).rowwise().sum();
    return Tensor::from_op(loss_detail::scalar(row_entropy.mean()), {logits},
                           [logp, p, row_entropy](Node& self) {
                               // dH/dx_k = -p_k (log p_k + H)
                               Matrix g = logp;
                               g.colwise() += row_entropy;
                               g = -p.cwiseProduct(g) * (self.grad(0, 0) / static_cast<double>(p.rows()));
                               detail::parent(self, 0).accumulate(g);
                           });
}

/// Per-column mean and floored population variance of a batch.
struct DiagonalGaussian {
    Vector mean;
    Vector var;
    std::vector<bool> floored;
};

inline DiagonalGaussian fit_diagonal_gaussian(const Matrix& z) {
    DiagonalGaussian g;
    const double n = static_cast<double>(z.rows());
    g.mean = z.colwise().mean().transpose();
    g.var.resize(z.cols());
    g.floored.resize(static_cast<std::size_t>(z.cols()));
    for (Index j = 0; j < z.cols(); ++j) {
        const double v = (z.col(j).array() - g.mean(j)).square().sum() / n;
        g.floored[j] = v < kVarianceFloor;
        g.var(j) = g.floored[j] ? kVarianceFloor : v;
    }
    return g;
}

/// KL(N(mu_s, var_s) || N(mu_t, var_t)) summed over independent dimensions.
inline double diagonal_gaussian_kl(const DiagonalGaussian& s, const DiagonalGaussian& t) {
    double kl = 0.0;
    for (Index j = 0; j < s.mean.size(); ++j) {
        const double d = s.mean(j) - t.mean(j);
        kl += 0.5 * std::log(t.var(j) / s.var(j)) + (s.var(j) + d * d) / (2.0 * t.var(j)) - 0.5;
    }
    return kl;
}

/// Gaussian moment-matching KL estimate between two row sets, no tape.
inline double gaussian_kl_value(const Matrix& zs, const Matrix& zt) {
    if (zs.rows() < 2 || zt.rows() < 2) throw std::invalid_argument("gaussian_kl: each batch needs at least 2 rows");
    if (zs.cols() != zt.cols())
        throw std::invalid_argument("gaussian_kl: width mismatch " + shape_str(zs) + " vs " + shape_str(zt));
    loss_detail::require_finite(zs, "gaussian_kl");
    loss_detail::require_finite(zt, "gaussian_kl");
    return diagonal_gaussian_kl(fit_diagonal_gaussian(zs), fit_diagonal_gaussian(zt));
}

/// Differentiable KL(source || target) between diagonal Gaussians fitted to
/// the two embedding batches.
inline Tensor gaussian_kl(const Tensor& zs, const Tensor& zt) {
    const double value = gaussian_kl_value(zs.value(), zt.value());
    auto s = fit_diagonal_gaussian(zs.value());
    auto t = fit_diagonal_gaussian(zt.value());
    return Tensor::from_op(loss_detail::scalar(value), {zs, zt}, [s = std::move(s), t = std::move(t)](Node& self) {
        const double upstream = self.grad(0, 0);
        const Index m = s.mean.size();
        Vector d_mu_s(m), d_var_s(m), d_mu_t(m), d_var_t(m);
        for (Index j = 0; j < m; ++j) {
            const double d = s.mean(j) - t.mean(j);
            d_mu_s(j) = d / t.var(j);
            d_mu_t(j) = -d / t.var(j);
            d_var_s(j) = s.floored[j] ? 0.0 : 0.5 / t.var(j) - 0.5 / s.var(j);
            d_var_t(j) = t.floored[j] ? 0.0 : 0.5 / t.var(j) - (s.var(j) + d * d) / (2.0 * t.var(j) * t.var(j));
        }
        // d mean / dz_i = 1/n ; d var / dz_i = 2 (z_i - mean) / n
        const auto push = [upstream](Node& p, const DiagonalGaussian& fit, const Vector& d_mu, const Vector& d_var) {
            if (!p.requires_grad) return;
            const double n = static_cast<double>(p.value.rows());
            Matrix g = p.value;
            g.rowwise() -= fit.mean.transpose();
            g = g * (2.0 / n) * d_var.asDiagonal();
            g.rowwise() += (d_mu / n).transpose();
            p.accumulate(g * upstream);
        };
        push(detail::parent(self, 0), s, d_mu_s, d_var_s);
        push(detail::parent(self, 1), t, d_mu_t, d_var_t);
    });
}

}  // namespace hgda::ad
