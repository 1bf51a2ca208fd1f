#pragma once

#include "hgda/graph.hpp"
#include "hgda/matrix.hpp"
#include "hgda/rng.hpp"

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace hgda::ad {

/// One vertex of the recorded computation. Leaves have no backward rule;
/// interior nodes keep their parents alive and know how to push their
/// gradient into them.
struct Node {
    Matrix value;
    Matrix grad;  // empty until something flows in
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    [[nodiscard]] bool is_leaf() const noexcept { return !backward; }

    void accumulate(const Matrix& g) {
        if (!requires_grad) return;
        if (grad.size() == 0)
            grad = g;
        else
            grad += g;
    }
};

/// Dense 2-D tensor handle with shared ownership of its node. Operations on
/// tensors that require gradients extend the tape; `backward` walks it.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Matrix value, bool requires_grad = false) : node_(std::make_shared<Node>()) {
        node_->value = std::move(value);
        node_->requires_grad = requires_grad;
    }

    static Tensor parameter(Matrix value) { return Tensor(std::move(value), true); }
    static Tensor constant(Matrix value) { return Tensor(std::move(value), false); }
    static Tensor scalar(double x, bool requires_grad = false) {
        Matrix m(1, 1);
        m(0, 0) = x;
        return Tensor(std::move(m), requires_grad);
    }

    [[nodiscard]] bool defined() const noexcept { return static_cast<bool>(node_); }
    [[nodiscard]] const Matrix& value() const { return node_->value; }
    /// Direct write access, used by optimizers and checkpoint loading.
    [[nodiscard]] Matrix& mutable_value() { return node_->value; }
    [[nodiscard]] Index rows() const { return node_->value.rows(); }
    [[nodiscard]] Index cols() const { return node_->value.cols(); }
    [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }

    [[nodiscard]] bool has_grad() const { return node_->grad.size() != 0; }
    /// Gradient; zeros if nothing has been accumulated yet.
    [[nodiscard]] Matrix grad() const {
        return has_grad() ? node_->grad : Matrix::Zero(rows(), cols());
    }
    void zero_grad() { node_->grad.resize(0, 0); }

    [[nodiscard]] double item() const {
        if (rows() != 1 || cols() != 1) throw std::invalid_argument("item() on non-scalar tensor " + shape_str(value()));
        return node_->value(0, 0);
    }

    [[nodiscard]] Node& node() const { return *node_; }
    [[nodiscard]] const std::shared_ptr<Node>& node_ptr() const { return node_; }

    /// Result of an operation. Parents and the backward rule are recorded only
    /// if some parent requires a gradient.
    static Tensor from_op(Matrix value, std::vector<Tensor> parents, std::function<void(Node&)> backward) {
        Tensor out(std::move(value), false);
        for (const auto& p : parents) out.node_->requires_grad = out.node_->requires_grad || p.requires_grad();
        if (out.node_->requires_grad) {
            out.node_->parents.reserve(parents.size());
            for (auto& p : parents) out.node_->parents.push_back(p.node_);
            out.node_->backward = std::move(backward);
        }
        return out;
    }

private:
    std::shared_ptr<Node> node_;
};

/// Reverse-mode sweep from a scalar loss. Leaf gradients accumulate across
/// calls; interior gradients are rebuilt on every call and released after.
inline void backward(const Tensor& loss) {
    if (!loss.defined()) throw std::invalid_argument("backward: undefined tensor");
    if (loss.rows() != 1 || loss.cols() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(loss.value()));
    if (!loss.requires_grad()) return;

    // iterative post-order DFS gives a topological order (parents first)
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{&loss.node(), 0}};
    seen.insert(&loss.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node* n : order)
        if (!n->is_leaf()) n->grad.resize(0, 0);
    loss.node().accumulate(Matrix::Ones(1, 1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->is_leaf() || n->grad.size() == 0) continue;
        n->backward(*n);
    }
    for (Node* n : order)
        if (!n->is_leaf()) n->grad.resize(0, 0);
}

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " +
                                    shape_str(b.value()));
}

inline Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

}  // namespace detail

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: " + shape_str(a.value()) + " x " + shape_str(b.value()));
    Matrix out;
    out.noalias() = a.value() * b.value();
    return Tensor::from_op(std::move(out), {a, b}, [](Node& self) {
        Node& pa = detail::parent(self, 0);
        Node& pb = detail::parent(self, 1);
        if (pa.requires_grad) pa.accumulate(self.grad * pb.value.transpose());
        if (pb.requires_grad) pb.accumulate(pa.value.transpose() * self.grad);
    });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "add");
    return Tensor::from_op(a.value() + b.value(), {a, b}, [](Node& self) {
        detail::parent(self, 0).accumulate(self.grad);
        detail::parent(self, 1).accumulate(self.grad);
    });
}

/// a (N x C) plus a row vector (1 x C) broadcast over rows.
inline Tensor add_row(const Tensor& a, const Tensor& row) {
    if (row.rows() != 1 || row.cols() != a.cols())
        throw std::invalid_argument("add_row: " + shape_str(a.value()) + " + " + shape_str(row.value()));
    Matrix out = a.value();
    out.rowwise() += row.value().row(0);
    return Tensor::from_op(std::move(out), {a, row}, [](Node& self) {
        detail::parent(self, 0).accumulate(self.grad);
        Node& pr = detail::parent(self, 1);
        if (pr.requires_grad) pr.accumulate(self.grad.colwise().sum());
    });
}

inline Tensor scalar_mul(const Tensor& a, double s) {
    return Tensor::from_op(a.value() * s, {a}, [s](Node& self) { detail::parent(self, 0).accumulate(self.grad * s); });
}

/// Multiplies a by a learnable 1x1 tensor.
inline Tensor scale(const Tensor& s, const Tensor& a) {
    if (s.rows() != 1 || s.cols() != 1) throw std::invalid_argument("scale: factor must be 1x1, got " + shape_str(s.value()));
    return Tensor::from_op(a.value() * s.value()(0, 0), {s, a}, [](Node& self) {
        Node& ps = detail::parent(self, 0);
        Node& pa = detail::parent(self, 1);
        if (ps.requires_grad) {
            Matrix g(1, 1);
            g(0, 0) = self.grad.cwiseProduct(pa.value).sum();
            ps.accumulate(g);
        }
        if (pa.requires_grad) pa.accumulate(self.grad * ps.value(0, 0));
    });
}

inline Tensor relu(const Tensor& a) {
    return Tensor::from_op(a.value().cwiseMax(0.0), {a}, [](Node& self) {
        Node& pa = detail::parent(self, 0);
        pa.accumulate((pa.value.array() > 0.0).select(self.grad, 0.0));
    });
}

inline Tensor sum(const Tensor& a) {
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return Tensor::from_op(std::move(out), {a}, [](Node& self) {
        Node& pa = detail::parent(self, 0);
        pa.accumulate(Matrix::Constant(pa.value.rows(), pa.value.cols(), self.grad(0, 0)));
    });
}

/// Inverted dropout: in training mode each entry is zeroed with probability p
/// and survivors are scaled by 1/(1-p). Identity when not training.
inline Tensor dropout(const Tensor& a, double p, bool training, SplitMix64& rng) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout: p=" + std::to_string(p) + " outside [0,1)");
    if (!training || p == 0.0) return a;
    const double keep_scale = 1.0 / (1.0 - p);
    Matrix mask(a.rows(), a.cols());
    for (Index i = 0; i < mask.rows(); ++i)
        for (Index j = 0; j < mask.cols(); ++j) mask(i, j) = rng.uniform() >= p ? keep_scale : 0.0;
    Matrix out = a.value().cwiseProduct(mask);
    return Tensor::from_op(std::move(out), {a}, [mask = std::move(mask)](Node& self) {
        detail::parent(self, 0).accumulate(self.grad.cwiseProduct(mask));
    });
}

/// Row-wise softmax, max-shifted for stability.
inline Matrix softmax_rows_value(const Matrix& x) {
    Matrix y = x;
    for (Index i = 0; i < y.rows(); ++i) {
        auto row = y.row(i);
        row.array() -= row.maxCoeff();
        row = row.array().exp().matrix();
        row /= row.sum();
    }
    return y;
}

/// Row-wise log-softmax.
inline Matrix log_softmax_rows_value(const Matrix& x) {
    Matrix y = x;
    for (Index i = 0; i < y.rows(); ++i) {
        auto row = y.row(i);
        const double m = row.maxCoeff();
        const double lse = m + std::log((row.array() - m).exp().sum());
        row.array() -= lse;
    }
    return y;
}

inline Tensor softmax_rows(const Tensor& a) {
    return Tensor::from_op(softmax_rows_value(a.value()), {a}, [](Node& self) {
        const Matrix& y = self.value;
        const Vector dots = self.grad.cwiseProduct(y).rowwise().sum();
        Matrix g = self.grad;
        g.colwise() -= dots;
        detail::parent(self, 0).accumulate(g.cwiseProduct(y));
    });
}

/// op * a for a constant sparse operator (graph propagation). The tape
/// shares ownership of the operator.
inline Tensor propagate(std::shared_ptr<const SparseOperator> op, const Tensor& a) {
    if (!op) throw std::invalid_argument("propagate: null operator");
    Matrix out = spmm(*op, a.value());
    return Tensor::from_op(std::move(out), {a}, [op = std::move(op)](Node& self) {
        detail::parent(self, 0).accumulate(spmm_transposed(*op, self.grad));
    });
}

}  // namespace hgda::ad
