#pragma once

#include "hgda/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hgda {

using NodeId = std::int64_t;

/// Label value for a node whose class is not known.
inline constexpr int kUnknownLabel = -1;

/// Compressed sparse row operator. Column indices are sorted within each row.
struct SparseOperator {
    Index rows = 0;
    Index cols = 0;
    std::vector<Index> row_ptr{0};
    std::vector<Index> col_idx;
    std::vector<double> values;

    [[nodiscard]] std::size_t nnz() const noexcept { return col_idx.size(); }

    /// Value at (i, j), or 0 when the entry is not stored.
    [[nodiscard]] double at(Index i, Index j) const {
        const auto first = col_idx.begin() + row_ptr[i];
        const auto last = col_idx.begin() + row_ptr[i + 1];
        const auto it = std::lower_bound(first, last, j);
        if (it == last || *it != j) return 0.0;
        return values[static_cast<std::size_t>(it - col_idx.begin())];
    }

    void validate() const {
        if (rows < 0 || cols < 0) throw std::invalid_argument("sparse operator: negative dimension");
        if (row_ptr.size() != static_cast<std::size_t>(rows) + 1 || row_ptr.front() != 0)
            throw std::invalid_argument("sparse operator: malformed row_ptr");
        if (static_cast<std::size_t>(row_ptr.back()) != col_idx.size() || col_idx.size() != values.size())
            throw std::invalid_argument("sparse operator: index/value length mismatch");
        for (Index i = 0; i < rows; ++i) {
            if (row_ptr[i] > row_ptr[i + 1]) throw std::invalid_argument("sparse operator: row_ptr not monotone");
            for (Index p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
                if (col_idx[p] < 0 || col_idx[p] >= cols)
                    throw std::invalid_argument("sparse operator: column index out of range");
                if (p > row_ptr[i] && col_idx[p - 1] >= col_idx[p])
                    throw std::invalid_argument("sparse operator: columns not strictly sorted");
            }
        }
    }

    static SparseOperator identity(Index n) {
        SparseOperator op;
        op.rows = op.cols = n;
        op.row_ptr.resize(static_cast<std::size_t>(n) + 1);
        op.col_idx.resize(static_cast<std::size_t>(n));
        op.values.assign(static_cast<std::size_t>(n), 1.0);
        for (Index i = 0; i <= n; ++i) op.row_ptr[i] = i;
        for (Index i = 0; i < n; ++i) op.col_idx[i] = i;
        return op;
    }
};

/// Undirected, unweighted attributed graph.
///
/// Adjacency is stored as CSR with both (i,j) and (j,i) present, no self-loops
/// and no duplicates. Labels are optional; inside a label vector, nodes with
/// unknown class carry kUnknownLabel.
struct Graph {
    std::string name;
    Index num_nodes = 0;
    int num_classes = 0;
    std::vector<Index> row_ptr{0};
    std::vector<Index> col_idx;
    Matrix features;
    std::optional<std::vector<int>> labels;

    [[nodiscard]] Index feature_dim() const noexcept { return features.cols(); }
    [[nodiscard]] std::size_t num_edges() const noexcept { return col_idx.size() / 2; }

    [[nodiscard]] Index degree(Index v) const { return row_ptr[v + 1] - row_ptr[v]; }

    [[nodiscard]] std::span<const Index> neighbors(Index v) const {
        return {col_idx.data() + row_ptr[v], static_cast<std::size_t>(degree(v))};
    }

    [[nodiscard]] bool has_edge(Index u, Index v) const {
        const auto nb = neighbors(u);
        return std::binary_search(nb.begin(), nb.end(), v);
    }

    [[nodiscard]] bool fully_labeled() const {
        if (!labels) return false;
        return std::none_of(labels->begin(), labels->end(), [](int y) { return y == kUnknownLabel; });
    }

    /// Undirected edge list with src < dst, in CSR order.
    [[nodiscard]] std::vector<std::pair<Index, Index>> edge_list() const {
        std::vector<std::pair<Index, Index>> edges;
        edges.reserve(num_edges());
        for (Index u = 0; u < num_nodes; ++u)
            for (Index v : neighbors(u))
                if (u < v) edges.emplace_back(u, v);
        return edges;
    }

    /// Builds a graph from an arbitrary edge list: edges are symmetrized,
    /// duplicates merged and self-loops dropped.
    static Graph from_edges(Index num_nodes, std::span<const std::pair<Index, Index>> edges, Matrix features,
                            std::optional<std::vector<int>> labels, int num_classes, std::string name = {}) {
        if (num_nodes < 0) throw std::invalid_argument("graph: negative node count");
        std::vector<std::pair<Index, Index>> directed;
        directed.reserve(edges.size() * 2);
        for (const auto& [u, v] : edges) {
            if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes)
                throw std::out_of_range("graph: edge (" + std::to_string(u) + "," + std::to_string(v) +
                                        ") references a node outside [0," + std::to_string(num_nodes) + ")");
            if (u == v) continue;
            directed.emplace_back(u, v);
            directed.emplace_back(v, u);
        }
        std::sort(directed.begin(), directed.end());
        directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

        Graph g;
        g.name = std::move(name);
        g.num_nodes = num_nodes;
        g.num_classes = num_classes;
        g.row_ptr.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
        g.col_idx.reserve(directed.size());
        for (const auto& [u, v] : directed) {
            ++g.row_ptr[u + 1];
            g.col_idx.push_back(v);
        }
        for (Index i = 0; i < num_nodes; ++i) g.row_ptr[i + 1] += g.row_ptr[i];
        g.features = std::move(features);
        g.labels = std::move(labels);
        g.validate();
        return g;
    }

    void validate() const {
        if (row_ptr.size() != static_cast<std::size_t>(num_nodes) + 1)
            throw std::invalid_argument("graph: row_ptr length does not match num_nodes");
        if (features.rows() != num_nodes)
            throw std::invalid_argument("graph: feature rows " + std::to_string(features.rows()) +
                                        " != num_nodes " + std::to_string(num_nodes));
        if (num_classes < 0) throw std::invalid_argument("graph: negative class count");
        for (Index u = 0; u < num_nodes; ++u) {
            const auto nb = neighbors(u);
            for (std::size_t k = 0; k < nb.size(); ++k) {
                const Index v = nb[k];
                if (v < 0 || v >= num_nodes) throw std::invalid_argument("graph: neighbor index out of range");
                if (v == u) throw std::invalid_argument("graph: self-loop stored");
                if (k > 0 && nb[k - 1] >= v) throw std::invalid_argument("graph: unsorted or duplicate neighbors");
                if (!has_edge(v, u)) throw std::invalid_argument("graph: adjacency not symmetric");
            }
        }
        if (labels) {
            if (labels->size() != static_cast<std::size_t>(num_nodes))
                throw std::invalid_argument("graph: label count does not match num_nodes");
            for (std::size_t v = 0; v < labels->size(); ++v) {
                const int y = (*labels)[v];
                if (y != kUnknownLabel && (y < 0 || y >= num_classes))
                    throw std::out_of_range("graph: label " + std::to_string(y) + " of node " + std::to_string(v) +
                                            " outside [0," + std::to_string(num_classes) + ")");
            }
        }
    }

    friend bool operator==(const Graph& a, const Graph& b) {
        return a.name == b.name && a.num_nodes == b.num_nodes && a.num_classes == b.num_classes &&
               a.row_ptr == b.row_ptr && a.col_idx == b.col_idx && a.features.rows() == b.features.rows() &&
               a.features.cols() == b.features.cols() && a.features == b.features && a.labels == b.labels;
    }
};

/// Symmetric normalized adjacency with self-loops, (D+I)^-1/2 (A+I) (D+I)^-1/2.
inline SparseOperator normalized_adjacency(const Graph& g) {
    const Index n = g.num_nodes;
    std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
    for (Index v = 0; v < n; ++v) inv_sqrt[v] = 1.0 / std::sqrt(static_cast<double>(g.degree(v) + 1));

    SparseOperator op;
    op.rows = op.cols = n;
    op.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
    op.col_idx.reserve(g.col_idx.size() + static_cast<std::size_t>(n));
    op.values.reserve(op.col_idx.capacity());
    for (Index u = 0; u < n; ++u) {
        bool diag_done = false;
        for (Index v : g.neighbors(u)) {
            if (!diag_done && v > u) {
                op.col_idx.push_back(u);
                op.values.push_back(inv_sqrt[u] * inv_sqrt[u]);
                diag_done = true;
            }
            op.col_idx.push_back(v);
            op.values.push_back(inv_sqrt[u] * inv_sqrt[v]);
        }
        if (!diag_done) {
            op.col_idx.push_back(u);
            op.values.push_back(inv_sqrt[u] * inv_sqrt[u]);
        }
        op.row_ptr[u + 1] = static_cast<Index>(op.col_idx.size());
    }
    return op;
}

/// Normalized Laplacian I - Ã, sharing the sparsity pattern of Ã.
inline SparseOperator normalized_laplacian(const Graph& g) {
    SparseOperator op = normalized_adjacency(g);
    for (Index u = 0; u < op.rows; ++u) {
        for (Index p = op.row_ptr[u]; p < op.row_ptr[u + 1]; ++p) {
            op.values[p] = (op.col_idx[p] == u) ? 1.0 - op.values[p] : -op.values[p];
        }
    }
    return op;
}

/// Sparse-dense product op * m.
inline Matrix spmm(const SparseOperator& op, const Matrix& m) {
    if (op.cols != m.rows())
        throw std::invalid_argument("spmm: operator " + shape_str(op.rows, op.cols) + " vs dense " + shape_str(m));
    Matrix out = Matrix::Zero(op.rows, m.cols());
    for (Index i = 0; i < op.rows; ++i) {
        auto row = out.row(i);
        for (Index p = op.row_ptr[i]; p < op.row_ptr[i + 1]; ++p) row.noalias() += op.values[p] * m.row(op.col_idx[p]);
    }
    return out;
}

/// Sparse-dense product op^T * m, without materializing the transpose.
inline Matrix spmm_transposed(const SparseOperator& op, const Matrix& m) {
    if (op.rows != m.rows())
        throw std::invalid_argument("spmm_transposed: operator " + shape_str(op.rows, op.cols) + " vs dense " +
                                    shape_str(m));
    Matrix out = Matrix::Zero(op.cols, m.cols());
    for (Index i = 0; i < op.rows; ++i) {
        const auto src = m.row(i);
        for (Index p = op.row_ptr[i]; p < op.row_ptr[i + 1]; ++p) out.row(op.col_idx[p]).noalias() += op.values[p] * src;
    }
    return out;
}

}  // namespace hgda
