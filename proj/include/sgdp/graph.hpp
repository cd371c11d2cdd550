#pragma once

// Per-stream weighted directed graph: normalized sequential and
// full-connect adjacency blocks fused into the hybrid connection matrix.
//
// Matrices are kept in compact node-indexed form (u x u per block, u =
// distinct classes in the stream) rather than expanded to the full
// vocabulary; the alias array maps window positions onto node slots.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace sgdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct StreamGraph {
    std::vector<int> nodes;   // distinct class ids, first-occurrence order
    std::vector<int> alias;   // position -> node slot, length n
    Matrix m_s_in, m_s_out;   // sequential blocks, row-normalized
    Matrix m_f_in, m_f_out;   // full-connect blocks, distance-weighted, row-normalized
    Matrix m_h;               // u x 2u: [fused incoming | fused outgoing]

    std::size_t node_count() const { return nodes.size(); }
};

namespace detail {

struct NodeIndex {
    std::vector<int> nodes;
    std::vector<int> alias;
};

inline NodeIndex index_nodes(std::span<const int> classes) {
    NodeIndex idx;
    idx.alias.reserve(classes.size());
    for (int c : classes) {
        int slot = -1;
        for (std::size_t i = 0; i < idx.nodes.size(); ++i) {
            if (idx.nodes[i] == c) {
                slot = static_cast<int>(i);
                break;
            }
        }
        if (slot < 0) {
            slot = static_cast<int>(idx.nodes.size());
            idx.nodes.push_back(c);
        }
        idx.alias.push_back(slot);
    }
    return idx;
}

// Divides each nonzero row by its sum; all-zero rows stay zero.
inline Matrix row_normalize(const Matrix& m) {
    Matrix out = m;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double sum = out.row(r).sum();
        if (sum > 0.0) out.row(r) /= sum;
    }
    return out;
}

}  // namespace detail

struct SequentialBlocks {
    std::vector<int> nodes;
    std::vector<int> alias;
    Matrix m_in, m_out;
};

// Counts each position pair (a, a+1) as one directed edge, then normalizes
// outgoing rows by out-degree mass and incoming rows by in-degree mass.
inline SequentialBlocks build_sequential(std::span<const int> classes) {
    if (classes.empty()) throw std::invalid_argument("stream must hold at least one class");
    auto idx = detail::index_nodes(classes);
    const auto u = static_cast<Eigen::Index>(idx.nodes.size());
    Matrix counts = Matrix::Zero(u, u);
    for (std::size_t a = 0; a + 1 < classes.size(); ++a) {
        counts(idx.alias[a], idx.alias[a + 1]) += 1.0;
    }
    SequentialBlocks blocks;
    blocks.m_out = detail::row_normalize(counts);
    blocks.m_in = detail::row_normalize(counts.transpose());
    blocks.nodes = std::move(idx.nodes);
    blocks.alias = std::move(idx.alias);
    return blocks;
}

struct FullConnectBlocks {
    Matrix m_in, m_out;
};

// Every ordered position pair (a, b) with a < b contributes 1/(b-a) to the
// edge alias(a) -> alias(b); rows are then normalized as in the sequential
// case.
inline FullConnectBlocks build_full_connect(std::span<const int> classes) {
    if (classes.empty()) throw std::invalid_argument("stream must hold at least one class");
    auto idx = detail::index_nodes(classes);
    const auto u = static_cast<Eigen::Index>(idx.nodes.size());
    Matrix weights = Matrix::Zero(u, u);
    for (std::size_t a = 0; a < classes.size(); ++a) {
        for (std::size_t b = a + 1; b < classes.size(); ++b) {
            weights(idx.alias[a], idx.alias[b]) += 1.0 / static_cast<double>(b - a);
        }
    }
    FullConnectBlocks blocks;
    blocks.m_out = detail::row_normalize(weights);
    blocks.m_in = detail::row_normalize(weights.transpose());
    return blocks;
}

// Weighted fusion of the per-block normalized matrices:
//   m_h = [ w_s*m_s_in + (1-w_s)*m_f_in | w_s*m_s_out + (1-w_s)*m_f_out ]
inline Matrix hybrid(const Matrix& m_s_in, const Matrix& m_s_out, const Matrix& m_f_in,
                     const Matrix& m_f_out, double w_s) {
    const Eigen::Index u = m_s_in.rows();
    if (m_s_in.cols() != u || m_s_out.rows() != u || m_s_out.cols() != u || m_f_in.rows() != u ||
        m_f_in.cols() != u || m_f_out.rows() != u || m_f_out.cols() != u) {
        throw std::invalid_argument("hybrid: block dimensions do not match");
    }
    if (w_s < 0.0 || w_s > 1.0) throw std::invalid_argument("hybrid: w_s must lie in [0,1]");
    Matrix m_h(u, 2 * u);
    m_h.leftCols(u) = w_s * m_s_in + (1.0 - w_s) * m_f_in;
    m_h.rightCols(u) = w_s * m_s_out + (1.0 - w_s) * m_f_out;
    return m_h;
}

inline StreamGraph build_stream_graph(std::span<const int> classes, double w_s) {
    StreamGraph g;
    auto seq = build_sequential(classes);
    auto full = build_full_connect(classes);
    g.nodes = std::move(seq.nodes);
    g.alias = std::move(seq.alias);
    g.m_s_in = std::move(seq.m_in);
    g.m_s_out = std::move(seq.m_out);
    g.m_f_in = std::move(full.m_in);
    g.m_f_out = std::move(full.m_out);
    g.m_h = hybrid(g.m_s_in, g.m_s_out, g.m_f_in, g.m_f_out, w_s);
    return g;
}

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

// Debug dump used by the CLI's --dump-graphs flag.
inline nlohmann::json graph_to_json(const StreamGraph& g) {
    nlohmann::json j;
    j["nodes"] = g.nodes;
    j["alias"] = g.alias;
    j["m_s_in"] = detail::matrix_to_json(g.m_s_in);
    j["m_s_out"] = detail::matrix_to_json(g.m_s_out);
    j["m_f_in"] = detail::matrix_to_json(g.m_f_in);
    j["m_f_out"] = detail::matrix_to_json(g.m_f_out);
    j["m_h"] = detail::matrix_to_json(g.m_h);
    return j;
}

}  // namespace sgdp
