#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "metagtn/hetero_graph.hpp"
#include "metagtn/matrix.hpp"
#include "metagtn/scoring.hpp"

namespace metagtn {

// Dense matrix-chain reference for the traversal-based generators. Exists only
// to be obviously correct at desk scale; the n cap guards against accidental
// O(n^2) blowups, which is the failure mode the sparse formulation avoids.
inline constexpr std::size_t kDenseOracleMaxVertices = 2048;

namespace detail {

inline void require_oracle_size(std::size_t n) {
    if (n > kDenseOracleMaxVertices) {
        throw std::invalid_argument("dense oracle refuses " + std::to_string(n) +
                                    " vertices (cap " + std::to_string(kDenseOracleMaxVertices) +
                                    "); use the sparse generators for graphs this large");
    }
}

}  // namespace detail

// Score-scaled adjacency for one metapath position (1-based): entry (u, v) is
// the sum of s[position][type] over edges (u, v, type).
inline Matrix build_position_matrix(const HeteroGraph& g, const ScoreTable& table, int position) {
    detail::require_oracle_size(g.num_vertices());
    if (position < 1 || static_cast<std::size_t>(position) > table.positions()) {
        throw std::out_of_range("build_position_matrix: position " + std::to_string(position) +
                                " out of range");
    }
    const std::size_t pos0 = static_cast<std::size_t>(position - 1);
    Matrix m(g.num_vertices(), g.num_vertices());
    for (VertexId u = 0; u < g.num_vertices(); ++u) {
        const auto dsts = g.out_dsts(u);
        const auto types = g.out_types(u);
        for (std::size_t e = 0; e < dsts.size(); ++e) {
            m(u, dsts[e]) += table.s(pos0, types[e]);
        }
    }
    return m;
}

// Left-to-right product of the chain. Naive O(n^3) multiplies, single-threaded.
inline Matrix chain_product(std::span<const Matrix> mats) {
    if (mats.empty()) throw std::invalid_argument("chain_product: empty chain");
    for (const Matrix& m : mats) {
        if (m.rows() != m.cols() || m.rows() != mats.front().rows()) {
            throw std::invalid_argument("chain_product: matrices must all be square and same size");
        }
        detail::require_oracle_size(m.rows());
    }
    Matrix acc = mats.front();
    const std::size_t n = acc.rows();
    for (std::size_t mi = 1; mi < mats.size(); ++mi) {
        const Matrix& b = mats[mi];
        Matrix next(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                const double a = acc(i, k);
                if (a == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) next(i, j) += a * b(k, j);
            }
        }
        acc = std::move(next);
    }
    return acc;
}

// Convenience wrapper: the l position matrices for a metapath of length l.
inline std::vector<Matrix> position_matrices(const HeteroGraph& g, const ScoreTable& table,
                                             int l) {
    std::vector<Matrix> mats;
    mats.reserve(static_cast<std::size_t>(l));
    for (int pos = 1; pos <= l; ++pos) mats.push_back(build_position_matrix(g, table, pos));
    return mats;
}

}  // namespace metagtn
