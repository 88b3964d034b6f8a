#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include "metagtn/hetero_graph.hpp"
#include "metagtn/matrix.hpp"
#include "metagtn/rng.hpp"

namespace metagtn {

// Unconstrained learnable edge-scoring parameters, one row per metapath
// position, one column per edge type. Positions are 1-based in every public
// interface; row 0 of the matrix backs position 1.
struct ScoreParams {
    Matrix raw;  // L x T

    std::size_t positions() const { return raw.rows(); }
    std::size_t types() const { return raw.cols(); }
};

inline ScoreParams init_score_params(std::size_t positions, std::size_t types,
                                     std::uint64_t seed) {
    ScoreParams p{Matrix(positions, types)};
    SplitMix rng(seed, 0x5c0e5);
    for (double& v : p.raw.values()) v = rng.next_uniform(-0.01, 0.01);
    return p;
}

// Materialized per-(position, type) scores. Produced by materialize_softmax in
// training; tests may inject arbitrary tables directly (e.g. unnormalized
// golden values).
struct ScoreTable {
    Matrix s;  // L x T

    std::size_t positions() const { return s.rows(); }
    std::size_t types() const { return s.cols(); }
    double at(std::size_t pos0, TypeId t) const { return s(pos0, t); }

    double row_max(std::size_t pos0) const {
        const auto r = s.row(pos0);
        return *std::max_element(r.begin(), r.end());
    }
};

// Row-wise softmax with max-subtraction.
inline ScoreTable materialize_softmax(const ScoreParams& p) {
    Matrix s(p.positions(), p.types());
    for (std::size_t i = 0; i < p.positions(); ++i) {
        const auto raw = p.raw.row(i);
        const double m = *std::max_element(raw.begin(), raw.end());
        double sum = 0.0;
        for (std::size_t t = 0; t < p.types(); ++t) {
            const double e = std::exp(raw[t] - m);
            s(i, t) = e;
            sum += e;
        }
        for (std::size_t t = 0; t < p.types(); ++t) s(i, t) /= sum;
    }
    return ScoreTable{std::move(s)};
}

// Product of per-position scores for a type sequence placed at start_position
// (1-based). The empty sequence scores 1.
inline double score_path(const ScoreTable& table, std::span<const TypeId> types,
                         int start_position = 1) {
    if (start_position < 1 ||
        static_cast<std::size_t>(start_position) + types.size() > table.positions() + 1) {
        throw std::out_of_range("score_path: positions [" + std::to_string(start_position) + ", " +
                                std::to_string(start_position + types.size() - 1) +
                                "] exceed table with " + std::to_string(table.positions()) +
                                " positions");
    }
    double score = 1.0;
    std::size_t pos0 = static_cast<std::size_t>(start_position - 1);
    for (TypeId t : types) score *= table.s(pos0++, t);
    return score;
}

// Pulls a gradient on the materialized table back through the row-wise
// softmax: grad_raw[i][t] = s[i][t] * (grad[i][t] - sum_u grad[i][u] * s[i][u]).
inline Matrix softmax_backward(const ScoreParams& p, const Matrix& grad_table) {
    p.raw.require_same_shape(grad_table, "softmax_backward");
    const ScoreTable table = materialize_softmax(p);
    Matrix grad_raw(p.positions(), p.types());
    for (std::size_t i = 0; i < p.positions(); ++i) {
        double dot = 0.0;
        for (std::size_t t = 0; t < p.types(); ++t) dot += grad_table(i, t) * table.s(i, t);
        for (std::size_t t = 0; t < p.types(); ++t) {
            grad_raw(i, t) = table.s(i, t) * (grad_table(i, t) - dot);
        }
    }
    return grad_raw;
}

}  // namespace metagtn
