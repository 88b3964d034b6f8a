#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "metagtn/hetero_graph.hpp"
#include "metagtn/matrix.hpp"
#include "metagtn/metapath_graph.hpp"
#include "metagtn/parallel.hpp"
#include "metagtn/rng.hpp"
#include "metagtn/scoring.hpp"

namespace metagtn {

// Sampled paths stored for forward/backward reuse: for each source vertex,
// num_walks paths of exactly `length` edges. Vertex sequences have length+1
// entries, type sequences have `length`.
struct WalkSet {
    std::size_t num_vertices = 0;
    std::size_t num_walks = 0;
    int length = 0;
    std::uint64_t seed = 0;
    std::vector<VertexId> vertices;  // num_vertices * num_walks * (length + 1)
    std::vector<TypeId> types;       // num_vertices * num_walks * length

    std::size_t total_walks() const { return num_vertices * num_walks; }

    std::span<const VertexId> walk_vertices(VertexId src, std::size_t walk) const {
        const std::size_t stride = static_cast<std::size_t>(length) + 1;
        return {vertices.data() + (src * num_walks + walk) * stride, stride};
    }
    std::span<const TypeId> walk_types(VertexId src, std::size_t walk) const {
        const std::size_t stride = static_cast<std::size_t>(length);
        return {types.data() + (src * num_walks + walk) * stride, stride};
    }
};

namespace detail {

// One weighted next-edge draw: uniform proposal over the vertex's out-edges,
// accepted with probability s[pos][type] / rowmax. Bounded at 64 rejections,
// after which an exact inverse-CDF draw over the same weights is used (the
// target distribution is identical, so the fallback does not bias).
inline std::size_t sample_out_edge(const HeteroGraph& g, const ScoreTable& table,
                                   std::size_t pos0, double row_max, VertexId u, SplitMix& rng) {
    const std::size_t begin = g.out_begin(u);
    const std::size_t degree = g.out_end(u) - begin;
    if (degree == 1) return begin;
    for (int attempt = 0; attempt < 64; ++attempt) {
        const std::size_t e = begin + static_cast<std::size_t>(rng.next_below(degree));
        const double score = table.s(pos0, g.edge_type()[e]);
        if (rng.next_double() * row_max < score) return e;
    }
    double total = 0.0;
    for (std::size_t e = begin; e < begin + degree; ++e) {
        total += table.s(pos0, g.edge_type()[e]);
    }
    if (total <= 0.0) {
        // All out-edge scores are zero (possible only with injected tables);
        // fall back to a uniform pick.
        return begin + static_cast<std::size_t>(rng.next_below(degree));
    }
    double r = rng.next_double() * total;
    for (std::size_t e = begin; e < begin + degree; ++e) {
        r -= table.s(pos0, g.edge_type()[e]);
        if (r <= 0.0) return e;
    }
    return begin + degree - 1;
}

}  // namespace detail

// Samples num_walks independent l-step walks from every vertex. At step j the
// next edge is drawn with probability proportional to s[j][type] among the
// current vertex's out-edges. Each (vertex, walk) pair owns its RNG stream, so
// the result is identical for any worker count.
inline WalkSet sample_walks(const HeteroGraph& g, const ScoreTable& table, int l,
                            std::size_t num_walks, std::uint64_t seed, int workers = 0) {
    if (l < 1) throw std::invalid_argument("sample_walks: l must be >= 1");
    if (!g.has_self_edges()) {
        throw std::invalid_argument("sample_walks: graph must be self-edge augmented");
    }
    if (static_cast<std::size_t>(l) > table.positions()) {
        throw std::invalid_argument("sample_walks: walk length exceeds score table positions");
    }

    WalkSet walks;
    walks.num_vertices = g.num_vertices();
    walks.num_walks = num_walks;
    walks.length = l;
    walks.seed = seed;
    walks.vertices.resize(walks.total_walks() * (static_cast<std::size_t>(l) + 1));
    walks.types.resize(walks.total_walks() * static_cast<std::size_t>(l));
    if (num_walks == 0) return walks;

    std::vector<double> row_max(static_cast<std::size_t>(l));
    for (int j = 0; j < l; ++j) row_max[static_cast<std::size_t>(j)] = table.row_max(j);

    parallel_blocks(g.num_vertices(), workers, [&](int, std::size_t lo, std::size_t hi) {
        for (std::size_t src = lo; src < hi; ++src) {
            for (std::size_t w = 0; w < num_walks; ++w) {
                SplitMix rng(seed, src, w);
                const std::size_t vbase = (src * num_walks + w) * (static_cast<std::size_t>(l) + 1);
                const std::size_t tbase = (src * num_walks + w) * static_cast<std::size_t>(l);
                VertexId cur = static_cast<VertexId>(src);
                walks.vertices[vbase] = cur;
                for (int j = 0; j < l; ++j) {
                    const std::size_t e = detail::sample_out_edge(
                        g, table, static_cast<std::size_t>(j), row_max[static_cast<std::size_t>(j)],
                        cur, rng);
                    cur = g.edge_dst()[e];
                    walks.vertices[vbase + static_cast<std::size_t>(j) + 1] = cur;
                    walks.types[tbase + static_cast<std::size_t>(j)] = g.edge_type()[e];
                }
            }
        }
    });
    return walks;
}

namespace detail {

inline void validate_walks(const HeteroGraph& g, const WalkSet& walks) {
    if (walks.num_vertices != g.num_vertices()) {
        throw std::invalid_argument("walk set vertex count does not match graph");
    }
    for (VertexId src = 0; src < walks.num_vertices; ++src) {
        for (std::size_t w = 0; w < walks.num_walks; ++w) {
            const auto verts = walks.walk_vertices(src, w);
            const auto types = walks.walk_types(src, w);
            if (verts[0] != src) {
                throw std::runtime_error("stale walk: walk for vertex " + std::to_string(src) +
                                         " does not start there");
            }
            for (int j = 0; j < walks.length; ++j) {
                const VertexId u = verts[static_cast<std::size_t>(j)];
                const VertexId x = verts[static_cast<std::size_t>(j) + 1];
                const TypeId t = types[static_cast<std::size_t>(j)];
                const auto dsts = g.out_dsts(u);
                const auto etypes = g.out_types(u);
                bool found = false;
                for (std::size_t e = 0; e < dsts.size(); ++e) {
                    if (dsts[e] == x && etypes[e] == t) {
                        found = true;
                        break;
                    }
                }
                if (!found) {
                    throw std::runtime_error("stale walk: edge (" + std::to_string(u) + " -> " +
                                             std::to_string(x) + ", type " + std::to_string(t) +
                                             ") is not in the graph");
                }
            }
        }
    }
}

}  // namespace detail

// Metapath graph accumulated over the stored walks: each walk contributes
// score_path of its type sequence to (source, endpoint). Duplicate sampled
// paths contribute multiply.
inline MetapathGraph generate_sampled(const HeteroGraph& g, const ScoreTable& table,
                                      const WalkSet& walks, int workers = 0) {
    if (static_cast<std::size_t>(walks.length) > table.positions()) {
        throw std::invalid_argument("generate_sampled: walk length exceeds score table positions");
    }
    detail::validate_walks(g, walks);
    const std::size_t n = walks.num_vertices;

    // Per-source endpoint sets are tiny (at most num_walks), so rows are built
    // by sorting (endpoint, walk order) pairs rather than dense scratch.
    std::vector<std::uint64_t> index(n + 1, 0);
    std::vector<std::vector<VertexId>> row_dst(n);
    std::vector<std::vector<double>> row_weight(n);
    parallel_blocks(n, workers, [&](int, std::size_t lo, std::size_t hi) {
        std::vector<std::pair<VertexId, double>> contributions;
        for (std::size_t src = lo; src < hi; ++src) {
            contributions.clear();
            for (std::size_t w = 0; w < walks.num_walks; ++w) {
                const auto verts = walks.walk_vertices(static_cast<VertexId>(src), w);
                const auto types = walks.walk_types(static_cast<VertexId>(src), w);
                contributions.emplace_back(verts[verts.size() - 1], score_path(table, types, 1));
            }
            std::stable_sort(contributions.begin(), contributions.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            auto& dsts = row_dst[src];
            auto& weights = row_weight[src];
            for (const auto& [dst, score] : contributions) {
                if (!dsts.empty() && dsts.back() == dst) {
                    weights.back() += score;
                } else {
                    dsts.push_back(dst);
                    weights.push_back(score);
                }
            }
            index[src + 1] = dsts.size();
        }
    });
    for (std::size_t v = 0; v < n; ++v) index[v + 1] += index[v];
    std::vector<VertexId> dst(index[n]);
    std::vector<double> weight(index[n]);
    for (std::size_t v = 0; v < n; ++v) {
        std::copy(row_dst[v].begin(), row_dst[v].end(), dst.begin() + index[v]);
        std::copy(row_weight[v].begin(), row_weight[v].end(), weight.begin() + index[v]);
    }
    return MetapathGraph(n, std::move(index), std::move(dst), std::move(weight));
}

// Product-rule gradient of sum_e grad_w[e] * MG.W(e) over the stored walks
// only. Walks are replayed, not re-enumerated; the sampling distribution
// itself is not differentiated.
inline Matrix backward_sampled(const ScoreTable& table, const WalkSet& walks,
                               const MetapathGraph& support, std::span<const double> grad_w,
                               int workers = 0) {
    if (grad_w.size() != support.num_edges()) {
        throw std::invalid_argument("backward_sampled: gradient size does not match support edges");
    }
    if (support.num_vertices() != walks.num_vertices) {
        throw std::invalid_argument("backward_sampled: support vertex count mismatch");
    }
    const int nworkers = resolve_workers(workers);
    std::vector<Matrix> partials(static_cast<std::size_t>(nworkers),
                                 Matrix(table.positions(), table.types()));

    parallel_blocks(walks.num_vertices, nworkers, [&](int worker, std::size_t lo, std::size_t hi) {
        Matrix& grad_s = partials[static_cast<std::size_t>(worker)];
        const std::size_t l = static_cast<std::size_t>(walks.length);
        std::vector<double> prefix(l + 1);
        for (std::size_t src = lo; src < hi; ++src) {
            const VertexId s = static_cast<VertexId>(src);
            if (support.out_degree(s) == 0) continue;
            for (std::size_t w = 0; w < walks.num_walks; ++w) {
                const auto verts = walks.walk_vertices(s, w);
                const auto types = walks.walk_types(s, w);
                const std::size_t e = support.find_edge(s, verts[l]);
                if (e == MetapathGraph::npos) continue;
                const double gv = grad_w[e];
                if (gv == 0.0) continue;
                prefix[0] = 1.0;
                for (std::size_t j = 0; j < l; ++j) {
                    prefix[j + 1] = prefix[j] * table.s(j, types[j]);
                }
                double suffix = 1.0;
                for (std::size_t j = l; j-- > 0;) {
                    grad_s(j, types[j]) += gv * prefix[j] * suffix;
                    suffix *= table.s(j, types[j]);
                }
            }
        }
    });

    Matrix grad(table.positions(), table.types());
    for (const Matrix& p : partials) grad += p;
    return grad;
}

}  // namespace metagtn
