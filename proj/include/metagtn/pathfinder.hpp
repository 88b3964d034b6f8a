#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "metagtn/hetero_graph.hpp"
#include "metagtn/matrix.hpp"
#include "metagtn/metapath_graph.hpp"
#include "metagtn/parallel.hpp"
#include "metagtn/scoring.hpp"

namespace metagtn {

// Path enumeration strategies. Both produce identical metapath graphs; they
// differ in how per-source traversal work is organized (and therefore in
// floating-point accumulation order).
//   DepthFirst   - walk every path explicitly; memory-lean, recomputes shared
//                  suffixes.
//   LevelByLevel - extend all partial paths one edge at a time, merging paths
//                  that share an endpoint; avoids suffix recomputation at the
//                  cost of per-level frontier storage.
enum class EnumStrategy { DepthFirst, LevelByLevel };

struct SplitResult {
    MetapathGraph mg1;
    MetapathGraph mg2;
    MetapathGraph mg;
};

namespace detail {

// Per-worker sparse accumulator over vertex ids: dense value array plus a
// stamp array keyed by a monotone tick, so clearing is O(1) per source.
struct SparseAccumulator {
    std::vector<double> value;
    std::vector<std::uint64_t> stamp;
    std::vector<VertexId> touched;
    std::uint64_t tick = 0;

    explicit SparseAccumulator(std::size_t n) : value(n, 0.0), stamp(n, 0) {}

    void begin() {
        ++tick;
        touched.clear();
    }

    void add(VertexId v, double w) {
        if (stamp[v] != tick) {
            stamp[v] = tick;
            value[v] = w;
            touched.push_back(v);
        } else {
            value[v] += w;
        }
    }

    double get(VertexId v) const { return stamp[v] == tick ? value[v] : 0.0; }
    bool contains(VertexId v) const { return stamp[v] == tick; }
};

// Endpoint weights of all `steps`-edge paths out of src, with edge k of the
// path scored at table row pos0 + k (pos0 is the 0-based position offset).
inline void accumulate_level(const HeteroGraph& g, const ScoreTable& table, int steps,
                             std::size_t pos0, VertexId src, SparseAccumulator& cur,
                             SparseAccumulator& nxt) {
    cur.begin();
    cur.add(src, 1.0);
    for (int k = 0; k < steps; ++k) {
        nxt.begin();
        const std::size_t row = pos0 + static_cast<std::size_t>(k);
        for (VertexId u : cur.touched) {
            const double base = cur.value[u];
            const auto dsts = g.out_dsts(u);
            const auto types = g.out_types(u);
            for (std::size_t e = 0; e < dsts.size(); ++e) {
                nxt.add(dsts[e], base * table.s(row, types[e]));
            }
        }
        std::swap(cur, nxt);
    }
}

// Same contract as accumulate_level but walks every path explicitly.
inline void accumulate_dfs(const HeteroGraph& g, const ScoreTable& table, int steps,
                           std::size_t pos0, VertexId src, SparseAccumulator& out) {
    out.begin();
    std::vector<std::size_t> it(steps + 1), end(steps + 1);
    std::vector<double> prod(steps + 1);
    prod[0] = 1.0;
    it[0] = g.out_begin(src);
    end[0] = g.out_end(src);
    int d = 0;
    while (d >= 0) {
        if (it[d] == end[d]) {
            --d;
            continue;
        }
        const std::size_t e = it[d]++;
        const VertexId x = g.edge_dst()[e];
        const double p = prod[d] * table.s(pos0 + static_cast<std::size_t>(d), g.edge_type()[e]);
        if (d + 1 == steps) {
            out.add(x, p);
        } else {
            ++d;
            prod[d] = p;
            it[d] = g.out_begin(x);
            end[d] = g.out_end(x);
        }
    }
}

// Dual-score variant used by the even-length split: each enumerated path is
// scored under two position offsets in a single traversal.
inline void accumulate_level_dual(const HeteroGraph& g, const ScoreTable& table, int steps,
                                  std::size_t pos0_a, std::size_t pos0_b, VertexId src,
                                  SparseAccumulator& cur_a, SparseAccumulator& nxt_a,
                                  SparseAccumulator& cur_b, SparseAccumulator& nxt_b) {
    cur_a.begin();
    cur_a.add(src, 1.0);
    cur_b.begin();
    cur_b.add(src, 1.0);
    for (int k = 0; k < steps; ++k) {
        nxt_a.begin();
        nxt_b.begin();
        const std::size_t row_a = pos0_a + static_cast<std::size_t>(k);
        const std::size_t row_b = pos0_b + static_cast<std::size_t>(k);
        for (std::size_t i = 0; i < cur_a.touched.size(); ++i) {
            const VertexId u = cur_a.touched[i];
            const double base_a = cur_a.value[u];
            const double base_b = cur_b.value[u];
            const auto dsts = g.out_dsts(u);
            const auto types = g.out_types(u);
            for (std::size_t e = 0; e < dsts.size(); ++e) {
                nxt_a.add(dsts[e], base_a * table.s(row_a, types[e]));
                nxt_b.add(dsts[e], base_b * table.s(row_b, types[e]));
            }
        }
        std::swap(cur_a, nxt_a);
        std::swap(cur_b, nxt_b);
    }
}

inline void accumulate_dfs_dual(const HeteroGraph& g, const ScoreTable& table, int steps,
                                std::size_t pos0_a, std::size_t pos0_b, VertexId src,
                                SparseAccumulator& out_a, SparseAccumulator& out_b) {
    out_a.begin();
    out_b.begin();
    std::vector<std::size_t> it(steps + 1), end(steps + 1);
    std::vector<double> prod_a(steps + 1), prod_b(steps + 1);
    prod_a[0] = 1.0;
    prod_b[0] = 1.0;
    it[0] = g.out_begin(src);
    end[0] = g.out_end(src);
    int d = 0;
    while (d >= 0) {
        if (it[d] == end[d]) {
            --d;
            continue;
        }
        const std::size_t e = it[d]++;
        const VertexId x = g.edge_dst()[e];
        const TypeId t = g.edge_type()[e];
        const double pa = prod_a[d] * table.s(pos0_a + static_cast<std::size_t>(d), t);
        const double pb = prod_b[d] * table.s(pos0_b + static_cast<std::size_t>(d), t);
        if (d + 1 == steps) {
            out_a.add(x, pa);
            out_b.add(x, pb);
        } else {
            ++d;
            prod_a[d] = pa;
            prod_b[d] = pb;
            it[d] = g.out_begin(x);
            end[d] = g.out_end(x);
        }
    }
}

inline void require_positions(const ScoreTable& table, int start_position, int steps,
                              const char* what) {
    if (start_position < 1 ||
        static_cast<std::size_t>(start_position - 1 + steps) > table.positions()) {
        throw std::invalid_argument(std::string(what) + ": positions [" +
                                    std::to_string(start_position) + ", " +
                                    std::to_string(start_position + steps - 1) +
                                    "] exceed score table with " +
                                    std::to_string(table.positions()) + " positions");
    }
}

// Sorted-row CSR assembly from per-source accumulators, sized by the symbolic
// pre-pass so edge storage is allocated exactly once.
template <typename AccumulateFn>
MetapathGraph assemble_metapath_graph(const HeteroGraph& g, int steps, int workers,
                                      AccumulateFn&& accumulate) {
    const std::size_t n = g.num_vertices();
    std::vector<std::uint64_t> counts = symbolic_metapath_size(g, steps, workers);
    std::vector<std::uint64_t> index(n + 1, 0);
    std::partial_sum(counts.begin(), counts.end(), index.begin() + 1);
    std::vector<VertexId> dst(index[n]);
    std::vector<double> weight(index[n]);

    parallel_blocks(n, workers, [&](int, std::size_t lo, std::size_t hi) {
        SparseAccumulator acc(n), spare(n);
        std::vector<VertexId> endpoints;
        for (std::size_t src = lo; src < hi; ++src) {
            accumulate(static_cast<VertexId>(src), acc, spare);
            endpoints.assign(acc.touched.begin(), acc.touched.end());
            std::sort(endpoints.begin(), endpoints.end());
            if (endpoints.size() != counts[src]) {
                throw std::logic_error("metapath graph numeric pass disagrees with symbolic sizing");
            }
            std::uint64_t p = index[src];
            for (VertexId v : endpoints) {
                dst[p] = v;
                weight[p] = acc.value[v];
                ++p;
            }
        }
    });
    return MetapathGraph(n, std::move(index), std::move(dst), std::move(weight));
}

// Assembles two metapath graphs from a single enumeration of `steps`-edge
// paths, each path scored under two position offsets. The graphs share their
// sparsity structure.
inline std::pair<MetapathGraph, MetapathGraph> assemble_dual(const HeteroGraph& g,
                                                             const ScoreTable& table, int steps,
                                                             std::size_t pos0_a, std::size_t pos0_b,
                                                             EnumStrategy strategy, int workers) {
    const std::size_t n = g.num_vertices();
    std::vector<std::uint64_t> counts = symbolic_metapath_size(g, steps, workers);
    std::vector<std::uint64_t> index(n + 1, 0);
    std::partial_sum(counts.begin(), counts.end(), index.begin() + 1);
    std::vector<VertexId> dst(index[n]);
    std::vector<double> weight_a(index[n]);
    std::vector<double> weight_b(index[n]);

    parallel_blocks(n, workers, [&](int, std::size_t lo, std::size_t hi) {
        SparseAccumulator acc_a(n), spare_a(n), acc_b(n), spare_b(n);
        std::vector<VertexId> endpoints;
        for (std::size_t src = lo; src < hi; ++src) {
            const VertexId s = static_cast<VertexId>(src);
            if (strategy == EnumStrategy::LevelByLevel) {
                accumulate_level_dual(g, table, steps, pos0_a, pos0_b, s, acc_a, spare_a, acc_b,
                                      spare_b);
            } else {
                accumulate_dfs_dual(g, table, steps, pos0_a, pos0_b, s, acc_a, acc_b);
            }
            endpoints.assign(acc_a.touched.begin(), acc_a.touched.end());
            std::sort(endpoints.begin(), endpoints.end());
            if (endpoints.size() != counts[src]) {
                throw std::logic_error("metapath graph numeric pass disagrees with symbolic sizing");
            }
            std::uint64_t p = index[src];
            for (VertexId v : endpoints) {
                dst[p] = v;
                weight_a[p] = acc_a.value[v];
                weight_b[p] = acc_b.value[v];
                ++p;
            }
        }
    });
    MetapathGraph mg_a(n, index, dst, std::move(weight_a));
    MetapathGraph mg_b(n, std::move(index), std::move(dst), std::move(weight_b));
    return {std::move(mg_a), std::move(mg_b)};
}

}  // namespace detail

// Exact metapath graph for `steps`-edge paths whose first edge is scored at
// start_position. generate_vanilla is the start_position == 1 case; the split
// generator reuses this with an offset for the second half.
inline MetapathGraph generate_fixed_length(const HeteroGraph& g, const ScoreTable& table,
                                           int steps, int start_position,
                                           EnumStrategy strategy = EnumStrategy::LevelByLevel,
                                           int workers = 0) {
    if (steps < 1) throw std::invalid_argument("generate_fixed_length: steps must be >= 1");
    detail::require_positions(table, start_position, steps, "generate_fixed_length");
    const std::size_t pos0 = static_cast<std::size_t>(start_position - 1);
    return detail::assemble_metapath_graph(
        g, steps, workers,
        [&, pos0](VertexId src, detail::SparseAccumulator& acc, detail::SparseAccumulator& spare) {
            if (strategy == EnumStrategy::LevelByLevel) {
                detail::accumulate_level(g, table, steps, pos0, src, acc, spare);
            } else {
                detail::accumulate_dfs(g, table, steps, pos0, src, acc);
            }
        });
}

inline MetapathGraph generate_vanilla(const HeteroGraph& g, const ScoreTable& table, int l,
                                      EnumStrategy strategy = EnumStrategy::LevelByLevel,
                                      int workers = 0) {
    if (l < 1) throw std::invalid_argument("generate_vanilla: l must be >= 1");
    return generate_fixed_length(g, table, l, 1, strategy, workers);
}

// Sparse composition: weight(a, c) = sum_b w1(a, b) * w2(b, c), with a symbolic
// sizing pass so rows are allocated exactly.
inline MetapathGraph compose_metapath_graphs(const MetapathGraph& mg1, const MetapathGraph& mg2,
                                             int workers = 0) {
    if (mg1.num_vertices() != mg2.num_vertices()) {
        throw std::invalid_argument("compose_metapath_graphs: vertex counts differ (" +
                                    std::to_string(mg1.num_vertices()) + " vs " +
                                    std::to_string(mg2.num_vertices()) + ")");
    }
    const std::size_t n = mg1.num_vertices();
    std::vector<std::uint64_t> index(n + 1, 0);

    parallel_blocks(n, workers, [&](int, std::size_t lo, std::size_t hi) {
        std::vector<std::uint64_t> stamp(n, 0);
        std::uint64_t tick = 0;
        for (std::size_t a = lo; a < hi; ++a) {
            ++tick;
            std::uint64_t count = 0;
            for (VertexId b : mg1.out_dsts(static_cast<VertexId>(a))) {
                for (VertexId c : mg2.out_dsts(b)) {
                    if (stamp[c] != tick) {
                        stamp[c] = tick;
                        ++count;
                    }
                }
            }
            index[a + 1] = count;
        }
    });
    for (std::size_t v = 0; v < n; ++v) index[v + 1] += index[v];

    std::vector<VertexId> dst(index[n]);
    std::vector<double> weight(index[n]);
    parallel_blocks(n, workers, [&](int, std::size_t lo, std::size_t hi) {
        detail::SparseAccumulator acc(n);
        std::vector<VertexId> endpoints;
        for (std::size_t a = lo; a < hi; ++a) {
            acc.begin();
            const auto b_dsts = mg1.out_dsts(static_cast<VertexId>(a));
            const auto b_weights = mg1.out_weights(static_cast<VertexId>(a));
            for (std::size_t i = 0; i < b_dsts.size(); ++i) {
                const VertexId b = b_dsts[i];
                const double w1 = b_weights[i];
                const auto c_dsts = mg2.out_dsts(b);
                const auto c_weights = mg2.out_weights(b);
                for (std::size_t j = 0; j < c_dsts.size(); ++j) {
                    acc.add(c_dsts[j], w1 * c_weights[j]);
                }
            }
            endpoints.assign(acc.touched.begin(), acc.touched.end());
            std::sort(endpoints.begin(), endpoints.end());
            std::uint64_t p = index[a];
            for (VertexId v : endpoints) {
                dst[p] = v;
                weight[p] = acc.value[v];
                ++p;
            }
        }
    });
    return MetapathGraph(n, std::move(index), std::move(dst), std::move(weight));
}

// Half-length generation per the l/2 dynamic-programming split. Even l
// enumerates half-paths once and scores each under both position offsets; odd
// l enumerates ceil(l/2)-edge paths for the first half and floor(l/2)-edge
// paths (offset by ceil(l/2)) in a second pass.
inline SplitResult generate_split(const HeteroGraph& g, const ScoreTable& table, int l,
                                  EnumStrategy strategy = EnumStrategy::LevelByLevel,
                                  int workers = 0) {
    if (l < 2) throw std::invalid_argument("generate_split: l must be >= 2");
    detail::require_positions(table, 1, l, "generate_split");
    const int first_half = (l + 1) / 2;
    const int second_half = l / 2;

    SplitResult result;
    if (first_half == second_half) {
        // One enumeration of the half-length paths, scored under both offsets.
        auto [mg1, mg2] = detail::assemble_dual(g, table, first_half, 0,
                                                static_cast<std::size_t>(first_half), strategy,
                                                workers);
        result.mg1 = std::move(mg1);
        result.mg2 = std::move(mg2);
    } else {
        result.mg1 = generate_fixed_length(g, table, first_half, 1, strategy, workers);
        result.mg2 = generate_fixed_length(g, table, second_half, first_half + 1, strategy, workers);
    }
    result.mg = compose_metapath_graphs(result.mg1, result.mg2, workers);
    return result;
}

// Gradient of sum_e grad_w[e] * MG.W(e) with respect to the score table, for
// `steps`-edge paths scored from start_position. Paths are re-enumerated, not
// stored: the level strategy runs a forward/adjoint sweep per source, the
// depth-first strategy replays every path with prefix/suffix products.
inline Matrix backward_scores(const HeteroGraph& g, const ScoreTable& table, int steps,
                              const MetapathGraph& support, std::span<const double> grad_w,
                              EnumStrategy strategy = EnumStrategy::LevelByLevel, int workers = 0,
                              int start_position = 1) {
    if (steps < 1) throw std::invalid_argument("backward_scores: steps must be >= 1");
    detail::require_positions(table, start_position, steps, "backward_scores");
    if (support.num_vertices() != g.num_vertices()) {
        throw std::invalid_argument("backward_scores: support vertex count mismatch");
    }
    if (grad_w.size() != support.num_edges()) {
        throw std::invalid_argument("backward_scores: gradient size does not match support edges");
    }
    const std::size_t n = g.num_vertices();
    const std::size_t pos0 = static_cast<std::size_t>(start_position - 1);
    const int nworkers = resolve_workers(workers);
    std::vector<Matrix> partials(static_cast<std::size_t>(nworkers),
                                 Matrix(table.positions(), table.types()));

    parallel_blocks(n, nworkers, [&](int worker, std::size_t lo, std::size_t hi) {
        Matrix& grad_s = partials[static_cast<std::size_t>(worker)];
        detail::SparseAccumulator grad_row(n);
        if (strategy == EnumStrategy::LevelByLevel) {
            std::vector<std::vector<std::pair<VertexId, double>>> levels(
                static_cast<std::size_t>(steps));
            detail::SparseAccumulator adj_cur(n), adj_nxt(n);
            for (std::size_t src = lo; src < hi; ++src) {
                const VertexId s = static_cast<VertexId>(src);
                if (support.out_degree(s) == 0) continue;
                grad_row.begin();
                {
                    const auto dsts = support.out_dsts(s);
                    const auto base = support.out_begin(s);
                    bool any = false;
                    for (std::size_t i = 0; i < dsts.size(); ++i) {
                        const double gv = grad_w[base + i];
                        if (gv != 0.0) any = true;
                        grad_row.add(dsts[i], gv);
                    }
                    if (!any) continue;
                }
                // Forward sweep: levels[k] holds (vertex, f_k) for k = 0..steps-1.
                levels[0].assign(1, {s, 1.0});
                detail::SparseAccumulator* cur = &adj_cur;
                detail::SparseAccumulator* nxt = &adj_nxt;
                cur->begin();
                cur->add(s, 1.0);
                for (int k = 1; k < steps; ++k) {
                    nxt->begin();
                    const std::size_t row = pos0 + static_cast<std::size_t>(k - 1);
                    for (VertexId u : cur->touched) {
                        const double base = cur->value[u];
                        const auto dsts = g.out_dsts(u);
                        const auto types = g.out_types(u);
                        for (std::size_t e = 0; e < dsts.size(); ++e) {
                            nxt->add(dsts[e], base * table.s(row, types[e]));
                        }
                    }
                    levels[static_cast<std::size_t>(k)].assign(nxt->touched.size(), {0, 0.0});
                    auto& lvl = levels[static_cast<std::size_t>(k)];
                    for (std::size_t i = 0; i < nxt->touched.size(); ++i) {
                        lvl[i] = {nxt->touched[i], nxt->value[nxt->touched[i]]};
                    }
                    std::swap(cur, nxt);
                }
                // Adjoint sweep: b_steps is the scattered gradient row; step k
                // consumes b_k and emits b_{k-1}.
                detail::SparseAccumulator* b = &grad_row;
                detail::SparseAccumulator* b_prev = (cur == &adj_cur) ? &adj_nxt : &adj_cur;
                for (int k = steps; k >= 1; --k) {
                    b_prev->begin();
                    const std::size_t row = pos0 + static_cast<std::size_t>(k - 1);
                    for (const auto& [u, fu] : levels[static_cast<std::size_t>(k - 1)]) {
                        double bu = 0.0;
                        const auto dsts = g.out_dsts(u);
                        const auto types = g.out_types(u);
                        for (std::size_t e = 0; e < dsts.size(); ++e) {
                            const double bx = b->get(dsts[e]);
                            if (bx == 0.0) continue;
                            grad_s(row, types[e]) += fu * bx;
                            bu += table.s(row, types[e]) * bx;
                        }
                        if (k > 1) b_prev->add(u, bu);
                    }
                    if (k > 1) {
                        b = b_prev;
                        b_prev = (b == &adj_cur) ? &adj_nxt : &adj_cur;
                    }
                }
            }
        } else {
            std::vector<std::size_t> it(steps + 1), end(steps + 1);
            std::vector<double> prefix(steps + 1);
            std::vector<double> escore(steps);
            std::vector<TypeId> etype(steps);
            for (std::size_t src = lo; src < hi; ++src) {
                const VertexId s = static_cast<VertexId>(src);
                if (support.out_degree(s) == 0) continue;
                grad_row.begin();
                {
                    const auto dsts = support.out_dsts(s);
                    const auto base = support.out_begin(s);
                    bool any = false;
                    for (std::size_t i = 0; i < dsts.size(); ++i) {
                        const double gv = grad_w[base + i];
                        if (gv != 0.0) any = true;
                        grad_row.add(dsts[i], gv);
                    }
                    if (!any) continue;
                }
                prefix[0] = 1.0;
                it[0] = g.out_begin(s);
                end[0] = g.out_end(s);
                int d = 0;
                while (d >= 0) {
                    if (it[d] == end[d]) {
                        --d;
                        continue;
                    }
                    const std::size_t e = it[d]++;
                    const VertexId x = g.edge_dst()[e];
                    const TypeId t = g.edge_type()[e];
                    const double sc = table.s(pos0 + static_cast<std::size_t>(d), t);
                    escore[d] = sc;
                    etype[d] = t;
                    prefix[d + 1] = prefix[d] * sc;
                    if (d + 1 == steps) {
                        if (grad_row.contains(x)) {
                            const double gv = grad_row.value[x];
                            if (gv != 0.0) {
                                double suffix = 1.0;
                                for (int i = steps - 1; i >= 0; --i) {
                                    grad_s(pos0 + static_cast<std::size_t>(i), etype[i]) +=
                                        gv * prefix[i] * suffix;
                                    suffix *= escore[i];
                                }
                            }
                        }
                    } else {
                        ++d;
                        it[d] = g.out_begin(x);
                        end[d] = g.out_end(x);
                    }
                }
            }
        }
    });

    Matrix grad(table.positions(), table.types());
    for (const Matrix& p : partials) grad += p;
    return grad;
}

// Backward of compose_metapath_graphs: with grad on the composed graph's edges,
//   d/dw1(a,b) = sum_c grad(a,c) * w2(b,c)
//   d/dw2(b,c) = sum_a grad(a,c) * w1(a,b)
// Returned vectors align with mg1's and mg2's edge arrays.
inline std::pair<std::vector<double>, std::vector<double>> compose_backward(
    const MetapathGraph& mg1, const MetapathGraph& mg2, const MetapathGraph& composed,
    std::span<const double> grad_w, int workers = 0) {
    if (grad_w.size() != composed.num_edges()) {
        throw std::invalid_argument("compose_backward: gradient size does not match composed edges");
    }
    const std::size_t n = mg1.num_vertices();
    const int nworkers = resolve_workers(workers);
    std::vector<double> grad1(mg1.num_edges(), 0.0);
    std::vector<std::vector<double>> grad2_partials(
        static_cast<std::size_t>(nworkers), std::vector<double>(mg2.num_edges(), 0.0));

    parallel_blocks(n, nworkers, [&](int worker, std::size_t lo, std::size_t hi) {
        std::vector<double>& grad2 = grad2_partials[static_cast<std::size_t>(worker)];
        detail::SparseAccumulator grad_row(n);
        for (std::size_t a = lo; a < hi; ++a) {
            const VertexId av = static_cast<VertexId>(a);
            if (mg1.out_degree(av) == 0 || composed.out_degree(av) == 0) continue;
            grad_row.begin();
            {
                const auto dsts = composed.out_dsts(av);
                const auto base = composed.out_begin(av);
                for (std::size_t i = 0; i < dsts.size(); ++i) {
                    grad_row.add(dsts[i], grad_w[base + i]);
                }
            }
            const auto b_dsts = mg1.out_dsts(av);
            const auto b_weights = mg1.out_weights(av);
            const auto b_base = mg1.out_begin(av);
            for (std::size_t i = 0; i < b_dsts.size(); ++i) {
                const VertexId b = b_dsts[i];
                const double w1 = b_weights[i];
                const auto c_dsts = mg2.out_dsts(b);
                const auto c_weights = mg2.out_weights(b);
                const auto c_base = mg2.out_begin(b);
                double dot = 0.0;
                for (std::size_t j = 0; j < c_dsts.size(); ++j) {
                    const double gv = grad_row.get(c_dsts[j]);
                    if (gv == 0.0) continue;
                    dot += gv * c_weights[j];
                    grad2[c_base + j] += gv * w1;
                }
                grad1[b_base + i] = dot;
            }
        }
    });

    std::vector<double> grad2(mg2.num_edges(), 0.0);
    for (const auto& partial : grad2_partials) {
        for (std::size_t i = 0; i < partial.size(); ++i) grad2[i] += partial[i];
    }
    return {std::move(grad1), std::move(grad2)};
}

}  // namespace metagtn
