#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "metagtn/parallel.hpp"

namespace metagtn {

using VertexId = std::uint32_t;
using TypeId = std::uint32_t;

struct EdgeRecord {
    VertexId src;
    VertexId dst;
    TypeId type;
};

// Immutable typed directed graph in compressed adjacency (CSR) form.
// Within a row, the relative input order of that source's edges is preserved.
class HeteroGraph {
public:
    HeteroGraph() = default;

    std::size_t num_vertices() const { return num_vertices_; }
    std::size_t num_edges() const { return edge_dst_.size(); }
    std::size_t num_edge_types() const { return num_edge_types_; }

    bool has_self_edges() const { return has_self_edges_; }

    // The reserved self-edge type is the last type id once augmented.
    TypeId self_type() const {
        if (!has_self_edges_) {
            throw std::logic_error("self_type: graph has not been self-edge augmented");
        }
        return static_cast<TypeId>(num_edge_types_ - 1);
    }

    std::size_t out_begin(VertexId v) const { return out_index_[v]; }
    std::size_t out_end(VertexId v) const { return out_index_[v + 1]; }
    std::size_t out_degree(VertexId v) const { return out_index_[v + 1] - out_index_[v]; }

    std::span<const VertexId> out_dsts(VertexId v) const {
        return {edge_dst_.data() + out_index_[v], out_degree(v)};
    }
    std::span<const TypeId> out_types(VertexId v) const {
        return {edge_type_.data() + out_index_[v], out_degree(v)};
    }

    const std::vector<std::uint64_t>& out_index() const { return out_index_; }
    const std::vector<VertexId>& edge_dst() const { return edge_dst_; }
    const std::vector<TypeId>& edge_type() const { return edge_type_; }

    std::vector<EdgeRecord> edges() const {
        std::vector<EdgeRecord> out;
        out.reserve(num_edges());
        for (VertexId v = 0; v < num_vertices_; ++v) {
            for (std::size_t e = out_index_[v]; e < out_index_[v + 1]; ++e) {
                out.push_back({v, edge_dst_[e], edge_type_[e]});
            }
        }
        return out;
    }

    friend HeteroGraph build_graph(const std::vector<EdgeRecord>& edges, std::size_t num_vertices,
                                   std::size_t num_types);
    friend HeteroGraph add_self_edges(const HeteroGraph& g);

private:
    std::size_t num_vertices_ = 0;
    std::size_t num_edge_types_ = 0;
    bool has_self_edges_ = false;
    std::vector<std::uint64_t> out_index_;  // size num_vertices_ + 1
    std::vector<VertexId> edge_dst_;
    std::vector<TypeId> edge_type_;
};

inline HeteroGraph build_graph(const std::vector<EdgeRecord>& edges, std::size_t num_vertices,
                               std::size_t num_types) {
    if (num_types < 1) throw std::invalid_argument("build_graph: num_types must be >= 1");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const EdgeRecord& e = edges[i];
        if (e.src >= num_vertices) {
            throw std::out_of_range("build_graph: edge " + std::to_string(i) + ": src " +
                                    std::to_string(e.src) + " out of range (num_vertices=" +
                                    std::to_string(num_vertices) + ")");
        }
        if (e.dst >= num_vertices) {
            throw std::out_of_range("build_graph: edge " + std::to_string(i) + ": dst " +
                                    std::to_string(e.dst) + " out of range (num_vertices=" +
                                    std::to_string(num_vertices) + ")");
        }
        if (e.type >= num_types) {
            throw std::out_of_range("build_graph: edge " + std::to_string(i) + ": type " +
                                    std::to_string(e.type) + " out of range (num_types=" +
                                    std::to_string(num_types) + ")");
        }
    }

    HeteroGraph g;
    g.num_vertices_ = num_vertices;
    g.num_edge_types_ = num_types;
    g.out_index_.assign(num_vertices + 1, 0);
    for (const EdgeRecord& e : edges) g.out_index_[e.src + 1]++;
    for (std::size_t v = 0; v < num_vertices; ++v) g.out_index_[v + 1] += g.out_index_[v];

    g.edge_dst_.resize(edges.size());
    g.edge_type_.resize(edges.size());
    std::vector<std::uint64_t> cursor(g.out_index_.begin(), g.out_index_.end() - 1);
    // Stable counting sort by source keeps each row in input order.
    for (const EdgeRecord& e : edges) {
        const std::uint64_t p = cursor[e.src]++;
        g.edge_dst_[p] = e.dst;
        g.edge_type_[p] = e.type;
    }
    return g;
}

// Returns g plus one (v, v, SELF_TYPE) edge per vertex, where SELF_TYPE is a
// freshly allocated last type id. Self-edges let exact length-l enumeration
// stand in for shorter paths.
inline HeteroGraph add_self_edges(const HeteroGraph& g) {
    if (g.has_self_edges()) {
        throw std::invalid_argument("add_self_edges: graph already has self-edges");
    }
    const std::size_t n = g.num_vertices();
    HeteroGraph out;
    out.num_vertices_ = n;
    out.num_edge_types_ = g.num_edge_types() + 1;
    out.has_self_edges_ = true;
    const TypeId self_type = static_cast<TypeId>(out.num_edge_types_ - 1);

    out.out_index_.assign(n + 1, 0);
    out.edge_dst_.resize(g.num_edges() + n);
    out.edge_type_.resize(g.num_edges() + n);
    std::uint64_t pos = 0;
    for (VertexId v = 0; v < n; ++v) {
        out.out_index_[v] = pos;
        for (std::size_t e = g.out_begin(v); e < g.out_end(v); ++e) {
            out.edge_dst_[pos] = g.edge_dst()[e];
            out.edge_type_[pos] = g.edge_type()[e];
            ++pos;
        }
        out.edge_dst_[pos] = v;
        out.edge_type_[pos] = self_type;
        ++pos;
    }
    out.out_index_[n] = pos;
    return out;
}

// For each vertex, the number of distinct endpoints reachable by exactly-l-edge
// paths. This is the exact per-row edge count of the metapath graph, computed
// without scores so storage can be allocated in one shot.
inline std::vector<std::uint64_t> symbolic_metapath_size(const HeteroGraph& g, int l,
                                                         int workers = 0) {
    if (l < 1) throw std::invalid_argument("symbolic_metapath_size: l must be >= 1");
    const std::size_t n = g.num_vertices();
    std::vector<std::uint64_t> counts(n, 0);
    parallel_blocks(n, workers, [&](int, std::size_t lo, std::size_t hi) {
        std::vector<std::uint64_t> stamp(n, 0);
        std::vector<VertexId> frontier, next;
        std::uint64_t tick = 0;
        for (std::size_t src = lo; src < hi; ++src) {
            frontier.clear();
            frontier.push_back(static_cast<VertexId>(src));
            for (int step = 0; step < l; ++step) {
                ++tick;
                next.clear();
                for (VertexId u : frontier) {
                    for (VertexId x : g.out_dsts(u)) {
                        if (stamp[x] != tick) {
                            stamp[x] = tick;
                            next.push_back(x);
                        }
                    }
                }
                frontier.swap(next);
            }
            counts[src] = frontier.size();
        }
    });
    return counts;
}

}  // namespace metagtn
