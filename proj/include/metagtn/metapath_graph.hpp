#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "metagtn/hetero_graph.hpp"
#include "metagtn/matrix.hpp"

namespace metagtn {

// Weighted directed sparse graph produced by metapath generation. Rows are
// sorted by destination and hold at most one edge per (src, dst) pair.
class MetapathGraph {
public:
    MetapathGraph() = default;

    MetapathGraph(std::size_t num_vertices, std::vector<std::uint64_t> out_index,
                  std::vector<VertexId> edge_dst, std::vector<double> edge_weight)
        : num_vertices_(num_vertices),
          out_index_(std::move(out_index)),
          edge_dst_(std::move(edge_dst)),
          edge_weight_(std::move(edge_weight)) {
        if (out_index_.size() != num_vertices_ + 1 || out_index_.back() != edge_dst_.size() ||
            edge_dst_.size() != edge_weight_.size()) {
            throw std::invalid_argument("MetapathGraph: inconsistent CSR arrays");
        }
    }

    // Builds from an unordered edge list, summing duplicate (src, dst) pairs.
    static MetapathGraph from_entries(std::size_t num_vertices,
                                      std::vector<std::tuple<VertexId, VertexId, double>> entries) {
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) {
                      return std::tie(std::get<0>(a), std::get<1>(a)) <
                             std::tie(std::get<0>(b), std::get<1>(b));
                  });
        std::vector<std::uint64_t> index(num_vertices + 1, 0);
        std::vector<VertexId> dst;
        std::vector<double> weight;
        bool have_prev = false;
        VertexId prev_src = 0, prev_dst = 0;
        for (const auto& [s, d, w] : entries) {
            if (s >= num_vertices || d >= num_vertices) {
                throw std::out_of_range("MetapathGraph::from_entries: vertex id out of range");
            }
            if (have_prev && prev_src == s && prev_dst == d) {
                weight.back() += w;
            } else {
                dst.push_back(d);
                weight.push_back(w);
                index[s + 1]++;
                prev_src = s;
                prev_dst = d;
                have_prev = true;
            }
        }
        for (std::size_t v = 0; v < num_vertices; ++v) index[v + 1] += index[v];
        return MetapathGraph(num_vertices, std::move(index), std::move(dst), std::move(weight));
    }

    std::size_t num_vertices() const { return num_vertices_; }
    std::size_t num_edges() const { return edge_dst_.size(); }

    std::size_t out_begin(VertexId v) const { return out_index_[v]; }
    std::size_t out_end(VertexId v) const { return out_index_[v + 1]; }
    std::size_t out_degree(VertexId v) const { return out_index_[v + 1] - out_index_[v]; }

    std::span<const VertexId> out_dsts(VertexId v) const {
        return {edge_dst_.data() + out_index_[v], out_degree(v)};
    }
    std::span<const double> out_weights(VertexId v) const {
        return {edge_weight_.data() + out_index_[v], out_degree(v)};
    }

    const std::vector<std::uint64_t>& out_index() const { return out_index_; }
    const std::vector<VertexId>& edge_dst() const { return edge_dst_; }
    const std::vector<double>& edge_weight() const { return edge_weight_; }
    std::vector<double>& edge_weight() { return edge_weight_; }

    bool has_edge(VertexId u, VertexId v) const { return find_edge(u, v) != npos; }

    double weight_of(VertexId u, VertexId v) const {
        const std::size_t e = find_edge(u, v);
        return e == npos ? 0.0 : edge_weight_[e];
    }

    // Index into the edge arrays, or npos when absent. Rows are sorted by dst.
    std::size_t find_edge(VertexId u, VertexId v) const {
        const VertexId* lo = edge_dst_.data() + out_index_[u];
        const VertexId* hi = edge_dst_.data() + out_index_[u + 1];
        const VertexId* it = std::lower_bound(lo, hi, v);
        if (it == hi || *it != v) return npos;
        return static_cast<std::size_t>(it - edge_dst_.data());
    }

    // Sum of outgoing edge weights per vertex (the GCN's normalizer).
    std::vector<double> out_weight_sums() const {
        std::vector<double> sums(num_vertices_, 0.0);
        for (VertexId v = 0; v < num_vertices_; ++v) {
            double s = 0.0;
            for (double w : out_weights(v)) s += w;
            sums[v] = s;
        }
        return sums;
    }

    Matrix to_dense() const {
        Matrix m(num_vertices_, num_vertices_);
        for (VertexId v = 0; v < num_vertices_; ++v) {
            for (std::size_t e = out_index_[v]; e < out_index_[v + 1]; ++e) {
                m(v, edge_dst_[e]) = edge_weight_[e];
            }
        }
        return m;
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t num_vertices_ = 0;
    std::vector<std::uint64_t> out_index_ = {0};
    std::vector<VertexId> edge_dst_;
    std::vector<double> edge_weight_;
};

// The input graph reinterpreted with unit edge weights; parallel edges between
// the same (src, dst) collapse to their multiplicity.
inline MetapathGraph unit_weight_graph(const HeteroGraph& g) {
    std::vector<std::tuple<VertexId, VertexId, double>> entries;
    entries.reserve(g.num_edges());
    for (VertexId v = 0; v < g.num_vertices(); ++v) {
        for (VertexId d : g.out_dsts(v)) entries.emplace_back(v, d, 1.0);
    }
    return MetapathGraph::from_entries(g.num_vertices(), std::move(entries));
}

}  // namespace metagtn
