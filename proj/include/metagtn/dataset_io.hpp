#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "metagtn/hetero_graph.hpp"
#include "metagtn/matrix.hpp"
#include "metagtn/rng.hpp"
#include "metagtn/scoring.hpp"
#include "metagtn/train.hpp"

namespace metagtn {

// A parsed dataset directory: graph (pre-augmentation), features, labels
// (-1 = unlabeled), split masks, and optionally a raw score table to inject.
struct DatasetBundle {
    HeteroGraph graph;
    Matrix features;
    std::vector<std::int32_t> labels;
    SplitMasks masks;
    std::size_t num_classes = 0;
    std::size_t feature_dim = 0;
    std::optional<Matrix> injected_scores;

    bool has_features() const { return features.rows() > 0; }
};

namespace detail {

inline std::runtime_error parse_error(const std::string& file, std::size_t line,
                                      const std::string& message) {
    return std::runtime_error(file + " line " + std::to_string(line) + ": " + message);
}

inline std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing file: " + path.string());
    return in;
}

inline bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

inline std::uint64_t parse_id(const std::string& token, const std::string& file,
                              std::size_t line_no, const char* what) {
    try {
        std::size_t pos = 0;
        const std::uint64_t value = std::stoull(token, &pos);
        if (pos != token.size()) throw std::invalid_argument("trailing characters");
        return value;
    } catch (const std::exception&) {
        throw parse_error(file, line_no, std::string("malformed ") + what + " '" + token + "'");
    }
}

inline double parse_real(const std::string& token, const std::string& file, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double value = std::stod(token, &pos);
        if (pos != token.size()) throw std::invalid_argument("trailing characters");
        return value;
    } catch (const std::exception&) {
        throw parse_error(file, line_no, "malformed number '" + token + "'");
    }
}

}  // namespace detail

// Dataset directory layout:
//   manifest.json  {num_vertices, num_edge_types, num_classes, feature_dim}
//   edges.tsv      src <TAB> dst <TAB> type_id          (directed, required)
//   features.tsv   feature_dim space-separated values per vertex (optional)
//   labels.tsv     vertex_id <TAB> class_id             (labeled vertices only)
//   splits.tsv     vertex_id <TAB> train|val|test
//   scores.tsv     optional raw score table (one row per metapath position)
inline DatasetBundle load_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("dataset directory not found: " + dir.string());
    }

    nlohmann::json manifest;
    {
        std::ifstream in = detail::open_or_throw(dir / "manifest.json");
        try {
            in >> manifest;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("manifest.json: " + std::string(e.what()));
        }
    }
    std::size_t num_vertices, num_edge_types, num_classes, feature_dim;
    try {
        num_vertices = manifest.at("num_vertices").get<std::size_t>();
        num_edge_types = manifest.at("num_edge_types").get<std::size_t>();
        num_classes = manifest.at("num_classes").get<std::size_t>();
        feature_dim = manifest.at("feature_dim").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("manifest.json: " + std::string(e.what()));
    }

    DatasetBundle bundle;
    bundle.num_classes = num_classes;
    bundle.feature_dim = feature_dim;
    bundle.labels.assign(num_vertices, -1);

    {
        const std::string file = (dir / "edges.tsv").string();
        std::ifstream in = detail::open_or_throw(dir / "edges.tsv");
        std::vector<EdgeRecord> edges;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (detail::blank(line)) continue;
            std::istringstream ss(line);
            std::string src_tok, dst_tok, type_tok;
            if (!(ss >> src_tok >> dst_tok >> type_tok)) {
                throw detail::parse_error(file, line_no, "expected 'src dst type_id'");
            }
            const std::uint64_t src = detail::parse_id(src_tok, file, line_no, "src");
            const std::uint64_t dst = detail::parse_id(dst_tok, file, line_no, "dst");
            const std::uint64_t type = detail::parse_id(type_tok, file, line_no, "type");
            if (src >= num_vertices) {
                throw detail::parse_error(file, line_no,
                                          "src " + std::to_string(src) + " out of range");
            }
            if (dst >= num_vertices) {
                throw detail::parse_error(file, line_no,
                                          "dst " + std::to_string(dst) + " out of range");
            }
            if (type >= num_edge_types) {
                throw detail::parse_error(file, line_no,
                                          "type " + std::to_string(type) + " out of range");
            }
            edges.push_back({static_cast<VertexId>(src), static_cast<VertexId>(dst),
                             static_cast<TypeId>(type)});
        }
        bundle.graph = build_graph(edges, num_vertices, num_edge_types);
    }

    if (std::filesystem::exists(dir / "features.tsv")) {
        const std::string file = (dir / "features.tsv").string();
        std::ifstream in = detail::open_or_throw(dir / "features.tsv");
        bundle.features = Matrix(num_vertices, feature_dim);
        std::string line;
        std::size_t line_no = 0, row = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (detail::blank(line)) continue;
            if (row >= num_vertices) {
                throw detail::parse_error(file, line_no, "more feature rows than vertices");
            }
            std::istringstream ss(line);
            std::string tok;
            std::size_t col = 0;
            while (ss >> tok) {
                if (col >= feature_dim) {
                    throw detail::parse_error(file, line_no, "more values than feature_dim");
                }
                bundle.features(row, col++) = detail::parse_real(tok, file, line_no);
            }
            if (col != feature_dim) {
                throw detail::parse_error(file, line_no,
                                          "expected " + std::to_string(feature_dim) +
                                              " values, got " + std::to_string(col));
            }
            ++row;
        }
        if (row != num_vertices) {
            throw std::runtime_error(file + ": expected " + std::to_string(num_vertices) +
                                     " feature rows, got " + std::to_string(row));
        }
    }

    if (std::filesystem::exists(dir / "labels.tsv")) {
        const std::string file = (dir / "labels.tsv").string();
        std::ifstream in = detail::open_or_throw(dir / "labels.tsv");
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (detail::blank(line)) continue;
            std::istringstream ss(line);
            std::string v_tok, c_tok;
            if (!(ss >> v_tok >> c_tok)) {
                throw detail::parse_error(file, line_no, "expected 'vertex_id class_id'");
            }
            const std::uint64_t v = detail::parse_id(v_tok, file, line_no, "vertex_id");
            const std::uint64_t c = detail::parse_id(c_tok, file, line_no, "class_id");
            if (v >= num_vertices) {
                throw detail::parse_error(file, line_no,
                                          "vertex " + std::to_string(v) + " out of range");
            }
            if (c >= num_classes) {
                throw detail::parse_error(file, line_no,
                                          "class " + std::to_string(c) + " out of range");
            }
            if (bundle.labels[v] != -1) {
                throw detail::parse_error(file, line_no,
                                          "duplicate label for vertex " + std::to_string(v));
            }
            bundle.labels[v] = static_cast<std::int32_t>(c);
        }
    }

    if (std::filesystem::exists(dir / "splits.tsv")) {
        const std::string file = (dir / "splits.tsv").string();
        std::ifstream in = detail::open_or_throw(dir / "splits.tsv");
        std::vector<bool> assigned(num_vertices, false);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (detail::blank(line)) continue;
            std::istringstream ss(line);
            std::string v_tok, split;
            if (!(ss >> v_tok >> split)) {
                throw detail::parse_error(file, line_no, "expected 'vertex_id split'");
            }
            const std::uint64_t v = detail::parse_id(v_tok, file, line_no, "vertex_id");
            if (v >= num_vertices) {
                throw detail::parse_error(file, line_no,
                                          "vertex " + std::to_string(v) + " out of range");
            }
            if (assigned[v]) {
                throw detail::parse_error(file, line_no,
                                          "vertex " + std::to_string(v) +
                                              " assigned to multiple splits");
            }
            assigned[v] = true;
            if (bundle.labels[v] < 0) {
                throw detail::parse_error(file, line_no,
                                          "vertex " + std::to_string(v) +
                                              " is in a split but has no label");
            }
            const VertexId vid = static_cast<VertexId>(v);
            if (split == "train") {
                bundle.masks.train.push_back(vid);
            } else if (split == "val") {
                bundle.masks.val.push_back(vid);
            } else if (split == "test") {
                bundle.masks.test.push_back(vid);
            } else {
                throw detail::parse_error(file, line_no, "unknown split '" + split + "'");
            }
        }
    }

    if (std::filesystem::exists(dir / "scores.tsv")) {
        const std::string file = (dir / "scores.tsv").string();
        std::ifstream in = detail::open_or_throw(dir / "scores.tsv");
        std::vector<std::vector<double>> rows;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (detail::blank(line)) continue;
            std::istringstream ss(line);
            std::string tok;
            std::vector<double> row;
            while (ss >> tok) row.push_back(detail::parse_real(tok, file, line_no));
            if (!rows.empty() && row.size() != rows.front().size()) {
                throw detail::parse_error(file, line_no, "ragged score table");
            }
            rows.push_back(std::move(row));
        }
        if (!rows.empty()) {
            Matrix scores(rows.size(), rows.front().size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                for (std::size_t j = 0; j < rows[i].size(); ++j) scores(i, j) = rows[i][j];
            }
            bundle.injected_scores = std::move(scores);
        }
    }

    return bundle;
}

inline void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        nlohmann::json manifest{{"num_vertices", bundle.graph.num_vertices()},
                                {"num_edge_types", bundle.graph.num_edge_types()},
                                {"num_classes", bundle.num_classes},
                                {"feature_dim", bundle.feature_dim}};
        std::ofstream out(dir / "manifest.json");
        out << manifest.dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "edges.tsv");
        for (const EdgeRecord& e : bundle.graph.edges()) {
            out << e.src << "\t" << e.dst << "\t" << e.type << "\n";
        }
    }
    if (bundle.has_features()) {
        std::ofstream out(dir / "features.tsv");
        out.precision(17);
        for (std::size_t v = 0; v < bundle.features.rows(); ++v) {
            const auto row = bundle.features.row(v);
            for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
            out << "\n";
        }
    }
    {
        std::ofstream out(dir / "labels.tsv");
        for (std::size_t v = 0; v < bundle.labels.size(); ++v) {
            if (bundle.labels[v] >= 0) out << v << "\t" << bundle.labels[v] << "\n";
        }
    }
    {
        std::ofstream out(dir / "splits.tsv");
        for (VertexId v : bundle.masks.train) out << v << "\ttrain\n";
        for (VertexId v : bundle.masks.val) out << v << "\tval\n";
        for (VertexId v : bundle.masks.test) out << v << "\ttest\n";
    }
    if (bundle.injected_scores) {
        std::ofstream out(dir / "scores.tsv");
        out.precision(17);
        for (std::size_t i = 0; i < bundle.injected_scores->rows(); ++i) {
            const auto row = bundle.injected_scores->row(i);
            for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
            out << "\n";
        }
    }
}

struct SyntheticOptions {
    std::size_t feature_dim = 50;
    double feature_value = 2.0;
    std::size_t num_edge_types = 4;
    std::size_t num_classes = 3;
    double train_fraction = 0.2;
    double val_fraction = 0.1;
    // By default edge types are randomized only when the input graph carries
    // no real type information (a single type).
    std::optional<bool> randomize_edge_types;
};

// Synthetic filler metadata for graphs that lack it: constant feature vectors,
// uniform-random labels and (where absent) edge types, and a seeded
// train/val/test shuffle split. Pure function of (g, seed, opts).
inline DatasetBundle generate_synthetic(const HeteroGraph& g, std::uint64_t seed,
                                        const SyntheticOptions& opts = {}) {
    DatasetBundle bundle;
    const std::size_t n = g.num_vertices();
    const bool randomize =
        opts.randomize_edge_types.value_or(g.num_edge_types() <= 1);

    if (randomize) {
        SplitMix rng(seed, 0x7971e5);
        std::vector<EdgeRecord> edges = g.edges();
        for (EdgeRecord& e : edges) {
            e.type = static_cast<TypeId>(rng.next_below(opts.num_edge_types));
        }
        bundle.graph = build_graph(edges, n, opts.num_edge_types);
    } else {
        bundle.graph = g;
    }

    bundle.feature_dim = opts.feature_dim;
    bundle.features = Matrix(n, opts.feature_dim, opts.feature_value);

    bundle.num_classes = opts.num_classes;
    bundle.labels.resize(n);
    SplitMix label_rng(seed, 0x1abe15);
    for (std::size_t v = 0; v < n; ++v) {
        bundle.labels[v] = static_cast<std::int32_t>(label_rng.next_below(opts.num_classes));
    }

    std::vector<VertexId> order(n);
    for (std::size_t v = 0; v < n; ++v) order[v] = static_cast<VertexId>(v);
    SplitMix shuffle_rng(seed, 0x5bff1e);
    fisher_yates_shuffle(std::span<VertexId>(order), shuffle_rng);
    const std::size_t n_train = static_cast<std::size_t>(opts.train_fraction * n);
    const std::size_t n_val = static_cast<std::size_t>(opts.val_fraction * n);
    bundle.masks.train.assign(order.begin(), order.begin() + n_train);
    bundle.masks.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    bundle.masks.test.assign(order.begin() + n_train + n_val, order.end());
    return bundle;
}

// Uniform random typed digraph, used for synthetic scaling runs.
inline HeteroGraph random_graph(std::size_t num_vertices, std::size_t num_edges,
                                std::size_t num_types, std::uint64_t seed) {
    SplitMix rng(seed, 0x96a917);
    std::vector<EdgeRecord> edges;
    edges.reserve(num_edges);
    for (std::size_t i = 0; i < num_edges; ++i) {
        edges.push_back({static_cast<VertexId>(rng.next_below(num_vertices)),
                         static_cast<VertexId>(rng.next_below(num_vertices)),
                         static_cast<TypeId>(rng.next_below(num_types))});
    }
    return build_graph(edges, num_vertices, num_types);
}

inline std::string format_metrics_line(const EpochMetrics& m) {
    std::ostringstream ss;
    ss.precision(10);
    ss << m.epoch << "\t" << m.loss << "\t" << m.seconds;
    if (m.test_accuracy) ss << "\t" << *m.test_accuracy;
    return ss.str();
}

// Machine-parseable end-of-run report.
inline nlohmann::json make_report(const TrainConfig& config, const DatasetBundle& bundle,
                                  const TrainResult& result, bool include_mg_dump) {
    nlohmann::json report;
    report["config"] = {{"mode", mode_name(config.mode)},
                        {"layers", config.transformer_layers},
                        {"metapath_length", config.metapath_length()},
                        {"num_walks", config.num_walks},
                        {"hidden", config.hidden},
                        {"epochs", config.epochs},
                        {"lr", config.lr},
                        {"seed", config.seed},
                        {"eval_every", config.eval_every},
                        {"timeout_seconds", config.timeout_seconds},
                        {"enum", config.strategy == EnumStrategy::DepthFirst ? "dfs" : "level"},
                        {"freeze_walks", config.freeze_walks},
                        {"deterministic", config.deterministic},
                        {"injected_scores", bundle.injected_scores.has_value()}};
    report["dataset"] = {{"num_vertices", bundle.graph.num_vertices()},
                         {"num_edges", bundle.graph.num_edges()},
                         {"num_edge_types", bundle.graph.num_edge_types()},
                         {"num_classes", bundle.num_classes},
                         {"feature_dim", bundle.feature_dim}};
    nlohmann::json epochs = nlohmann::json::array();
    for (const EpochMetrics& m : result.epochs) {
        nlohmann::json e{{"epoch", m.epoch}, {"loss", m.loss}, {"seconds", m.seconds}};
        if (m.test_accuracy) e["test_accuracy"] = *m.test_accuracy;
        epochs.push_back(std::move(e));
    }
    report["epochs"] = std::move(epochs);
    report["peak_test_accuracy"] = result.peak_test_accuracy;
    report["average_epoch_seconds"] = result.average_epoch_seconds;
    report["timed_out"] = result.timed_out;
    report["final_train_accuracy"] = result.final_train_accuracy;
    report["final_test_accuracy"] = result.final_test_accuracy;
    if (include_mg_dump) {
        nlohmann::json dump = nlohmann::json::array();
        const MetapathGraph& mg = result.first_mg;
        for (VertexId u = 0; u < mg.num_vertices(); ++u) {
            const auto dsts = mg.out_dsts(u);
            const auto weights = mg.out_weights(u);
            for (std::size_t e = 0; e < dsts.size(); ++e) {
                dump.push_back({u, dsts[e], weights[e]});
            }
        }
        report["mg_dump"] = std::move(dump);
    }
    return report;
}

}  // namespace metagtn
