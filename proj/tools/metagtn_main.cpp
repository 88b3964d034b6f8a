// Command-line driver: trains a metapath GTN (or plain GCN) on a dataset
// directory or a synthetic graph, streaming per-epoch metrics and writing a
// JSON report.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "metagtn/metagtn.hpp"

namespace {

struct RunOptions {
    std::string dataset;
    std::string mode = "ggtn-split";
    std::string enum_strategy = "level";
    std::string report_path = "report.json";
    std::uint64_t synthetic_vertices = 0;
    double synthetic_degree = 8.0;
    std::size_t synthetic_types = 4;
    bool dump_mg = false;
    metagtn::TrainConfig config;
};

metagtn::TrainMode parse_mode(const std::string& name) {
    if (name == "gcn") return metagtn::TrainMode::GcnBaseline;
    if (name == "ggtn-vanilla") return metagtn::TrainMode::GgtnVanilla;
    if (name == "ggtn-split") return metagtn::TrainMode::GgtnSplit;
    if (name == "wgtn") return metagtn::TrainMode::Wgtn;
    throw CLI::ValidationError("--mode", "unknown mode '" + name + "'");
}

int run_command(const RunOptions& opts) {
    metagtn::DatasetBundle bundle;
    if (opts.synthetic_vertices > 0) {
        const std::size_t n = opts.synthetic_vertices;
        const std::size_t m = static_cast<std::size_t>(opts.synthetic_degree * n);
        metagtn::HeteroGraph g =
            metagtn::random_graph(n, m, opts.synthetic_types, opts.config.seed);
        metagtn::SyntheticOptions synth;
        synth.num_edge_types = opts.synthetic_types;
        synth.randomize_edge_types = false;  // random_graph already drew types
        bundle = metagtn::generate_synthetic(g, opts.config.seed, synth);
        std::cerr << "synthetic dataset: " << n << " vertices, " << bundle.graph.num_edges()
                  << " edges, " << opts.synthetic_types << " edge types\n";
    } else {
        bundle = metagtn::load_dataset(opts.dataset);
        if (!bundle.has_features() || bundle.masks.train.empty()) {
            // Datasets without features/labels/splits get the synthetic filler.
            metagtn::SyntheticOptions synth;
            synth.randomize_edge_types = false;
            metagtn::DatasetBundle filler =
                metagtn::generate_synthetic(bundle.graph, opts.config.seed, synth);
            if (!bundle.has_features()) {
                bundle.features = std::move(filler.features);
                bundle.feature_dim = filler.feature_dim;
            }
            if (bundle.masks.train.empty()) {
                bundle.labels = std::move(filler.labels);
                bundle.masks = std::move(filler.masks);
                bundle.num_classes = filler.num_classes;
            }
        }
    }

    metagtn::TrainConfig config = opts.config;
    config.mode = parse_mode(opts.mode);
    config.strategy = opts.enum_strategy == "dfs" ? metagtn::EnumStrategy::DepthFirst
                                                  : metagtn::EnumStrategy::LevelByLevel;
    config.record_first_mg = opts.dump_mg;

    std::optional<metagtn::ScoreTable> injected;
    if (bundle.injected_scores) {
        injected = metagtn::ScoreTable{*bundle.injected_scores};
        std::cerr << "using injected score table from scores.tsv (softmax bypassed, scores "
                     "frozen)\n";
    }

    metagtn::TrainResult result = metagtn::train(
        bundle.graph, bundle.features, bundle.labels, bundle.num_classes, bundle.masks, config,
        injected ? &*injected : nullptr,
        [](const metagtn::EpochMetrics& m) {
            std::cout << metagtn::format_metrics_line(m) << "\n";
        });

    nlohmann::json report = metagtn::make_report(config, bundle, result, opts.dump_mg);
    std::ofstream out(opts.report_path);
    if (!out) {
        std::cerr << "error: cannot write report to " << opts.report_path << "\n";
        return 1;
    }
    out << report.dump(2) << "\n";

    std::cout << "peak_test_accuracy\t" << result.peak_test_accuracy << "\n";
    std::cout << "average_epoch_seconds\t" << result.average_epoch_seconds << "\n";
    if (result.timed_out) std::cout << "TIMEOUT\n";
    std::cerr << "report written to " << opts.report_path << "\n";
    return 0;
}

int synth_command(const std::string& out_dir, std::uint64_t n, double degree, std::size_t types,
                  std::uint64_t seed) {
    metagtn::HeteroGraph g =
        metagtn::random_graph(n, static_cast<std::size_t>(degree * n), types, seed);
    metagtn::SyntheticOptions synth;
    synth.num_edge_types = types;
    synth.randomize_edge_types = false;
    metagtn::DatasetBundle bundle = metagtn::generate_synthetic(g, seed, synth);
    metagtn::save_dataset(bundle, out_dir);
    std::cout << "wrote synthetic dataset (" << bundle.graph.num_vertices() << " vertices, "
              << bundle.graph.num_edges() << " edges) to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"metapath graph transformer network trainer"};
    app.require_subcommand(1);

    RunOptions opts;
    CLI::App* run = app.add_subcommand("run", "train a model and write a report");
    run->add_option("--dataset", opts.dataset, "dataset directory");
    run->add_option("--mode", opts.mode, "gcn|ggtn-vanilla|ggtn-split|wgtn")
        ->default_val("ggtn-split");
    run->add_option("--layers", opts.config.transformer_layers,
                    "graph transformer layers (metapath length = layers + 1)");
    run->add_option("--num-walks", opts.config.num_walks, "sampled walks per vertex (wgtn)");
    run->add_option("--hidden", opts.config.hidden, "hidden feature size");
    run->add_option("--epochs", opts.config.epochs, "training epochs");
    run->add_option("--lr", opts.config.lr, "Adam learning rate");
    run->add_option("--seed", opts.config.seed, "RNG seed");
    run->add_option("--eval-every", opts.config.eval_every, "test accuracy evaluation period");
    run->add_option("--timeout-seconds", opts.config.timeout_seconds, "wall-clock budget");
    run->add_option("--enum", opts.enum_strategy, "path enumeration strategy: dfs|level")
        ->check(CLI::IsMember({"dfs", "level"}));
    run->add_flag("--freeze-walks", opts.config.freeze_walks,
                  "sample walks once instead of every epoch");
    run->add_flag("--deterministic", opts.config.deterministic,
                  "single-threaded bitwise-reproducible mode");
    run->add_option("--synthetic", opts.synthetic_vertices,
                    "generate a synthetic dataset with this many vertices instead of loading");
    run->add_option("--synthetic-degree", opts.synthetic_degree,
                    "average out-degree for --synthetic");
    run->add_option("--synthetic-types", opts.synthetic_types, "edge types for --synthetic");
    run->add_flag("--dump-mg", opts.dump_mg, "include epoch-1 metapath graph edges in the report");
    run->add_option("--workers", opts.config.workers, "worker threads (0 = auto)");
    run->add_option("--report", opts.report_path, "report output path");

    std::string synth_out = "synthetic_dataset";
    std::uint64_t synth_n = 1000;
    double synth_degree = 8.0;
    std::size_t synth_types = 4;
    std::uint64_t synth_seed = 1;
    CLI::App* synth = app.add_subcommand("synth", "write a synthetic dataset directory");
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--vertices", synth_n, "vertex count");
    synth->add_option("--degree", synth_degree, "average out-degree");
    synth->add_option("--types", synth_types, "edge type count");
    synth->add_option("--seed", synth_seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (opts.dataset.empty() && opts.synthetic_vertices == 0) {
                std::cerr << "error: provide --dataset or --synthetic\n";
                return 2;
            }
            return run_command(opts);
        }
        if (synth->parsed()) {
            return synth_command(synth_out, synth_n, synth_degree, synth_types, synth_seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
