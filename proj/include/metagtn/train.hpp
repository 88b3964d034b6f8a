#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "metagtn/gnn.hpp"
#include "metagtn/hetero_graph.hpp"
#include "metagtn/matrix.hpp"
#include "metagtn/metapath_graph.hpp"
#include "metagtn/pathfinder.hpp"
#include "metagtn/scoring.hpp"
#include "metagtn/walker.hpp"

namespace metagtn {

enum class TrainMode { GcnBaseline, GgtnVanilla, GgtnSplit, Wgtn };

inline const char* mode_name(TrainMode mode) {
    switch (mode) {
        case TrainMode::GcnBaseline: return "gcn";
        case TrainMode::GgtnVanilla: return "ggtn-vanilla";
        case TrainMode::GgtnSplit: return "ggtn-split";
        case TrainMode::Wgtn: return "wgtn";
    }
    return "?";
}

struct SplitMasks {
    std::vector<VertexId> train;
    std::vector<VertexId> val;
    std::vector<VertexId> test;
};

struct TrainConfig {
    TrainMode mode = TrainMode::GgtnSplit;
    int transformer_layers = 3;  // metapath length l = transformer_layers + 1
    std::size_t num_walks = 0;
    std::size_t hidden = 64;
    int epochs = 300;
    double lr = 0.01;
    std::uint64_t seed = 1;
    int eval_every = 5;
    double timeout_seconds = 28800.0;
    EnumStrategy strategy = EnumStrategy::LevelByLevel;
    bool freeze_walks = false;
    bool deterministic = false;
    int workers = 0;  // 0 = auto; deterministic mode forces 1
    bool record_first_mg = false;

    int metapath_length() const { return transformer_layers + 1; }
    int effective_workers() const { return deterministic ? 1 : workers; }
};

inline void validate_config(const TrainConfig& c) {
    if (c.transformer_layers < 1) throw std::invalid_argument("config: layers must be >= 1");
    if (c.hidden < 1) throw std::invalid_argument("config: hidden must be >= 1");
    if (c.epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
    if (c.eval_every < 1) throw std::invalid_argument("config: eval-every must be >= 1");
    if (!(c.lr > 0.0)) throw std::invalid_argument("config: lr must be > 0");
    if (!(c.timeout_seconds > 0.0)) throw std::invalid_argument("config: timeout must be > 0");
    if (c.mode == TrainMode::Wgtn && c.num_walks == 0) {
        throw std::invalid_argument("config: wgtn mode requires num-walks >= 1");
    }
}

struct EpochMetrics {
    int epoch = 0;
    double loss = 0.0;
    double seconds = 0.0;
    std::optional<double> test_accuracy;
};

struct TrainResult {
    std::vector<EpochMetrics> epochs;
    double peak_test_accuracy = 0.0;
    double average_epoch_seconds = 0.0;
    bool timed_out = false;
    double final_train_accuracy = 0.0;
    double final_test_accuracy = 0.0;
    ModelState state;
    MetapathGraph first_mg;  // metapath graph of epoch 1 (when recorded)
    MetapathGraph final_mg;  // metapath graph of the final evaluation
};

// One model evaluation: metapath generation (mode-dependent) + GCN + dense
// layers. Exposed separately from train() so gradient checks can re-run the
// forward with perturbed parameters.
struct ForwardResult {
    MetapathGraph mg;
    MetapathGraph mg1, mg2;  // split halves (split mode only)
    GcnCache gcn1;
    GcnCache gcn2;  // baseline second GCN layer
    Matrix h_gcn;
    Matrix pre_d1;
    Matrix h1;
    Matrix logits;
};

inline ForwardResult model_forward(const HeteroGraph& g, const Matrix& features,
                                   const ScoreTable& table, const ModelState& state,
                                   TrainMode mode, int l, EnumStrategy strategy,
                                   const WalkSet* walks, int workers,
                                   const MetapathGraph* baseline_mg = nullptr) {
    ForwardResult fwd;
    switch (mode) {
        case TrainMode::GcnBaseline:
            fwd.mg = baseline_mg ? *baseline_mg : unit_weight_graph(g);
            break;
        case TrainMode::GgtnVanilla:
            fwd.mg = generate_vanilla(g, table, l, strategy, workers);
            break;
        case TrainMode::GgtnSplit: {
            SplitResult split = generate_split(g, table, l, strategy, workers);
            fwd.mg1 = std::move(split.mg1);
            fwd.mg2 = std::move(split.mg2);
            fwd.mg = std::move(split.mg);
            break;
        }
        case TrainMode::Wgtn: {
            if (!walks) throw std::invalid_argument("model_forward: wgtn mode requires walks");
            fwd.mg = generate_sampled(g, table, *walks, workers);
            break;
        }
    }

    if (mode == TrainMode::GcnBaseline) {
        // 2 GCN layers: hidden layer with ReLU, output layer bare.
        fwd.h_gcn = gcn_forward(fwd.mg, features, state.w_gcn, true, workers, &fwd.gcn1);
        fwd.logits = gcn_forward(fwd.mg, fwd.h_gcn, state.w_dense2, false, workers, &fwd.gcn2);
    } else {
        fwd.h_gcn = gcn_forward(fwd.mg, features, state.w_gcn, true, workers, &fwd.gcn1);
        fwd.pre_d1 = matmul(fwd.h_gcn, state.w_dense1, workers);
        fwd.h1 = fwd.pre_d1;
        for (double& v : fwd.h1.values()) v = v > 0.0 ? v : 0.0;
        fwd.logits = matmul(fwd.h1, state.w_dense2, workers);
    }
    return fwd;
}

// Full backward chain from a gradient on the logits down to every learnable
// tensor, including the regeneration-based score gradient.
inline Gradients model_backward(const HeteroGraph& g, const Matrix& features,
                                const ScoreTable& table, const ModelState& state,
                                const ForwardResult& fwd, const Matrix& d_logits, TrainMode mode,
                                int l, EnumStrategy strategy, const WalkSet* walks, int workers,
                                bool train_scores = true) {
    Gradients grads;
    grads.raw = Matrix(state.score_params.positions(), state.score_params.types());
    grads.w_dense1 = Matrix(state.w_dense1.rows(), state.w_dense1.cols());

    if (mode == TrainMode::GcnBaseline) {
        GcnGrads layer2 = gcn_backward(fwd.mg, fwd.h_gcn, state.w_dense2, fwd.gcn2, d_logits,
                                       false, true, false, workers);
        grads.w_dense2 = std::move(layer2.d_weights);
        GcnGrads layer1 = gcn_backward(fwd.mg, features, state.w_gcn, fwd.gcn1, layer2.d_input,
                                       true, false, false, workers);
        grads.w_gcn = std::move(layer1.d_weights);
        return grads;
    }

    grads.w_dense2 = matmul_transpose_a(fwd.h1, d_logits, workers);
    Matrix d_h1 = matmul_transpose_b(d_logits, state.w_dense2, workers);
    for (std::size_t i = 0; i < d_h1.size(); ++i) {
        if (fwd.pre_d1.values()[i] <= 0.0) d_h1.values()[i] = 0.0;
    }
    grads.w_dense1 = matmul_transpose_a(fwd.h_gcn, d_h1, workers);
    Matrix d_h_gcn = matmul_transpose_b(d_h1, state.w_dense1, workers);

    GcnGrads gcn = gcn_backward(fwd.mg, features, state.w_gcn, fwd.gcn1, d_h_gcn, true, false,
                                train_scores, workers);
    grads.w_gcn = std::move(gcn.d_weights);
    if (!train_scores) return grads;

    Matrix d_table(table.positions(), table.types());
    switch (mode) {
        case TrainMode::GgtnVanilla:
            d_table = backward_scores(g, table, l, fwd.mg, gcn.d_edge_weight, strategy, workers);
            break;
        case TrainMode::GgtnSplit: {
            auto [d_w1, d_w2] =
                compose_backward(fwd.mg1, fwd.mg2, fwd.mg, gcn.d_edge_weight, workers);
            const int first_half = (l + 1) / 2;
            const int second_half = l / 2;
            d_table = backward_scores(g, table, first_half, fwd.mg1, d_w1, strategy, workers, 1);
            d_table += backward_scores(g, table, second_half, fwd.mg2, d_w2, strategy, workers,
                                       first_half + 1);
            break;
        }
        case TrainMode::Wgtn:
            d_table = backward_sampled(table, *walks, fwd.mg, gcn.d_edge_weight, workers);
            break;
        case TrainMode::GcnBaseline:
            break;
    }
    grads.raw = softmax_backward(state.score_params, d_table);
    return grads;
}

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Full training run. The graph is self-edge augmented here if it was not
// already; labels use -1 for unlabeled vertices. An injected score table
// bypasses the softmax and disables score training (debug/golden runs).
inline TrainResult train(const HeteroGraph& g_input, const Matrix& features,
                         std::span<const std::int32_t> labels, std::size_t num_classes,
                         const SplitMasks& masks, const TrainConfig& config,
                         const ScoreTable* injected_table = nullptr,
                         const EpochCallback& callback = {}) {
    validate_config(config);
    if (features.rows() != g_input.num_vertices()) {
        throw std::invalid_argument("train: feature rows != graph vertices");
    }
    if (labels.size() != g_input.num_vertices()) {
        throw std::invalid_argument("train: label count != graph vertices");
    }
    if (masks.train.empty()) throw std::invalid_argument("train: empty train mask");

    const HeteroGraph g = g_input.has_self_edges() ? g_input : add_self_edges(g_input);
    const int l = config.metapath_length();
    const int workers = config.effective_workers();
    const std::size_t num_types = g.num_edge_types();

    if (injected_table) {
        if (injected_table->types() != num_types) {
            throw std::invalid_argument(
                "train: injected score table has " + std::to_string(injected_table->types()) +
                " types but the augmented graph has " + std::to_string(num_types));
        }
        if (injected_table->positions() < static_cast<std::size_t>(l)) {
            throw std::invalid_argument("train: injected score table has too few positions");
        }
    }

    TrainResult result;
    result.state = ModelState::init(features.cols(), config.hidden, num_classes,
                                    static_cast<std::size_t>(l), num_types, config.seed);
    ModelState& state = result.state;
    const bool train_scores = injected_table == nullptr && config.mode != TrainMode::GcnBaseline;

    MetapathGraph baseline_mg;
    if (config.mode == TrainMode::GcnBaseline) baseline_mg = unit_weight_graph(g);

    WalkSet walks;
    const auto t_start = std::chrono::steady_clock::now();
    double total_seconds = 0.0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const ScoreTable table =
            injected_table ? *injected_table : materialize_softmax(state.score_params);
        if (config.mode == TrainMode::Wgtn && (!config.freeze_walks || epoch == 1)) {
            walks = sample_walks(g, table, l, config.num_walks,
                                 mix64(config.seed) + static_cast<std::uint64_t>(epoch), workers);
        }

        ForwardResult fwd = model_forward(g, features, table, state, config.mode, l,
                                          config.strategy, &walks, workers, &baseline_mg);
        CrossEntropyResult ce = cross_entropy(fwd.logits, labels, masks.train);
        Gradients grads = model_backward(g, features, table, state, fwd, ce.d_logits, config.mode,
                                         l, config.strategy, &walks, workers, train_scores);
        adam_step(state, grads, AdamHyper{config.lr});

        EpochMetrics metrics;
        metrics.epoch = epoch;
        metrics.loss = ce.loss;
        metrics.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        total_seconds += metrics.seconds;

        if (epoch == 1 && config.record_first_mg) result.first_mg = fwd.mg;
        // Evaluation uses the epoch's own forward (pre-update parameters); the
        // final state gets a dedicated evaluation after the loop.
        if (epoch % config.eval_every == 0 && !masks.test.empty()) {
            metrics.test_accuracy = accuracy(fwd.logits, labels, masks.test);
        }

        result.epochs.push_back(metrics);
        if (callback) callback(metrics);

        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        if (elapsed > config.timeout_seconds && epoch < config.epochs) {
            result.timed_out = true;
            break;
        }
    }

    // Evaluate the final state (the paper-style "including the last epoch").
    {
        const ScoreTable table =
            injected_table ? *injected_table : materialize_softmax(state.score_params);
        ForwardResult fwd = model_forward(g, features, table, state, config.mode, l,
                                          config.strategy, &walks, workers, &baseline_mg);
        result.final_train_accuracy = accuracy(fwd.logits, labels, masks.train);
        if (!masks.test.empty()) {
            result.final_test_accuracy = accuracy(fwd.logits, labels, masks.test);
            result.epochs.back().test_accuracy = result.final_test_accuracy;
        }
        result.final_mg = std::move(fwd.mg);
    }

    result.peak_test_accuracy = 0.0;
    for (const EpochMetrics& m : result.epochs) {
        if (m.test_accuracy && *m.test_accuracy > result.peak_test_accuracy) {
            result.peak_test_accuracy = *m.test_accuracy;
        }
    }
    result.average_epoch_seconds =
        result.epochs.empty() ? 0.0 : total_seconds / static_cast<double>(result.epochs.size());
    return result;
}

}  // namespace metagtn
