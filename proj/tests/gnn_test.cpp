#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "metagtn/gnn.hpp"
#include "metagtn/train.hpp"
#include "test_util.hpp"

using namespace metagtn;

namespace {

Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

// 20-vertex, two-community fixture that any of the models separates: edges
// stay within a class and features carry a strong per-class shift.
DatasetBundle separable_fixture(std::uint64_t seed) {
    testutil::CommunityOptions opts;
    opts.num_vertices = 20;
    opts.intra_edges = 3;
    opts.cross_edges = 0;
    opts.feature_dim = 4;
    opts.feature_shift = 2.0;
    opts.feature_noise = 0.1;
    return testutil::make_community_dataset(seed, opts);
}

std::vector<VertexId> all_vertices(std::size_t n) {
    std::vector<VertexId> out(n);
    for (std::size_t v = 0; v < n; ++v) out[v] = static_cast<VertexId>(v);
    return out;
}

}  // namespace

TEST_CASE("gcn_forward normalization cancels a lone self-loop weight") {
    MetapathGraph mg = MetapathGraph::from_entries(1, {{0, 0, 5.0}});
    Matrix x(1, 2);
    x(0, 0) = 1.0;
    x(0, 1) = 2.0;
    Matrix out = gcn_forward(mg, x, identity(2));
    CHECK(out(0, 0) == 1.0);
    CHECK(out(0, 1) == 2.0);
}

TEST_CASE("gcn_forward pushes along the edge direction") {
    MetapathGraph mg = MetapathGraph::from_entries(2, {{0, 1, 1.0}});
    Matrix x(2, 2);
    x(0, 0) = 1.0;
    Matrix out = gcn_forward(mg, x, identity(2));
    CHECK(out(1, 0) == 1.0);
    CHECK(out(1, 1) == 0.0);
    CHECK(out(0, 0) == 0.0);
    CHECK(out(0, 1) == 0.0);
}

TEST_CASE("gcn_forward with all-zero weights yields zero") {
    MetapathGraph mg = MetapathGraph::from_entries(3, {{0, 1, 0.0}, {1, 2, 0.0}});
    Matrix x(3, 2, 1.0);
    Matrix out = gcn_forward(mg, x, identity(2));
    for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("gcn_forward validates shapes") {
    MetapathGraph mg = MetapathGraph::from_entries(2, {{0, 1, 1.0}});
    CHECK_THROWS_AS(gcn_forward(mg, Matrix(3, 2), identity(2)), std::invalid_argument);
    CHECK_THROWS_AS(gcn_forward(mg, Matrix(2, 3), identity(2)), std::invalid_argument);
}

TEST_CASE("gcn_backward matches finite differences") {
    SplitMix rng(8);
    const std::size_t n = 6, d = 3, h = 4;
    std::vector<std::tuple<VertexId, VertexId, double>> entries;
    for (int i = 0; i < 14; ++i) {
        entries.emplace_back(static_cast<VertexId>(rng.next_below(n)),
                             static_cast<VertexId>(rng.next_below(n)),
                             rng.next_uniform(0.3, 2.0));
    }
    MetapathGraph mg = MetapathGraph::from_entries(n, entries);
    Matrix x(n, d), w(d, h), d_out(n, h);
    for (double& v : x.values()) v = rng.next_uniform(-1.0, 1.0);
    for (double& v : w.values()) v = rng.next_uniform(-1.0, 1.0);
    for (double& v : d_out.values()) v = rng.next_uniform(-1.0, 1.0);

    auto objective = [&]() {
        Matrix out = gcn_forward(mg, x, w);
        double sum = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) sum += d_out.values()[i] * out.values()[i];
        return sum;
    };

    GcnCache cache;
    gcn_forward(mg, x, w, true, 0, &cache);
    GcnGrads grads = gcn_backward(mg, x, w, cache, d_out, true, true, true);

    Matrix numeric_w = testutil::finite_difference(w, objective);
    CHECK(testutil::max_rel_err(grads.d_weights, numeric_w, 1e-3) < 1e-6);

    Matrix numeric_x = testutil::finite_difference(x, objective);
    CHECK(testutil::max_rel_err(grads.d_input, numeric_x, 1e-3) < 1e-6);

    // Edge weights enter through both the numerator and the degree normalizer.
    Matrix wvec(1, mg.num_edges());
    for (std::size_t e = 0; e < mg.num_edges(); ++e) wvec(0, e) = mg.edge_weight()[e];
    Matrix numeric_e = testutil::finite_difference(wvec, [&]() {
        for (std::size_t e = 0; e < mg.num_edges(); ++e) mg.edge_weight()[e] = wvec(0, e);
        return objective();
    });
    for (std::size_t e = 0; e < mg.num_edges(); ++e) mg.edge_weight()[e] = wvec(0, e);
    Matrix analytic_e(1, mg.num_edges());
    for (std::size_t e = 0; e < mg.num_edges(); ++e) analytic_e(0, e) = grads.d_edge_weight[e];
    CHECK(testutil::max_rel_err(analytic_e, numeric_e, 1e-3) < 1e-6);
}

TEST_CASE("cross_entropy basics") {
    SECTION("probability one on the true class gives zero loss") {
        Matrix logits(1, 2);
        logits(0, 0) = 60.0;
        std::vector<std::int32_t> labels{0};
        std::vector<VertexId> mask{0};
        CHECK(cross_entropy(logits, labels, mask).loss == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("uniform logits over three classes") {
        Matrix logits(2, 3, 0.4);
        std::vector<std::int32_t> labels{1, 2};
        std::vector<VertexId> mask{0, 1};
        CHECK(cross_entropy(logits, labels, mask).loss ==
              Catch::Approx(std::log(3.0)).epsilon(1e-12));
    }
    SECTION("empty mask is rejected") {
        Matrix logits(1, 2);
        std::vector<std::int32_t> labels{0};
        CHECK_THROWS_AS(cross_entropy(logits, labels, {}), std::invalid_argument);
    }
    SECTION("gradient matches finite differences") {
        SplitMix rng(31);
        Matrix logits(4, 3);
        for (double& v : logits.values()) v = rng.next_uniform(-2.0, 2.0);
        std::vector<std::int32_t> labels{2, 0, 1, 1};
        std::vector<VertexId> mask{0, 2, 3};
        CrossEntropyResult ce = cross_entropy(logits, labels, mask);
        Matrix numeric = testutil::finite_difference(
            logits, [&]() { return cross_entropy(logits, labels, mask).loss; });
        CHECK(testutil::max_rel_err(ce.d_logits, numeric, 1e-4) < 1e-6);
    }
}

TEST_CASE("adam_step behavior") {
    SECTION("zero gradient leaves parameters, advances the step") {
        ModelState s = ModelState::init(2, 3, 2, 2, 2, 5);
        ModelState before = s;
        Gradients g{Matrix(2, 2), Matrix(2, 3), Matrix(3, 3), Matrix(3, 2)};
        adam_step(s, g);
        CHECK(s.step == 1);
        CHECK(s.w_gcn.values() == before.w_gcn.values());
        CHECK(s.score_params.raw.values() == before.score_params.raw.values());
    }
    SECTION("first step moves by ~lr in the gradient's sign") {
        ModelState s = ModelState::init(1, 1, 1, 1, 1, 5);
        s.w_gcn(0, 0) = 0.5;
        Gradients g{Matrix(1, 1), Matrix(1, 1), Matrix(1, 1), Matrix(1, 1)};
        g.w_gcn(0, 0) = 3.7;
        adam_step(s, g);
        CHECK(s.w_gcn(0, 0) == Catch::Approx(0.5 - 0.01).epsilon(1e-6));
        g.w_gcn(0, 0) = -0.2;
        ModelState s2 = ModelState::init(1, 1, 1, 1, 1, 5);
        s2.w_gcn(0, 0) = 0.5;
        adam_step(s2, g);
        CHECK(s2.w_gcn(0, 0) == Catch::Approx(0.5 + 0.01).epsilon(1e-6));
    }
    SECTION("descends a quadratic") {
        ModelState s = ModelState::init(1, 1, 1, 1, 1, 5);
        s.w_gcn(0, 0) = 1.0;
        Gradients g{Matrix(1, 1), Matrix(1, 1), Matrix(1, 1), Matrix(1, 1)};
        double prev = 1.0;
        for (int i = 0; i < 100; ++i) {
            g.w_gcn(0, 0) = 2.0 * s.w_gcn(0, 0);
            adam_step(s, g);
            if (i > 10) CHECK(std::fabs(s.w_gcn(0, 0)) <= std::fabs(prev) + 1e-12);
            prev = s.w_gcn(0, 0);
        }
        CHECK(std::fabs(s.w_gcn(0, 0)) < 0.5);
    }
}

TEST_CASE("model_forward with zero weights gives uniform predictions") {
    DatasetBundle data = separable_fixture(3);
    HeteroGraph g = add_self_edges(data.graph);
    ModelState state = ModelState::init(data.features.cols(), 8, 2, 3, g.num_edge_types(), 1);
    state.w_gcn.fill(0.0);
    state.w_dense1.fill(0.0);
    state.w_dense2.fill(0.0);
    ScoreTable table = materialize_softmax(state.score_params);
    ForwardResult fwd = model_forward(g, data.features, table, state, TrainMode::GgtnVanilla, 2,
                                      EnumStrategy::LevelByLevel, nullptr, 1);
    for (double v : fwd.logits.values()) CHECK(v == 0.0);
}

TEST_CASE("model_forward matches a hand-computed single-vertex pipeline") {
    HeteroGraph g = add_self_edges(build_graph({}, 1, 1));
    ModelState state = ModelState::init(2, 2, 2, 1, 2, 1);
    state.w_gcn = identity(2);
    state.w_dense1 = Matrix(2, 2);
    state.w_dense1(0, 0) = 1.0;
    state.w_dense1(0, 1) = 1.0;
    state.w_dense1(1, 1) = 1.0;
    state.w_dense2 = Matrix(2, 2);
    state.w_dense2(0, 0) = 2.0;
    state.w_dense2(1, 0) = -1.0;
    state.w_dense2(1, 1) = 1.0;
    Matrix x(1, 2);
    x(0, 0) = 1.0;
    x(0, 1) = 2.0;
    ScoreTable table{Matrix(1, 2, 1.0)};
    ForwardResult fwd = model_forward(g, x, table, state, TrainMode::GgtnVanilla, 1,
                                      EnumStrategy::LevelByLevel, nullptr, 1);
    // agg = [1,2] (self-loop, normalization cancels); h_gcn = [1,2];
    // pre_d1 = [1, 1+2] = [1,3]; logits = [1*2-3, 3] = [-1, 3].
    CHECK(fwd.logits(0, 0) == Catch::Approx(-1.0));
    CHECK(fwd.logits(0, 1) == Catch::Approx(3.0));
}

namespace {

// Shared fixture for the end-to-end gradient checks.
struct GradCheckSetup {
    HeteroGraph g;
    DatasetBundle data;
    ModelState state;
    WalkSet walks;
    int l = 3;

    explicit GradCheckSetup(TrainMode mode, std::uint64_t seed) {
        testutil::CommunityOptions opts;
        opts.num_vertices = 12;
        opts.intra_edges = 2;
        opts.cross_edges = 1;
        opts.feature_dim = 3;
        data = testutil::make_community_dataset(seed, opts);
        g = add_self_edges(data.graph);
        state = ModelState::init(data.features.cols(), 5, data.num_classes, l,
                                 g.num_edge_types(), seed + 1);
        if (mode == TrainMode::Wgtn) {
            walks = sample_walks(g, materialize_softmax(state.score_params), l, 6, seed + 2);
        }
    }

    double loss(TrainMode mode) {
        ScoreTable table = materialize_softmax(state.score_params);
        ForwardResult fwd = model_forward(g, data.features, table, state, mode, l,
                                          EnumStrategy::LevelByLevel, &walks, 1);
        return cross_entropy(fwd.logits, data.labels, data.masks.train).loss;
    }

    Gradients analytic(TrainMode mode) {
        ScoreTable table = materialize_softmax(state.score_params);
        ForwardResult fwd = model_forward(g, data.features, table, state, mode, l,
                                          EnumStrategy::LevelByLevel, &walks, 1);
        CrossEntropyResult ce = cross_entropy(fwd.logits, data.labels, data.masks.train);
        return model_backward(g, data.features, table, state, fwd, ce.d_logits, mode, l,
                              EnumStrategy::LevelByLevel, &walks, 1);
    }
};

}  // namespace

TEST_CASE("end-to-end gradients match finite differences in every mode") {
    const TrainMode modes[] = {TrainMode::GgtnVanilla, TrainMode::GgtnSplit, TrainMode::Wgtn};
    for (TrainMode mode : modes) {
        GradCheckSetup setup(mode, 17);
        Gradients grads = setup.analytic(mode);
        auto objective = [&]() { return setup.loss(mode); };

        Matrix numeric_raw =
            testutil::finite_difference(setup.state.score_params.raw, objective, 1e-5);
        CHECK(testutil::max_rel_err(grads.raw, numeric_raw, 1e-3) < 1e-4);

        Matrix numeric_gcn = testutil::finite_difference(setup.state.w_gcn, objective, 1e-5);
        CHECK(testutil::max_rel_err(grads.w_gcn, numeric_gcn, 1e-3) < 1e-4);

        Matrix numeric_d1 = testutil::finite_difference(setup.state.w_dense1, objective, 1e-5);
        CHECK(testutil::max_rel_err(grads.w_dense1, numeric_d1, 1e-3) < 1e-4);

        Matrix numeric_d2 = testutil::finite_difference(setup.state.w_dense2, objective, 1e-5);
        CHECK(testutil::max_rel_err(grads.w_dense2, numeric_d2, 1e-3) < 1e-4);
    }
}

TEST_CASE("baseline GCN gradients match finite differences") {
    GradCheckSetup setup(TrainMode::GcnBaseline, 23);
    Gradients grads = setup.analytic(TrainMode::GcnBaseline);
    auto objective = [&]() { return setup.loss(TrainMode::GcnBaseline); };
    Matrix numeric_gcn = testutil::finite_difference(setup.state.w_gcn, objective, 1e-5);
    CHECK(testutil::max_rel_err(grads.w_gcn, numeric_gcn, 1e-3) < 1e-4);
    Matrix numeric_d2 = testutil::finite_difference(setup.state.w_dense2, objective, 1e-5);
    CHECK(testutil::max_rel_err(grads.w_dense2, numeric_d2, 1e-3) < 1e-4);
    for (double v : grads.raw.values()) CHECK(v == 0.0);
}

TEST_CASE("vanilla and split training trajectories coincide") {
    DatasetBundle data = separable_fixture(7);
    TrainConfig config;
    config.transformer_layers = 2;  // l = 3, exercises the odd split
    config.epochs = 10;
    config.seed = 42;
    config.deterministic = true;
    config.eval_every = 5;

    config.mode = TrainMode::GgtnVanilla;
    TrainResult vanilla =
        train(data.graph, data.features, data.labels, data.num_classes, data.masks, config);
    config.mode = TrainMode::GgtnSplit;
    TrainResult split =
        train(data.graph, data.features, data.labels, data.num_classes, data.masks, config);

    REQUIRE(vanilla.epochs.size() == split.epochs.size());
    for (std::size_t e = 0; e < vanilla.epochs.size(); ++e) {
        CHECK(std::fabs(vanilla.epochs[e].loss - split.epochs[e].loss) < 1e-7);
    }
}

TEST_CASE("training is bitwise deterministic in deterministic mode") {
    DatasetBundle data = separable_fixture(11);
    TrainConfig config;
    config.mode = TrainMode::Wgtn;
    config.num_walks = 5;
    config.transformer_layers = 2;
    config.epochs = 6;
    config.seed = 9;
    config.deterministic = true;
    TrainResult a =
        train(data.graph, data.features, data.labels, data.num_classes, data.masks, config);
    TrainResult b =
        train(data.graph, data.features, data.labels, data.num_classes, data.masks, config);
    REQUIRE(a.epochs.size() == b.epochs.size());
    for (std::size_t e = 0; e < a.epochs.size(); ++e) {
        CHECK(a.epochs[e].loss == b.epochs[e].loss);
    }
}

TEST_CASE("baseline GCN fits the separable fixture") {
    DatasetBundle data = separable_fixture(5);
    SplitMasks masks;
    masks.train = all_vertices(20);
    masks.test = all_vertices(20);
    TrainConfig config;
    config.mode = TrainMode::GcnBaseline;
    config.epochs = 50;
    config.seed = 3;
    config.deterministic = true;
    TrainResult result =
        train(data.graph, data.features, data.labels, data.num_classes, masks, config);
    CHECK(result.final_train_accuracy == 1.0);
}

TEST_CASE("frozen-walk training makes monotone progress on the separable fixture") {
    DatasetBundle data = separable_fixture(13);
    TrainConfig config;
    config.mode = TrainMode::Wgtn;
    config.num_walks = 8;
    config.freeze_walks = true;
    config.transformer_layers = 2;
    config.epochs = 10;
    config.seed = 21;
    config.deterministic = true;
    TrainResult result =
        train(data.graph, data.features, data.labels, data.num_classes, data.masks, config);
    for (std::size_t e = 1; e < result.epochs.size(); ++e) {
        CHECK(result.epochs[e].loss <= result.epochs[e - 1].loss + 1e-12);
    }
}

TEST_CASE("loss stays finite and predictions are normalized") {
    DatasetBundle data = separable_fixture(29);
    TrainConfig config;
    config.mode = TrainMode::GgtnSplit;
    config.transformer_layers = 3;
    config.epochs = 12;
    config.seed = 2;
    config.deterministic = true;
    std::vector<double> losses;
    TrainResult result = train(data.graph, data.features, data.labels, data.num_classes,
                               data.masks, config, nullptr,
                               [&](const EpochMetrics& m) { losses.push_back(m.loss); });
    REQUIRE(losses.size() == 12);
    for (double loss : losses) CHECK(std::isfinite(loss));

    // Softmax of the final logits must be a distribution per row.
    HeteroGraph g = add_self_edges(data.graph);
    ScoreTable table = materialize_softmax(result.state.score_params);
    ForwardResult fwd = model_forward(g, data.features, table, result.state, config.mode, 4,
                                      EnumStrategy::LevelByLevel, nullptr, 1);
    for (std::size_t v = 0; v < fwd.logits.rows(); ++v) {
        const auto row = fwd.logits.row(v);
        const double m = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double x : row) sum += std::exp(x - m);
        double total = 0.0;
        for (double x : row) total += std::exp(x - m) / sum;
        CHECK(std::fabs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("config validation rejects inconsistent settings") {
    DatasetBundle data = separable_fixture(1);
    TrainConfig config;
    config.mode = TrainMode::Wgtn;
    config.num_walks = 0;
    CHECK_THROWS_AS(
        train(data.graph, data.features, data.labels, data.num_classes, data.masks, config),
        std::invalid_argument);
    config.mode = TrainMode::GgtnVanilla;
    config.epochs = 0;
    CHECK_THROWS_AS(
        train(data.graph, data.features, data.labels, data.num_classes, data.masks, config),
        std::invalid_argument);
    config.epochs = 1;
    SplitMasks empty;
    CHECK_THROWS_AS(
        train(data.graph, data.features, data.labels, data.num_classes, empty, config),
        std::invalid_argument);
}

TEST_CASE("timeout stops the run and flags it") {
    DatasetBundle data = separable_fixture(2);
    TrainConfig config;
    config.mode = TrainMode::GgtnVanilla;
    config.transformer_layers = 2;
    config.epochs = 100000;
    config.timeout_seconds = 0.05;
    config.seed = 1;
    TrainResult result =
        train(data.graph, data.features, data.labels, data.num_classes, data.masks, config);
    CHECK(result.timed_out);
    CHECK(result.epochs.size() < 100000);
}
