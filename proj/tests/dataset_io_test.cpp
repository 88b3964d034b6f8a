#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "metagtn/dataset_io.hpp"
#include "test_util.hpp"

using namespace metagtn;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = METAGTN_FIXTURE_DIR;

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() /
                     ("metagtn_test_" + std::to_string(SplitMix(::getpid()).next_u64()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void copy_fixture(const fs::path& from, const fs::path& to) {
    fs::create_directories(to);
    for (const auto& entry : fs::directory_iterator(from)) {
        fs::copy_file(entry.path(), to / entry.path().filename());
    }
}

}  // namespace

TEST_CASE("the shipped five-vertex fixture loads") {
    DatasetBundle bundle = load_dataset(kFixtures / "fig1");
    CHECK(bundle.graph.num_vertices() == 5);
    CHECK(bundle.graph.num_edges() == 5);
    CHECK(bundle.graph.num_edge_types() == 2);
    CHECK(bundle.num_classes == 2);
    CHECK(bundle.feature_dim == 4);
    CHECK(bundle.features.rows() == 5);
    CHECK(bundle.masks.train.size() == 3);
    CHECK(bundle.masks.val.size() == 1);
    CHECK(bundle.masks.test.size() == 1);
    REQUIRE(bundle.injected_scores.has_value());
    CHECK(bundle.injected_scores->rows() == 2);
    CHECK(bundle.injected_scores->cols() == 3);
    CHECK((*bundle.injected_scores)(0, 0) == 2.0);
}

TEST_CASE("empty edge file yields an edgeless graph") {
    TempDir tmp;
    copy_fixture(kFixtures / "fig1", tmp.path);
    std::ofstream(tmp.path / "edges.tsv").close();
    DatasetBundle bundle = load_dataset(tmp.path);
    CHECK(bundle.graph.num_vertices() == 5);
    CHECK(bundle.graph.num_edges() == 0);
}

TEST_CASE("loader errors carry file and line information") {
    SECTION("missing manifest") {
        TempDir tmp;
        CHECK_THROWS_WITH(load_dataset(tmp.path),
                          Catch::Matchers::ContainsSubstring("manifest.json"));
    }
    SECTION("missing directory") {
        CHECK_THROWS_WITH(load_dataset("/nonexistent/nowhere"),
                          Catch::Matchers::ContainsSubstring("not found"));
    }
    SECTION("edge referencing an undeclared vertex names the line") {
        TempDir tmp;
        copy_fixture(kFixtures / "fig1", tmp.path);
        std::ofstream out(tmp.path / "edges.tsv", std::ios::app);
        out << "0\t9\t0\n";
        out.close();
        CHECK_THROWS_WITH(load_dataset(tmp.path),
                          Catch::Matchers::ContainsSubstring("line 6") &&
                              Catch::Matchers::ContainsSubstring("dst 9 out of range"));
    }
    SECTION("malformed edge line") {
        TempDir tmp;
        copy_fixture(kFixtures / "fig1", tmp.path);
        std::ofstream out(tmp.path / "edges.tsv");
        out << "zero\t1\t0\n";
        out.close();
        CHECK_THROWS_WITH(load_dataset(tmp.path),
                          Catch::Matchers::ContainsSubstring("line 1") &&
                              Catch::Matchers::ContainsSubstring("malformed"));
    }
    SECTION("feature row count mismatch") {
        TempDir tmp;
        copy_fixture(kFixtures / "fig1", tmp.path);
        std::ofstream out(tmp.path / "features.tsv");
        out << "1 2 3 4\n";
        out.close();
        CHECK_THROWS_WITH(load_dataset(tmp.path),
                          Catch::Matchers::ContainsSubstring("feature rows"));
    }
    SECTION("split of an unlabeled vertex is rejected") {
        TempDir tmp;
        copy_fixture(kFixtures / "fig1", tmp.path);
        std::ofstream out(tmp.path / "labels.tsv");
        out << "0\t0\n";  // only vertex 0 labeled, splits still mention 1..4
        out.close();
        CHECK_THROWS_WITH(load_dataset(tmp.path),
                          Catch::Matchers::ContainsSubstring("no label"));
    }
}

TEST_CASE("save and reload round-trips a bundle") {
    DatasetBundle bundle = load_dataset(kFixtures / "fig1");
    TempDir tmp;
    save_dataset(bundle, tmp.path / "copy");
    DatasetBundle again = load_dataset(tmp.path / "copy");
    CHECK(again.graph.num_vertices() == bundle.graph.num_vertices());
    CHECK(again.graph.out_index() == bundle.graph.out_index());
    CHECK(again.graph.edge_dst() == bundle.graph.edge_dst());
    CHECK(again.graph.edge_type() == bundle.graph.edge_type());
    CHECK(again.features.values() == bundle.features.values());
    CHECK(again.labels == bundle.labels);
    CHECK(again.masks.train == bundle.masks.train);
    CHECK(again.masks.val == bundle.masks.val);
    CHECK(again.masks.test == bundle.masks.test);
    REQUIRE(again.injected_scores.has_value());
    CHECK(again.injected_scores->values() == bundle.injected_scores->values());
}

TEST_CASE("synthetic generation fills the documented values") {
    HeteroGraph g = random_graph(100, 400, 1, 9);
    DatasetBundle bundle = generate_synthetic(g, 4);
    CHECK(bundle.features.rows() == 100);
    CHECK(bundle.features.cols() == 50);
    for (double v : bundle.features.values()) CHECK(v == 2.0);
    CHECK(bundle.graph.num_edge_types() == 4);  // single-type input gets retyped
    CHECK(bundle.num_classes == 3);
    for (std::int32_t label : bundle.labels) {
        CHECK(label >= 0);
        CHECK(label < 3);
    }
    CHECK(bundle.masks.train.size() == 20);
    CHECK(bundle.masks.val.size() == 10);
    CHECK(bundle.masks.test.size() == 70);
}

TEST_CASE("synthetic generation is a pure function of graph and seed") {
    HeteroGraph g = random_graph(60, 200, 1, 14);
    DatasetBundle a = generate_synthetic(g, 77);
    DatasetBundle b = generate_synthetic(g, 77);
    CHECK(a.labels == b.labels);
    CHECK(a.masks.train == b.masks.train);
    CHECK(a.graph.edge_type() == b.graph.edge_type());
    DatasetBundle c = generate_synthetic(g, 78);
    CHECK((a.labels != c.labels || a.masks.train != c.masks.train));
}

TEST_CASE("typed graphs keep their types unless told otherwise") {
    HeteroGraph g = random_graph(40, 150, 3, 5);
    DatasetBundle keep = generate_synthetic(g, 2);
    CHECK(keep.graph.edge_type() == g.edge_type());
    SyntheticOptions opts;
    opts.randomize_edge_types = true;
    DatasetBundle retyped = generate_synthetic(g, 2, opts);
    CHECK(retyped.graph.num_edge_types() == 4);
}

TEST_CASE("metrics lines and reports carry the documented fields") {
    DatasetBundle bundle = load_dataset(kFixtures / "fig1");
    TrainConfig config;
    config.mode = TrainMode::GgtnSplit;
    config.transformer_layers = 1;
    config.epochs = 2;
    config.eval_every = 1;
    config.deterministic = true;
    config.record_first_mg = true;
    ScoreTable injected{*bundle.injected_scores};
    TrainResult result = train(bundle.graph, bundle.features, bundle.labels, bundle.num_classes,
                               bundle.masks, config, &injected);

    const std::string line = format_metrics_line(result.epochs.front());
    CHECK(line.find('\t') != std::string::npos);
    CHECK(line.substr(0, 2) == "1\t");

    nlohmann::json report = make_report(config, bundle, result, true);
    CHECK(report["config"]["mode"] == "ggtn-split");
    CHECK(report["config"]["metapath_length"] == 2);
    CHECK(report["config"]["seed"] == config.seed);
    CHECK(report["config"]["num_walks"] == 0);
    CHECK(report["epochs"].size() == 2);
    for (const auto& e : report["epochs"]) {
        CHECK(e.contains("loss"));
        CHECK(e.contains("seconds"));
    }
    CHECK(report.contains("peak_test_accuracy"));
    CHECK(report.contains("average_epoch_seconds"));
    CHECK(report.contains("timed_out"));
    REQUIRE(report.contains("mg_dump"));

    // The injected-score run reproduces the worked-example weights in the dump.
    double ac = -1.0, ae = -1.0;
    for (const auto& entry : report["mg_dump"]) {
        if (entry[0] == 0 && entry[1] == 2) ac = entry[2];
        if (entry[0] == 0 && entry[1] == 4) ae = entry[2];
    }
    CHECK(ac == 7.0);
    CHECK(ae == 2.0);
}
