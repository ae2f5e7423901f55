#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rsc/runner.hpp"

using namespace rsc;

TEST_CASE("eval_k_expr grammar") {
    CHECK(eval_k_expr("n", 5) == 5);
    CHECK(eval_k_expr("n-1", 5) == 4);
    CHECK(eval_k_expr("n+1", 5) == 6);
    CHECK(eval_k_expr("2n", 5) == 10);
    CHECK(eval_k_expr("8n", 4) == 32);
    CHECK(eval_k_expr("12", 5) == 12);
    CHECK(eval_k_expr("2n+3", 4) == 11);
    CHECK_THROWS_AS(eval_k_expr("kn", 5), ParseError);
    CHECK_THROWS_AS(eval_k_expr("", 5), ParseError);
}

TEST_CASE("result csv round trips quoted fields") {
    ResultRow row;
    row.experiment_id = "tomita5_gru_h8_s1";
    row.language = "tomita5";
    row.num_states = 4;
    row.alphabet_size = 2;
    row.arch = "gru";
    row.layers = 1;
    row.hidden_size = 8;
    row.seed = 1;
    row.rnn_accuracy = 0.9975;
    row.method = "kmeans";
    row.params = "k=8";
    row.num_clusters = 8;
    row.amb = 0.125;
    row.wamb = 0.0625;
    row.perfect = false;
    row.runtime_ms = 42;
    row.error = "accuracy below cutoff, \"line\none\"";

    auto path = std::filesystem::temp_directory_path() / "rsc_test_rows.csv";
    {
        std::ofstream out(path);
        out << result_csv_header() << "\n" << result_csv_line(row) << "\n";
    }
    auto rows = parse_result_csv(path.string());
    std::filesystem::remove(path);
    REQUIRE(rows.size() == 1);
    const auto& r = rows[0];
    CHECK(r.experiment_id == row.experiment_id);
    CHECK(r.rnn_accuracy == doctest::Approx(row.rnn_accuracy));
    CHECK(r.params == row.params);
    CHECK(r.wamb == doctest::Approx(row.wamb));
    CHECK(r.perfect == row.perfect);
    CHECK(r.error == row.error);
}

TEST_CASE("config parsing applies defaults and overrides") {
    auto cfg = parse_config(R"({
        "languages": [{"builtin": "tomita5"}, {"random": {"states": 6, "seed": 3}}],
        "archs": ["elman_tanh"],
        "sizes": [{"factor": 2.0, "layers": 2}],
        "seeds": [7],
        "accuracy_cutoff": 0.9,
        "clustering": {"kmeans_k": ["n", "2n"], "dbscan_eps": [0.5]}
    })");
    REQUIRE(cfg.languages.size() == 2);
    CHECK(cfg.languages[0].builtin == "tomita5");
    CHECK(cfg.languages[1].random_states == 6);
    REQUIRE(cfg.archs.size() == 1);
    CHECK(cfg.archs[0] == Arch::ElmanTanh);
    CHECK(cfg.sizes[0].factor == 2.0);
    CHECK(cfg.sizes[0].layers == 2);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{7});
    CHECK(cfg.accuracy_cutoff == 0.9);
    CHECK(cfg.clustering.kmeans_k == std::vector<std::string>{"n", "2n"});
    CHECK(cfg.clustering.dbscan_eps == std::vector<double>{0.5});
    // untouched fields keep their defaults
    CHECK(cfg.train.learning_rate == 0.0005);
    CHECK(cfg.data.max_len == 15);
}

TEST_CASE("resolve_language") {
    LanguageSpec b;
    b.builtin = "tomita7";
    CHECK(resolve_language(b).num_states == 4);
    LanguageSpec r;
    r.random_states = 5;
    r.random_seed = 11;
    auto m = resolve_language(r);
    CHECK(m.num_states == 5);
    LanguageSpec bad;
    CHECK_THROWS(resolve_language(bad));
}

TEST_CASE("aggregate summarizes per method and parameter cell") {
    std::vector<ResultRow> rows(4);
    for (auto& r : rows) {
        r.method = "kmeans";
        r.params = "k=8";
    }
    rows[0].wamb = 0.0;
    rows[0].perfect = true;
    rows[1].wamb = 0.2;
    rows[2].wamb = 0.4;
    rows[3].method = "dbscan";
    rows[3].params = "eps=0.5";
    rows[3].perfect = true;
    // an errored row must not contribute
    ResultRow bad;
    bad.method = "kmeans";
    bad.params = "k=8";
    bad.wamb = 99;
    bad.error = "accuracy below cutoff";
    rows.push_back(bad);

    auto agg = aggregate(rows);
    REQUIRE(agg.size() == 2);
    const AggregateRow* km = nullptr;
    for (const auto& a : agg)
        if (a.method == "kmeans") km = &a;
    REQUIRE(km);
    CHECK(km->count == 3);
    CHECK(km->wamb_mean == doctest::Approx(0.2));
    CHECK(km->wamb_max == doctest::Approx(0.4));
    CHECK(km->perfect_count == 1);
    auto text = format_report(agg);
    CHECK(text.find("kmeans") != std::string::npos);
    CHECK(text.find("dbscan") != std::string::npos);
}

TEST_CASE("tiny construction sweep produces a canonical results file") {
    ExperimentConfig cfg;
    LanguageSpec lang;
    lang.builtin = "tomita7";
    cfg.languages = {lang};
    cfg.seeds = {1};
    cfg.construction_presets = {{2.0, 2.0, 0.0}};
    cfg.retrain_after_perturb = false;
    cfg.data.n_total = 240;
    cfg.data.max_len = 12;
    cfg.clustering.kmeans_k = {"2n"};
    cfg.clustering.dbscan_eps = {0.5};
    cfg.clustering.optics = false;
    cfg.clustering.mean_shift_divisors = {};
    cfg.classifiers = {"logreg"};
    cfg.output_dir =
        (std::filesystem::temp_directory_path() / "rsc_test_run").string();
    std::filesystem::remove_all(cfg.output_dir);

    auto rows = run_experiment(cfg);
    CHECK(rows.size() == 3);  // kmeans + dbscan + logreg
    for (const auto& r : rows) {
        CAPTURE(r.method);
        CHECK(r.error.empty());
        CHECK(r.language == "tomita7");
        CHECK(r.rnn_accuracy == doctest::Approx(1.0));
        if (r.method == "dbscan" || r.method == "logreg") CHECK(r.perfect);
    }
    auto on_disk = parse_result_csv(cfg.output_dir + "/results.csv");
    REQUIRE(on_disk.size() == rows.size());
    // canonical order: sorted by (experiment_id, method, params)
    for (std::size_t i = 1; i < on_disk.size(); ++i) {
        auto key = [](const ResultRow& r) {
            return std::tie(r.experiment_id, r.method, r.params);
        };
        CHECK(key(on_disk[i - 1]) <= key(on_disk[i]));
    }
    std::filesystem::remove_all(cfg.output_dir);
}
