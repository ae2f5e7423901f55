#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsc/automata.hpp"
#include "rsc/cluster.hpp"
#include "rsc/construct.hpp"
#include "rsc/data.hpp"
#include "rsc/train.hpp"

namespace rsc {

// How an experiment names its ground-truth machine: exactly one of the three
// options is set.
struct LanguageSpec {
    std::string name;             // row label; defaults to builtin/file/random tag
    std::string builtin;          // tomita3 / tomita5 / tomita7
    std::string file;             // automata file path
    int random_states = 0;        // > 0: generate_random DFA
    int random_alphabet = 2;
    std::uint64_t random_seed = 0;
};

FiniteStateMachine resolve_language(const LanguageSpec& spec);

struct SizeSpec {
    // hidden size = max(1, round(factor * n)) with n = |Q|*|Sigma|, the
    // transition count; one layer of n units suffices to encode the automaton
    double factor = 1.0;
    int layers = 1;
};

struct DataParams {
    std::size_t n_total = 12000;  // 10k train + 2k validation at 1/6
    int min_len = 1;
    int max_len = 15;
    double val_fraction = 1.0 / 6.0;
};

// Parameter grids swept per trained RNN. k-means sizes are expressions in
// n = |Q| ("n-1", "2n", ...); mean shift bandwidths are alpha / divisor.
struct ClusteringGrid {
    std::vector<std::string> kmeans_k = {"n-1", "n", "n+1", "2n", "4n", "6n", "8n"};
    std::vector<double> dbscan_eps = {0.25, 0.5, 1.0, 1.5, 2.0};
    bool optics = true;
    std::vector<double> mean_shift_divisors = {1.0, 2.0, 4.0, 8.0};
    double subsample_fraction = 0.25;  // applied to optics and mean shift
};

// "n-1", "n", "n+1", "2n", ... evaluated at a concrete n.
int eval_k_expr(const std::string& expr, int n);

struct ExperimentConfig {
    std::vector<LanguageSpec> languages;
    std::vector<Arch> archs = {Arch::Gru, Arch::ElmanTanh};
    std::vector<SizeSpec> sizes = {{1.0, 1}};
    std::vector<std::uint64_t> seeds = {1, 2};
    TrainConfig train;
    DataParams data;
    ClusteringGrid clustering;
    std::vector<std::string> classifiers = {"lda", "logreg"};
    // Nonempty: construct-and-perturb instead of training from scratch.
    std::vector<ConstructionParams> construction_presets;
    bool retrain_after_perturb = true;
    bool extract_automata = false;
    double accuracy_cutoff = 0.8;
    std::string output_dir = "out";
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct ResultRow {
    std::string experiment_id;
    std::string language;
    int num_states = 0;
    int alphabet_size = 0;
    std::string arch;
    int layers = 0;
    int hidden_size = 0;
    std::uint64_t seed = 0;
    double rnn_accuracy = 0.0;
    std::string method;
    std::string params;
    int num_clusters = 0;
    double amb = 0.0;
    double wamb = 0.0;
    bool perfect = false;
    long runtime_ms = 0;
    std::string error;  // nonempty: the cell failed and the metrics are void
};

std::string result_csv_header();
std::string result_csv_line(const ResultRow& row);
std::vector<ResultRow> parse_result_csv(const std::string& path);

// Full sweep: each (language, arch, size, seed) trains or constructs one RNN;
// every surviving RNN is probed and handed to every classifier / clustering
// cell in the grid. Rows are appended to <output_dir>/results.csv as they are
// produced and the file is rewritten in canonical order at the end.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

struct CurvePoint {
    int epoch = 0;
    double accuracy = 0.0;
    double wamb = 0.0;
};

struct CurveResult {
    std::vector<CurvePoint> points;
    std::optional<double> spearman_rho;  // unset when either series is constant
};

// Per-epoch checkpoints probed with k-means k = 8|Q|; the returned model is
// the trained one.
CurveResult track_training_curve(const FiniteStateMachine& machine, Arch arch,
                                 const SizeSpec& size, const DataParams& data,
                                 TrainConfig train_config, RnnModel* trained_out = nullptr);

void save_curve_tsv(const CurveResult& curve, const std::string& path);

struct AggregateRow {
    std::string method;
    std::string params;
    std::size_t count = 0;
    double amb_mean = 0.0, amb_std = 0.0, amb_max = 0.0;
    double wamb_mean = 0.0, wamb_std = 0.0, wamb_max = 0.0;
    double clusters_mean = 0.0, clusters_std = 0.0;
    int clusters_max = 0;
    std::size_t perfect_count = 0;
};

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);
std::string format_report(const std::vector<AggregateRow>& rows);

}  // namespace rsc
