// Command-line front end: gen, train, construct, probe, cluster, classify,
// extract, curve, report, run.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rsc/automata.hpp"
#include "rsc/cluster.hpp"
#include "rsc/construct.hpp"
#include "rsc/data.hpp"
#include "rsc/extract.hpp"
#include "rsc/metrics.hpp"
#include "rsc/prng.hpp"
#include "rsc/probe.hpp"
#include "rsc/rnn.hpp"
#include "rsc/runner.hpp"
#include "rsc/separability.hpp"
#include "rsc/train.hpp"

namespace {

rsc::FiniteStateMachine machine_from_flags(const std::string& builtin, const std::string& file) {
    if (!builtin.empty() && !file.empty())
        throw rsc::Error("give either --builtin or --machine, not both");
    if (!builtin.empty()) {
        auto m = rsc::builtin_machine(builtin);
        if (!m) throw rsc::Error("unknown builtin '" + builtin + "'");
        return *m;
    }
    if (!file.empty()) return rsc::load_machine(file);
    throw rsc::Error("one of --builtin or --machine is required");
}

Eigen::VectorXd load_vector(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw rsc::Error("cannot open '" + path + "'");
    std::vector<double> vals;
    std::string tok;
    while (f >> tok) vals.push_back(std::strtod(tok.c_str(), nullptr));
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
    return v;
}

void save_vector(const Eigen::VectorXd& v, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw rsc::Error("cannot open '" + path + "' for writing");
    char buf[40];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%a\n", v[i]);
        f << buf;
    }
}

std::vector<int> load_labels(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw rsc::Error("cannot open '" + path + "'");
    std::vector<int> labels;
    std::size_t idx;
    int label;
    while (f >> idx >> label) labels.push_back(label);
    return labels;
}

void save_labels(const std::vector<int>& labels, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw rsc::Error("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < labels.size(); ++i) f << i << '\t' << labels[i] << '\n';
}

std::vector<rsc::Word> dataset_words(const rsc::LabeledDataset& d, const std::string& split) {
    std::vector<rsc::Word> words;
    std::size_t begin = split == "val" ? d.split_index : 0;
    std::size_t end = split == "train" ? d.split_index : d.entries.size();
    for (std::size_t i = begin; i < end; ++i) words.push_back(d.entries[i].word);
    return words;
}

void print_metrics(const rsc::MetricsRecord& m) {
    std::printf("num_clusters\t%d\n", m.num_clusters);
    std::printf("num_points\t%zu\n", m.num_points);
    std::printf("amb\t%.17g\n", m.amb);
    std::printf("wamb\t%.17g\n", m.wamb);
    std::printf("perfect\t%s\n", m.perfect ? "true" : "false");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RNN hidden-state clustering toolkit"};
    app.require_subcommand(1);

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "Generate or export a ground-truth machine");
    std::string gen_builtin, gen_out, gen_dot;
    int gen_states = 0, gen_alphabet = 2, gen_outputs = 2;
    std::uint64_t gen_seed = 0;
    bool gen_moore = false;
    gen->add_option("--builtin", gen_builtin, "tomita3 / tomita5 / tomita7");
    gen->add_option("--states", gen_states, "random machine: number of states");
    gen->add_option("--alphabet", gen_alphabet, "random machine: alphabet size");
    gen->add_option("--outputs", gen_outputs, "random Moore machine: output count");
    gen->add_flag("--moore", gen_moore, "generate a Moore machine instead of a DFA");
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--out", gen_out, "output machine file")->required();
    gen->add_option("--dot", gen_dot, "also write Graphviz dot");
    gen->callback([&] {
        rsc::FiniteStateMachine m;
        if (!gen_builtin.empty()) {
            m = machine_from_flags(gen_builtin, "");
        } else {
            if (gen_states <= 0) throw rsc::Error("--states or --builtin required");
            m = rsc::generate_random(gen_moore ? rsc::MachineKind::Moore : rsc::MachineKind::Dfa,
                                     gen_states, gen_alphabet, gen_outputs, gen_seed);
        }
        rsc::save_machine(m, gen_out);
        if (!gen_dot.empty()) {
            std::ofstream f(gen_dot);
            f << rsc::to_dot(m);
        }
        std::printf("states\t%d\nalphabet\t%d\n", m.num_states, m.alphabet_size());
    });

    // ---- train ----
    auto* tr = app.add_subcommand("train", "Train an RNN on a ground-truth machine");
    std::string tr_builtin, tr_machine, tr_arch = "gru", tr_out, tr_history, tr_dataset_out;
    int tr_hidden = 0, tr_layers = 1, tr_min_len = 1, tr_max_len = 15;
    std::size_t tr_ntotal = 12000;
    double tr_val_fraction = 1.0 / 6.0;
    rsc::TrainConfig tr_cfg;
    tr->add_option("--builtin", tr_builtin);
    tr->add_option("--machine", tr_machine, "machine file");
    tr->add_option("--arch", tr_arch, "elman_tanh / elman_relu / gru / lstm");
    tr->add_option("--hidden", tr_hidden, "hidden size (default |Q|*|alphabet|)");
    tr->add_option("--layers", tr_layers);
    tr->add_option("--n-total", tr_ntotal, "dataset size");
    tr->add_option("--min-len", tr_min_len);
    tr->add_option("--max-len", tr_max_len);
    tr->add_option("--val-fraction", tr_val_fraction);
    tr->add_option("--lr", tr_cfg.learning_rate);
    tr->add_option("--batch", tr_cfg.batch_size);
    tr->add_option("--epochs", tr_cfg.max_epochs);
    tr->add_option("--seed", tr_cfg.seed);
    tr->add_option("--out", tr_out, "model checkpoint")->required();
    tr->add_option("--history", tr_history, "per-epoch TSV");
    tr->add_option("--dataset-out", tr_dataset_out, "dump the sampled dataset");
    tr->callback([&] {
        rsc::FiniteStateMachine m = machine_from_flags(tr_builtin, tr_machine);
        rsc::SplitMix64 rng(tr_cfg.seed);
        rsc::LabeledDataset data = rsc::sample_dataset(m, tr_ntotal, tr_min_len, tr_max_len,
                                                       tr_val_fraction, rng.next());
        int hidden = tr_hidden > 0 ? tr_hidden : m.num_states * m.alphabet_size();
        rsc::RnnModel model =
            rsc::init_model(rsc::arch_from_name(tr_arch), tr_layers, hidden, m.alphabet_size(),
                            m.class_count(), rng.next());
        rsc::TrainConfig cfg = tr_cfg;
        cfg.seed = rng.next();
        rsc::TrainingHistory h = rsc::train(model, data, cfg);
        rsc::save_model(model, tr_out);
        if (!tr_history.empty()) rsc::save_history_tsv(h, tr_history);
        if (!tr_dataset_out.empty()) rsc::save_dataset(data, tr_dataset_out);
        double acc = h.epochs.empty() ? 0.0 : h.epochs.back().val_accuracy;
        std::printf("epochs\t%zu\nval_accuracy\t%.17g\nreached_perfect\t%s\n", h.epochs.size(),
                    acc, h.reached_perfect ? "true" : "false");
    });

    // ---- construct ----
    auto* co = app.add_subcommand("construct", "Encode a DFA as an exact Elman-tanh RNN");
    std::string co_builtin, co_machine, co_out, co_h0;
    rsc::ConstructionParams co_params;
    std::uint64_t co_seed = 0;
    co->add_option("--builtin", co_builtin);
    co->add_option("--machine", co_machine);
    co->add_option("--hr", co_params.h_r, "recurrent saturation factor");
    co->add_option("--ho", co_params.h_o, "output saturation factor");
    co->add_option("--wn", co_params.wn, "weight-noise std-dev");
    co->add_option("--seed", co_seed, "noise seed");
    co->add_option("--out", co_out, "model checkpoint")->required();
    co->add_option("--h0-out", co_h0, "file for the constructed initial state");
    co->callback([&] {
        rsc::FiniteStateMachine m = machine_from_flags(co_builtin, co_machine);
        rsc::RnnModel base = rsc::encode_dfa(m, co_params);
        Eigen::VectorXd h0 = rsc::initial_hidden(base, m, co_params);
        rsc::RnnModel model = co_params.wn > 0 ? rsc::perturb(base, co_params.wn, co_seed) : base;
        rsc::save_model(model, co_out);
        rsc::save_construction_sidecar(co_out + ".sidecar.json", m, co_params, co_seed);
        if (!co_h0.empty()) save_vector(h0, co_h0);
        std::printf("hidden\t%d\n", model.hidden_size);
    });

    // ---- probe ----
    auto* pr = app.add_subcommand("probe", "Co-simulate RNN and machine, dump the HQ sample");
    std::string pr_builtin, pr_machine, pr_model, pr_h0, pr_dataset, pr_split = "val", pr_out;
    pr->add_option("--builtin", pr_builtin);
    pr->add_option("--machine", pr_machine);
    pr->add_option("--model", pr_model)->required();
    pr->add_option("--h0", pr_h0, "initial observable state file (default zeros)");
    pr->add_option("--dataset", pr_dataset, "dataset file providing the words")->required();
    pr->add_option("--split", pr_split, "val / train / all");
    pr->add_option("--out", pr_out, "HQ TSV")->required();
    pr->callback([&] {
        rsc::FiniteStateMachine m = machine_from_flags(pr_builtin, pr_machine);
        rsc::RnnModel model = rsc::load_model(pr_model);
        Eigen::VectorXd h0 = pr_h0.empty()
                                 ? Eigen::VectorXd::Zero(model.observable_size())
                                 : load_vector(pr_h0);
        rsc::LabeledDataset data = rsc::load_dataset(pr_dataset, m.class_count());
        rsc::HQSample hq = rsc::collect_hq(m, model, h0, dataset_words(data, pr_split));
        rsc::save_hq_tsv(hq, pr_out);
        std::printf("records\t%zu\n", hq.size());
    });

    // ---- cluster ----
    auto* cl = app.add_subcommand("cluster", "Cluster an HQ sample and report ambiguity");
    std::string cl_hq, cl_method = "kmeans", cl_labels;
    int cl_num_states = 0, cl_k = 0;
    double cl_eps = 0.5, cl_bandwidth = 0.0, cl_fraction = 1.0;
    std::uint64_t cl_seed = 0;
    cl->add_option("--hq", cl_hq)->required();
    cl->add_option("--num-states", cl_num_states, "|Q| of the ground truth")->required();
    cl->add_option("--method", cl_method, "kmeans / dbscan / optics / mean_shift");
    cl->add_option("--k", cl_k, "kmeans cluster count");
    cl->add_option("--eps", cl_eps, "dbscan radius");
    cl->add_option("--bandwidth", cl_bandwidth, "mean shift bandwidth (0 = estimate)");
    cl->add_option("--subsample", cl_fraction, "fraction of points to cluster");
    cl->add_option("--seed", cl_seed);
    cl->add_option("--labels-out", cl_labels, "cluster labels TSV");
    cl->callback([&] {
        rsc::HQSample hq = rsc::load_hq_tsv(cl_hq, cl_num_states);
        std::vector<std::size_t> idx =
            rsc::subsample_indices(hq.size(), cl_fraction, cl_seed ^ 0x5u);
        rsc::Points pts(static_cast<Eigen::Index>(idx.size()), hq.hidden.cols());
        std::vector<int> states(idx.size());
        std::vector<int> all_states = hq.states();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            pts.row(static_cast<Eigen::Index>(i)) =
                hq.hidden.row(static_cast<Eigen::Index>(idx[i]));
            states[i] = all_states[idx[i]];
        }

        rsc::ClusteringAssignment a;
        if (cl_method == "kmeans") {
            if (cl_k <= 0) throw rsc::Error("--k required for kmeans");
            a = rsc::kmeans(pts, cl_k, cl_seed);
        } else if (cl_method == "dbscan") {
            a = rsc::dbscan(pts, cl_eps);
        } else if (cl_method == "optics") {
            a = rsc::optics(pts);
        } else if (cl_method == "mean_shift") {
            double bw = cl_bandwidth > 0 ? cl_bandwidth : rsc::estimate_bandwidth(pts);
            a = rsc::mean_shift(pts, bw);
        } else {
            throw rsc::Error("unknown clustering method '" + cl_method + "'");
        }
        if (!cl_labels.empty()) save_labels(a.labels, cl_labels);
        print_metrics(rsc::ambiguity(states, a.labels, hq.num_states));
    });

    // ---- classify ----
    auto* cf = app.add_subcommand("classify", "Fit a linear probe on an HQ sample");
    std::string cf_hq, cf_method = "logreg", cf_proj;
    int cf_num_states = 0;
    cf->add_option("--hq", cf_hq)->required();
    cf->add_option("--num-states", cf_num_states)->required();
    cf->add_option("--method", cf_method, "lda / logreg");
    cf->add_option("--proj-out", cf_proj, "LDA 2D projection TSV");
    cf->callback([&] {
        rsc::HQSample hq = rsc::load_hq_tsv(cf_hq, cf_num_states);
        rsc::LinearClassifier clf = rsc::fit_classifier(hq, cf_method);
        print_metrics(rsc::classifier_ambiguity(clf, hq));
        if (!cf_proj.empty()) rsc::save_projection_tsv(rsc::project_2d(hq), cf_proj);
    });

    // ---- extract ----
    auto* ex = app.add_subcommand("extract", "Build a cluster automaton and verify it");
    std::string ex_hq, ex_labels, ex_model, ex_builtin, ex_machine, ex_dataset,
        ex_split = "val", ex_out;
    int ex_num_states = 0;
    ex->add_option("--hq", ex_hq)->required();
    ex->add_option("--labels", ex_labels, "cluster labels TSV")->required();
    ex->add_option("--model", ex_model)->required();
    ex->add_option("--builtin", ex_builtin);
    ex->add_option("--machine", ex_machine);
    ex->add_option("--dataset", ex_dataset, "dataset that produced the HQ sample")->required();
    ex->add_option("--split", ex_split, "val / train / all");
    ex->add_option("--out", ex_out, "extracted machine file");
    ex->callback([&] {
        rsc::FiniteStateMachine m = machine_from_flags(ex_builtin, ex_machine);
        ex_num_states = m.num_states;
        rsc::HQSample hq = rsc::load_hq_tsv(ex_hq, ex_num_states);
        rsc::RnnModel model = rsc::load_model(ex_model);
        rsc::LabeledDataset data = rsc::load_dataset(ex_dataset, m.class_count());
        std::vector<rsc::Word> words = dataset_words(data, ex_split);
        rsc::ClusterAutomaton ca = rsc::extract_automaton(
            hq, load_labels(ex_labels), model, words, m.alphabet, m.kind, m.output_alphabet);
        std::printf("clusters\t%d\nconflict_rate\t%.17g\nholes\t%zu\n", ca.machine.num_states,
                    ca.conflict_rate, ca.holes.size());
        rsc::VerificationReport rep = rsc::verify_against_ground_truth(ca, m, words);
        std::fputs(rsc::format_verification_report(rep, m.alphabet).c_str(), stdout);
        if (!ex_out.empty()) rsc::save_machine(rsc::complete_with_sink(ca), ex_out);
    });

    // ---- curve ----
    auto* cu = app.add_subcommand("curve", "Track wamb across training checkpoints");
    std::string cu_builtin, cu_machine, cu_arch = "gru", cu_out;
    double cu_factor = 1.0;
    int cu_layers = 1;
    rsc::TrainConfig cu_cfg;
    rsc::DataParams cu_data;
    cu->add_option("--builtin", cu_builtin);
    cu->add_option("--machine", cu_machine);
    cu->add_option("--arch", cu_arch);
    cu->add_option("--factor", cu_factor, "hidden size factor of |Q|");
    cu->add_option("--layers", cu_layers);
    cu->add_option("--epochs", cu_cfg.max_epochs);
    cu->add_option("--n-total", cu_data.n_total);
    cu->add_option("--seed", cu_cfg.seed);
    cu->add_option("--out", cu_out, "curve TSV")->required();
    cu->callback([&] {
        rsc::FiniteStateMachine m = machine_from_flags(cu_builtin, cu_machine);
        rsc::CurveResult curve = rsc::track_training_curve(
            m, rsc::arch_from_name(cu_arch), {cu_factor, cu_layers}, cu_data, cu_cfg);
        rsc::save_curve_tsv(curve, cu_out);
        if (curve.spearman_rho)
            std::printf("spearman\t%.17g\n", *curve.spearman_rho);
        else
            std::printf("spearman\tundefined\n");
    });

    // ---- report ----
    auto* re = app.add_subcommand("report", "Aggregate a results CSV into the summary table");
    std::string re_results, re_out;
    re->add_option("--results", re_results, "results.csv from `run`")->required();
    re->add_option("--out", re_out, "write the table to a file instead of stdout");
    re->callback([&] {
        std::string table = rsc::format_report(rsc::aggregate(rsc::parse_result_csv(re_results)));
        if (re_out.empty()) {
            std::fputs(table.c_str(), stdout);
        } else {
            std::ofstream f(re_out);
            f << table;
        }
    });

    // ---- run ----
    auto* ru = app.add_subcommand("run", "End-to-end sweep from a JSON config");
    std::string ru_config;
    ru->add_option("--config", ru_config, "experiment config JSON")->required();
    ru->callback([&] {
        std::ifstream f(ru_config);
        if (!f) throw rsc::Error("cannot open config '" + ru_config + "'");
        std::ostringstream ss;
        ss << f.rdbuf();
        rsc::ExperimentConfig cfg = rsc::parse_config(ss.str());
        std::filesystem::create_directories(cfg.output_dir);
        {
            // manifest: enough to re-run and to detect config drift
            std::uint64_t h = 1469598103934665603ULL;
            for (unsigned char ch : ss.str()) {
                h ^= ch;
                h *= 1099511628211ULL;
            }
            std::ofstream mf(std::filesystem::path(cfg.output_dir) / "manifest.json");
            mf << "{\n  \"config_file\": \"" << ru_config << "\",\n  \"config_hash\": \"" << std::hex
               << h << std::dec << "\",\n  \"seeds\": [";
            for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
                mf << (i ? ", " : "") << cfg.seeds[i];
            mf << "]\n}\n";
        }
        std::vector<rsc::ResultRow> rows = rsc::run_experiment(cfg);
        std::fputs(rsc::format_report(rsc::aggregate(rows)).c_str(), stdout);
        std::printf("rows\t%zu\nresults\t%s/results.csv\n", rows.size(), cfg.output_dir.c_str());
    });

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
