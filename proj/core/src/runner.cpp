#include "rsc/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rsc/extract.hpp"
#include "rsc/metrics.hpp"
#include "rsc/prng.hpp"
#include "rsc/probe.hpp"
#include "rsc/separability.hpp"

namespace rsc {

namespace fs = std::filesystem;
using json = nlohmann::json;

FiniteStateMachine resolve_language(const LanguageSpec& spec) {
    int set = (!spec.builtin.empty()) + (!spec.file.empty()) + (spec.random_states > 0);
    if (set != 1)
        throw Error("language spec must set exactly one of builtin / file / random");
    if (!spec.builtin.empty()) {
        auto m = builtin_machine(spec.builtin);
        if (!m) throw Error("unknown builtin language '" + spec.builtin + "'");
        return *m;
    }
    if (!spec.file.empty()) return load_machine(spec.file);
    return generate_random(MachineKind::Dfa, spec.random_states, spec.random_alphabet, 2,
                           spec.random_seed);
}

int eval_k_expr(const std::string& expr, int n) {
    // grammar: INT | [INT] 'n' [('+'|'-') INT]
    std::size_t pos = 0;
    auto read_int = [&]() {
        std::size_t start = pos;
        while (pos < expr.size() && std::isdigit(static_cast<unsigned char>(expr[pos]))) ++pos;
        return start == pos ? -1 : std::stoi(expr.substr(start, pos - start));
    };
    int mult = read_int();
    if (pos == expr.size()) {
        if (mult < 0) throw ParseError("bad k expression '" + expr + "'");
        return mult;
    }
    if (expr[pos] != 'n') throw ParseError("bad k expression '" + expr + "'");
    ++pos;
    int k = (mult < 0 ? 1 : mult) * n;
    if (pos < expr.size()) {
        char sign = expr[pos++];
        int off = read_int();
        if ((sign != '+' && sign != '-') || off < 0 || pos != expr.size())
            throw ParseError("bad k expression '" + expr + "'");
        k += sign == '+' ? off : -off;
    }
    return k;
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j = json::parse(json_text);
    ExperimentConfig c;

    for (const auto& lj : j.at("languages")) {
        LanguageSpec s;
        if (lj.is_string()) {
            s.builtin = lj.get<std::string>();
        } else {
            if (lj.contains("builtin")) s.builtin = lj["builtin"].get<std::string>();
            if (lj.contains("file")) s.file = lj["file"].get<std::string>();
            if (lj.contains("random")) {
                const auto& r = lj["random"];
                s.random_states = r.at("states").get<int>();
                s.random_alphabet = r.value("alphabet", 2);
                s.random_seed = r.value("seed", 0ULL);
            }
            if (lj.contains("name")) s.name = lj["name"].get<std::string>();
        }
        if (s.name.empty()) {
            if (!s.builtin.empty())
                s.name = s.builtin;
            else if (!s.file.empty())
                s.name = fs::path(s.file).stem().string();
            else
                s.name = "random" + std::to_string(s.random_states) + "_" +
                         std::to_string(s.random_seed);
        }
        c.languages.push_back(std::move(s));
    }

    if (j.contains("archs")) {
        c.archs.clear();
        for (const auto& a : j["archs"]) c.archs.push_back(arch_from_name(a.get<std::string>()));
    }
    if (j.contains("sizes")) {
        c.sizes.clear();
        for (const auto& s : j["sizes"])
            c.sizes.push_back({s.value("factor", 1.0), s.value("layers", 1)});
    }
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();

    if (j.contains("train")) {
        const auto& t = j["train"];
        c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
        c.train.batch_size = t.value("batch_size", c.train.batch_size);
        c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
        c.train.stop_after_perfect_epochs =
            t.value("stop_after_perfect_epochs", c.train.stop_after_perfect_epochs);
    }
    if (j.contains("data")) {
        const auto& d = j["data"];
        c.data.n_total = d.value("n_total", c.data.n_total);
        c.data.min_len = d.value("min_len", c.data.min_len);
        c.data.max_len = d.value("max_len", c.data.max_len);
        c.data.val_fraction = d.value("val_fraction", c.data.val_fraction);
    }
    if (j.contains("clustering")) {
        const auto& g = j["clustering"];
        if (g.contains("kmeans_k")) c.clustering.kmeans_k = g["kmeans_k"].get<std::vector<std::string>>();
        if (g.contains("dbscan_eps"))
            c.clustering.dbscan_eps = g["dbscan_eps"].get<std::vector<double>>();
        c.clustering.optics = g.value("optics", c.clustering.optics);
        if (g.contains("mean_shift_divisors"))
            c.clustering.mean_shift_divisors = g["mean_shift_divisors"].get<std::vector<double>>();
        c.clustering.subsample_fraction =
            g.value("subsample_fraction", c.clustering.subsample_fraction);
    }
    if (j.contains("classifiers")) c.classifiers = j["classifiers"].get<std::vector<std::string>>();
    if (j.contains("construction")) {
        const auto& cc = j["construction"];
        for (const auto& p : cc.at("presets")) {
            ConstructionParams cp;
            cp.h_r = p.at(0).get<double>();
            cp.h_o = p.at(1).get<double>();
            cp.wn = p.at(2).get<double>();
            c.construction_presets.push_back(cp);
        }
        c.retrain_after_perturb = cc.value("retrain", true);
    }
    c.extract_automata = j.value("extract", false);
    c.accuracy_cutoff = j.value("accuracy_cutoff", 0.8);
    if (c.accuracy_cutoff < 0 || c.accuracy_cutoff > 1)
        throw Error("accuracy_cutoff must lie in [0, 1]");
    c.output_dir = j.value("output_dir", c.output_dir);

    if (c.languages.empty() || c.archs.empty() || c.sizes.empty() || c.seeds.empty())
        throw Error("every experiment grid must be nonempty");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::string result_csv_header() {
    return "experiment_id,language,num_states,alphabet_size,arch,layers,hidden_size,seed,"
           "rnn_accuracy,method,params,num_clusters,amb,wamb,perfect,runtime_ms,error";
}

std::string result_csv_line(const ResultRow& r) {
    std::ostringstream os;
    os << csv_escape(r.experiment_id) << ',' << csv_escape(r.language) << ',' << r.num_states
       << ',' << r.alphabet_size << ',' << r.arch << ',' << r.layers << ',' << r.hidden_size
       << ',' << r.seed << ',' << fmt_double(r.rnn_accuracy) << ',' << csv_escape(r.method) << ','
       << csv_escape(r.params) << ',' << r.num_clusters << ',' << fmt_double(r.amb) << ','
       << fmt_double(r.wamb) << ',' << (r.perfect ? 1 : 0) << ',' << r.runtime_ms << ','
       << csv_escape(r.error);
    return os.str();
}

std::vector<ResultRow> parse_result_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open results file '" + path + "'");
    std::vector<ResultRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("experiment_id,", 0) == 0) continue;
        }
        // quoted fields may span lines; a record is complete once its quote
        // count is even
        while (std::count(line.begin(), line.end(), '"') % 2 != 0) {
            std::string more;
            if (!std::getline(f, more)) break;
            line += '\n';
            line += more;
        }
        auto fields = csv_split(line);
        if (fields.size() != 17) throw ParseError("bad results row: " + line);
        ResultRow r;
        r.experiment_id = fields[0];
        r.language = fields[1];
        r.num_states = std::stoi(fields[2]);
        r.alphabet_size = std::stoi(fields[3]);
        r.arch = fields[4];
        r.layers = std::stoi(fields[5]);
        r.hidden_size = std::stoi(fields[6]);
        r.seed = std::stoull(fields[7]);
        r.rnn_accuracy = std::stod(fields[8]);
        r.method = fields[9];
        r.params = fields[10];
        r.num_clusters = std::stoi(fields[11]);
        r.amb = std::stod(fields[12]);
        r.wamb = std::stod(fields[13]);
        r.perfect = fields[14] == "1";
        r.runtime_ms = std::stol(fields[15]);
        r.error = fields[16];
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

struct RnnCell {
    std::string experiment_id;
    std::string language;
    FiniteStateMachine machine;
    std::string arch;
    int layers = 0;
    int hidden = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    RnnModel model;
    Eigen::VectorXd h0;
    std::vector<Word> probe_words;
    std::string error;  // training / construction failure
};

ResultRow base_row(const RnnCell& cell) {
    ResultRow r;
    r.experiment_id = cell.experiment_id;
    r.language = cell.language;
    r.num_states = cell.machine.num_states;
    r.alphabet_size = cell.machine.alphabet_size();
    r.arch = cell.arch;
    r.layers = cell.layers;
    r.hidden_size = cell.hidden;
    r.seed = cell.seed;
    r.rnn_accuracy = cell.accuracy;
    return r;
}

class RowSink {
public:
    explicit RowSink(const std::string& dir) : path_(fs::path(dir) / "results.csv") {
        fs::create_directories(dir);
        out_.open(path_, std::ios::trunc);
        if (!out_) throw Error("cannot open '" + path_.string() + "' for writing");
        out_ << result_csv_header() << '\n' << std::flush;
    }

    void push(ResultRow row) {
        out_ << result_csv_line(row) << '\n' << std::flush;  // crash-safe incremental append
        rows_.push_back(std::move(row));
    }

    // Canonical ordering for byte-reproducible output.
    std::vector<ResultRow> finalize() {
        std::stable_sort(rows_.begin(), rows_.end(), [](const ResultRow& a, const ResultRow& b) {
            return std::tie(a.experiment_id, a.method, a.params) <
                   std::tie(b.experiment_id, b.method, b.params);
        });
        out_.close();
        std::ofstream f(path_, std::ios::trunc);
        f << result_csv_header() << '\n';
        for (const auto& r : rows_) f << result_csv_line(r) << '\n';
        return rows_;
    }

private:
    fs::path path_;
    std::ofstream out_;
    std::vector<ResultRow> rows_;
};

std::string sanitize(std::string s) {
    for (char& ch : s)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '.') ch = '_';
    return s;
}

long ms_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 t0)
        .count();
}

// Metrics for a clustering over (a subset of) the HQ sample.
ResultRow metrics_row(const RnnCell& cell, const std::vector<int>& states,
                      const ClusteringAssignment& a, int num_states, const std::string& method,
                      const std::string& params,
                      const std::chrono::steady_clock::time_point& t0) {
    MetricsRecord m = ambiguity(states, a.labels, num_states);
    ResultRow r = base_row(cell);
    r.method = method;
    r.params = params;
    r.num_clusters = m.num_clusters;
    r.amb = m.amb;
    r.wamb = m.wamb;
    r.perfect = m.perfect;
    r.runtime_ms = ms_since(t0);
    return r;
}

void run_grid_for_cell(const ExperimentConfig& config, const RnnCell& cell, RowSink& sink,
                       std::uint64_t cluster_seed) {
    const HQSample hq = collect_hq(cell.machine, cell.model, cell.h0, cell.probe_words);
    const std::vector<int> states = hq.states();
    const int n = cell.machine.num_states;

    fs::path dir = fs::path(config.output_dir);
    save_hq_tsv(hq, (dir / (sanitize(cell.experiment_id) + ".hq.tsv")).string());

    auto dump_labels = [&](const std::string& method, const std::string& params,
                           const std::vector<int>& labels) {
        std::ofstream f(dir / (sanitize(cell.experiment_id) + "." + sanitize(method) + "." +
                               sanitize(params) + ".labels.tsv"));
        for (std::size_t i = 0; i < labels.size(); ++i) f << i << '\t' << labels[i] << '\n';
    };

    for (const std::string& method : config.classifiers) {
        auto t0 = std::chrono::steady_clock::now();
        try {
            LinearClassifier clf = fit_classifier(hq, method);
            std::vector<int> preds = clf.predict_all(hq.hidden);
            MetricsRecord m = ambiguity(states, preds, hq.num_states);
            ResultRow r = base_row(cell);
            r.method = method;
            r.num_clusters = m.num_clusters;
            r.amb = m.amb;
            r.wamb = m.wamb;
            r.perfect = m.perfect;
            r.runtime_ms = ms_since(t0);
            sink.push(r);
            dump_labels(method, "", preds);
        } catch (const std::exception& e) {
            ResultRow r = base_row(cell);
            r.method = method;
            r.error = e.what();
            sink.push(r);
        }
    }

    SplitMix64 seeds(cluster_seed);

    for (const std::string& expr : config.clustering.kmeans_k) {
        auto t0 = std::chrono::steady_clock::now();
        std::uint64_t seed = seeds.next();
        std::string params = "k=" + expr;
        try {
            int k = eval_k_expr(expr, n);
            ClusteringAssignment a = kmeans(hq.hidden, k, seed);
            sink.push(metrics_row(cell, states, a, hq.num_states, "kmeans", params, t0));
            dump_labels("kmeans", params, a.labels);
        } catch (const std::exception& e) {
            ResultRow r = base_row(cell);
            r.method = "kmeans";
            r.params = params;
            r.error = e.what();
            sink.push(r);
        }
    }

    for (double eps : config.clustering.dbscan_eps) {
        auto t0 = std::chrono::steady_clock::now();
        std::ostringstream ps;
        ps << "eps=" << eps;
        try {
            ClusteringAssignment a = dbscan(hq.hidden, eps);
            sink.push(metrics_row(cell, states, a, hq.num_states, "dbscan", ps.str(), t0));
            dump_labels("dbscan", ps.str(), a.labels);
        } catch (const std::exception& e) {
            ResultRow r = base_row(cell);
            r.method = "dbscan";
            r.params = ps.str();
            r.error = e.what();
            sink.push(r);
        }
    }

    // OPTICS and mean shift run on the reduced sample
    std::vector<std::size_t> sub =
        subsample_indices(hq.size(), config.clustering.subsample_fraction, seeds.next());
    Points sub_points(static_cast<Eigen::Index>(sub.size()), hq.hidden.cols());
    std::vector<int> sub_states(sub.size());
    for (std::size_t i = 0; i < sub.size(); ++i) {
        sub_points.row(static_cast<Eigen::Index>(i)) =
            hq.hidden.row(static_cast<Eigen::Index>(sub[i]));
        sub_states[i] = states[sub[i]];
    }

    if (config.clustering.optics) {
        auto t0 = std::chrono::steady_clock::now();
        try {
            ClusteringAssignment a = optics(sub_points);
            sink.push(metrics_row(cell, sub_states, a, hq.num_states, "optics", "default", t0));
            dump_labels("optics", "default", a.labels);
        } catch (const std::exception& e) {
            ResultRow r = base_row(cell);
            r.method = "optics";
            r.params = "default";
            r.error = e.what();
            sink.push(r);
        }
    }

    if (!config.clustering.mean_shift_divisors.empty()) {
        double alpha = 0.0;
        std::string alpha_error;
        try {
            alpha = estimate_bandwidth(sub_points);
        } catch (const std::exception& e) {
            alpha_error = e.what();
        }
        for (double div : config.clustering.mean_shift_divisors) {
            auto t0 = std::chrono::steady_clock::now();
            std::ostringstream ps;
            ps << "bw=alpha/" << div;
            ResultRow r = base_row(cell);
            r.method = "mean_shift";
            r.params = ps.str();
            if (!alpha_error.empty()) {
                r.error = alpha_error;
                sink.push(r);
                continue;
            }
            try {
                ClusteringAssignment a = mean_shift(sub_points, alpha / div);
                sink.push(
                    metrics_row(cell, sub_states, a, hq.num_states, "mean_shift", ps.str(), t0));
                dump_labels("mean_shift", ps.str(), a.labels);
            } catch (const std::exception& e) {
                r.error = e.what();
                sink.push(r);
            }
        }
    }

    if (config.extract_automata) {
        // extract from the finest k-means grid entry; report alongside the CSV
        try {
            int k = eval_k_expr(config.clustering.kmeans_k.back(), n);
            ClusteringAssignment a = kmeans(hq.hidden, k, seeds.next());
            ClusterAutomaton ca = extract_automaton(hq, a.labels, cell.model, cell.probe_words,
                                                    cell.machine.alphabet, cell.machine.kind,
                                                    cell.machine.output_alphabet);
            VerificationReport rep =
                verify_against_ground_truth(ca, cell.machine, cell.probe_words);
            std::ofstream f(dir / (sanitize(cell.experiment_id) + ".extract.txt"));
            f << format_verification_report(rep, cell.machine.alphabet);
            save_machine(complete_with_sink(ca),
                         (dir / (sanitize(cell.experiment_id) + ".extracted.fsm")).string());
        } catch (const std::exception& e) {
            ResultRow r = base_row(cell);
            r.method = "extract";
            r.error = e.what();
            sink.push(r);
        }
    }
}

std::vector<Word> validation_words(const LabeledDataset& d) {
    std::vector<Word> words;
    words.reserve(d.val_size());
    for (std::size_t i = d.split_index; i < d.entries.size(); ++i)
        words.push_back(d.entries[i].word);
    return words;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
    RowSink sink(config.output_dir);

    // construction mode iterates (language x preset x seed); training mode
    // iterates (language x arch x size x seed)
    const bool constructing = !config.construction_presets.empty();

    for (LanguageSpec lang : config.languages) {
        if (lang.name.empty()) {
            if (!lang.builtin.empty())
                lang.name = lang.builtin;
            else if (!lang.file.empty())
                lang.name = fs::path(lang.file).stem().string();
            else
                lang.name = "random" + std::to_string(lang.random_states) + "_" +
                            std::to_string(lang.random_seed);
        }
        FiniteStateMachine machine;
        try {
            machine = resolve_language(lang);
        } catch (const std::exception& e) {
            ResultRow r;
            r.experiment_id = lang.name;
            r.language = lang.name;
            r.error = e.what();
            sink.push(r);
            continue;
        }

        auto prepare_cell = [&](RnnCell& cell, std::uint64_t data_seed) {
            LabeledDataset dataset =
                sample_dataset(machine, config.data.n_total, config.data.min_len,
                               config.data.max_len, config.data.val_fraction, data_seed);
            cell.probe_words = validation_words(dataset);
            return dataset;
        };

        if (constructing) {
            for (const auto& preset : config.construction_presets) {
                for (std::uint64_t seed : config.seeds) {
                    RnnCell cell;
                    std::ostringstream id;
                    id << lang.name << "_construct_hr" << preset.h_r << "_ho" << preset.h_o
                       << "_wn" << preset.wn << "_s" << seed;
                    cell.experiment_id = id.str();
                    cell.language = lang.name;
                    cell.machine = machine;
                    cell.arch = "elman_tanh_constructed";
                    cell.layers = 1;
                    cell.hidden = machine.num_states * machine.alphabet_size();
                    cell.seed = seed;
                    SplitMix64 rng(seed ^ fnv1a(cell.experiment_id));
                    try {
                        LabeledDataset dataset = prepare_cell(cell, rng.next());
                        RnnModel base = encode_dfa(machine, preset);
                        cell.h0 = initial_hidden(base, machine, preset);
                        cell.model = preset.wn > 0 ? perturb(base, preset.wn, rng.next()) : base;
                        if (preset.wn > 0 && config.retrain_after_perturb) {
                            TrainConfig tc = config.train;
                            tc.seed = rng.next();
                            tc.initial_observable = cell.h0;
                            TrainingHistory h = train(cell.model, dataset, tc);
                            cell.accuracy = h.epochs.empty() ? 0.0 : h.epochs.back().val_accuracy;
                        } else {
                            cell.accuracy =
                                validate_accuracy(cell.model, machine, cell.probe_words, &cell.h0);
                        }
                    } catch (const std::exception& e) {
                        cell.error = e.what();
                    }
                    if (!cell.error.empty()) {
                        ResultRow r = base_row(cell);
                        r.method = "rnn";
                        r.error = cell.error;
                        sink.push(r);
                        continue;
                    }
                    if (cell.accuracy < config.accuracy_cutoff) {
                        ResultRow r = base_row(cell);
                        r.method = "rnn";
                        r.error = "accuracy below cutoff";
                        sink.push(r);
                        continue;
                    }
                    run_grid_for_cell(config, cell, sink, rng.next());
                }
            }
        } else {
            for (Arch arch : config.archs) {
                for (const auto& size : config.sizes) {
                    for (std::uint64_t seed : config.seeds) {
                        RnnCell cell;
                        int hidden = std::max(
                            1, static_cast<int>(std::lround(
                                   size.factor * machine.num_states * machine.alphabet_size())));
                        std::ostringstream id;
                        id << lang.name << "_" << arch_name(arch) << "_l" << size.layers << "_h"
                           << hidden << "_s" << seed;
                        cell.experiment_id = id.str();
                        cell.language = lang.name;
                        cell.machine = machine;
                        cell.arch = arch_name(arch);
                        cell.layers = size.layers;
                        cell.hidden = hidden;
                        cell.seed = seed;
                        cell.h0 = Eigen::VectorXd();
                        SplitMix64 rng(seed ^ fnv1a(cell.experiment_id));
                        try {
                            LabeledDataset dataset = prepare_cell(cell, rng.next());
                            cell.model =
                                init_model(arch, size.layers, hidden, machine.alphabet_size(),
                                           machine.class_count(), rng.next());
                            TrainConfig tc = config.train;
                            tc.seed = rng.next();
                            TrainingHistory h = train(cell.model, dataset, tc);
                            cell.accuracy = h.epochs.empty() ? 0.0 : h.epochs.back().val_accuracy;
                            cell.h0 = Eigen::VectorXd::Zero(cell.model.observable_size());
                        } catch (const std::exception& e) {
                            cell.error = e.what();
                        }
                        if (!cell.error.empty()) {
                            ResultRow r = base_row(cell);
                            r.method = "rnn";
                            r.error = cell.error;
                            sink.push(r);
                            continue;
                        }
                        if (cell.accuracy < config.accuracy_cutoff) {
                            ResultRow r = base_row(cell);
                            r.method = "rnn";
                            r.error = "accuracy below cutoff";
                            sink.push(r);
                            continue;
                        }
                        run_grid_for_cell(config, cell, sink, rng.next());
                    }
                }
            }
        }
    }
    return sink.finalize();
}

CurveResult track_training_curve(const FiniteStateMachine& machine, Arch arch,
                                 const SizeSpec& size, const DataParams& data,
                                 TrainConfig train_config, RnnModel* trained_out) {
    SplitMix64 rng(train_config.seed);
    LabeledDataset dataset = sample_dataset(machine, data.n_total, data.min_len, data.max_len,
                                            data.val_fraction, rng.next());
    int hidden = std::max(1, static_cast<int>(std::lround(size.factor * machine.num_states *
                                                          machine.alphabet_size())));
    RnnModel model = init_model(arch, size.layers, hidden, machine.alphabet_size(),
                                machine.class_count(), rng.next());

    train_config.keep_checkpoints = true;
    train_config.seed = rng.next();
    TrainingHistory history = train(model, dataset, train_config);

    std::vector<Word> words = validation_words(dataset);
    Eigen::VectorXd h0 = Eigen::VectorXd::Zero(model.observable_size());
    std::uint64_t kmeans_seed = rng.next();

    CurveResult curve;
    for (std::size_t e = 0; e < history.checkpoints.size(); ++e) {
        const RnnModel& ckpt = history.checkpoints[e];
        HQSample hq = collect_hq(machine, ckpt, h0, words);
        ClusteringAssignment a = kmeans(hq.hidden, 8 * machine.num_states, kmeans_seed);
        MetricsRecord m = ambiguity(hq.states(), a.labels, hq.num_states);
        curve.points.push_back(
            {history.epochs[e].epoch, history.epochs[e].val_accuracy, m.wamb});
    }

    std::vector<double> accs, wambs;
    for (const auto& p : curve.points) {
        accs.push_back(p.accuracy);
        wambs.push_back(p.wamb);
    }
    try {
        curve.spearman_rho = spearman(accs, wambs);
    } catch (const Error&) {
        curve.spearman_rho.reset();  // constant series or too few checkpoints
    }
    if (trained_out) *trained_out = model;
    return curve;
}

void save_curve_tsv(const CurveResult& curve, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    f << "epoch\taccuracy\twamb\n";
    for (const auto& p : curve.points)
        f << p.epoch << '\t' << fmt_double(p.accuracy) << '\t' << fmt_double(p.wamb) << '\n';
    if (curve.spearman_rho)
        f << "# spearman\t" << fmt_double(*curve.spearman_rho) << '\n';
    else
        f << "# spearman\tundefined (constant series)\n";
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
    if (rows.empty()) throw EmptySet("no result rows to aggregate");
    std::map<std::pair<std::string, std::string>, std::vector<const ResultRow*>> groups;
    for (const auto& r : rows) {
        if (!r.error.empty() || r.method == "rnn") continue;
        groups[{r.method, r.params}].push_back(&r);
    }

    auto mean_std = [](const std::vector<double>& xs, double& mean, double& sd) {
        mean = 0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0;
        for (double x : xs) var += (x - mean) * (x - mean);
        sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
    };

    std::vector<AggregateRow> out;
    for (const auto& [key, members] : groups) {
        AggregateRow a;
        a.method = key.first;
        a.params = key.second;
        a.count = members.size();
        std::vector<double> ambs, wambs, ks;
        for (const ResultRow* r : members) {
            ambs.push_back(r->amb);
            wambs.push_back(r->wamb);
            ks.push_back(static_cast<double>(r->num_clusters));
            a.amb_max = std::max(a.amb_max, r->amb);
            a.wamb_max = std::max(a.wamb_max, r->wamb);
            a.clusters_max = std::max(a.clusters_max, r->num_clusters);
            if (r->perfect) a.perfect_count++;
        }
        mean_std(ambs, a.amb_mean, a.amb_std);
        mean_std(wambs, a.wamb_mean, a.wamb_std);
        mean_std(ks, a.clusters_mean, a.clusters_std);
        out.push_back(std::move(a));
    }
    return out;
}

std::string format_report(const std::vector<AggregateRow>& rows) {
    std::ostringstream os;
    os << "method\tparams\truns\tamb mean\tamb std\tamb max\twamb mean\twamb std\twamb max"
          "\tclusters mean\tclusters std\tclusters max\tperfect\n";
    char buf[512];
    for (const auto& a : rows) {
        std::snprintf(buf, sizeof buf,
                      "%s\t%s\t%zu\t%.6g\t%.6g\t%.6g\t%.6g\t%.6g\t%.6g\t%.4g\t%.4g\t%d\t%zu\n",
                      a.method.c_str(), a.params.c_str(), a.count, a.amb_mean, a.amb_std,
                      a.amb_max, a.wamb_mean, a.wamb_std, a.wamb_max, a.clusters_mean,
                      a.clusters_std, a.clusters_max, a.perfect_count);
        os << buf;
    }
    return os.str();
}

}  // namespace rsc
