// Acceptance suite: one pass/fail line per criterion, exit nonzero on any
// failure. Statistical thresholds are desk-scale relaxations; the exact
// checks (construction fidelity, oracles, gradients) admit no tolerance.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
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

using namespace rsc;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void run_criterion(int criterion, const std::function<std::pair<bool, std::string>()>& fn) {
    auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        std::tie(pass, detail) = fn();
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    report(criterion, pass, detail + " [" + std::to_string(secs) + "s]");
}

// A random minimal DFA whose initial state has an incoming transition, so
// the construction's h0 system is solvable.
FiniteStateMachine constructible_dfa(int num_states, int alphabet, SplitMix64& rng) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        auto m = generate_random(MachineKind::Dfa, num_states, alphabet, 0, rng.next());
        bool incoming = false;
        for (int q = 0; q < m.num_states && !incoming; ++q)
            for (int a = 0; a < m.alphabet_size() && !incoming; ++a)
                incoming = m.next(q, a) == m.initial;
        if (incoming) return m;
    }
    throw GenerationExhausted("no DFA with an entered initial state found");
}

bool rnn_agrees_everywhere(const RnnModel& model, const Eigen::VectorXd& h0,
                           const FiniteStateMachine& dfa, std::uint64_t seed,
                           std::string& why) {
    // exhaustive over short words for binary alphabets
    if (dfa.alphabet_size() == 2) {
        std::vector<Word> frontier = {{}};
        for (int len = 0; len <= 8; ++len) {
            std::vector<Word> next;
            for (const Word& w : frontier) {
                if (predict_class(model, w, h0) != run(dfa, w).label) {
                    why = "exhaustive mismatch at length " + std::to_string(w.size());
                    return false;
                }
                if (len < 8)
                    for (int a = 0; a < 2; ++a) {
                        Word v = w;
                        v.push_back(a);
                        next.push_back(std::move(v));
                    }
            }
            frontier = std::move(next);
        }
    }
    SplitMix64 rng(seed);
    for (int t = 0; t < 2000; ++t) {
        Word w(1 + rng.below(50));
        for (int& s : w) s = static_cast<int>(rng.below(dfa.alphabet_size()));
        if (predict_class(model, w, h0) != run(dfa, w).label) {
            why = "random-word mismatch, |w|=" + std::to_string(w.size());
            return false;
        }
    }
    return true;
}

std::pair<bool, std::string> criterion1_construction_fidelity() {
    const ConstructionParams presets[] = {{1.5, 1.5, 0}, {2.0, 2.0, 0}, {3.0, 3.0, 0}};
    SplitMix64 rng(0xc1);
    int checked = 0;
    for (int i = 0; i < 10; ++i) {
        int states = 2 + static_cast<int>(rng.below(9));       // 2..10
        int alphabet = 2 + static_cast<int>(rng.below(3));     // 2..4
        auto dfa = constructible_dfa(states, alphabet, rng);
        for (const auto& p : presets) {
            auto model = encode_dfa(dfa, p);
            auto h0 = initial_hidden(model, dfa, p);
            std::string why;
            if (!rnn_agrees_everywhere(model, h0, dfa, rng.next(), why))
                return {false, "dfa " + std::to_string(i) + " (|Q|=" + std::to_string(states) +
                                   ",|S|=" + std::to_string(alphabet) + ") H_r=" +
                                   std::to_string(p.h_r) + ": " + why};
            ++checked;
        }
    }
    return {true, std::to_string(checked) + " dfa/preset pairs exact"};
}

std::pair<bool, std::string> criterion2_transition_clusters() {
    auto dfa = tomita5();
    ConstructionParams p{2.0, 2.0, 0.0};
    auto model = encode_dfa(dfa, p);
    auto h0 = initial_hidden(model, dfa, p);
    auto words = sample_accuracy_set(dfa, 500, 1, 15, 0xc2);
    auto hq = collect_hq(dfa, model, h0, words);
    auto a = dbscan(hq.hidden, 0.5);

    // count clusters that contain at least one post-step record; a pure h0
    // singleton (possible when q0's own encoding is isolated) is excluded
    std::set<int> transition_clusters;
    for (std::size_t i = 0; i < hq.size(); ++i)
        if (hq.records[i].step > 0) transition_clusters.insert(a.labels[i]);
    auto m = ambiguity(hq.states(), a.labels, hq.num_states);
    bool pass = transition_clusters.size() == 8 && m.wamb == 0.0;
    std::ostringstream os;
    os << transition_clusters.size() << " transition clusters (want 8), wamb=" << m.wamb;
    return {pass, os.str()};
}

std::pair<bool, std::string> criterion3_ambiguity_oracle() {
    // worked examples
    auto one = ambiguity({0, 0, 0, 1}, {0, 0, 0, 0}, 2);
    double h31 = -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25));
    if (std::abs(one.amb - h31) > 1e-4 || std::abs(one.amb - 0.8113) > 1e-4)
        return {false, "worked example {3,1} != 0.8113"};
    auto two = ambiguity({0, 0, 0, 0, 0, 1}, {0, 0, 0, 0, 1, 1}, 2);
    if (std::abs(two.wamb - 1.0 / 3.0) > 1e-12 || std::abs(two.amb - 0.5) > 1e-12)
        return {false, "worked example wamb != 1/3"};

    SplitMix64 rng(0xc3);
    for (int trial = 0; trial < 1000; ++trial) {
        int nq = 2 + static_cast<int>(rng.below(8));
        int nk = 1 + static_cast<int>(rng.below(12));
        int n = 4 + static_cast<int>(rng.below(80));
        std::vector<int> states(n), labels(n);
        for (int i = 0; i < n; ++i) {
            states[i] = static_cast<int>(rng.below(nq));
            labels[i] = static_cast<int>(rng.below(nk));
        }
        auto m = ambiguity(states, labels, nq);
        double amb, wamb;
        oracle::ambiguity_reference(states, labels, nq, amb, wamb);
        if (std::abs(m.amb - amb) > 1e-12 || std::abs(m.wamb - wamb) > 1e-12)
            return {false, "brute-force mismatch at trial " + std::to_string(trial)};
    }
    return {true, "1000 tables within 1e-12, worked examples exact"};
}

std::pair<bool, std::string> criterion4_gradients() {
    std::vector<Word> words = {{0, 1, 1, 0}, {1, 0, 0, 1}, {0, 0, 1, 1}};
    std::vector<int> labels = {1, 0, 1};
    const double eps = 1e-5;
    int seed = 0xc4;
    double worst_overall = 0.0;
    for (Arch arch : {Arch::ElmanTanh, Arch::ElmanRelu, Arch::Gru, Arch::Lstm}) {
        RnnModel model = init_model(arch, 2, 4, 2, 2, seed++);
        Gradients grads = zero_gradients(model);
        batch_loss_and_grads(model, words, labels, grads);
        double worst = 0.0;
        auto probe = [&](double& param, double analytic) {
            double orig = param;
            param = orig + eps;
            double lp = batch_loss(model, words, labels);
            param = orig - eps;
            double lm = batch_loss(model, words, labels);
            param = orig;
            double numeric = (lp - lm) / (2 * eps);
            double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
            worst = std::max(worst, std::abs(numeric - analytic) / denom);
        };
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            auto& lay = model.layers[l];
            for (Eigen::Index i = 0; i < lay.w_ih.size(); ++i)
                probe(lay.w_ih.data()[i], grads.w_ih[l].data()[i]);
            for (Eigen::Index i = 0; i < lay.w_hh.size(); ++i)
                probe(lay.w_hh.data()[i], grads.w_hh[l].data()[i]);
            for (Eigen::Index i = 0; i < lay.b_ih.size(); ++i)
                probe(lay.b_ih.data()[i], grads.b_ih[l].data()[i]);
            for (Eigen::Index i = 0; i < lay.b_hh.size(); ++i)
                probe(lay.b_hh.data()[i], grads.b_hh[l].data()[i]);
        }
        for (Eigen::Index i = 0; i < model.w_out.size(); ++i)
            probe(model.w_out.data()[i], grads.w_out.data()[i]);
        if (worst >= 1e-4)
            return {false, arch_name(arch) + " max relative error " + std::to_string(worst)};
        worst_overall = std::max(worst_overall, worst);
    }
    std::ostringstream os;
    os << "all archs, max relative error " << worst_overall;
    return {true, os.str()};
}

// Trained GRUs from criterion 5, reused by criterion 6.
struct TrainedRun {
    std::string tag;
    FiniteStateMachine machine;
    RnnModel model;
    std::vector<Word> probe_words;
    HQSample hq;
    std::vector<int> best_labels;  // a wamb = 0 clustering, if any
    bool has_perfect_clustering = false;
};

std::vector<TrainedRun> g_runs;

std::pair<bool, std::string> criterion5_clustering_hypothesis() {
    int logreg_perfect = 0, kmeans_ok = 0, trained = 0;
    for (const char* name : {"tomita3", "tomita5", "tomita7"}) {
        for (std::uint64_t seed : {1ull, 3ull}) {
            auto machine = *builtin_machine(name);
            int hidden = machine.num_states * machine.alphabet_size();
            auto dataset = sample_dataset(machine, 12000, 1, 15, 1.0 / 6.0, seed * 977);
            RnnModel model =
                init_model(Arch::Gru, 1, hidden, machine.alphabet_size(), 2, seed * 31 + 5);
            TrainConfig tc;
            tc.max_epochs = 600;
            tc.seed = seed * 131;
            auto hist = train(model, dataset, tc);
            if (!hist.reached_perfect)
                return {false, std::string(name) + " seed " + std::to_string(seed) +
                                   " did not reach 100% validation accuracy"};
            ++trained;

            TrainedRun run;
            run.tag = std::string(name) + "_s" + std::to_string(seed);
            run.machine = machine;
            run.model = model;
            for (std::size_t i = dataset.split_index; i < dataset.entries.size(); ++i)
                run.probe_words.push_back(dataset.entries[i].word);
            Eigen::VectorXd h0 = Eigen::VectorXd::Zero(model.observable_size());
            run.hq = collect_hq(machine, model, h0, run.probe_words);

            auto clf = fit_classifier(run.hq, "logreg");
            auto lr = classifier_ambiguity(clf, run.hq);
            if (lr.perfect) ++logreg_perfect;

            auto a = kmeans(run.hq.hidden, 8 * machine.num_states, seed * 733);
            auto km = ambiguity(run.hq.states(), a.labels, run.hq.num_states);
            if (km.wamb <= 0.05) ++kmeans_ok;
            if (km.perfect) {
                run.best_labels = a.labels;
                run.has_perfect_clustering = true;
            } else if (lr.perfect) {
                run.best_labels = clf.predict_all(run.hq.hidden);
                run.has_perfect_clustering = true;
            }
            g_runs.push_back(std::move(run));
        }
    }
    std::ostringstream os;
    os << trained << "/6 trained to 100%, logreg perfect " << logreg_perfect
       << "/6 (need >=5), kmeans 8n wamb<=0.05 " << kmeans_ok << "/6 (need >=5)";
    return {trained == 6 && logreg_perfect >= 5 && kmeans_ok >= 5, os.str()};
}

// L(m) restricted to nonempty words: a fresh non-accepting initial state
// that copies q0's outgoing transitions. A zero-h0 RNN has no bias on its
// output head, so its prediction for the empty word is a constant tie and
// never trained; equivalence is therefore judged over Sigma+, matching the
// length >= 1 validation sets the ground-truth comparison is defined on.
FiniteStateMachine restrict_to_nonempty(const FiniteStateMachine& m) {
    FiniteStateMachine r = m;
    int fresh = r.num_states++;
    r.transitions.resize(static_cast<std::size_t>(r.num_states) * r.alphabet_size());
    for (int a = 0; a < r.alphabet_size(); ++a) r.next_ref(fresh, a) = m.next(m.initial, a);
    r.accepting.push_back(false);
    r.initial = fresh;
    return r;
}

std::pair<bool, std::string> criterion6_extraction_roundtrip() {
    if (g_runs.empty()) return {false, "no trained runs from criterion 5"};
    int eligible = 0, equivalent_count = 0;
    for (const auto& run : g_runs) {
        if (!run.has_perfect_clustering) continue;
        auto ca = extract_automaton(run.hq, run.best_labels, run.model, run.probe_words,
                                    run.machine.alphabet);
        if (!ca.complete()) continue;  // criterion applies to hole-free extractions
        ++eligible;
        auto eq = equivalent(restrict_to_nonempty(minimize(ca.machine)),
                             restrict_to_nonempty(run.machine));
        if (eq.equivalent)
            ++equivalent_count;
        else
            return {false, run.tag + ": extracted automaton not language-equivalent"};
    }
    std::ostringstream os;
    os << equivalent_count << "/" << eligible << " hole-free wamb=0 extractions equivalent";
    return {eligible > 0 && equivalent_count == eligible, os.str()};
}

std::pair<bool, std::string> criterion7_accuracy_ambiguity_correlation() {
    auto machine = tomita5();
    DataParams data;
    data.n_total = 6000;  // smaller probe set keeps per-epoch clustering cheap
    std::ostringstream os;
    bool pass = true;
    for (Arch arch : {Arch::Gru, Arch::ElmanTanh}) {
        TrainConfig tc;
        tc.max_epochs = 400;
        tc.seed = arch == Arch::Gru ? 0xa7 : 0xb7;
        auto curve = track_training_curve(machine, arch, {1.0, 1}, data, tc);
        if (!curve.spearman_rho.has_value()) {
            os << arch_name(arch) << ": rho undefined; ";
            pass = false;
            continue;
        }
        os << arch_name(arch) << " rho=" << *curve.spearman_rho << " (" << curve.points.size()
           << " epochs); ";
        pass = pass && *curve.spearman_rho <= -0.5;
    }
    return {pass, os.str()};
}

std::pair<bool, std::string> criterion8_noisy_retraining() {
    ConstructionParams preset{2.0, 2.0, 0.1};
    SplitMix64 rng(0xc8);
    int ok = 0;
    for (int i = 0; i < 5; ++i) {
        int states = 3 + static_cast<int>(rng.below(5));  // 3..7
        auto dfa = constructible_dfa(states, 2, rng);
        auto model = encode_dfa(dfa, preset);
        auto h0 = initial_hidden(model, dfa, preset);
        model = perturb(model, preset.wn, rng.next());

        auto dataset = sample_dataset(dfa, 12000, 1, 15, 1.0 / 6.0, rng.next());
        TrainConfig tc;
        tc.max_epochs = 200;
        tc.seed = rng.next();
        tc.initial_observable = h0;
        auto hist = train(model, dataset, tc);
        if (!hist.reached_perfect)
            return {false, "dfa " + std::to_string(i) + " (|Q|=" + std::to_string(states) +
                               ") not retrained to 100%"};

        std::vector<Word> words;
        for (std::size_t j = dataset.split_index; j < dataset.entries.size(); ++j)
            words.push_back(dataset.entries[j].word);
        auto hq = collect_hq(dfa, model, h0, words);
        auto a = kmeans(hq.hidden, 6 * dfa.num_states, rng.next());
        auto m = ambiguity(hq.states(), a.labels, hq.num_states);
        if (m.wamb <= 0.01) ++ok;
    }
    std::ostringstream os;
    os << ok << "/5 retrained runs with kmeans 6n wamb<=0.01 (need >=4)";
    return {ok >= 4, os.str()};
}

std::pair<bool, std::string> criterion9_clustering_oracles() {
    SplitMix64 rng(0xc9);

    // DBSCAN against density-reachability brute force
    for (int trial = 0; trial < 50; ++trial) {
        int n = 20 + static_cast<int>(rng.below(181));
        Points p(n, 2 + static_cast<int>(rng.below(3)));
        for (int i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform() * 8.0;
        double eps = 0.3 + rng.uniform() * 1.5;
        auto a = dbscan(p, eps);
        auto ref = oracle::dbscan_reference(p, eps, 5);
        std::map<int, int> fwd, bwd;
        for (int i = 0; i < n; ++i) {
            auto [f, nf] = fwd.emplace(a.labels[static_cast<std::size_t>(i)], ref[static_cast<std::size_t>(i)]);
            auto [g, ng] = bwd.emplace(ref[static_cast<std::size_t>(i)], a.labels[static_cast<std::size_t>(i)]);
            if (f->second != ref[static_cast<std::size_t>(i)] ||
                g->second != a.labels[static_cast<std::size_t>(i)])
                return {false, "dbscan mismatch at trial " + std::to_string(trial)};
        }
    }

    // k-means nearest-centroid invariant
    for (int trial = 0; trial < 20; ++trial) {
        int n = 30 + static_cast<int>(rng.below(120));
        Points p(n, 3);
        for (int i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform() * 6.0;
        int k = 2 + static_cast<int>(rng.below(9));
        auto a = kmeans(p, k, rng.next());
        for (int i = 0; i < n; ++i) {
            int best = 0;
            for (int c = 1; c < a.centroids.rows(); ++c)
                if ((p.row(i) - a.centroids.row(c)).squaredNorm() <
                    (p.row(i) - a.centroids.row(best)).squaredNorm())
                    best = c;
            if (best != a.labels[static_cast<std::size_t>(i)])
                return {false, "kmeans non-nearest assignment at trial " + std::to_string(trial)};
        }
    }

    // bandwidth against the O(N^2) oracle
    for (int trial = 0; trial < 20; ++trial) {
        int n = 10 + static_cast<int>(rng.below(150));
        Points p(n, 4);
        for (int i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform() * 5.0;
        double q = 0.05 + rng.uniform() * 0.9;
        if (std::abs(estimate_bandwidth(p, q) - oracle::bandwidth_reference(p, q)) > 1e-9)
            return {false, "bandwidth mismatch at trial " + std::to_string(trial)};
    }

    // minimize against table filling
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + static_cast<int>(rng.below(11));
        int sigma = 2 + static_cast<int>(rng.below(3));
        auto kind = trial % 4 == 0 ? MachineKind::Moore : MachineKind::Dfa;
        auto m = generate_random(kind, n, sigma, kind == MachineKind::Moore ? 3 : 0, rng.next());
        auto mm = minimize(m);
        if (mm.num_states != oracle::table_filling_state_count(m))
            return {false, "minimize state count mismatch at trial " + std::to_string(trial)};
        if (!equivalent(m, mm).equivalent)
            return {false, "minimize not language-equivalent at trial " + std::to_string(trial)};
    }

    return {true, "dbscan 50/50, kmeans 20/20, bandwidth 20/20, minimize 100/100"};
}

std::pair<bool, std::string> criterion10_schema_and_mean_shift() {
    ExperimentConfig cfg;
    for (const char* b : {"tomita3", "tomita5", "tomita7"}) {
        LanguageSpec s;
        s.builtin = b;
        cfg.languages.push_back(s);
    }
    SplitMix64 rng(0xca);
    for (int i = 0; i < 3; ++i) {
        // only DFAs whose initial state has an incoming transition can be
        // encoded, so screen the random seeds up front
        LanguageSpec s;
        s.random_states = 5 + i;
        s.random_alphabet = 2;
        for (;;) {
            s.random_seed = rng.next();
            auto m = generate_random(MachineKind::Dfa, s.random_states, 2, 0, s.random_seed);
            bool incoming = false;
            for (int q = 0; q < m.num_states && !incoming; ++q)
                for (int a = 0; a < 2 && !incoming; ++a) incoming = m.next(q, a) == m.initial;
            if (incoming) break;
        }
        cfg.languages.push_back(s);
    }
    cfg.construction_presets = {{2.0, 2.0, 0.1}};
    cfg.retrain_after_perturb = true;
    cfg.seeds = {1, 2};
    cfg.train.max_epochs = 200;
    cfg.output_dir = "acceptance_out";
    std::filesystem::remove_all(cfg.output_dir);

    auto rows = run_experiment(cfg);
    auto agg = aggregate(rows);
    std::string text = format_report(agg);

    // schema: every surviving method/parameterization appears with the
    // aggregate columns
    std::set<std::string> expected;
    for (const auto& r : rows)
        if (r.error.empty()) expected.insert(r.method + "\t" + r.params);
    for (const auto& cell : expected)
        if (text.find(cell) == std::string::npos)
            return {false, "report is missing the cell '" + cell + "'"};
    for (const char* col : {"runs", "amb mean", "amb std", "amb max", "wamb mean", "wamb max",
                            "clusters mean", "clusters max", "perfect"})
        if (text.find(col) == std::string::npos)
            return {false, std::string("report is missing the column '") + col + "'"};

    std::size_t ms_rows = 0, ms_perfect = 0, usable_rnns = 0, error_rnns = 0;
    std::set<std::string> ids;
    for (const auto& r : rows) {
        if (!r.error.empty()) {
            if (r.method == "rnn") ++error_rnns;
            continue;
        }
        ids.insert(r.experiment_id);
        if (r.method == "mean_shift" && r.params == "bw=alpha/4") {
            ++ms_rows;
            if (r.perfect) ++ms_perfect;
        }
    }
    usable_rnns = ids.size();
    std::ostringstream os;
    os << usable_rnns << " rnns survived (" << error_rnns << " filtered), mean shift alpha/4 "
       << "perfect " << ms_perfect << "/" << ms_rows << " (need >=60%)";
    bool pass = ms_rows > 0 && usable_rnns >= 10 &&
                static_cast<double>(ms_perfect) >= 0.6 * static_cast<double>(ms_rows);
    return {pass, os.str()};
}

}  // namespace

int main() {
    run_criterion(1, criterion1_construction_fidelity);
    run_criterion(2, criterion2_transition_clusters);
    run_criterion(3, criterion3_ambiguity_oracle);
    run_criterion(4, criterion4_gradients);
    run_criterion(5, criterion5_clustering_hypothesis);
    run_criterion(6, criterion6_extraction_roundtrip);
    run_criterion(7, criterion7_accuracy_ambiguity_correlation);
    run_criterion(8, criterion8_noisy_retraining);
    run_criterion(9, criterion9_clustering_oracles);
    run_criterion(10, criterion10_schema_and_mean_shift);
    if (g_failures == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
