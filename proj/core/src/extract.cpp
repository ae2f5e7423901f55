#include "rsc/extract.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace rsc {

namespace {

int predicted_label(const RnnModel& model, const Eigen::VectorXd& obs) {
    RnnState s = state_from_observable(model, obs);
    Eigen::VectorXd p = output_probs(model, s);
    Eigen::Index arg;
    p.maxCoeff(&arg);
    return static_cast<int>(arg);
}

}  // namespace

ClusterAutomaton extract_automaton(const HQSample& hq, const std::vector<int>& labels,
                                   const RnnModel& model, const std::vector<Word>& words,
                                   const std::vector<std::string>& alphabet, MachineKind kind,
                                   const std::vector<std::string>& output_alphabet) {
    if (hq.records.empty()) throw EmptyTrace("extract_automaton: empty HQ sample");
    if (labels.size() != hq.records.size())
        throw LengthMismatch("extract_automaton: labels do not align with HQ records");

    int num_clusters = 0;
    for (int l : labels) {
        if (l < 0) throw IndexOutOfRange("extract_automaton: negative cluster label");
        num_clusters = std::max(num_clusters, l + 1);
    }
    const int sigma = static_cast<int>(alphabet.size());

    // vote tally per (source cluster, symbol): target cluster -> count
    std::vector<std::map<int, std::size_t>> votes(
        static_cast<std::size_t>(num_clusters) * static_cast<std::size_t>(sigma));
    int initial = -1;
    for (std::size_t i = 0; i < hq.records.size(); ++i) {
        const auto& r = hq.records[i];
        if (r.step == 0) {
            if (initial == -1) initial = labels[i];
            continue;
        }
        const auto& prev = hq.records[i - 1];
        if (prev.word_id != r.word_id || prev.step + 1 != r.step)
            throw EmptyTrace("extract_automaton: trace records out of order");
        int sym = words[static_cast<std::size_t>(r.word_id)][static_cast<std::size_t>(r.step - 1)];
        if (sym < 0 || sym >= sigma)
            throw IndexOutOfRange("extract_automaton: symbol outside the alphabet");
        votes[static_cast<std::size_t>(labels[i - 1] * sigma + sym)][labels[i]]++;
    }

    if (initial == -1) throw EmptyTrace("extract_automaton: no initial (step 0) record");

    ClusterAutomaton ca;
    ca.machine.kind = kind;
    ca.machine.num_states = num_clusters;
    ca.machine.initial = initial;
    ca.machine.alphabet = alphabet;
    ca.machine.transitions.assign(
        static_cast<std::size_t>(num_clusters) * static_cast<std::size_t>(sigma), -1);

    std::size_t total_obs = 0, outvoted = 0;
    for (int q = 0; q < num_clusters; ++q) {
        for (int a = 0; a < sigma; ++a) {
            const auto& tally = votes[static_cast<std::size_t>(q * sigma + a)];
            if (tally.empty()) {
                ca.holes.emplace_back(q, a);
                continue;
            }
            // majority target; ties broken by smallest cluster id (map order)
            int winner = tally.begin()->first;
            std::size_t best = tally.begin()->second, sum = 0;
            for (const auto& [target, count] : tally) {
                sum += count;
                if (count > best) {
                    best = count;
                    winner = target;
                }
            }
            ca.machine.next_ref(q, a) = winner;
            total_obs += sum;
            outvoted += sum - best;
        }
    }
    ca.conflict_rate = total_obs ? static_cast<double>(outvoted) / static_cast<double>(total_obs) : 0.0;

    // output labels from the RNN's own predictions over cluster members
    std::vector<std::map<int, std::size_t>> out_votes(static_cast<std::size_t>(num_clusters));
    for (std::size_t i = 0; i < hq.records.size(); ++i)
        out_votes[static_cast<std::size_t>(labels[i])]
                 [predicted_label(model, hq.hidden.row(static_cast<Eigen::Index>(i)))]++;

    if (kind == MachineKind::Dfa) {
        ca.machine.accepting.assign(static_cast<std::size_t>(num_clusters), false);
        for (int k = 0; k < num_clusters; ++k)
            ca.machine.accepting[static_cast<std::size_t>(k)] =
                out_votes[static_cast<std::size_t>(k)].count(1) > 0;  // any-vote acceptance
    } else {
        ca.machine.output_alphabet = output_alphabet;
        ca.machine.outputs.assign(static_cast<std::size_t>(num_clusters), 0);
        for (int k = 0; k < num_clusters; ++k) {
            int winner = 0;
            std::size_t best = 0;
            for (const auto& [label, count] : out_votes[static_cast<std::size_t>(k)])
                if (count > best) {
                    best = count;
                    winner = label;
                }
            ca.machine.outputs[static_cast<std::size_t>(k)] = winner;
        }
    }
    return ca;
}

FiniteStateMachine complete_with_sink(const ClusterAutomaton& ca) {
    FiniteStateMachine m = ca.machine;
    if (ca.complete()) return m;
    int sink = m.num_states;
    m.num_states += 1;
    const int sigma = m.alphabet_size();
    std::vector<int> trans(static_cast<std::size_t>(m.num_states) * static_cast<std::size_t>(sigma),
                           sink);
    for (int q = 0; q < sink; ++q)
        for (int a = 0; a < sigma; ++a) {
            int t = ca.machine.next(q, a);
            trans[static_cast<std::size_t>(q * sigma + a)] = t < 0 ? sink : t;
        }
    m.transitions = std::move(trans);
    if (m.kind == MachineKind::Dfa)
        m.accepting.push_back(false);
    else
        m.outputs.push_back(0);
    return m;
}

VerificationReport verify_against_ground_truth(const ClusterAutomaton& ca,
                                               const FiniteStateMachine& machine,
                                               const std::vector<Word>& words,
                                               bool check_equivalence, bool allow_completion) {
    VerificationReport rep;
    rep.holes = ca.holes;
    if (!ca.complete() && !allow_completion) {
        std::ostringstream msg;
        msg << "cluster automaton has " << ca.holes.size() << " transition hole(s):";
        for (const auto& [q, a] : ca.holes) msg << " (" << q << "," << a << ")";
        throw IncompleteAutomaton(msg.str());
    }
    FiniteStateMachine completed = complete_with_sink(ca);
    rep.completed_with_sink = !ca.complete();

    if (!words.empty()) {
        std::size_t agree = 0;
        for (const Word& w : words)
            if (run(completed, w).label == run(machine, w).label) ++agree;
        rep.agreement_rate = static_cast<double>(agree) / static_cast<double>(words.size());
    }

    if (check_equivalence) {
        rep.equivalence_checked = true;
        EquivalenceResult eq = equivalent(minimize(completed), machine);
        rep.language_equivalent = eq.equivalent;
        rep.counterexample = eq.counterexample;
    }
    return rep;
}

std::string format_verification_report(const VerificationReport& r,
                                       const std::vector<std::string>& alphabet) {
    std::ostringstream os;
    os << "agreement_rate\t" << r.agreement_rate << "\n";
    if (r.equivalence_checked) {
        os << "language_equivalent\t" << (r.language_equivalent ? "true" : "false") << "\n";
        if (r.counterexample) {
            os << "counterexample\t";
            for (int a : *r.counterexample) os << alphabet[static_cast<std::size_t>(a)];
            os << "\n";
        }
    }
    os << "completed_with_sink\t" << (r.completed_with_sink ? "true" : "false") << "\n";
    os << "holes\t" << r.holes.size() << "\n";
    return os.str();
}

}  // namespace rsc
