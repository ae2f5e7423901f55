#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rsc/automata.hpp"
#include "rsc/probe.hpp"
#include "rsc/rnn.hpp"

namespace rsc {

// Automaton over cluster ids induced by consecutive clustered hidden states.
// The embedded machine's transition map may contain -1 entries ("holes") for
// (cluster, symbol) pairs never observed in the trace; complete it with a
// sink before running standard machine algorithms.
struct ClusterAutomaton {
    FiniteStateMachine machine;
    std::string method;  // clustering provenance
    std::string params;
    double conflict_rate = 0.0;              // observed transitions outvoted by the majority
    std::vector<std::pair<int, int>> holes;  // (cluster, symbol)

    bool complete() const { return holes.empty(); }
};

// Builds the cluster automaton from a probed trace and its cluster labels.
// `words` must be the words that produced `hq`; the RNN provides the output
// labels (DFA: accepting iff any member state predicts accept; Moore:
// majority output).
ClusterAutomaton extract_automaton(const HQSample& hq, const std::vector<int>& labels,
                                   const RnnModel& model, const std::vector<Word>& words,
                                   const std::vector<std::string>& alphabet,
                                   MachineKind kind = MachineKind::Dfa,
                                   const std::vector<std::string>& output_alphabet = {});

// Total machine with holes redirected to a fresh rejecting (output-0) sink.
FiniteStateMachine complete_with_sink(const ClusterAutomaton& ca);

struct VerificationReport {
    double agreement_rate = 0.0;  // vs. ground truth over the given words
    bool equivalence_checked = false;
    bool language_equivalent = false;
    std::optional<Word> counterexample;
    bool completed_with_sink = false;
    std::vector<std::pair<int, int>> holes;
};

// Agreement on `words` plus, when `check_equivalence`, full language
// equivalence of minimize(ca) against `machine`. A holey automaton is
// completed with a rejecting sink first unless `allow_completion` is false,
// in which case IncompleteAutomaton is thrown.
VerificationReport verify_against_ground_truth(const ClusterAutomaton& ca,
                                               const FiniteStateMachine& machine,
                                               const std::vector<Word>& words,
                                               bool check_equivalence = true,
                                               bool allow_completion = true);

std::string format_verification_report(const VerificationReport& r,
                                       const std::vector<std::string>& alphabet);

}  // namespace rsc
