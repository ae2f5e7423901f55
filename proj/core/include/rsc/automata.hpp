#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsc/errors.hpp"

namespace rsc {

enum class MachineKind { Dfa, Moore };

using Word = std::vector<int>;  // dense symbol ids

// DFA or Moore machine with dense integer state ids 0..n-1, initial state 0
// after canonicalization, and a total transition map.
struct FiniteStateMachine {
    MachineKind kind = MachineKind::Dfa;
    int num_states = 0;
    int initial = 0;
    std::vector<std::string> alphabet;         // symbol names; index == symbol id
    std::vector<int> transitions;              // [q * |alphabet| + a] -> q'
    std::vector<bool> accepting;               // dfa only
    std::vector<int> outputs;                  // moore only: state -> output id
    std::vector<std::string> output_alphabet;  // moore only

    int alphabet_size() const { return static_cast<int>(alphabet.size()); }
    int next(int q, int a) const { return transitions[q * alphabet_size() + a]; }
    int& next_ref(int q, int a) { return transitions[q * alphabet_size() + a]; }

    // Classes as seen by an RNN head: dfa -> {0 = reject, 1 = accept},
    // moore -> output ids.
    int class_count() const {
        return kind == MachineKind::Dfa ? 2 : static_cast<int>(output_alphabet.size());
    }
    int label_of(int q) const {
        return kind == MachineKind::Dfa ? (accepting[q] ? 1 : 0) : outputs[q];
    }

    int symbol_id(const std::string& name) const;
    void validate() const;  // throws ParseError on violated invariants
};

struct StateTrace {
    Word word;
    std::vector<int> visited;  // length |word| + 1, starts at initial
};

struct RunResult {
    int label = 0;  // class id (dfa: 0/1)
    StateTrace trace;
};

RunResult run(const FiniteStateMachine& m, const Word& word);

FiniteStateMachine generate_random(MachineKind kind, int num_states, int alphabet_size,
                                   int num_outputs, std::uint64_t seed);

FiniteStateMachine minimize(const FiniteStateMachine& m);

struct EquivalenceResult {
    bool equivalent = false;
    std::optional<Word> counterexample;  // shortest disagreeing word
};

EquivalenceResult equivalent(const FiniteStateMachine& m1, const FiniteStateMachine& m2);

FiniteStateMachine load_machine(const std::string& path);
void save_machine(const FiniteStateMachine& m, const std::string& path);
FiniteStateMachine parse_machine(const std::string& text);
std::string format_machine(const FiniteStateMachine& m);
std::string to_dot(const FiniteStateMachine& m);

bool structurally_equal(const FiniteStateMachine& a, const FiniteStateMachine& b);

// Built-in benchmark languages over {0, 1}.
FiniteStateMachine tomita3();  // odd 1-blocks must be followed by even 0-blocks (5 states)
FiniteStateMachine tomita5();  // even number of 0s and even number of 1s (4 states)
FiniteStateMachine tomita7();  // 0*1*0* (4 states)
std::optional<FiniteStateMachine> builtin_machine(const std::string& name);

}  // namespace rsc
