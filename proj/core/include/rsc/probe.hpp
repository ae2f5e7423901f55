#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "rsc/automata.hpp"
#include "rsc/rnn.hpp"

namespace rsc {

// Co-simulation sample: one record per word prefix (including the empty
// prefix), carrying the RNN's observable state and the automaton state.
struct HQSample {
    struct Record {
        int word_id;
        int step;   // 0 == initial record (h0, q0)
        int state;  // automaton state after the prefix
    };
    std::vector<Record> records;
    Eigen::MatrixXd hidden;  // one row per record
    int num_states = 0;      // |Q| of the ground-truth machine

    std::size_t size() const { return records.size(); }
    std::vector<int> states() const;
    // Row indices of the per-word initial records (duplicates of h0).
    std::vector<std::size_t> initial_records() const;
};

HQSample collect_hq(const FiniteStateMachine& machine, const RnnModel& model,
                    const Eigen::VectorXd& h0, const std::vector<Word>& words);

void save_hq_tsv(const HQSample& hq, const std::string& path);
HQSample load_hq_tsv(const std::string& path, int num_states);

}  // namespace rsc
