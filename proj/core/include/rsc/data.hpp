#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rsc/automata.hpp"

namespace rsc {

// Words with ground-truth labels. Training entries come first, validation
// entries after split_index. Sampling is with replacement, so duplicates may
// appear across the split boundary.
struct LabeledDataset {
    struct Entry {
        Word word;
        int label;
    };
    std::vector<Entry> entries;
    std::size_t split_index = 0;  // entries[0..split) train, [split..) validation
    int class_count = 2;

    std::size_t train_size() const { return split_index; }
    std::size_t val_size() const { return entries.size() - split_index; }
};

LabeledDataset sample_dataset(const FiniteStateMachine& machine, std::size_t n_total,
                              int min_len, int max_len, double val_fraction,
                              std::uint64_t seed);

Eigen::VectorXd one_hot(int symbol_id, int alphabet_size);

// Unlabeled accuracy-validation words (AV set).
std::vector<Word> sample_accuracy_set(const FiniteStateMachine& machine, std::size_t n,
                                      int min_len, int max_len, std::uint64_t seed);

void save_dataset(const LabeledDataset& d, const std::string& path);
LabeledDataset load_dataset(const std::string& path, int class_count);

}  // namespace rsc
