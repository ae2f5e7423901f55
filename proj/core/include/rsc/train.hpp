#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsc/data.hpp"
#include "rsc/rnn.hpp"

namespace rsc {

struct TrainConfig {
    double learning_rate = 0.0005;
    int batch_size = 64;
    int max_epochs = 300;
    int stop_after_perfect_epochs = 3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;           // epoch shuffling
    bool keep_checkpoints = false;    // snapshot model each epoch (curve tracking)
    // Observable initial state; empty means all zeros. Constructed RNNs are
    // retrained from their encoded h0 so the encoding's initial-state
    // assumption survives the fine-tuning.
    Eigen::VectorXd initial_observable;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
    std::vector<RnnModel> checkpoints;  // per epoch, when keep_checkpoints
    bool reached_perfect = false;
};

// Gradients mirror the model's parameter tensors.
struct Gradients {
    std::vector<Eigen::MatrixXd> w_ih, w_hh;
    std::vector<Eigen::VectorXd> b_ih, b_hh;
    Eigen::MatrixXd w_out;
};

Gradients zero_gradients(const RnnModel& model);

// Mean cross-entropy over a batch of equal-length words, full BPTT, gradients
// accumulated into `grads`. Returns the mean loss. `h0` is the observable
// initial state (nullptr = zeros).
double batch_loss_and_grads(const RnnModel& model, const std::vector<Word>& words,
                            const std::vector<int>& labels, Gradients& grads,
                            const Eigen::VectorXd* h0 = nullptr);

// Loss without gradients; used by the finite-difference checks.
double batch_loss(const RnnModel& model, const std::vector<Word>& words,
                  const std::vector<int>& labels, const Eigen::VectorXd* h0 = nullptr);

double cross_entropy(const Eigen::VectorXd& class_probs, int label);

TrainingHistory train(RnnModel& model, const LabeledDataset& dataset, const TrainConfig& config);

double validate_accuracy(const RnnModel& model, const FiniteStateMachine& machine,
                         const std::vector<Word>& av,
                         const Eigen::VectorXd* h0 = nullptr);

void save_history_tsv(const TrainingHistory& h, const std::string& path);

}  // namespace rsc
