#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rsc/automata.hpp"

namespace rsc {

enum class Arch { ElmanTanh, ElmanRelu, Gru, Lstm };

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& name);
int gate_count(Arch a);  // 1 elman, 3 gru, 4 lstm

// One recurrent layer. Gate blocks are stacked along rows in PyTorch order:
// GRU [r; z; n], LSTM [i; f; g; o].
struct LayerParams {
    Eigen::MatrixXd w_ih;  // (gates*hidden) x input
    Eigen::MatrixXd w_hh;  // (gates*hidden) x hidden
    Eigen::VectorXd b_ih;
    Eigen::VectorXd b_hh;
};

struct RnnModel {
    Arch arch = Arch::ElmanTanh;
    int input_size = 0;
    int hidden_size = 0;
    int num_layers = 1;
    int class_count = 2;
    std::vector<LayerParams> layers;
    Eigen::MatrixXd w_out;  // class_count x hidden (no bias)

    // Observable state: all layers' hidden vectors concatenated; LSTM
    // additionally appends the cell states, giving [h_0..h_L; c_0..c_L].
    int observable_size() const {
        return num_layers * hidden_size * (arch == Arch::Lstm ? 2 : 1);
    }
};

RnnModel init_model(Arch arch, int num_layers, int hidden_size, int input_size,
                    int class_count, std::uint64_t seed);

// Recurrent state as batch matrices, one (h, c) pair per layer (c unused
// except for LSTM). Columns are batch lanes.
struct RnnState {
    std::vector<Eigen::MatrixXd> h;
    std::vector<Eigen::MatrixXd> c;
};

RnnState zero_state(const RnnModel& model, int batch);
RnnState state_from_observable(const RnnModel& model, const Eigen::VectorXd& obs);
Eigen::VectorXd observable(const RnnModel& model, const RnnState& s);

// Single cell update for the whole stack; pure in (params, state, input).
RnnState step(const RnnModel& model, const RnnState& state, const Eigen::MatrixXd& input);

struct ForwardResult {
    std::vector<Eigen::VectorXd> trace;  // observable states, length |word|+1
    Eigen::VectorXd class_probs;         // softmax(W_out * top hidden)
};

ForwardResult forward(const RnnModel& model, const Word& word, const Eigen::VectorXd& h0);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
// Class probabilities from an observable state (uses the top layer's h part).
Eigen::VectorXd output_probs(const RnnModel& model, const RnnState& s);
int predict_class(const RnnModel& model, const Word& word, const Eigen::VectorXd& h0);

void save_model(const RnnModel& model, const std::string& path);
RnnModel load_model(const std::string& path);

// Flat view over all parameter tensors, used by the optimizer and the
// finite-difference gradient checks.
std::vector<Eigen::MatrixXd*> parameter_tensors(RnnModel& model);
std::vector<Eigen::VectorXd*> parameter_vectors(RnnModel& model);

}  // namespace rsc
