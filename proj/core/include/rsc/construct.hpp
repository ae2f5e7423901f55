#pragma once

#include <cstdint>
#include <string>

#include "rsc/automata.hpp"
#include "rsc/rnn.hpp"

namespace rsc {

// Saturation / noise presets. The three stock configurations are
// (1.5, 1.5, 0.05), (2, 2, 0.1) and (3, 3, 0.2).
struct ConstructionParams {
    double h_r = 1.5;  // recurrent saturation factor
    double h_o = 1.5;  // output saturation factor
    double wn = 0.0;   // weight-noise std-dev (applied separately via perturb)
};

// Transition-position bookkeeping: transition (state i, symbol j) lives at
// index i + j*|Q|; hidden size is |Q|*|Sigma|.
struct TransitionEncoding {
    int num_states = 0;
    int alphabet_size = 0;

    int hidden_size() const { return num_states * alphabet_size; }
    int position(int state, int symbol) const { return state + symbol * num_states; }

    // pi: -1 everywhere, +1 at the transition's own position.
    Eigen::VectorXd pi(int state, int symbol) const;
    // psi(q): +1 at every position of a transition sourced at q, -1 elsewhere.
    Eigen::VectorXd psi(int state) const;
    // Matrix of all pi columns in position order; equals 2I - 11^T.
    Eigen::MatrixXd pi_matrix() const;

    // Tanh-realized encoding of a transition: the actual fixpoint the
    // saturated dynamics reach, with entry magnitudes tanh(0.5 H_r),
    // tanh(1.5 H_r) and tanh(2.5 H_r) instead of the ideal 1.
    Eigen::VectorXd realized(int state, int symbol, double h_r) const;
    Eigen::MatrixXd realized_matrix(double h_r) const;
};

// Exact one-layer Elman-tanh encoding of a DFA. Verifies its own fidelity on
// short exhaustive and random words; throws FidelityCheckFailed on any
// disagreement and SingularSystem if |Q|*|Sigma| == 2 (pi matrix singular).
RnnModel encode_dfa(const FiniteStateMachine& dfa, const ConstructionParams& params);

// Gaussian N(0, wn^2) noise on w_ih, w_hh, b_ih, b_hh (output head untouched).
RnnModel perturb(const RnnModel& model, double wn, std::uint64_t seed);

// h0 with W_hh h0 = H_r psi(q0): the encoding of any transition entering q0.
// Throws SingularSystem when q0 has no incoming transition.
Eigen::VectorXd initial_hidden(const RnnModel& model, const FiniteStateMachine& dfa,
                               const ConstructionParams& params);

// Provenance sidecar written next to constructed checkpoints.
void save_construction_sidecar(const std::string& path, const FiniteStateMachine& dfa,
                               const ConstructionParams& params, std::uint64_t noise_seed);

}  // namespace rsc
