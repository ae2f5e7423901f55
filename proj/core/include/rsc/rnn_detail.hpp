#pragma once

// Shared cell math between inference (rnn.cpp) and BPTT (train.cpp).

#include <Eigen/Core>

#include "rsc/rnn.hpp"

namespace rsc::detail {

struct StepCache {
    Eigen::MatrixXd x, h_prev, c_prev;
    Eigen::MatrixXd h, c;
    Eigen::MatrixXd pre;              // elman preactivation
    Eigen::MatrixXd r, z, n, hn_lin;  // gru
    Eigen::MatrixXd i, f, g, o;       // lstm gates
};

struct LayerGrads {
    Eigen::MatrixXd w_ih, w_hh;
    Eigen::VectorXd b_ih, b_hh;
};

// One step of one layer over a batch (columns). Fills `cache` when non-null.
void layer_step(Arch arch, const LayerParams& params, const Eigen::MatrixXd& x,
                const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& c_prev,
                Eigen::MatrixXd& h_out, Eigen::MatrixXd& c_out, StepCache* cache);

// Backward through one cached step. Accumulates parameter gradients into
// `grads` and writes input/state gradients.
void layer_backward(Arch arch, const LayerParams& params, const StepCache& cache,
                    const Eigen::MatrixXd& dh_out, const Eigen::MatrixXd& dc_out,
                    LayerGrads& grads, Eigen::MatrixXd& dx, Eigen::MatrixXd& dh_prev,
                    Eigen::MatrixXd& dc_prev);

}  // namespace rsc::detail
