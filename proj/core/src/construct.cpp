#include "rsc/construct.hpp"

#include <cmath>
#include <fstream>
#include <functional>

#include <Eigen/Dense>

#include "rsc/errors.hpp"
#include "rsc/prng.hpp"

namespace rsc {

Eigen::VectorXd TransitionEncoding::pi(int state, int symbol) const {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(hidden_size(), -1.0);
    v[position(state, symbol)] = 1.0;
    return v;
}

Eigen::VectorXd TransitionEncoding::psi(int state) const {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(hidden_size(), -1.0);
    for (int j = 0; j < alphabet_size; ++j) v[position(state, j)] = 1.0;
    return v;
}

Eigen::MatrixXd TransitionEncoding::pi_matrix() const {
    const int h = hidden_size();
    return 2.0 * Eigen::MatrixXd::Identity(h, h) - Eigen::MatrixXd::Ones(h, h);
}

Eigen::VectorXd TransitionEncoding::realized(int state, int symbol, double h_r) const {
    // The saturated dynamics never produce the ideal +-1 encodings: entry
    // magnitudes are tanh of the pre-activation margins 0.5*H_r (own row),
    // 1.5*H_r (own column) and 2.5*H_r (rest). Solving the weight systems
    // against these fixpoint vectors instead of the ideal ones makes the
    // encoding exact for arbitrarily long words; solving against +-1 loses
    // margin every step and collapses after a handful of symbols.
    const double a = std::tanh(0.5 * h_r);
    const double b = std::tanh(1.5 * h_r);
    const double c = std::tanh(2.5 * h_r);
    Eigen::VectorXd v(hidden_size());
    for (int i = 0; i < num_states; ++i)
        for (int j = 0; j < alphabet_size; ++j) {
            double& e = v[position(i, j)];
            if (i == state)
                e = j == symbol ? a : -a;
            else
                e = j == symbol ? -b : -c;
        }
    return v;
}

Eigen::MatrixXd TransitionEncoding::realized_matrix(double h_r) const {
    Eigen::MatrixXd m(hidden_size(), hidden_size());
    for (int i = 0; i < num_states; ++i)
        for (int j = 0; j < alphabet_size; ++j) m.col(position(i, j)) = realized(i, j, h_r);
    return m;
}

namespace {

// Exhaustive words up to the largest length with |Sigma|^len <= budget,
// then random words up to length 50.
void verify_fidelity(const RnnModel& model, const FiniteStateMachine& dfa,
                     const Eigen::VectorXd& h0) {
    int max_exhaustive = 0;
    for (std::size_t total = 1; max_exhaustive < 8; ++max_exhaustive) {
        total *= dfa.alphabet_size();
        if (total > 4096) break;
    }
    std::function<void(Word&)> rec = [&](Word& w) {
        if (predict_class(model, w, h0) != run(dfa, w).label) {
            std::string s;
            for (int a : w) s += dfa.alphabet[a] + " ";
            throw FidelityCheckFailed("constructed RNN disagrees with DFA on word [" + s + "]");
        }
        if (static_cast<int>(w.size()) >= max_exhaustive) return;
        for (int a = 0; a < dfa.alphabet_size(); ++a) {
            w.push_back(a);
            rec(w);
            w.pop_back();
        }
    };
    Word w;
    rec(w);

    SplitMix64 rng(0x5eedf1de11u);
    for (int i = 0; i < 500; ++i) {
        Word rw(1 + rng.below(50));
        for (int& a : rw) a = static_cast<int>(rng.below(dfa.alphabet_size()));
        if (predict_class(model, rw, h0) != run(dfa, rw).label)
            throw FidelityCheckFailed("constructed RNN disagrees with DFA on a random word of length " +
                                      std::to_string(rw.size()));
    }
}

}  // namespace

RnnModel encode_dfa(const FiniteStateMachine& dfa, const ConstructionParams& params) {
    if (dfa.kind != MachineKind::Dfa) throw Error("encode_dfa needs a DFA");
    dfa.validate();
    TransitionEncoding enc{dfa.num_states, dfa.alphabet_size()};
    const int h = enc.hidden_size();
    if (h == 2) throw SingularSystem("hidden size |Q|*|Sigma| = 2: pi matrix 2I - 11^T is singular");
    if (minimize(dfa).num_states < dfa.num_states)
        std::fprintf(stderr, "encode_dfa: input DFA is not minimal; cluster counts will reflect the non-minimal machine\n");

    const int n = dfa.num_states;
    const int m = dfa.alphabet_size();

    // W_hh Pi~ = H_r Psi, where Pi~ holds the realized (tanh-saturated)
    // transition encodings and column (i + j*n) of Psi is psi(delta(q_i, e_j)).
    Eigen::MatrixXd pi_mat = enc.realized_matrix(params.h_r);
    Eigen::MatrixXd psi_targets(h, h);
    Eigen::MatrixXd out_targets = Eigen::MatrixXd::Zero(2, h);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            int col = enc.position(i, j);
            int target = dfa.next(i, j);
            psi_targets.col(col) = enc.psi(target);
            out_targets(dfa.accepting[target] ? 1 : 0, col) = params.h_o;
        }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(pi_mat.transpose());
    if (!lu.isInvertible())
        throw SingularSystem("realized transition-encoding matrix is singular");
    RnnModel model;
    model.arch = Arch::ElmanTanh;
    model.input_size = m;
    model.hidden_size = h;
    model.num_layers = 1;
    model.class_count = 2;

    LayerParams layer;
    // Solve X Pi = B row-wise as Pi^T X^T = B^T.
    layer.w_hh = lu.solve(params.h_r * psi_targets.transpose()).transpose();
    model.w_out = lu.solve(out_targets.transpose()).transpose();

    // Input mask: row p is 0 in column j iff p lies in symbol j's block.
    layer.w_ih = Eigen::MatrixXd::Constant(h, m, -params.h_r);
    for (int p = 0; p < h; ++p) layer.w_ih(p, p / n) = 0.0;
    layer.b_ih = Eigen::VectorXd::Constant(h, -0.5 * params.h_r);
    layer.b_hh = Eigen::VectorXd::Zero(h);
    model.layers.push_back(std::move(layer));

    verify_fidelity(model, dfa, initial_hidden(model, dfa, params));
    return model;
}

RnnModel perturb(const RnnModel& model, double wn, std::uint64_t seed) {
    if (wn < 0) throw Error("noise std-dev must be >= 0");
    RnnModel out = model;
    if (wn == 0.0) return out;
    SplitMix64 rng(seed);
    for (auto& l : out.layers) {
        for (Eigen::Index c = 0; c < l.w_ih.cols(); ++c)
            for (Eigen::Index r = 0; r < l.w_ih.rows(); ++r) l.w_ih(r, c) += rng.gaussian(0, wn);
        for (Eigen::Index c = 0; c < l.w_hh.cols(); ++c)
            for (Eigen::Index r = 0; r < l.w_hh.rows(); ++r) l.w_hh(r, c) += rng.gaussian(0, wn);
        for (Eigen::Index r = 0; r < l.b_ih.size(); ++r) l.b_ih[r] += rng.gaussian(0, wn);
        for (Eigen::Index r = 0; r < l.b_hh.size(); ++r) l.b_hh[r] += rng.gaussian(0, wn);
    }
    return out;
}

Eigen::VectorXd initial_hidden(const RnnModel& model, const FiniteStateMachine& dfa,
                               const ConstructionParams& params) {
    if (model.hidden_size != dfa.num_states * dfa.alphabet_size())
        throw ShapeMismatch("model was not constructed from this DFA");
    TransitionEncoding enc{dfa.num_states, dfa.alphabet_size()};
    // W_hh v(t) = H_r psi(target(t)) holds exactly by construction for every
    // realized encoding, so the realized vector of any transition entering q0
    // solves W_hh h0 = H_r psi(q0) -- and makes the empty-word output correct
    // for free. The system is unsolvable when q0 has no incoming transition
    // (psi(q0) then lies outside the range of W_hh, whose rank is |Q|).
    for (int i = 0; i < dfa.num_states; ++i)
        for (int j = 0; j < dfa.alphabet_size(); ++j)
            if (dfa.next(i, j) == dfa.initial) return enc.realized(i, j, params.h_r);
    throw SingularSystem("initial state has no incoming transition; h0 system unsolvable");
}

void save_construction_sidecar(const std::string& path, const FiniteStateMachine& dfa,
                               const ConstructionParams& params, std::uint64_t noise_seed) {
    // FNV-1a over the canonical text form as a cheap content hash.
    std::string text = format_machine(dfa);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "' for writing");
    f << "dfa_hash " << hash << "\n"
      << "h_r " << params.h_r << "\n"
      << "h_o " << params.h_o << "\n"
      << "wn " << params.wn << "\n"
      << "noise_seed " << noise_seed << "\n";
}

}  // namespace rsc
