#include "rsc/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "rsc/errors.hpp"
#include "rsc/prng.hpp"
#include "rsc/rnn_detail.hpp"

namespace rsc {

Gradients zero_gradients(const RnnModel& model) {
    Gradients g;
    for (const auto& l : model.layers) {
        g.w_ih.push_back(Eigen::MatrixXd::Zero(l.w_ih.rows(), l.w_ih.cols()));
        g.w_hh.push_back(Eigen::MatrixXd::Zero(l.w_hh.rows(), l.w_hh.cols()));
        g.b_ih.push_back(Eigen::VectorXd::Zero(l.b_ih.size()));
        g.b_hh.push_back(Eigen::VectorXd::Zero(l.b_hh.size()));
    }
    g.w_out = Eigen::MatrixXd::Zero(model.w_out.rows(), model.w_out.cols());
    return g;
}

double cross_entropy(const Eigen::VectorXd& class_probs, int label) {
    double p = std::max(class_probs[label], 1e-12);
    return -std::log(p);
}

namespace {

// Forward over a batch of equal-length words; fills the cache grid
// [time][layer] when caches != nullptr. Returns final top-layer hidden.
Eigen::MatrixXd batch_forward(const RnnModel& model, const std::vector<Word>& words,
                              std::vector<std::vector<detail::StepCache>>* caches,
                              const Eigen::VectorXd* h0) {
    const int batch = static_cast<int>(words.size());
    const std::size_t len = words.front().size();
    RnnState s = zero_state(model, batch);
    if (h0 && h0->size() > 0) {
        RnnState single = state_from_observable(model, *h0);
        for (int l = 0; l < model.num_layers; ++l) {
            s.h[l] = single.h[l].col(0).replicate(1, batch);
            if (model.arch == Arch::Lstm) s.c[l] = single.c[l].col(0).replicate(1, batch);
        }
    }
    for (std::size_t t = 0; t < len; ++t) {
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(model.input_size, batch);
        for (int b = 0; b < batch; ++b) x(words[b][t], b) = 1.0;
        if (caches) caches->emplace_back(model.num_layers);
        RnnState next = s;
        for (int l = 0; l < model.num_layers; ++l) {
            Eigen::MatrixXd h_out, c_out;
            detail::layer_step(model.arch, model.layers[l], x, s.h[l], s.c[l], h_out, c_out,
                               caches ? &caches->back()[l] : nullptr);
            next.h[l] = h_out;
            if (model.arch == Arch::Lstm) next.c[l] = c_out;
            x = next.h[l];
        }
        s = next;
    }
    return s.h.back();
}

Eigen::MatrixXd batch_softmax(const Eigen::MatrixXd& logits) {
    Eigen::ArrayXXd a = logits.array();
    a.rowwise() -= logits.colwise().maxCoeff().array();
    a = a.exp();
    a.rowwise() /= a.colwise().sum();
    return a.matrix();
}

}  // namespace

double batch_loss(const RnnModel& model, const std::vector<Word>& words,
                  const std::vector<int>& labels, const Eigen::VectorXd* h0) {
    for (const auto& w : words)
        if (w.size() != words.front().size())
            throw ShapeMismatch("batch words must have equal length");
    Eigen::MatrixXd h_final = batch_forward(model, words, nullptr, h0);
    Eigen::MatrixXd probs = batch_softmax(model.w_out * h_final);
    double loss = 0.0;
    for (std::size_t b = 0; b < words.size(); ++b)
        loss += cross_entropy(probs.col(static_cast<Eigen::Index>(b)), labels[b]);
    return loss / static_cast<double>(words.size());
}

double batch_loss_and_grads(const RnnModel& model, const std::vector<Word>& words,
                            const std::vector<int>& labels, Gradients& grads,
                            const Eigen::VectorXd* h0) {
    for (const auto& w : words)
        if (w.size() != words.front().size())
            throw ShapeMismatch("batch words must have equal length");
    const int batch = static_cast<int>(words.size());
    const std::size_t len = words.front().size();

    std::vector<std::vector<detail::StepCache>> caches;
    caches.reserve(len);
    Eigen::MatrixXd h_final = batch_forward(model, words, &caches, h0);
    Eigen::MatrixXd probs = batch_softmax(model.w_out * h_final);

    double loss = 0.0;
    Eigen::MatrixXd dlogits = probs;
    for (int b = 0; b < batch; ++b) {
        loss += cross_entropy(probs.col(b), labels[b]);
        dlogits(labels[b], b) -= 1.0;
    }
    loss /= batch;
    dlogits /= static_cast<double>(batch);

    grads.w_out += dlogits * h_final.transpose();

    // BPTT: dh/dc per layer, walked backwards through time.
    std::vector<Eigen::MatrixXd> dh(model.num_layers), dc(model.num_layers);
    for (int l = 0; l < model.num_layers; ++l) {
        dh[l] = Eigen::MatrixXd::Zero(model.hidden_size, batch);
        dc[l] = Eigen::MatrixXd::Zero(model.hidden_size, batch);
    }
    if (len > 0) dh[model.num_layers - 1] = model.w_out.transpose() * dlogits;
    // Empty words never occur (dataset min length is 1), but keep the head
    // gradient correct anyway: with len == 0 the state is all zeros and only
    // w_out receives gradient.

    for (std::size_t t = len; t-- > 0;) {
        Eigen::MatrixXd dx;
        for (int l = model.num_layers - 1; l >= 0; --l) {
            detail::LayerGrads lg{grads.w_ih[l], grads.w_hh[l], grads.b_ih[l], grads.b_hh[l]};
            Eigen::MatrixXd dh_prev, dc_prev;
            detail::layer_backward(model.arch, model.layers[l], caches[t][l], dh[l], dc[l], lg,
                                   dx, dh_prev, dc_prev);
            grads.w_ih[l] = std::move(lg.w_ih);
            grads.w_hh[l] = std::move(lg.w_hh);
            grads.b_ih[l] = std::move(lg.b_ih);
            grads.b_hh[l] = std::move(lg.b_hh);
            dh[l] = dh_prev;
            if (model.arch == Arch::Lstm)
                dc[l] = dc_prev;
            if (l > 0) dh[l - 1] += dx;  // layer below sees dx through its hidden output
        }
    }
    return loss;
}

namespace {

struct AdamState {
    std::vector<Eigen::MatrixXd> m_mat, v_mat;
    std::vector<Eigen::VectorXd> m_vec, v_vec;
    long step = 0;
};

AdamState make_adam(const RnnModel& model) {
    AdamState a;
    Gradients g = zero_gradients(const_cast<RnnModel&>(model));
    for (std::size_t l = 0; l < g.w_ih.size(); ++l) {
        a.m_mat.push_back(g.w_ih[l]);
        a.m_mat.push_back(g.w_hh[l]);
        a.v_mat.push_back(g.w_ih[l]);
        a.v_mat.push_back(g.w_hh[l]);
        a.m_vec.push_back(g.b_ih[l]);
        a.m_vec.push_back(g.b_hh[l]);
        a.v_vec.push_back(g.b_ih[l]);
        a.v_vec.push_back(g.b_hh[l]);
    }
    a.m_mat.push_back(g.w_out);
    a.v_mat.push_back(g.w_out);
    return a;
}

void adam_step(RnnModel& model, const Gradients& grads, AdamState& adam,
               const TrainConfig& cfg) {
    ++adam.step;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.step));

    auto update_mat = [&](Eigen::MatrixXd& p, const Eigen::MatrixXd& g, std::size_t i) {
        adam.m_mat[i] = cfg.adam_beta1 * adam.m_mat[i] + (1.0 - cfg.adam_beta1) * g;
        adam.v_mat[i] =
            (cfg.adam_beta2 * adam.v_mat[i].array() + (1.0 - cfg.adam_beta2) * g.array().square())
                .matrix();
        p.array() -= cfg.learning_rate * (adam.m_mat[i].array() / bc1) /
                     ((adam.v_mat[i].array() / bc2).sqrt() + cfg.adam_eps);
    };
    auto update_vec = [&](Eigen::VectorXd& p, const Eigen::VectorXd& g, std::size_t i) {
        adam.m_vec[i] = cfg.adam_beta1 * adam.m_vec[i] + (1.0 - cfg.adam_beta1) * g;
        adam.v_vec[i] =
            (cfg.adam_beta2 * adam.v_vec[i].array() + (1.0 - cfg.adam_beta2) * g.array().square())
                .matrix();
        p.array() -= cfg.learning_rate * (adam.m_vec[i].array() / bc1) /
                     ((adam.v_vec[i].array() / bc2).sqrt() + cfg.adam_eps);
    };

    std::size_t mi = 0, vi = 0;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        update_mat(model.layers[l].w_ih, grads.w_ih[l], mi++);
        update_mat(model.layers[l].w_hh, grads.w_hh[l], mi++);
        update_vec(model.layers[l].b_ih, grads.b_ih[l], vi++);
        update_vec(model.layers[l].b_hh, grads.b_hh[l], vi++);
    }
    update_mat(model.w_out, grads.w_out, mi++);
}

}  // namespace

TrainingHistory train(RnnModel& model, const LabeledDataset& dataset, const TrainConfig& config) {
    for (const auto& e : dataset.entries)
        if (e.label >= model.class_count)
            throw ShapeMismatch("dataset label exceeds model class count");

    // Bucket training words by length: batches then need no padding.
    std::map<std::size_t, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < dataset.train_size(); ++i)
        buckets[dataset.entries[i].word.size()].push_back(i);

    AdamState adam = make_adam(model);
    TrainingHistory history;
    SplitMix64 rng(config.seed);
    int perfect_streak = 0;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        // assemble batches, shuffle within buckets and across batch order
        std::vector<std::vector<std::size_t>> batches;
        for (auto& [len, idxs] : buckets) {
            rng.shuffle(idxs);
            for (std::size_t i = 0; i < idxs.size(); i += config.batch_size) {
                std::size_t end = std::min(idxs.size(), i + config.batch_size);
                batches.emplace_back(idxs.begin() + i, idxs.begin() + end);
            }
        }
        rng.shuffle(batches);

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (const auto& batch : batches) {
            std::vector<Word> words;
            std::vector<int> labels;
            words.reserve(batch.size());
            for (std::size_t idx : batch) {
                words.push_back(dataset.entries[idx].word);
                labels.push_back(dataset.entries[idx].label);
            }
            Gradients grads = zero_gradients(model);
            double loss = batch_loss_and_grads(model, words, labels, grads,
                                               config.initial_observable.size() > 0
                                                   ? &config.initial_observable
                                                   : nullptr);
            if (!std::isfinite(loss))
                throw Diverged("training loss became non-finite at epoch " +
                               std::to_string(epoch));
            adam_step(model, grads, adam, config);
            epoch_loss += loss * static_cast<double>(batch.size());
            seen += batch.size();
        }
        epoch_loss /= static_cast<double>(std::max<std::size_t>(seen, 1));

        // validation accuracy against stored labels
        std::size_t correct = 0;
        Eigen::VectorXd h0 = config.initial_observable.size() > 0
                                 ? config.initial_observable
                                 : Eigen::VectorXd::Zero(model.observable_size());
        for (std::size_t i = dataset.split_index; i < dataset.entries.size(); ++i)
            if (predict_class(model, dataset.entries[i].word, h0) == dataset.entries[i].label)
                ++correct;
        double val_acc = dataset.val_size() == 0
                             ? 1.0
                             : static_cast<double>(correct) / static_cast<double>(dataset.val_size());

        history.epochs.push_back({epoch, epoch_loss, val_acc});
        if (config.keep_checkpoints) history.checkpoints.push_back(model);

        perfect_streak = val_acc == 1.0 ? perfect_streak + 1 : 0;
        if (perfect_streak >= config.stop_after_perfect_epochs) {
            history.reached_perfect = true;
            break;
        }
    }
    return history;
}

double validate_accuracy(const RnnModel& model, const FiniteStateMachine& machine,
                         const std::vector<Word>& av, const Eigen::VectorXd* h0_in) {
    if (av.empty()) throw EmptySet("accuracy-validation set is empty");
    Eigen::VectorXd h0 = h0_in && h0_in->size() > 0
                             ? *h0_in
                             : Eigen::VectorXd::Zero(model.observable_size());
    std::size_t agree = 0;
    for (const auto& w : av)
        if (predict_class(model, w, h0) == run(machine, w).label) ++agree;
    return static_cast<double>(agree) / static_cast<double>(av.size());
}

void save_history_tsv(const TrainingHistory& h, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "' for writing");
    f << "epoch\tloss\tval_acc\n";
    for (const auto& e : h.epochs) f << e.epoch << '\t' << e.loss << '\t' << e.val_accuracy << '\n';
}

}  // namespace rsc
