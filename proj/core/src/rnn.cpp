#include "rsc/rnn.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rsc/data.hpp"
#include "rsc/errors.hpp"
#include "rsc/prng.hpp"
#include "rsc/rnn_detail.hpp"

namespace rsc {

std::string arch_name(Arch a) {
    switch (a) {
        case Arch::ElmanTanh: return "elman_tanh";
        case Arch::ElmanRelu: return "elman_relu";
        case Arch::Gru: return "gru";
        case Arch::Lstm: return "lstm";
    }
    return "?";
}

Arch arch_from_name(const std::string& name) {
    if (name == "elman_tanh") return Arch::ElmanTanh;
    if (name == "elman_relu") return Arch::ElmanRelu;
    if (name == "gru") return Arch::Gru;
    if (name == "lstm") return Arch::Lstm;
    throw Error("unknown architecture '" + name + "'");
}

int gate_count(Arch a) {
    switch (a) {
        case Arch::ElmanTanh:
        case Arch::ElmanRelu: return 1;
        case Arch::Gru: return 3;
        case Arch::Lstm: return 4;
    }
    return 1;
}

RnnModel init_model(Arch arch, int num_layers, int hidden_size, int input_size,
                    int class_count, std::uint64_t seed) {
    if (hidden_size < 1) throw ShapeMismatch("hidden_size must be >= 1");
    RnnModel m;
    m.arch = arch;
    m.input_size = input_size;
    m.hidden_size = hidden_size;
    m.num_layers = num_layers;
    m.class_count = class_count;

    SplitMix64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    auto fill = [&](Eigen::MatrixXd& mat) {
        for (Eigen::Index c = 0; c < mat.cols(); ++c)
            for (Eigen::Index r = 0; r < mat.rows(); ++r)
                mat(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
    };

    const int g = gate_count(arch);
    for (int l = 0; l < num_layers; ++l) {
        LayerParams p;
        int in = l == 0 ? input_size : hidden_size;
        p.w_ih.resize(g * hidden_size, in);
        p.w_hh.resize(g * hidden_size, hidden_size);
        p.b_ih.resize(g * hidden_size);
        p.b_hh.resize(g * hidden_size);
        fill(p.w_ih);
        fill(p.w_hh);
        Eigen::MatrixXd bi(p.b_ih.size(), 1), bh(p.b_hh.size(), 1);
        fill(bi);
        fill(bh);
        p.b_ih = bi.col(0);
        p.b_hh = bh.col(0);
        m.layers.push_back(std::move(p));
    }
    m.w_out.resize(class_count, hidden_size);
    fill(m.w_out);
    return m;
}

namespace detail {

namespace {
inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
    return (1.0 + (-x.array()).exp()).inverse().matrix();
}
}  // namespace

void layer_step(Arch arch, const LayerParams& params, const Eigen::MatrixXd& x,
                const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& c_prev,
                Eigen::MatrixXd& h_out, Eigen::MatrixXd& c_out, StepCache* cache) {
    const Eigen::Index h = h_prev.rows();
    Eigen::MatrixXd gi = params.w_ih * x;
    gi.colwise() += params.b_ih;
    Eigen::MatrixXd gh = params.w_hh * h_prev;
    gh.colwise() += params.b_hh;

    switch (arch) {
        case Arch::ElmanTanh: {
            Eigen::MatrixXd pre = gi + gh;
            h_out = pre.array().tanh().matrix();
            if (cache) cache->pre = pre;
            break;
        }
        case Arch::ElmanRelu: {
            Eigen::MatrixXd pre = gi + gh;
            h_out = pre.array().max(0.0).matrix();
            if (cache) cache->pre = pre;
            break;
        }
        case Arch::Gru: {
            Eigen::MatrixXd r = sigmoid(gi.topRows(h) + gh.topRows(h));
            Eigen::MatrixXd z = sigmoid(gi.middleRows(h, h) + gh.middleRows(h, h));
            Eigen::MatrixXd hn_lin = gh.bottomRows(h);
            Eigen::MatrixXd n =
                (gi.bottomRows(h).array() + r.array() * hn_lin.array()).tanh().matrix();
            h_out = ((1.0 - z.array()) * n.array() + z.array() * h_prev.array()).matrix();
            if (cache) {
                cache->r = std::move(r);
                cache->z = std::move(z);
                cache->n = std::move(n);
                cache->hn_lin = std::move(hn_lin);
            }
            break;
        }
        case Arch::Lstm: {
            Eigen::MatrixXd a = gi + gh;
            Eigen::MatrixXd i = sigmoid(a.topRows(h));
            Eigen::MatrixXd f = sigmoid(a.middleRows(h, h));
            Eigen::MatrixXd g = a.middleRows(2 * h, h).array().tanh().matrix();
            Eigen::MatrixXd o = sigmoid(a.bottomRows(h));
            c_out = (f.array() * c_prev.array() + i.array() * g.array()).matrix();
            h_out = (o.array() * c_out.array().tanh()).matrix();
            if (cache) {
                cache->i = std::move(i);
                cache->f = std::move(f);
                cache->g = std::move(g);
                cache->o = std::move(o);
                cache->c = c_out;
            }
            break;
        }
    }
    if (cache) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->c_prev = c_prev;
        cache->h = h_out;
    }
}

void layer_backward(Arch arch, const LayerParams& params, const StepCache& cache,
                    const Eigen::MatrixXd& dh_out, const Eigen::MatrixXd& dc_out,
                    LayerGrads& grads, Eigen::MatrixXd& dx, Eigen::MatrixXd& dh_prev,
                    Eigen::MatrixXd& dc_prev) {
    const Eigen::Index h = cache.h_prev.rows();
    switch (arch) {
        case Arch::ElmanTanh:
        case Arch::ElmanRelu: {
            Eigen::MatrixXd dpre;
            if (arch == Arch::ElmanTanh)
                dpre = (dh_out.array() * (1.0 - cache.h.array().square())).matrix();
            else
                dpre = (dh_out.array() * (cache.pre.array() > 0.0).cast<double>()).matrix();
            grads.w_ih += dpre * cache.x.transpose();
            grads.w_hh += dpre * cache.h_prev.transpose();
            grads.b_ih += dpre.rowwise().sum();
            grads.b_hh += dpre.rowwise().sum();
            dx = params.w_ih.transpose() * dpre;
            dh_prev = params.w_hh.transpose() * dpre;
            break;
        }
        case Arch::Gru: {
            const auto& r = cache.r;
            const auto& z = cache.z;
            const auto& n = cache.n;
            Eigen::MatrixXd dn = (dh_out.array() * (1.0 - z.array())).matrix();
            Eigen::MatrixXd dz =
                (dh_out.array() * (cache.h_prev.array() - n.array())).matrix();
            dh_prev = (dh_out.array() * z.array()).matrix();

            Eigen::MatrixXd da_n = (dn.array() * (1.0 - n.array().square())).matrix();
            Eigen::MatrixXd dgh_n = (da_n.array() * r.array()).matrix();
            Eigen::MatrixXd dr = (da_n.array() * cache.hn_lin.array()).matrix();
            Eigen::MatrixXd da_r =
                (dr.array() * r.array() * (1.0 - r.array())).matrix();
            Eigen::MatrixXd da_z =
                (dz.array() * z.array() * (1.0 - z.array())).matrix();

            Eigen::MatrixXd dgi(3 * h, dh_out.cols()), dgh(3 * h, dh_out.cols());
            dgi << da_r, da_z, da_n;
            dgh << da_r, da_z, dgh_n;

            grads.w_ih += dgi * cache.x.transpose();
            grads.w_hh += dgh * cache.h_prev.transpose();
            grads.b_ih += dgi.rowwise().sum();
            grads.b_hh += dgh.rowwise().sum();
            dh_prev += params.w_hh.transpose() * dgh;
            dx = params.w_ih.transpose() * dgi;
            break;
        }
        case Arch::Lstm: {
            const auto& i = cache.i;
            const auto& f = cache.f;
            const auto& g = cache.g;
            const auto& o = cache.o;
            Eigen::ArrayXXd tc = cache.c.array().tanh();
            Eigen::MatrixXd do_ = (dh_out.array() * tc).matrix();
            Eigen::ArrayXXd dc =
                dc_out.array() + dh_out.array() * o.array() * (1.0 - tc.square());
            Eigen::MatrixXd di = (dc * g.array()).matrix();
            Eigen::MatrixXd df = (dc * cache.c_prev.array()).matrix();
            Eigen::MatrixXd dg = (dc * i.array()).matrix();
            dc_prev = (dc * f.array()).matrix();

            Eigen::MatrixXd da(4 * h, dh_out.cols());
            da << (di.array() * i.array() * (1.0 - i.array())).matrix(),
                (df.array() * f.array() * (1.0 - f.array())).matrix(),
                (dg.array() * (1.0 - g.array().square())).matrix(),
                (do_.array() * o.array() * (1.0 - o.array())).matrix();

            grads.w_ih += da * cache.x.transpose();
            grads.w_hh += da * cache.h_prev.transpose();
            grads.b_ih += da.rowwise().sum();
            grads.b_hh += da.rowwise().sum();
            dh_prev = params.w_hh.transpose() * da;
            dx = params.w_ih.transpose() * da;
            break;
        }
    }
}

}  // namespace detail

RnnState zero_state(const RnnModel& model, int batch) {
    RnnState s;
    for (int l = 0; l < model.num_layers; ++l) {
        s.h.push_back(Eigen::MatrixXd::Zero(model.hidden_size, batch));
        s.c.push_back(Eigen::MatrixXd::Zero(model.hidden_size, batch));
    }
    return s;
}

RnnState state_from_observable(const RnnModel& model, const Eigen::VectorXd& obs) {
    if (obs.size() != model.observable_size())
        throw ShapeMismatch("observable state has wrong length");
    RnnState s = zero_state(model, 1);
    const int h = model.hidden_size;
    for (int l = 0; l < model.num_layers; ++l) s.h[l].col(0) = obs.segment(l * h, h);
    if (model.arch == Arch::Lstm)
        for (int l = 0; l < model.num_layers; ++l)
            s.c[l].col(0) = obs.segment((model.num_layers + l) * h, h);
    return s;
}

Eigen::VectorXd observable(const RnnModel& model, const RnnState& s) {
    Eigen::VectorXd v(model.observable_size());
    const int h = model.hidden_size;
    for (int l = 0; l < model.num_layers; ++l) v.segment(l * h, h) = s.h[l].col(0);
    if (model.arch == Arch::Lstm)
        for (int l = 0; l < model.num_layers; ++l)
            v.segment((model.num_layers + l) * h, h) = s.c[l].col(0);
    return v;
}

RnnState step(const RnnModel& model, const RnnState& state, const Eigen::MatrixXd& input) {
    if (input.rows() != model.input_size) throw ShapeMismatch("input size mismatch");
    RnnState out = state;
    Eigen::MatrixXd x = input;
    for (int l = 0; l < model.num_layers; ++l) {
        Eigen::MatrixXd h_out, c_out;
        detail::layer_step(model.arch, model.layers[l], x, state.h[l], state.c[l], h_out, c_out,
                           nullptr);
        out.h[l] = h_out;
        if (model.arch == Arch::Lstm) out.c[l] = c_out;
        x = out.h[l];
    }
    return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    Eigen::ArrayXd a = (logits.array() - logits.maxCoeff()).exp();
    return (a / a.sum()).matrix();
}

Eigen::VectorXd output_probs(const RnnModel& model, const RnnState& s) {
    return softmax(model.w_out * s.h.back().col(0));
}

ForwardResult forward(const RnnModel& model, const Word& word, const Eigen::VectorXd& h0) {
    ForwardResult r;
    RnnState s = state_from_observable(model, h0);
    r.trace.push_back(observable(model, s));
    for (int a : word) {
        s = step(model, s, one_hot(a, model.input_size));
        r.trace.push_back(observable(model, s));
    }
    r.class_probs = output_probs(model, s);
    return r;
}

int predict_class(const RnnModel& model, const Word& word, const Eigen::VectorXd& h0) {
    ForwardResult r = forward(model, word, h0);
    Eigen::Index best;
    r.class_probs.maxCoeff(&best);
    return static_cast<int>(best);
}

namespace {

void write_tensor(std::ostream& os, const std::string& name, const Eigen::MatrixXd& t) {
    os << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    char buf[40];
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
        for (Eigen::Index c = 0; c < t.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%a", t(r, c));  // hexfloat: exact round-trip
            os << buf << (c + 1 < t.cols() ? " " : "");
        }
        os << '\n';
    }
}

Eigen::MatrixXd read_tensor(std::istream& is, const std::string& expect_name) {
    std::string tag, name;
    Eigen::Index rows, cols;
    if (!(is >> tag >> name >> rows >> cols) || tag != "tensor" || name != expect_name)
        throw ParseError("model checkpoint: expected tensor '" + expect_name + "'");
    Eigen::MatrixXd t(rows, cols);
    std::string tok;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!(is >> tok)) throw ParseError("model checkpoint: truncated tensor " + name);
            t(r, c) = std::strtod(tok.c_str(), nullptr);
        }
    return t;
}

}  // namespace

void save_model(const RnnModel& model, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "' for writing");
    f << "rsc-model 1\n";
    f << "arch " << arch_name(model.arch) << '\n';
    f << "layers " << model.num_layers << '\n';
    f << "input " << model.input_size << '\n';
    f << "hidden " << model.hidden_size << '\n';
    f << "classes " << model.class_count << '\n';
    for (int l = 0; l < model.num_layers; ++l) {
        const auto pfx = "layer" + std::to_string(l) + ".";
        write_tensor(f, pfx + "w_ih", model.layers[l].w_ih);
        write_tensor(f, pfx + "w_hh", model.layers[l].w_hh);
        write_tensor(f, pfx + "b_ih", model.layers[l].b_ih);
        write_tensor(f, pfx + "b_hh", model.layers[l].b_hh);
    }
    write_tensor(f, "w_out", model.w_out);
}

RnnModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    std::string magic;
    int version;
    f >> magic >> version;
    if (magic != "rsc-model" || version != 1) throw ParseError("not an rsc model checkpoint");
    RnnModel m;
    std::string tag, value;
    f >> tag >> value;
    m.arch = arch_from_name(value);
    f >> tag >> m.num_layers >> tag >> m.input_size >> tag >> m.hidden_size >> tag >>
        m.class_count;
    for (int l = 0; l < m.num_layers; ++l) {
        const auto pfx = "layer" + std::to_string(l) + ".";
        LayerParams p;
        p.w_ih = read_tensor(f, pfx + "w_ih");
        p.w_hh = read_tensor(f, pfx + "w_hh");
        p.b_ih = read_tensor(f, pfx + "b_ih").col(0);
        p.b_hh = read_tensor(f, pfx + "b_hh").col(0);
        m.layers.push_back(std::move(p));
    }
    m.w_out = read_tensor(f, "w_out");
    return m;
}

std::vector<Eigen::MatrixXd*> parameter_tensors(RnnModel& model) {
    std::vector<Eigen::MatrixXd*> ts;
    for (auto& l : model.layers) {
        ts.push_back(&l.w_ih);
        ts.push_back(&l.w_hh);
    }
    ts.push_back(&model.w_out);
    return ts;
}

std::vector<Eigen::VectorXd*> parameter_vectors(RnnModel& model) {
    std::vector<Eigen::VectorXd*> vs;
    for (auto& l : model.layers) {
        vs.push_back(&l.b_ih);
        vs.push_back(&l.b_hh);
    }
    return vs;
}

}  // namespace rsc
