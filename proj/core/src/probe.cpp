#include "rsc/probe.hpp"

#include <fstream>
#include <sstream>

#include "rsc/data.hpp"
#include "rsc/errors.hpp"

namespace rsc {

std::vector<int> HQSample::states() const {
    std::vector<int> s;
    s.reserve(records.size());
    for (const auto& r : records) s.push_back(r.state);
    return s;
}

std::vector<std::size_t> HQSample::initial_records() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].step == 0) idx.push_back(i);
    return idx;
}

HQSample collect_hq(const FiniteStateMachine& machine, const RnnModel& model,
                    const Eigen::VectorXd& h0, const std::vector<Word>& words) {
    if (h0.size() != model.observable_size())
        throw ShapeMismatch("h0 length does not match the model's observable state size");
    if (machine.alphabet_size() != model.input_size)
        throw AlphabetMismatch("machine alphabet size does not match model input size");

    HQSample hq;
    hq.num_states = machine.num_states;
    std::size_t total = 0;
    for (const auto& w : words) total += w.size() + 1;
    hq.hidden.resize(static_cast<Eigen::Index>(total), model.observable_size());
    hq.records.reserve(total);

    Eigen::Index row = 0;
    for (std::size_t wi = 0; wi < words.size(); ++wi) {
        const Word& w = words[wi];
        RnnState s = state_from_observable(model, h0);
        int q = machine.initial;
        hq.records.push_back({static_cast<int>(wi), 0, q});
        hq.hidden.row(row++) = observable(model, s).transpose();
        for (std::size_t t = 0; t < w.size(); ++t) {
            if (w[t] < 0 || w[t] >= machine.alphabet_size())
                throw UnknownSymbol("word symbol outside alphabet");
            q = machine.next(q, w[t]);
            s = step(model, s, one_hot(w[t], model.input_size));
            hq.records.push_back({static_cast<int>(wi), static_cast<int>(t) + 1, q});
            hq.hidden.row(row++) = observable(model, s).transpose();
        }
    }
    return hq;
}

void save_hq_tsv(const HQSample& hq, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "' for writing");
    f.precision(17);
    for (std::size_t i = 0; i < hq.records.size(); ++i) {
        const auto& r = hq.records[i];
        f << r.word_id << '\t' << r.step << '\t' << r.state << '\t';
        for (Eigen::Index c = 0; c < hq.hidden.cols(); ++c)
            f << (c ? " " : "") << hq.hidden(static_cast<Eigen::Index>(i), c);
        f << '\n';
    }
}

HQSample load_hq_tsv(const std::string& path, int num_states) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    HQSample hq;
    hq.num_states = num_states;
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        HQSample::Record r{};
        if (!(ls >> r.word_id >> r.step >> r.state))
            throw ParseError("hq line " + std::to_string(lineno) + ": malformed record");
        std::vector<double> h;
        double v;
        while (ls >> v) h.push_back(v);
        if (!rows.empty() && h.size() != rows.front().size())
            throw ParseError("hq line " + std::to_string(lineno) + ": inconsistent vector length");
        hq.records.push_back(r);
        rows.push_back(std::move(h));
    }
    hq.hidden.resize(static_cast<Eigen::Index>(rows.size()),
                     rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            hq.hidden(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return hq;
}

}  // namespace rsc
