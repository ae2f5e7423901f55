#include "rsc/data.hpp"

#include <fstream>
#include <sstream>

#include "rsc/errors.hpp"
#include "rsc/prng.hpp"

namespace rsc {

namespace {

Word sample_word(SplitMix64& rng, int min_len, int max_len, int alphabet_size) {
    int len = rng.range(min_len, max_len);
    Word w(len);
    for (int& s : w) s = static_cast<int>(rng.below(alphabet_size));
    return w;
}

}  // namespace

LabeledDataset sample_dataset(const FiniteStateMachine& machine, std::size_t n_total,
                              int min_len, int max_len, double val_fraction,
                              std::uint64_t seed) {
    if (min_len < 1 || max_len < min_len)
        throw Error("invalid length range [" + std::to_string(min_len) + "," +
                    std::to_string(max_len) + "]");
    if (n_total < 1) throw Error("n_total must be >= 1");
    SplitMix64 rng(seed);
    LabeledDataset d;
    d.class_count = machine.class_count();
    d.entries.reserve(n_total);
    for (std::size_t i = 0; i < n_total; ++i) {
        Word w = sample_word(rng, min_len, max_len, machine.alphabet_size());
        int label = run(machine, w).label;
        d.entries.push_back({std::move(w), label});
    }
    std::size_t n_val = static_cast<std::size_t>(val_fraction * static_cast<double>(n_total) + 0.5);
    if (n_val > n_total) n_val = n_total;
    d.split_index = n_total - n_val;
    return d;
}

Eigen::VectorXd one_hot(int symbol_id, int alphabet_size) {
    if (symbol_id < 0 || symbol_id >= alphabet_size)
        throw IndexOutOfRange("one_hot: id " + std::to_string(symbol_id) + " for alphabet size " +
                              std::to_string(alphabet_size));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(alphabet_size);
    v[symbol_id] = 1.0;
    return v;
}

std::vector<Word> sample_accuracy_set(const FiniteStateMachine& machine, std::size_t n,
                                      int min_len, int max_len, std::uint64_t seed) {
    if (min_len < 1 || max_len < min_len) throw Error("invalid length range");
    SplitMix64 rng(seed);
    std::vector<Word> words;
    words.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        words.push_back(sample_word(rng, min_len, max_len, machine.alphabet_size()));
    return words;
}

void save_dataset(const LabeledDataset& d, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "' for writing");
    f << "# split_index " << d.split_index << " class_count " << d.class_count << "\n";
    for (const auto& e : d.entries) {
        for (std::size_t i = 0; i < e.word.size(); ++i) f << (i ? " " : "") << e.word[i];
        f << '\t' << e.label << '\n';
    }
}

LabeledDataset load_dataset(const std::string& path, int class_count) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    LabeledDataset d;
    d.class_count = class_count;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string tag;
            while (hs >> tag) {
                if (tag == "split_index") hs >> d.split_index;
                if (tag == "class_count") hs >> d.class_count;
            }
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError("line " + std::to_string(lineno) + ": missing tab separator");
        LabeledDataset::Entry e;
        std::istringstream ws(line.substr(0, tab));
        int s;
        while (ws >> s) e.word.push_back(s);
        e.label = std::stoi(line.substr(tab + 1));
        d.entries.push_back(std::move(e));
    }
    if (d.split_index > d.entries.size()) d.split_index = d.entries.size();
    return d;
}

}  // namespace rsc
