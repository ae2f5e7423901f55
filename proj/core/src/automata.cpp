#include "rsc/automata.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <list>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <unordered_set>

#include "rsc/prng.hpp"

namespace rsc {

int FiniteStateMachine::symbol_id(const std::string& name) const {
    for (int i = 0; i < alphabet_size(); ++i)
        if (alphabet[i] == name) return i;
    throw UnknownSymbol("unknown symbol '" + name + "'");
}

void FiniteStateMachine::validate() const {
    if (num_states <= 0) throw ParseError("machine has no states");
    if (alphabet.empty()) throw ParseError("machine has empty alphabet");
    if (initial < 0 || initial >= num_states) throw ParseError("initial state out of range");
    if (static_cast<int>(transitions.size()) != num_states * alphabet_size())
        throw ParseError("transition map is not total");
    for (int q = 0; q < num_states; ++q)
        for (int a = 0; a < alphabet_size(); ++a)
            if (next(q, a) < 0 || next(q, a) >= num_states)
                throw ParseError("transition target out of range at state " + std::to_string(q) +
                                 ", symbol " + alphabet[a]);
    if (kind == MachineKind::Dfa) {
        if (static_cast<int>(accepting.size()) != num_states)
            throw ParseError("accepting flags do not cover all states");
        if (!outputs.empty()) throw ParseError("dfa must not carry outputs");
    } else {
        if (static_cast<int>(outputs.size()) != num_states)
            throw ParseError("outputs do not cover all states");
        if (output_alphabet.empty()) throw ParseError("moore machine needs an output alphabet");
        for (int o : outputs)
            if (o < 0 || o >= static_cast<int>(output_alphabet.size()))
                throw ParseError("output id out of range");
        if (std::any_of(accepting.begin(), accepting.end(), [](bool b) { return b; }))
            throw ParseError("moore machine must have empty accepting set");
    }
}

RunResult run(const FiniteStateMachine& m, const Word& word) {
    RunResult r;
    r.trace.word = word;
    r.trace.visited.reserve(word.size() + 1);
    int q = m.initial;
    r.trace.visited.push_back(q);
    for (int a : word) {
        if (a < 0 || a >= m.alphabet_size())
            throw UnknownSymbol("symbol id " + std::to_string(a) + " not in alphabet");
        q = m.next(q, a);
        r.trace.visited.push_back(q);
    }
    r.label = m.label_of(q);
    return r;
}

namespace {

std::vector<int> reachable_states(const FiniteStateMachine& m) {
    std::vector<bool> seen(m.num_states, false);
    std::vector<int> order;
    std::deque<int> todo{m.initial};
    seen[m.initial] = true;
    while (!todo.empty()) {
        int q = todo.front();
        todo.pop_front();
        order.push_back(q);
        for (int a = 0; a < m.alphabet_size(); ++a) {
            int t = m.next(q, a);
            if (!seen[t]) {
                seen[t] = true;
                todo.push_back(t);
            }
        }
    }
    return order;  // BFS order from initial
}

FiniteStateMachine rebuild(const FiniteStateMachine& m, const std::vector<int>& state_class,
                           int num_classes) {
    // Renumber classes canonically by BFS from the initial state's class.
    FiniteStateMachine out;
    out.kind = m.kind;
    out.alphabet = m.alphabet;
    out.output_alphabet = m.output_alphabet;

    // representative state per class
    std::vector<int> rep(num_classes, -1);
    for (int q = 0; q < m.num_states; ++q)
        if (state_class[q] >= 0 && rep[state_class[q]] < 0) rep[state_class[q]] = q;

    std::vector<int> renum(num_classes, -1);
    std::vector<int> order;
    std::deque<int> todo{state_class[m.initial]};
    renum[state_class[m.initial]] = 0;
    order.push_back(state_class[m.initial]);
    while (!todo.empty()) {
        int c = todo.front();
        todo.pop_front();
        for (int a = 0; a < m.alphabet_size(); ++a) {
            int tc = state_class[m.next(rep[c], a)];
            if (renum[tc] < 0) {
                renum[tc] = static_cast<int>(order.size());
                order.push_back(tc);
                todo.push_back(tc);
            }
        }
    }

    out.num_states = static_cast<int>(order.size());
    out.initial = 0;
    out.transitions.assign(out.num_states * out.alphabet_size(), 0);
    if (m.kind == MachineKind::Dfa)
        out.accepting.assign(out.num_states, false);
    else
        out.outputs.assign(out.num_states, 0);
    for (int c : order) {
        int nq = renum[c];
        int q = rep[c];
        for (int a = 0; a < m.alphabet_size(); ++a)
            out.next_ref(nq, a) = renum[state_class[m.next(q, a)]];
        if (m.kind == MachineKind::Dfa)
            out.accepting[nq] = m.accepting[q];
        else
            out.outputs[nq] = m.outputs[q];
    }
    return out;
}

}  // namespace

FiniteStateMachine minimize(const FiniteStateMachine& m) {
    m.validate();
    std::vector<int> reach = reachable_states(m);
    std::vector<bool> is_reach(m.num_states, false);
    for (int q : reach) is_reach[q] = true;

    // Initial partition by observable label (acceptance / moore output),
    // restricted to reachable states. Hopcroft refinement below.
    std::map<int, std::vector<int>> by_label;
    for (int q : reach) by_label[m.label_of(q)].push_back(q);

    const int n = m.num_states;
    const int sigma = m.alphabet_size();
    std::vector<int> block_of(n, -1);
    std::vector<std::vector<int>> blocks;
    for (auto& [label, qs] : by_label) {
        for (int q : qs) block_of[q] = static_cast<int>(blocks.size());
        blocks.push_back(qs);
    }

    // reverse transitions over reachable states
    std::vector<std::vector<int>> rev(static_cast<std::size_t>(n) * sigma);
    for (int q : reach)
        for (int a = 0; a < sigma; ++a) rev[static_cast<std::size_t>(m.next(q, a)) * sigma + a].push_back(q);

    std::deque<std::pair<int, int>> work;  // (block, symbol)
    for (int b = 0; b < static_cast<int>(blocks.size()); ++b)
        for (int a = 0; a < sigma; ++a) work.emplace_back(b, a);

    while (!work.empty()) {
        auto [splitter, a] = work.front();
        work.pop_front();

        // states with an a-transition into `splitter`
        std::unordered_set<int> pre;
        for (int q : blocks[splitter])
            for (int p : rev[static_cast<std::size_t>(q) * sigma + a]) pre.insert(p);
        if (pre.empty()) continue;

        std::map<int, std::vector<int>> touched;  // block -> states in pre
        for (int p : pre) touched[block_of[p]].push_back(p);

        for (auto& [b, inside] : touched) {
            if (static_cast<int>(inside.size()) == static_cast<int>(blocks[b].size())) continue;
            // split block b into inside / outside
            std::unordered_set<int> in_set(inside.begin(), inside.end());
            std::vector<int> outside;
            for (int q : blocks[b])
                if (!in_set.count(q)) outside.push_back(q);
            int nb = static_cast<int>(blocks.size());
            blocks[b] = std::move(outside);
            blocks.push_back(inside);
            for (int q : blocks[nb]) block_of[q] = nb;
            // Hopcroft: enqueue the smaller half per symbol
            int smaller = blocks[nb].size() < blocks[b].size() ? nb : b;
            for (int s = 0; s < sigma; ++s) work.emplace_back(smaller, s);
        }
    }

    return rebuild(m, block_of, static_cast<int>(blocks.size()));
}

EquivalenceResult equivalent(const FiniteStateMachine& m1, const FiniteStateMachine& m2) {
    if (m1.kind != m2.kind) throw AlphabetMismatch("machine kinds differ");
    if (m1.alphabet != m2.alphabet) throw AlphabetMismatch("alphabets differ");
    if (m1.kind == MachineKind::Moore && m1.output_alphabet != m2.output_alphabet)
        throw AlphabetMismatch("output alphabets differ");

    struct Node {
        int q1, q2, parent, symbol;
    };
    std::vector<Node> nodes;
    std::unordered_set<std::int64_t> seen;
    auto key = [&](int q1, int q2) {
        return static_cast<std::int64_t>(q1) * m2.num_states + q2;
    };
    auto word_to = [&](int idx) {
        Word w;
        while (idx >= 0 && nodes[idx].symbol >= 0) {
            w.push_back(nodes[idx].symbol);
            idx = nodes[idx].parent;
        }
        std::reverse(w.begin(), w.end());
        return w;
    };

    std::deque<int> todo;
    nodes.push_back({m1.initial, m2.initial, -1, -1});
    seen.insert(key(m1.initial, m2.initial));
    todo.push_back(0);
    while (!todo.empty()) {
        int idx = todo.front();
        todo.pop_front();
        const Node node = nodes[idx];
        if (m1.label_of(node.q1) != m2.label_of(node.q2))
            return {false, word_to(idx)};
        for (int a = 0; a < m1.alphabet_size(); ++a) {
            int t1 = m1.next(node.q1, a);
            int t2 = m2.next(node.q2, a);
            if (seen.insert(key(t1, t2)).second) {
                nodes.push_back({t1, t2, idx, a});
                todo.push_back(static_cast<int>(nodes.size()) - 1);
            }
        }
    }
    return {true, std::nullopt};
}

FiniteStateMachine generate_random(MachineKind kind, int num_states, int alphabet_size,
                                   int num_outputs, std::uint64_t seed) {
    if (num_states < 2) throw GenerationExhausted("num_states must be >= 2");
    if (alphabet_size < 2) throw GenerationExhausted("alphabet_size must be >= 2");
    if (kind == MachineKind::Moore && num_outputs < 2)
        throw GenerationExhausted("num_outputs must be >= 2");

    SplitMix64 rng(seed);
    const int kMaxAttempts = 2000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        FiniteStateMachine m;
        m.kind = kind;
        m.num_states = num_states;
        m.initial = 0;
        for (int a = 0; a < alphabet_size; ++a) m.alphabet.push_back(std::string(1, static_cast<char>('a' + a)));
        m.transitions.resize(static_cast<std::size_t>(num_states) * alphabet_size);
        for (auto& t : m.transitions) t = static_cast<int>(rng.below(num_states));
        if (kind == MachineKind::Dfa) {
            m.accepting.resize(num_states);
            for (int q = 0; q < num_states; ++q) m.accepting[q] = rng.below(2) == 1;
        } else {
            for (int o = 0; o < num_outputs; ++o)
                m.output_alphabet.push_back("o" + std::to_string(o));
            m.outputs.resize(num_states);
            for (auto& o : m.outputs) o = static_cast<int>(rng.below(num_outputs));
        }
        if (static_cast<int>(reachable_states(m).size()) != num_states) continue;
        FiniteStateMachine mm = minimize(m);
        if (mm.num_states != num_states) continue;
        return mm;  // canonical numbering, q0 = 0
    }
    throw GenerationExhausted("no minimal fully-reachable machine found in " +
                              std::to_string(kMaxAttempts) + " attempts");
}

std::string format_machine(const FiniteStateMachine& m) {
    std::ostringstream os;
    os << "kind " << (m.kind == MachineKind::Dfa ? "dfa" : "moore") << "\n";
    os << "states " << m.num_states << "\n";
    os << "initial " << m.initial << "\n";
    os << "alphabet";
    for (const auto& s : m.alphabet) os << ' ' << s;
    os << "\n";
    if (m.kind == MachineKind::Dfa) {
        os << "accepting";
        for (int q = 0; q < m.num_states; ++q)
            if (m.accepting[q]) os << ' ' << q;
        os << "\n";
    } else {
        os << "output_alphabet";
        for (const auto& s : m.output_alphabet) os << ' ' << s;
        os << "\n";
        os << "outputs";
        for (int q = 0; q < m.num_states; ++q) os << ' ' << q << '=' << m.output_alphabet[m.outputs[q]];
        os << "\n";
    }
    for (int q = 0; q < m.num_states; ++q)
        for (int a = 0; a < m.alphabet_size(); ++a)
            os << "trans " << q << ' ' << m.alphabet[a] << ' ' << m.next(q, a) << "\n";
    return os.str();
}

FiniteStateMachine parse_machine(const std::string& text) {
    FiniteStateMachine m;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool have_kind = false, have_states = false;
    std::vector<bool> trans_set;
    auto fail = [&](const std::string& msg) {
        throw ParseError("line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "kind") {
            std::string k;
            ls >> k;
            if (k == "dfa")
                m.kind = MachineKind::Dfa;
            else if (k == "moore")
                m.kind = MachineKind::Moore;
            else
                fail("unknown kind '" + k + "'");
            have_kind = true;
        } else if (tag == "states") {
            if (!(ls >> m.num_states) || m.num_states <= 0) fail("bad state count");
            have_states = true;
        } else if (tag == "initial") {
            if (!(ls >> m.initial)) fail("bad initial state");
        } else if (tag == "alphabet") {
            std::string s;
            while (ls >> s) m.alphabet.push_back(s);
            if (m.alphabet.empty()) fail("empty alphabet");
        } else if (tag == "output_alphabet") {
            std::string s;
            while (ls >> s) m.output_alphabet.push_back(s);
        } else if (tag == "accepting") {
            if (!have_states) fail("accepting before states");
            m.accepting.assign(m.num_states, false);
            int q;
            while (ls >> q) {
                if (q < 0 || q >= m.num_states) fail("accepting state out of range");
                m.accepting[q] = true;
            }
        } else if (tag == "outputs") {
            if (!have_states) fail("outputs before states");
            m.outputs.assign(m.num_states, -1);
            std::string item;
            while (ls >> item) {
                auto eq = item.find('=');
                if (eq == std::string::npos) fail("output entry missing '='");
                int q = std::stoi(item.substr(0, eq));
                std::string oname = item.substr(eq + 1);
                if (q < 0 || q >= m.num_states) fail("output state out of range");
                auto it = std::find(m.output_alphabet.begin(), m.output_alphabet.end(), oname);
                if (it == m.output_alphabet.end()) fail("output symbol '" + oname + "' not declared");
                m.outputs[q] = static_cast<int>(it - m.output_alphabet.begin());
            }
        } else if (tag == "trans") {
            if (!have_states || m.alphabet.empty()) fail("trans before states/alphabet");
            if (trans_set.empty()) {
                m.transitions.assign(static_cast<std::size_t>(m.num_states) * m.alphabet_size(), -1);
                trans_set.assign(m.transitions.size(), false);
            }
            int src, dst;
            std::string sym;
            if (!(ls >> src >> sym >> dst)) fail("malformed trans line");
            if (src < 0 || src >= m.num_states || dst < 0 || dst >= m.num_states)
                fail("trans state out of range");
            int a = -1;
            for (int i = 0; i < m.alphabet_size(); ++i)
                if (m.alphabet[i] == sym) a = i;
            if (a < 0) fail("unknown symbol '" + sym + "'");
            m.next_ref(src, a) = dst;
            trans_set[static_cast<std::size_t>(src) * m.alphabet_size() + a] = true;
        } else {
            fail("unknown declaration '" + tag + "'");
        }
    }
    if (!have_kind) throw ParseError("missing 'kind' declaration");
    if (!have_states) throw ParseError("missing 'states' declaration");
    if (m.kind == MachineKind::Dfa && m.accepting.empty()) m.accepting.assign(m.num_states, false);
    for (int q = 0; q < m.num_states; ++q)
        for (int a = 0; a < m.alphabet_size(); ++a) {
            std::size_t idx = static_cast<std::size_t>(q) * m.alphabet_size() + a;
            if (trans_set.empty() || !trans_set[idx])
                throw ParseError("missing transition for (state " + std::to_string(q) +
                                 ", symbol " + m.alphabet[a] + ")");
        }
    if (m.kind == MachineKind::Moore)
        for (int q = 0; q < m.num_states; ++q)
            if (m.outputs.empty() || m.outputs[q] < 0)
                throw ParseError("missing output for state " + std::to_string(q));
    m.validate();
    return m;
}

FiniteStateMachine load_machine(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_machine(ss.str());
}

void save_machine(const FiniteStateMachine& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "' for writing");
    f << format_machine(m);
}

std::string to_dot(const FiniteStateMachine& m) {
    std::ostringstream os;
    os << "digraph fsm {\n  rankdir=LR;\n  __start [shape=point];\n";
    for (int q = 0; q < m.num_states; ++q) {
        os << "  q" << q << " [shape="
           << (m.kind == MachineKind::Dfa && m.accepting[q] ? "doublecircle" : "circle");
        if (m.kind == MachineKind::Moore)
            os << ", label=\"q" << q << "/" << m.output_alphabet[m.outputs[q]] << "\"";
        os << "];\n";
    }
    os << "  __start -> q" << m.initial << ";\n";
    for (int q = 0; q < m.num_states; ++q)
        for (int a = 0; a < m.alphabet_size(); ++a)
            os << "  q" << q << " -> q" << m.next(q, a) << " [label=\"" << m.alphabet[a] << "\"];\n";
    os << "}\n";
    return os.str();
}

bool structurally_equal(const FiniteStateMachine& a, const FiniteStateMachine& b) {
    return a.kind == b.kind && a.num_states == b.num_states && a.initial == b.initial &&
           a.alphabet == b.alphabet && a.transitions == b.transitions &&
           a.accepting == b.accepting && a.outputs == b.outputs &&
           a.output_alphabet == b.output_alphabet;
}

namespace {

FiniteStateMachine make_dfa(int n, std::vector<int> trans, std::vector<bool> acc) {
    FiniteStateMachine m;
    m.kind = MachineKind::Dfa;
    m.num_states = n;
    m.initial = 0;
    m.alphabet = {"0", "1"};
    m.transitions = std::move(trans);
    m.accepting = std::move(acc);
    m.validate();
    return m;
}

}  // namespace

FiniteStateMachine tomita3() {
    // q0 neutral, q1 odd 1-block, q2 odd 0-block after odd 1-block (reject if
    // the word ends here), q3 even positive 0-block after odd 1-block, q4 sink.
    return make_dfa(5,
                    {
                        0, 1,  // q0: 0 -> q0, 1 -> q1
                        2, 0,  // q1: 0 -> q2, 1 -> q0
                        3, 4,  // q2: 0 -> q3, 1 -> sink
                        2, 1,  // q3: 0 -> q2, 1 -> q1
                        4, 4,  // sink
                    },
                    {true, true, false, true, false});
}

FiniteStateMachine tomita5() {
    // parity of (#0, #1); state = 2*odd0 + odd1
    return make_dfa(4,
                    {
                        2, 1,  // (even,even)
                        3, 0,  // (even,odd)
                        0, 3,  // (odd,even)
                        1, 2,  // (odd,odd)
                    },
                    {true, false, false, false});
}

FiniteStateMachine tomita7() {
    // 0*1*0*
    return make_dfa(4,
                    {
                        0, 1,  // q0: first 0-block
                        2, 1,  // q1: 1-block
                        2, 3,  // q2: second 0-block
                        3, 3,  // sink
                    },
                    {true, true, true, false});
}

std::optional<FiniteStateMachine> builtin_machine(const std::string& name) {
    if (name == "tomita3") return tomita3();
    if (name == "tomita5") return tomita5();
    if (name == "tomita7") return tomita7();
    return std::nullopt;
}

}  // namespace rsc
