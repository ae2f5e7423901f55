#include "rsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rsc/errors.hpp"

namespace rsc {

MetricsRecord ambiguity(const std::vector<int>& states, const std::vector<int>& cluster_labels,
                        int num_states) {
    if (states.size() != cluster_labels.size())
        throw LengthMismatch("states and cluster labels differ in length");
    if (num_states < 2) throw BaseTooSmall("ambiguity needs |Q| >= 2 as log base");

    MetricsRecord rec;
    rec.num_points = states.size();
    std::map<int, std::size_t> cluster_sizes;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i] < 0 || states[i] >= num_states)
            throw IndexOutOfRange("record state outside 0..|Q|-1");
        rec.contingency[{cluster_labels[i], states[i]}]++;
        cluster_sizes[cluster_labels[i]]++;
    }
    rec.num_clusters = static_cast<int>(cluster_sizes.size());

    const double log_q = std::log(static_cast<double>(num_states));
    // contingency is ordered by (cluster, state): one pass accumulates each
    // cluster's entropy; absent (q,k) entries contribute 0 log 0 == 0.
    std::map<int, double> entropy;
    for (const auto& [kq, n_qk] : rec.contingency) {
        double p = static_cast<double>(n_qk) / static_cast<double>(cluster_sizes[kq.first]);
        entropy[kq.first] -= p * std::log(p) / log_q;
    }
    for (const auto& [k, n_k] : cluster_sizes) {
        double h = std::max(0.0, entropy[k]);
        rec.per_cluster_amb[k] = h;
        rec.amb += h;
        rec.wamb += h * static_cast<double>(n_k);
    }
    rec.amb /= static_cast<double>(rec.num_clusters);
    rec.wamb /= static_cast<double>(rec.num_points);
    rec.perfect = rec.wamb == 0.0;
    return rec;
}

bool is_optimal(const std::vector<int>& states, const std::vector<int>& cluster_labels) {
    if (states.size() != cluster_labels.size())
        throw LengthMismatch("states and cluster labels differ in length");
    std::map<int, int> alpha;
    for (std::size_t i = 0; i < states.size(); ++i) {
        auto [it, inserted] = alpha.emplace(cluster_labels[i], states[i]);
        if (!inserted && it->second != states[i]) return false;
    }
    return true;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw LengthMismatch("spearman: sequence lengths differ");
    if (xs.size() < 3) throw LengthMismatch("spearman: need at least 3 samples");
    auto constant = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    };
    if (constant(xs) || constant(ys))
        throw ConstantSequence("spearman undefined for a constant sequence");

    std::vector<double> rx = average_ranks(xs), ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    return num / std::sqrt(dx * dy);
}

}  // namespace rsc
