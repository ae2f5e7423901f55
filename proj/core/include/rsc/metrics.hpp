#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

namespace rsc {

// Per-cluster entropy-based ambiguity of a clustering against ground-truth
// automaton states, with log base |Q| so that values land in [0, 1].
struct MetricsRecord {
    std::map<int, double> per_cluster_amb;
    double amb = 0.0;             // unweighted mean over clusters
    double wamb = 0.0;            // weighted by cluster size
    int num_clusters = 0;
    std::size_t num_points = 0;
    bool perfect = false;         // wamb == 0
    std::map<std::pair<int, int>, std::size_t> contingency;  // (cluster, state) -> count
};

MetricsRecord ambiguity(const std::vector<int>& states, const std::vector<int>& cluster_labels,
                        int num_states);

// True iff a renaming alpha: K -> Q exists with alpha(c(h)) = q for all pairs,
// i.e. every cluster is pure.
bool is_optimal(const std::vector<int>& states, const std::vector<int>& cluster_labels);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace rsc
