#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rsc/errors.hpp"

namespace rsc {

// Points are rows of an N x d matrix; Euclidean distance throughout.
using Points = Eigen::MatrixXd;

struct ClusteringAssignment {
    std::vector<int> labels;  // dense 0..num_clusters-1 after noise normalization
    int num_clusters = 0;
    std::string method;
    std::string params;        // human-readable parameter record
    std::size_t num_noise = 0; // density methods: points that became singletons
    Eigen::MatrixXd centroids; // kmeans / mean shift modes
};

struct KMeansOptions {
    int n_init = 10;
    int max_iter = 300;
    double rel_tol = 1e-4;
};

ClusteringAssignment kmeans(const Points& points, int k, std::uint64_t seed,
                            const KMeansOptions& opts = {});

ClusteringAssignment dbscan(const Points& points, double eps, int min_neighbors = 5);

struct OpticsOptions {
    int min_samples = 5;
    double xi = 0.05;
};

ClusteringAssignment optics(const Points& points, const OpticsOptions& opts = {});

ClusteringAssignment mean_shift(const Points& points, double bandwidth);

double estimate_bandwidth(const Points& points, double quantile = 0.3, std::uint64_t seed = 0);

Points subsample(const Points& points, double fraction, std::uint64_t seed);

// Row indices picked by subsample(), in ascending order; callers that must
// keep side arrays aligned use this directly.
std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed);

// Within-cluster sum of squared distances to assigned centroids.
double kmeans_inertia(const Points& points, const ClusteringAssignment& a);

}  // namespace rsc
