#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "oracles.hpp"
#include "rsc/cluster.hpp"
#include "rsc/prng.hpp"

using namespace rsc;

namespace {

// Well-separated Gaussian blobs.
Points blobs(const std::vector<Eigen::RowVector2d>& centers, int per, double sigma,
             std::uint64_t seed, std::vector<int>* truth = nullptr) {
    SplitMix64 rng(seed);
    Points p(static_cast<int>(centers.size()) * per, 2);
    int r = 0;
    for (std::size_t c = 0; c < centers.size(); ++c)
        for (int i = 0; i < per; ++i, ++r) {
            p.row(r) = centers[c] + sigma * Eigen::RowVector2d(rng.gaussian(), rng.gaussian());
            if (truth) truth->push_back(static_cast<int>(c));
        }
    return p;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<int, int> fwd, bwd;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto [f, nf] = fwd.emplace(a[i], b[i]);
        auto [g, ng] = bwd.emplace(b[i], a[i]);
        if (f->second != b[i] || g->second != a[i]) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("kmeans recovers separated blobs and assigns nearest centroids") {
    std::vector<int> truth;
    auto p = blobs({{0, 0}, {10, 0}, {0, 10}}, 40, 0.5, 3, &truth);
    auto a = kmeans(p, 3, 17);
    CHECK(a.num_clusters == 3);
    CHECK(same_partition(a.labels, truth));
    for (int i = 0; i < p.rows(); ++i) {
        int best = 0;
        for (int c = 1; c < a.centroids.rows(); ++c)
            if ((p.row(i) - a.centroids.row(c)).squaredNorm() <
                (p.row(i) - a.centroids.row(best)).squaredNorm())
                best = c;
        CHECK(best == a.labels[i]);
    }
}

TEST_CASE("kmeans k = N gives zero inertia") {
    auto p = blobs({{0, 0}, {5, 5}}, 6, 1.0, 9);
    auto a = kmeans(p, static_cast<int>(p.rows()), 1);
    CHECK(kmeans_inertia(p, a) == doctest::Approx(0.0));
    CHECK(a.num_clusters == p.rows());
}

TEST_CASE("kmeans k = 2 finds the optimal partition on small inputs") {
    SplitMix64 rng(0x77);
    for (int trial = 0; trial < 5; ++trial) {
        Points p(12, 2);
        for (int i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform() * 4.0;
        auto a = kmeans(p, 2, rng.next());
        CHECK(kmeans_inertia(p, a) ==
              doctest::Approx(oracle::best_two_partition_inertia(p)).epsilon(1e-6));
    }
}

TEST_CASE("kmeans with more clusters than distinct points throws") {
    Points p(4, 2);
    p << 1, 1, 1, 1, 2, 2, 2, 2;
    CHECK_THROWS_AS(kmeans(p, 3, 1), TooFewPoints);
    CHECK(kmeans(p, 2, 1).num_clusters == 2);
}

TEST_CASE("kmeans is deterministic per seed") {
    auto p = blobs({{0, 0}, {6, 6}}, 25, 1.0, 5);
    auto a = kmeans(p, 4, 123);
    auto b = kmeans(p, 4, 123);
    CHECK(a.labels == b.labels);
}

TEST_CASE("dbscan matches the density-reachability reference") {
    SplitMix64 rng(0xd5);
    for (int trial = 0; trial < 25; ++trial) {
        int n = 20 + static_cast<int>(rng.below(180));
        Points p(n, 2);
        for (int i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform() * 10.0;
        double eps = 0.4 + rng.uniform() * 1.2;
        auto a = dbscan(p, eps);
        auto ref = oracle::dbscan_reference(p, eps, 5);
        CAPTURE(trial);
        CHECK(same_partition(a.labels, ref));
        CHECK(a.num_clusters == 1 + *std::max_element(ref.begin(), ref.end()));
    }
}

TEST_CASE("dbscan noise becomes singleton clusters") {
    auto p = blobs({{0, 0}}, 30, 0.3, 2);
    Points q(p.rows() + 2, 2);
    q.topRows(p.rows()) = p;
    q.row(p.rows()) << 50, 50;
    q.row(p.rows() + 1) << -50, 40;
    auto a = dbscan(q, 1.0);
    CHECK(a.num_noise == 2);
    CHECK(a.num_clusters == 3);  // one dense cluster + two singletons
    CHECK(a.labels[p.rows()] != a.labels[p.rows() + 1]);
}

TEST_CASE("optics clusters never straddle well-spaced blobs") {
    std::vector<int> truth;
    auto p = blobs({{0, 0}, {20, 0}, {0, 20}}, 50, 0.4, 11, &truth);
    auto a = optics(p);
    CHECK(a.num_clusters >= 3);
    // xi extraction may refine a blob into sub-valleys, but every cluster
    // must stay inside one blob: the partition is pure
    std::map<int, std::set<int>> members;
    for (std::size_t i = 0; i < truth.size(); ++i) members[a.labels[i]].insert(truth[i]);
    for (auto& [l, blobs_hit] : members) CHECK(blobs_hit.size() == 1);
}

TEST_CASE("optics refuses inputs smaller than min_samples") {
    Points p(3, 2);
    p.setRandom();
    CHECK_THROWS_AS(optics(p), TooFewPoints);
}

TEST_CASE("mean shift collapses a blob to one mode") {
    auto p = blobs({{3, 3}}, 60, 0.2, 21);
    auto a = mean_shift(p, 2.0);
    CHECK(a.num_clusters == 1);
    CHECK(a.centroids.rows() == 1);
    CHECK((a.centroids.row(0) - Eigen::RowVector2d(3, 3)).norm() < 0.5);
}

TEST_CASE("mean shift separates two blobs with a tight bandwidth") {
    std::vector<int> truth;
    auto p = blobs({{0, 0}, {10, 10}}, 40, 0.3, 33, &truth);
    auto a = mean_shift(p, 1.5);
    CHECK(a.num_clusters == 2);
    CHECK(same_partition(a.labels, truth));
}

TEST_CASE("estimate_bandwidth matches the full-sort reference") {
    SplitMix64 rng(0xab);
    for (int trial = 0; trial < 10; ++trial) {
        int n = 10 + static_cast<int>(rng.below(90));
        Points p(n, 3);
        for (int i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform() * 5.0;
        double q = 0.1 + rng.uniform() * 0.8;
        CHECK(estimate_bandwidth(p, q) == doctest::Approx(oracle::bandwidth_reference(p, q)));
    }
}

TEST_CASE("estimate_bandwidth worked example and degeneracy") {
    Points two(2, 1);
    two << 0, 3;
    // quantile 1.0 with two points: each point's 2nd-nearest (incl. self) is
    // the other point, so alpha equals their distance
    CHECK(estimate_bandwidth(two, 1.0) == doctest::Approx(3.0));
    Points same(5, 2);
    same.setOnes();
    CHECK_THROWS_AS(estimate_bandwidth(same, 0.3), DegenerateData);
}

TEST_CASE("subsample keeps rows intact and indices sorted") {
    SplitMix64 rng(0x3c);
    Points p(40, 2);
    for (int i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform();
    auto idx = subsample_indices(40, 0.25, 99);
    CHECK(idx.size() == 10);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == idx.size());
    auto s = subsample(p, 0.25, 99);
    REQUIRE(s.rows() == 10);
    for (std::size_t i = 0; i < idx.size(); ++i) CHECK(s.row(i) == p.row(idx[i]));
    // full fraction returns everything
    CHECK(subsample(p, 1.0, 1) == p);
}
