#include "rsc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <unordered_map>

#include "rsc/prng.hpp"

namespace rsc {

namespace {

// Squared distances from every point to every row of `centers`.
Eigen::MatrixXd sq_dists(const Points& points, const Eigen::MatrixXd& centers) {
    Eigen::VectorXd pn = points.rowwise().squaredNorm();
    Eigen::VectorXd cn = centers.rowwise().squaredNorm();
    Eigen::MatrixXd d = -2.0 * points * centers.transpose();
    d.colwise() += pn;
    d.rowwise() += cn.transpose();
    return d.cwiseMax(0.0);
}

std::vector<std::size_t> distinct_rows(const Points& points) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(points.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        for (Eigen::Index c = 0; c < points.cols(); ++c) {
            if (points(a, c) < points(b, c)) return true;
            if (points(a, c) > points(b, c)) return false;
        }
        return false;
    });
    std::vector<std::size_t> uniq;
    for (std::size_t i : idx)
        if (uniq.empty() || points.row(i) != points.row(uniq.back())) uniq.push_back(i);
    return uniq;
}

// Normalize labels to dense ids 0..K-1 in first-appearance order; -1 labels
// (noise) become fresh singleton clusters at the end.
void normalize_labels(ClusteringAssignment& a) {
    std::unordered_map<int, int> remap;
    int next = 0;
    a.num_noise = 0;
    for (int& l : a.labels) {
        if (l < 0) continue;
        auto [it, fresh] = remap.emplace(l, next);
        if (fresh) ++next;
        l = it->second;
    }
    for (int& l : a.labels) {
        if (l < 0) {
            l = next++;
            a.num_noise++;
        }
    }
    a.num_clusters = next;
}

}  // namespace

double kmeans_inertia(const Points& points, const ClusteringAssignment& a) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        s += (points.row(i) - a.centroids.row(a.labels[static_cast<std::size_t>(i)])).squaredNorm();
    return s;
}

ClusteringAssignment kmeans(const Points& points, int k, std::uint64_t seed,
                            const KMeansOptions& opts) {
    const Eigen::Index n = points.rows();
    if (k < 1) throw TooFewPoints("kmeans: k must be >= 1");
    std::vector<std::size_t> distinct = distinct_rows(points);
    if (static_cast<std::size_t>(k) > distinct.size())
        throw TooFewPoints("kmeans: k exceeds the number of distinct points");

    // stopping tolerance relative to the data's per-dimension variance
    Eigen::RowVectorXd mean = points.colwise().mean();
    double data_var = (points.rowwise() - mean).squaredNorm() /
                      static_cast<double>(n * std::max<Eigen::Index>(points.cols(), 1));
    const double tol = opts.rel_tol * data_var;

    SplitMix64 master(seed);
    ClusteringAssignment best;
    double best_inertia = std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < opts.n_init; ++restart) {
        SplitMix64 rng = master.fork();

        // k-means++ seeding
        Eigen::MatrixXd centers(k, points.cols());
        centers.row(0) = points.row(static_cast<Eigen::Index>(rng.below(n)));
        Eigen::VectorXd d2 =
            (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
        for (int c = 1; c < k; ++c) {
            double total = d2.sum();
            Eigen::Index pick = 0;
            if (total > 0) {
                double r = rng.uniform() * total;
                double acc = 0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    acc += d2[i];
                    if (acc >= r) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = static_cast<Eigen::Index>(rng.below(n));
            }
            centers.row(c) = points.row(pick);
            d2 = d2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
        }

        std::vector<int> labels(static_cast<std::size_t>(n), 0);
        for (int iter = 0; iter < opts.max_iter; ++iter) {
            Eigen::MatrixXd dist = sq_dists(points, centers);
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::Index arg;
                dist.row(i).minCoeff(&arg);
                labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
            }
            Eigen::MatrixXd new_centers = Eigen::MatrixXd::Zero(k, points.cols());
            Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
            for (Eigen::Index i = 0; i < n; ++i) {
                new_centers.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
                counts[labels[static_cast<std::size_t>(i)]] += 1.0;
            }
            for (int c = 0; c < k; ++c) {
                if (counts[c] > 0) {
                    new_centers.row(c) /= counts[c];
                } else {
                    // relocate an empty cluster to the point farthest from its centroid
                    Eigen::Index worst = 0;
                    double worst_d = -1;
                    for (Eigen::Index i = 0; i < n; ++i) {
                        double di = (points.row(i) -
                                     centers.row(labels[static_cast<std::size_t>(i)]))
                                        .squaredNorm();
                        if (di > worst_d) {
                            worst_d = di;
                            worst = i;
                        }
                    }
                    new_centers.row(c) = points.row(worst);
                    labels[static_cast<std::size_t>(worst)] = c;
                }
            }
            double shift = (new_centers - centers).rowwise().squaredNorm().sum();
            centers = new_centers;
            if (shift <= tol) break;
        }

        // final assignment against converged centers
        Eigen::MatrixXd dist = sq_dists(points, centers);
        double inertia = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index arg;
            inertia += dist.row(i).minCoeff(&arg);
            labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
        }
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best.labels = labels;
            best.centroids = centers;
        }
    }

    best.method = "kmeans";
    best.params = "k=" + std::to_string(k);
    std::set<int> used(best.labels.begin(), best.labels.end());
    best.num_clusters = static_cast<int>(used.size());
    return best;
}

namespace {

std::vector<std::vector<int>> eps_neighborhoods(const Points& points, double eps) {
    const Eigen::Index n = points.rows();
    const double eps2 = eps * eps;
    std::vector<std::vector<int>> nb(static_cast<std::size_t>(n));
    const Eigen::Index block = 512;
    Eigen::VectorXd norms = points.rowwise().squaredNorm();
    for (Eigen::Index i0 = 0; i0 < n; i0 += block) {
        Eigen::Index bi = std::min(block, n - i0);
        Eigen::MatrixXd d = -2.0 * points.middleRows(i0, bi) * points.transpose();
        d.colwise() += norms.segment(i0, bi);
        d.rowwise() += norms.transpose();
        for (Eigen::Index r = 0; r < bi; ++r)
            for (Eigen::Index j = 0; j < n; ++j)
                if (d(r, j) <= eps2) nb[static_cast<std::size_t>(i0 + r)].push_back(static_cast<int>(j));
    }
    return nb;
}

}  // namespace

ClusteringAssignment dbscan(const Points& points, double eps, int min_neighbors) {
    if (eps <= 0) throw Error("dbscan: eps must be > 0");
    const Eigen::Index n = points.rows();
    auto nb = eps_neighborhoods(points, eps);

    ClusteringAssignment a;
    a.labels.assign(static_cast<std::size_t>(n), -2);  // -2 unvisited, -1 noise
    int cluster = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::size_t si = static_cast<std::size_t>(i);
        if (a.labels[si] != -2) continue;
        if (static_cast<int>(nb[si].size()) < min_neighbors) {  // neighborhood includes self
            a.labels[si] = -1;
            continue;
        }
        a.labels[si] = cluster;
        std::vector<int> frontier(nb[si].begin(), nb[si].end());
        for (std::size_t f = 0; f < frontier.size(); ++f) {
            std::size_t j = static_cast<std::size_t>(frontier[f]);
            if (a.labels[j] == -1) a.labels[j] = cluster;  // border point
            if (a.labels[j] != -2) continue;
            a.labels[j] = cluster;
            if (static_cast<int>(nb[j].size()) >= min_neighbors)
                frontier.insert(frontier.end(), nb[j].begin(), nb[j].end());
        }
        ++cluster;
    }
    a.method = "dbscan";
    a.params = "eps=" + std::to_string(eps) + ",min_neighbors=" + std::to_string(min_neighbors);
    normalize_labels(a);
    return a;
}

ClusteringAssignment optics(const Points& points, const OpticsOptions& opts) {
    const Eigen::Index n = points.rows();
    if (n < opts.min_samples) throw TooFewPoints("optics: fewer points than min_samples");

    // core distance = distance to the min_samples-th nearest point (self included)
    std::vector<double> core_dist(static_cast<std::size_t>(n));
    Eigen::MatrixXd alld = sq_dists(points, points);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> row(static_cast<std::size_t>(n));
        for (Eigen::Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = alld(i, j);
        std::nth_element(row.begin(), row.begin() + (opts.min_samples - 1), row.end());
        core_dist[static_cast<std::size_t>(i)] = std::sqrt(row[opts.min_samples - 1]);
    }

    const double kUndef = std::numeric_limits<double>::infinity();
    std::vector<double> reach(static_cast<std::size_t>(n), kUndef);
    std::vector<bool> processed(static_cast<std::size_t>(n), false);
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));

    // priority queue keyed by (reachability, index); stale entries skipped
    using Entry = std::pair<double, int>;
    auto cmp = [](const Entry& a, const Entry& b) { return a > b; };

    for (Eigen::Index s = 0; s < n; ++s) {
        if (processed[static_cast<std::size_t>(s)]) continue;
        std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> pq(cmp);
        pq.push({kUndef, static_cast<int>(s)});
        while (!pq.empty()) {
            auto [r, idx] = pq.top();
            pq.pop();
            std::size_t si = static_cast<std::size_t>(idx);
            if (processed[si]) continue;
            processed[si] = true;
            order.push_back(idx);
            // expand: update reachability of unprocessed points
            double cd = core_dist[si];
            for (Eigen::Index j = 0; j < n; ++j) {
                std::size_t sj = static_cast<std::size_t>(j);
                if (processed[sj]) continue;
                double d = std::sqrt(alld(idx, j));
                double new_reach = std::max(cd, d);
                if (new_reach < reach[sj]) {
                    reach[sj] = new_reach;
                    pq.push({new_reach, static_cast<int>(j)});
                }
            }
        }
    }

    // Xi cluster extraction over the reachability plot: a cluster spans from
    // a steep-down area to a steep-up area whose enclosed valley lies at
    // least a factor xi below both boundaries (OPTICS paper, Definition 11;
    // predecessor correction omitted).
    const std::size_t N = static_cast<std::size_t>(n);
    std::vector<double> r_ord(N + 1);
    for (std::size_t i = 0; i < order.size(); ++i) r_ord[i] = reach[static_cast<std::size_t>(order[i])];
    r_ord[N] = std::numeric_limits<double>::infinity();  // virtual endpoint

    std::vector<int> labels_ord(N, -1);
    const double ratio = 1.0 - opts.xi;
    // steepness of the transition i -> i+1
    auto steep_down = [&](std::size_t i) { return r_ord[i + 1] <= r_ord[i] * ratio; };
    auto steep_up = [&](std::size_t i) { return r_ord[i] <= r_ord[i + 1] * ratio; };

    struct Area {
        std::size_t start, end;  // first and last steep transition index
    };
    // maximal steep areas: runs of steep transitions, monotone throughout,
    // with at most min_samples consecutive non-steep transitions inside
    auto collect_areas = [&](auto is_steep, auto keeps_direction) {
        std::vector<Area> areas;
        std::size_t i = 0;
        while (i < N) {
            if (!is_steep(i)) {
                ++i;
                continue;
            }
            std::size_t end = i, j = i + 1;
            int slack = 0;
            while (j < N && keeps_direction(j)) {
                if (is_steep(j)) {
                    end = j;
                    slack = 0;
                } else if (++slack >= opts.min_samples) {
                    break;
                }
                ++j;
            }
            areas.push_back({i, end});
            i = end + 1;
        }
        return areas;
    };
    auto downs = collect_areas(steep_down, [&](std::size_t j) { return r_ord[j + 1] <= r_ord[j]; });
    auto ups = collect_areas(steep_up, [&](std::size_t j) { return r_ord[j + 1] >= r_ord[j]; });

    std::vector<Area> clusters;
    for (const auto& d : downs) {
        double d_max = r_ord[d.start];
        double mib = 0.0;  // running max between the areas; only grows with u
        std::size_t scan = d.end + 1;
        for (const auto& u : ups) {
            if (u.start <= d.end) continue;
            while (scan < u.start) mib = std::max(mib, r_ord[scan++]);
            if (mib > d_max * ratio) break;  // later ups only see a larger mib
            double u_max = r_ord[u.end + 1];
            if (mib > u_max * ratio) continue;
            // trim the higher boundary until both ends are comparable
            std::size_t cs = d.start, ce = u.end;
            if (d_max * ratio >= u_max) {
                while (cs < d.end && r_ord[cs + 1] > u_max) ++cs;
            } else if (u_max * ratio >= d_max) {
                while (ce > u.start && r_ord[ce] > d_max) --ce;
            }
            if (ce < cs || ce - cs + 1 < static_cast<std::size_t>(opts.min_samples)) continue;
            clusters.push_back({cs, ce});
        }
    }
    // innermost candidates claim their points first; an enclosing candidate
    // that already contains labeled points is dropped, uncovered points
    // become noise singletons
    std::stable_sort(clusters.begin(), clusters.end(), [](const Area& a, const Area& b) {
        return (a.end - a.start) < (b.end - b.start);
    });
    int next_label = 0;
    for (const auto& c : clusters) {
        bool untouched = true;
        for (std::size_t i = c.start; i <= c.end && i < labels_ord.size(); ++i)
            untouched = untouched && labels_ord[i] == -1;
        if (!untouched) continue;
        for (std::size_t i = c.start; i <= c.end && i < labels_ord.size(); ++i)
            labels_ord[i] = next_label;
        ++next_label;
    }

    ClusteringAssignment a;
    a.labels.assign(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < order.size(); ++i)
        a.labels[static_cast<std::size_t>(order[i])] = labels_ord[i];
    a.method = "optics";
    a.params = "min_samples=" + std::to_string(opts.min_samples) + ",xi=" + std::to_string(opts.xi);
    normalize_labels(a);
    return a;
}

ClusteringAssignment mean_shift(const Points& points, double bandwidth) {
    if (bandwidth <= 0) throw ZeroBandwidth("mean_shift: bandwidth must be > 0");
    const Eigen::Index n = points.rows();
    const double bw2 = bandwidth * bandwidth;
    const double stop = 1e-6 * bandwidth;
    const int max_iter = 300;

    Eigen::VectorXd norms = points.rowwise().squaredNorm();
    Eigen::MatrixXd modes(n, points.cols());
    std::vector<std::size_t> support(static_cast<std::size_t>(n), 0);

    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::RowVectorXd x = points.row(i);
        std::size_t within = 0;
        for (int iter = 0; iter < max_iter; ++iter) {
            Eigen::VectorXd d = norms - 2.0 * (points * x.transpose()) +
                                Eigen::VectorXd::Constant(n, x.squaredNorm());
            Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(points.cols());
            within = 0;
            for (Eigen::Index j = 0; j < n; ++j)
                if (d[j] <= bw2) {
                    mean += points.row(j);
                    ++within;
                }
            if (within == 0) break;  // isolated seed: stays where it is
            mean /= static_cast<double>(within);
            double shift = (mean - x).norm();
            x = mean;
            if (shift < stop) break;
        }
        modes.row(i) = x;
        support[static_cast<std::size_t>(i)] = within;
    }

    // merge modes closer than the bandwidth, keeping the better-supported one
    std::vector<std::size_t> by_support(static_cast<std::size_t>(n));
    std::iota(by_support.begin(), by_support.end(), 0);
    std::stable_sort(by_support.begin(), by_support.end(),
                     [&](std::size_t a, std::size_t b) { return support[a] > support[b]; });
    std::vector<Eigen::RowVectorXd> kept;
    for (std::size_t i : by_support) {
        bool merged = false;
        for (const auto& m : kept)
            if ((modes.row(static_cast<Eigen::Index>(i)) - m).norm() < bandwidth) {
                merged = true;
                break;
            }
        if (!merged) kept.push_back(modes.row(static_cast<Eigen::Index>(i)));
    }

    ClusteringAssignment a;
    a.centroids.resize(static_cast<Eigen::Index>(kept.size()), points.cols());
    for (std::size_t i = 0; i < kept.size(); ++i) a.centroids.row(static_cast<Eigen::Index>(i)) = kept[i];
    a.labels.resize(static_cast<std::size_t>(n));
    Eigen::MatrixXd d = sq_dists(points, a.centroids);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index arg;
        d.row(i).minCoeff(&arg);
        a.labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    a.method = "mean_shift";
    a.params = "bandwidth=" + std::to_string(bandwidth);
    normalize_labels(a);
    a.num_noise = 0;
    return a;
}

double estimate_bandwidth(const Points& points, double quantile, std::uint64_t /*seed*/) {
    const Eigen::Index n = points.rows();
    std::vector<std::size_t> uniq = distinct_rows(points);
    if (uniq.size() < 2) throw DegenerateData("estimate_bandwidth: all points identical");
    // k-th nearest neighbor with self included as neighbor 0 at distance 0
    int k = std::max<int>(2, static_cast<int>(std::ceil(quantile * static_cast<double>(n))));
    if (k > n) k = static_cast<int>(n);
    Eigen::MatrixXd d = sq_dists(points, points);
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> row(static_cast<std::size_t>(n));
        for (Eigen::Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = d(i, j);
        std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
        total += std::sqrt(row[static_cast<std::size_t>(k - 1)]);
    }
    double alpha = total / static_cast<double>(n);
    if (alpha == 0.0) throw DegenerateData("estimate_bandwidth: zero bandwidth");
    return alpha;
}

std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed) {
    if (fraction <= 0 || fraction > 1) throw Error("subsample: fraction must be in (0,1]");
    std::size_t want = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (want >= n) return idx;

    // partial Fisher-Yates over indices, then sort to preserve input order
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < want; ++i) {
        std::size_t j = i + rng.below(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(want);
    std::sort(idx.begin(), idx.end());
    return idx;
}

Points subsample(const Points& points, double fraction, std::uint64_t seed) {
    std::vector<std::size_t> idx =
        subsample_indices(static_cast<std::size_t>(points.rows()), fraction, seed);
    Points out(static_cast<Eigen::Index>(idx.size()), points.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = points.row(static_cast<Eigen::Index>(idx[i]));
    return out;
}

}  // namespace rsc
