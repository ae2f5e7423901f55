#include "rsc/separability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <Eigen/Dense>

namespace rsc {

namespace {

// Maps each present state id to a dense class index; throws if fewer than
// two classes are present.
std::map<int, int> class_index(const std::vector<int>& states) {
    std::map<int, int> idx;
    for (int s : states) idx.emplace(s, 0);
    if (idx.size() < 2) throw DegenerateLabels("separability: need >= 2 distinct state labels");
    int next = 0;
    for (auto& [s, i] : idx) i = next++;
    return idx;
}

struct Scatter {
    Eigen::MatrixXd within;       // pooled within-class scatter / N
    Eigen::MatrixXd between;      // between-class scatter / N
    Eigen::MatrixXd class_means;  // one row per class
    Eigen::VectorXd priors;
    Eigen::RowVectorXd grand_mean;
};

Scatter scatter_matrices(const Eigen::MatrixXd& X, const std::vector<int>& y, int num_classes) {
    const Eigen::Index n = X.rows(), d = X.cols();
    Scatter s;
    s.class_means = Eigen::MatrixXd::Zero(num_classes, d);
    s.priors = Eigen::VectorXd::Zero(num_classes);
    for (Eigen::Index i = 0; i < n; ++i) {
        s.class_means.row(y[static_cast<std::size_t>(i)]) += X.row(i);
        s.priors[y[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (int c = 0; c < num_classes; ++c)
        if (s.priors[c] > 0) s.class_means.row(c) /= s.priors[c];
    s.grand_mean = X.colwise().mean();

    s.within = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::RowVectorXd r = X.row(i) - s.class_means.row(y[static_cast<std::size_t>(i)]);
        s.within += r.transpose() * r;
    }
    s.within /= static_cast<double>(n);

    s.between = Eigen::MatrixXd::Zero(d, d);
    for (int c = 0; c < num_classes; ++c) {
        Eigen::RowVectorXd r = s.class_means.row(c) - s.grand_mean;
        s.between += s.priors[c] * r.transpose() * r;
    }
    s.between /= static_cast<double>(n);
    s.priors /= static_cast<double>(n);
    return s;
}

LinearClassifier fit_lda(const Eigen::MatrixXd& X, const std::vector<int>& y,
                         const std::vector<int>& classes) {
    const int k = static_cast<int>(classes.size());
    Scatter s = scatter_matrices(X, y, k);
    Eigen::MatrixXd cov = s.within + 1e-6 * Eigen::MatrixXd::Identity(X.cols(), X.cols());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    if (ldlt.info() != Eigen::Success)
        throw SingularCovariance("lda: within-class covariance not factorizable");

    // Gaussian discriminant with shared covariance is affine in h:
    //   score_c(h) = mu_c' Sigma^-1 h - 0.5 mu_c' Sigma^-1 mu_c + log prior_c
    LinearClassifier clf;
    clf.method = "lda";
    clf.classes = classes;
    clf.weights.resize(k, X.cols());
    clf.bias.resize(k);
    for (int c = 0; c < k; ++c) {
        Eigen::VectorXd w = ldlt.solve(s.class_means.row(c).transpose());
        clf.weights.row(c) = w.transpose();
        clf.bias[c] = -0.5 * s.class_means.row(c).dot(w) + std::log(s.priors[c]);
    }
    return clf;
}

LinearClassifier fit_logreg(const Eigen::MatrixXd& X, const std::vector<int>& y,
                            const std::vector<int>& classes) {
    const Eigen::Index n = X.rows(), d = X.cols();
    const int k = static_cast<int>(classes.size());
    const double lambda = 1.0;
    const double grad_tol = 1e-6;
    const int max_iter = 1000;

    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(k, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(k, n);
    for (Eigen::Index i = 0; i < n; ++i) onehot(y[static_cast<std::size_t>(i)], i) = 1.0;

    auto loss_and_grads = [&](const Eigen::MatrixXd& Wc, const Eigen::VectorXd& bc,
                              Eigen::MatrixXd& gW, Eigen::VectorXd& gb) {
        Eigen::MatrixXd scores = Wc * X.transpose();  // k x n
        scores.colwise() += bc;
        Eigen::RowVectorXd mx = scores.colwise().maxCoeff();
        scores.rowwise() -= mx;
        Eigen::MatrixXd ex = scores.array().exp().matrix();
        Eigen::RowVectorXd z = ex.colwise().sum();
        Eigen::MatrixXd probs = ex.array().rowwise() / z.array();
        double nll = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            nll -= scores(y[static_cast<std::size_t>(i)], i) - std::log(z[i]);
        double loss = nll / static_cast<double>(n) +
                      0.5 * lambda / static_cast<double>(n) * Wc.squaredNorm();
        Eigen::MatrixXd diff = (probs - onehot) / static_cast<double>(n);
        gW = diff * X + (lambda / static_cast<double>(n)) * Wc;
        gb = diff.rowwise().sum();
        return loss;
    };

    Eigen::MatrixXd gW(k, d);
    Eigen::VectorXd gb(k);
    double step = 1.0;
    for (int iter = 0; iter < max_iter; ++iter) {
        double loss = loss_and_grads(W, b, gW, gb);
        double gnorm2 = gW.squaredNorm() + gb.squaredNorm();
        if (std::sqrt(gnorm2) <= grad_tol) break;

        // backtracking line search on the Armijo condition
        Eigen::MatrixXd gW2(k, d);
        Eigen::VectorXd gb2(k);
        step = std::min(step * 2.0, 1e4);
        while (step > 1e-16) {
            double trial = loss_and_grads(W - step * gW, b - step * gb, gW2, gb2);
            if (trial <= loss - 0.5 * step * gnorm2) break;
            step *= 0.5;
        }
        W -= step * gW;
        b -= step * gb;
    }

    LinearClassifier clf;
    clf.method = "logreg";
    clf.classes = classes;
    clf.weights = W;
    clf.bias = b;
    return clf;
}

}  // namespace

int LinearClassifier::predict(const Eigen::VectorXd& h) const {
    Eigen::Index arg;
    (weights * h + bias).maxCoeff(&arg);
    return classes[static_cast<std::size_t>(arg)];
}

std::vector<int> LinearClassifier::predict_all(const Eigen::MatrixXd& points) const {
    Eigen::MatrixXd scores = points * weights.transpose();
    scores.rowwise() += bias.transpose();
    std::vector<int> out(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        Eigen::Index arg;
        scores.row(i).maxCoeff(&arg);
        out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(arg)];
    }
    return out;
}

LinearClassifier fit_classifier(const HQSample& hq, const std::string& method) {
    std::vector<int> states = hq.states();
    std::map<int, int> idx = class_index(states);
    std::vector<int> classes;
    classes.reserve(idx.size());
    for (const auto& [s, i] : idx) classes.push_back(s);
    std::vector<int> y(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) y[i] = idx.at(states[i]);

    if (method == "lda") return fit_lda(hq.hidden, y, classes);
    if (method == "logreg") return fit_logreg(hq.hidden, y, classes);
    throw Error("fit_classifier: unknown method '" + method + "'");
}

MetricsRecord classifier_ambiguity(const LinearClassifier& clf, const HQSample& hq) {
    return ambiguity(hq.states(), clf.predict_all(hq.hidden), hq.num_states);
}

std::vector<ProjectedPoint> project_2d(const HQSample& hq) {
    std::vector<int> states = hq.states();
    std::map<int, int> idx = class_index(states);
    const int k = static_cast<int>(idx.size());
    std::vector<int> y(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) y[i] = idx.at(states[i]);

    Scatter s = scatter_matrices(hq.hidden, y, k);
    Eigen::MatrixXd cov =
        s.within + 1e-6 * Eigen::MatrixXd::Identity(hq.hidden.cols(), hq.hidden.cols());

    // generalized eigenproblem Sb v = lambda Sw v; top directions by lambda
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(s.between, cov);
    if (es.info() != Eigen::Success)
        throw SingularCovariance("project_2d: generalized eigen solve failed");
    Eigen::MatrixXd V = es.eigenvectors();  // ascending eigenvalues

    Eigen::VectorXd dir1 = V.col(V.cols() - 1);
    Eigen::VectorXd dir2;
    if (k >= 3 && V.cols() >= 2) {
        dir2 = V.col(V.cols() - 2);
    } else {
        dir2 = Eigen::VectorXd::Zero(V.rows());  // rank limit with 2 classes
    }

    Eigen::MatrixXd centered = hq.hidden.rowwise() - s.grand_mean;
    Eigen::VectorXd xs = centered * dir1;
    Eigen::VectorXd ys = centered * dir2;
    std::vector<ProjectedPoint> out(states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
        out[i] = {xs[static_cast<Eigen::Index>(i)], ys[static_cast<Eigen::Index>(i)], states[i]};
    return out;
}

void save_projection_tsv(const std::vector<ProjectedPoint>& pts, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    char buf[64];
    for (const auto& p : pts) {
        std::snprintf(buf, sizeof buf, "%.17g\t%.17g\t%d\n", p.x, p.y, p.state);
        f << buf;
    }
}

}  // namespace rsc
