#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "rsc/errors.hpp"
#include "rsc/metrics.hpp"
#include "rsc/probe.hpp"

namespace rsc {

// Linear probe over hidden vectors; classes are automaton state ids.
// lda: Gaussian discriminant with shared within-class covariance.
// logreg: multinomial softmax with L2 penalty.
struct LinearClassifier {
    std::string method;        // "lda" or "logreg"
    std::vector<int> classes;  // state ids present in the training sample
    Eigen::MatrixXd weights;   // one row of affine scores per class
    Eigen::VectorXd bias;

    int predict(const Eigen::VectorXd& h) const;
    std::vector<int> predict_all(const Eigen::MatrixXd& points) const;
};

LinearClassifier fit_classifier(const HQSample& hq, const std::string& method);

// Ambiguity of the partition induced by predicted classes; zero iff the
// classifier makes no mistakes on the sample.
MetricsRecord classifier_ambiguity(const LinearClassifier& clf, const HQSample& hq);

struct ProjectedPoint {
    double x, y;
    int state;
};

// LDA projection onto the top-2 discriminant directions (second axis zero
// when only 2 states are present).
std::vector<ProjectedPoint> project_2d(const HQSample& hq);

void save_projection_tsv(const std::vector<ProjectedPoint>& pts, const std::string& path);

}  // namespace rsc
