#pragma once

#include "fusiongen/trial.hpp"

namespace fusiongen {

/// Common-spatial-pattern filter bank: rows project a trial onto variance-
/// discriminative components. Binary problems keep the extreme eigenvectors
/// of sigma_1 w = lambda (sigma_1 + sigma_2) w; multiclass runs one-vs-rest
/// and interleaves the per-class extremes.
struct CSPModel {
    Mat filters;                      // n_f x C
    std::vector<double> eigenvalues;  // per filter
    std::vector<int> source_class;    // OVR sub-problem each filter came from (0 for binary)
};

CSPModel csp_fit(const Dataset& ds, int n_filters);

/// Log-variance feature vector: z = W X, f_j = log(var(z_j) / sum_i var(z_i)).
Vec csp_features(const CSPModel& model, const Trial& trial);

/// Gaussian equal-covariance linear classifier on CSP features.
struct LDAModel {
    Mat means;    // K x d
    Mat weights;  // K x d rows: Sigma^-1 mu_k
    Vec biases;   // -0.5 mu_k^T Sigma^-1 mu_k + log prior_k
    int classes() const { return static_cast<int>(means.rows()); }
};

LDAModel lda_fit(const std::vector<Vec>& features, const std::vector<int>& labels);
Vec lda_scores(const LDAModel& model, const Vec& features);
int lda_predict(const LDAModel& model, const Vec& features);

/// Fits CSP+LDA on `train` only and scores `test`. Predictions are produced
/// without access to test labels; accuracy compares them afterwards.
double evaluate_accuracy(const Dataset& train, const Dataset& test, int n_filters);

std::vector<int> predict_labels(const CSPModel& csp, const LDAModel& lda, const Dataset& test);
double accuracy_score(const std::vector<int>& predictions, const std::vector<int>& labels);

}  // namespace fusiongen
