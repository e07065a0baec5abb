#include "fusiongen/csp_lda.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fusiongen/alignment.hpp"

namespace fusiongen {

namespace {

constexpr double kRegRel = 1e-10;

Mat trial_cov_normalized(const Mat& x) {
    Mat cov = x * x.transpose();
    const double tr = cov.trace();
    if (tr <= 0.0) throw std::runtime_error("csp: trial with zero power");
    return cov / tr;
}

/// Eigenpairs of sigma_a w = lambda (sigma_a + sigma_b) w via whitening,
/// ranked by extremeness: lambda_max, lambda_min, 2nd max, 2nd min, ...
struct RankedFilters {
    std::vector<Vec> filters;
    std::vector<double> eigenvalues;
};

RankedFilters csp_pair(const Mat& sigma_a, const Mat& sigma_b) {
    const int C = static_cast<int>(sigma_a.rows());
    Mat composite = sigma_a + sigma_b;
    const double eps = kRegRel * composite.trace() / static_cast<double>(C);
    const Mat p = sqrt_inv_psd(composite, eps);
    Eigen::SelfAdjointEigenSolver<Mat> eig(p * sigma_a * p);
    if (eig.info() != Eigen::Success) throw std::runtime_error("csp: eigensolver failed");
    // Eigen sorts ascending; alternate from both ends, largest first.
    RankedFilters rf;
    int lo = 0, hi = C - 1;
    bool take_hi = true;
    while (lo <= hi) {
        const int idx = take_hi ? hi : lo;
        rf.filters.push_back(p * eig.eigenvectors().col(idx));
        rf.eigenvalues.push_back(eig.eigenvalues()(idx));
        if (take_hi) --hi; else ++lo;
        take_hi = !take_hi;
    }
    return rf;
}

}  // namespace

CSPModel csp_fit(const Dataset& ds, int n_filters) {
    if (n_filters < 1) throw std::runtime_error("csp_fit: need at least one filter");
    std::map<int, std::vector<const Trial*>> by_class;
    for (const Trial& t : ds.trials) by_class[t.label].push_back(&t);
    if (by_class.size() < 2) throw std::runtime_error("csp_fit: need at least two classes");
    const int C = ds.trials.front().channels();

    std::map<int, Mat> class_cov;
    for (const auto& [label, trials] : by_class) {
        Mat mean = Mat::Zero(C, C);
        for (const Trial* t : trials) mean += trial_cov_normalized(t->samples);
        class_cov[label] = mean / static_cast<double>(trials.size());
    }

    CSPModel model;
    if (by_class.size() == 2) {
        const auto it = class_cov.begin();
        const Mat& s1 = it->second;
        const Mat& s2 = std::next(it)->second;
        if (n_filters > C)
            throw std::runtime_error("csp_fit: n_filters exceeds channel count");
        RankedFilters rf = csp_pair(s1, s2);
        model.filters.resize(n_filters, C);
        for (int i = 0; i < n_filters; ++i) {
            model.filters.row(i) = rf.filters[static_cast<std::size_t>(i)].transpose();
            model.eigenvalues.push_back(rf.eigenvalues[static_cast<std::size_t>(i)]);
            model.source_class.push_back(0);
        }
        return model;
    }

    // One-vs-rest: round-robin over classes, each contributing its next most
    // extreme eigenvector, until n_filters rows are collected.
    std::vector<int> labels;
    std::vector<RankedFilters> ranked;
    for (const auto& [label, cov] : class_cov) {
        int count = 0;
        Mat rest = Mat::Zero(C, C);
        for (const auto& [other, trials] : by_class) {
            if (other == label) continue;
            for (const Trial* t : trials) {
                rest += trial_cov_normalized(t->samples);
                ++count;
            }
        }
        rest /= static_cast<double>(count);
        labels.push_back(label);
        ranked.push_back(csp_pair(cov, rest));
    }
    const int available = C * static_cast<int>(ranked.size());
    if (n_filters > available)
        throw std::runtime_error("csp_fit: n_filters exceeds available filters");

    model.filters.resize(n_filters, C);
    int taken = 0;
    for (int rank = 0; taken < n_filters; ++rank) {
        for (std::size_t k = 0; k < ranked.size() && taken < n_filters; ++k) {
            if (rank >= static_cast<int>(ranked[k].filters.size())) continue;
            model.filters.row(taken) = ranked[k].filters[static_cast<std::size_t>(rank)].transpose();
            model.eigenvalues.push_back(ranked[k].eigenvalues[static_cast<std::size_t>(rank)]);
            model.source_class.push_back(labels[k]);
            ++taken;
        }
    }
    return model;
}

Vec csp_features(const CSPModel& model, const Trial& trial) {
    const Mat z = model.filters * trial.samples;
    const int nf = static_cast<int>(z.rows());
    Vec vars(nf);
    for (int j = 0; j < nf; ++j) {
        const double mean = z.row(j).mean();
        vars(j) = (z.row(j).array() - mean).square().sum() / static_cast<double>(z.cols());
        if (vars(j) <= 0.0)
            throw std::runtime_error("csp_features: zero-variance projection row " +
                                     std::to_string(j));
    }
    const double total = vars.sum();
    Vec feats(nf);
    for (int j = 0; j < nf; ++j) feats(j) = std::log(vars(j) / total);
    return feats;
}

LDAModel lda_fit(const std::vector<Vec>& features, const std::vector<int>& labels) {
    if (features.empty() || features.size() != labels.size())
        throw std::runtime_error("lda_fit: empty or mismatched inputs");
    const int d = static_cast<int>(features.front().size());
    const int k = *std::max_element(labels.begin(), labels.end()) + 1;
    if (k < 2) throw std::runtime_error("lda_fit: need at least two classes");

    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    Mat means = Mat::Zero(k, d);
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (labels[i] < 0) throw std::runtime_error("lda_fit: negative label");
        counts[static_cast<std::size_t>(labels[i])]++;
        means.row(labels[i]) += features[i].transpose();
    }
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0)
            throw std::runtime_error("lda_fit: class " + std::to_string(c) + " has no samples");
        means.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }

    Mat pooled = Mat::Zero(d, d);
    for (std::size_t i = 0; i < features.size(); ++i) {
        const Vec centered = features[i] - means.row(labels[i]).transpose();
        pooled += centered * centered.transpose();
    }
    pooled /= static_cast<double>(features.size());
    pooled += (kRegRel * std::max(pooled.trace(), 1e-300) / static_cast<double>(d)) *
              Mat::Identity(d, d);

    const Mat pooled_inv = pooled.llt().solve(Mat::Identity(d, d));
    LDAModel model;
    model.means = means;
    model.weights.resize(k, d);
    model.biases.resize(k);
    const double n = static_cast<double>(features.size());
    for (int c = 0; c < k; ++c) {
        const Vec w = pooled_inv * means.row(c).transpose();
        model.weights.row(c) = w.transpose();
        model.biases(c) = -0.5 * means.row(c).dot(w) +
                          std::log(static_cast<double>(counts[static_cast<std::size_t>(c)]) / n);
    }
    return model;
}

Vec lda_scores(const LDAModel& model, const Vec& features) {
    return model.weights * features + model.biases;
}

int lda_predict(const LDAModel& model, const Vec& features) {
    const Vec s = lda_scores(model, features);
    int best = 0;
    for (int c = 1; c < model.classes(); ++c)
        if (s(c) > s(best)) best = c;  // ties keep the lowest index
    return best;
}

std::vector<int> predict_labels(const CSPModel& csp, const LDAModel& lda, const Dataset& test) {
    std::vector<int> preds;
    preds.reserve(test.trials.size());
    for (const Trial& t : test.trials) preds.push_back(lda_predict(lda, csp_features(csp, t)));
    return preds;
}

double accuracy_score(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size() || predictions.empty())
        throw std::runtime_error("accuracy_score: size mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double evaluate_accuracy(const Dataset& train, const Dataset& test, int n_filters) {
    const CSPModel csp = csp_fit(train, n_filters);
    std::vector<Vec> feats;
    std::vector<int> labels;
    for (const Trial& t : train.trials) {
        feats.push_back(csp_features(csp, t));
        labels.push_back(t.label);
    }
    const LDAModel lda = lda_fit(feats, labels);
    const std::vector<int> preds = predict_labels(csp, lda, test);
    std::vector<int> truth;
    truth.reserve(test.trials.size());
    for (const Trial& t : test.trials) truth.push_back(t.label);
    return accuracy_score(preds, truth);
}

}  // namespace fusiongen
