#pragma once

#include "fusiongen/trial.hpp"

namespace fusiongen {

/// Whitening reference for one alignment group: the mean trial covariance
/// R = (1/n) sum X_i X_i^T and its inverse square root.
struct AlignmentReference {
    Mat mean_cov;
    Mat whitener;
    double epsilon = 0.0;  // absolute regularizer added to the diagonal
};

enum class AlignScope { Session, Subject, Global };

AlignScope parse_align_scope(const std::string& name);

/// Inverse square root of a symmetric PSD matrix via eigendecomposition of
/// A + epsilon*I. Throws if any regularized eigenvalue is non-positive.
Mat sqrt_inv_psd(const Mat& a, double epsilon);

/// Mean covariance and whitener of a trial group.
/// epsilon = epsilon_rel * trace(mean_cov) / C.
AlignmentReference compute_reference(const std::vector<const Trial*>& trials,
                                     double epsilon_rel);
AlignmentReference compute_reference(const std::vector<Trial>& trials, double epsilon_rel);

/// Applies a reference's whitener to one trial.
Trial apply_reference(const AlignmentReference& ref, const Trial& trial);

/// Whitens every trial so each scope group's mean covariance becomes the
/// identity. References are returned in first-appearance group order.
std::pair<Dataset, std::vector<AlignmentReference>> align_dataset(
    const Dataset& ds, AlignScope scope, double epsilon_rel = 1e-10);

}  // namespace fusiongen
