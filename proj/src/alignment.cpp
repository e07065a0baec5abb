#include "fusiongen/alignment.hpp"

#include <map>

namespace fusiongen {

AlignScope parse_align_scope(const std::string& name) {
    if (name == "session") return AlignScope::Session;
    if (name == "subject") return AlignScope::Subject;
    if (name == "global") return AlignScope::Global;
    throw std::runtime_error("unknown alignment scope '" + name + "'");
}

Mat sqrt_inv_psd(const Mat& a, double epsilon) {
    if (a.rows() != a.cols()) throw std::runtime_error("sqrt_inv_psd: matrix not square");
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + a.cwiseAbs().maxCoeff()))
        throw std::runtime_error("sqrt_inv_psd: matrix not symmetric");
    const Mat reg = 0.5 * (a + a.transpose()) + epsilon * Mat::Identity(a.rows(), a.cols());
    Eigen::SelfAdjointEigenSolver<Mat> eig(reg);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("sqrt_inv_psd: eigendecomposition failed");
    const Vec& vals = eig.eigenvalues();
    if (vals.minCoeff() <= 0.0)
        throw std::runtime_error("sqrt_inv_psd: matrix not positive definite "
                                 "(min eigenvalue " + std::to_string(vals.minCoeff()) + ")");
    const Vec inv_sqrt = vals.cwiseSqrt().cwiseInverse();
    return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

AlignmentReference compute_reference(const std::vector<const Trial*>& trials,
                                     double epsilon_rel) {
    if (trials.empty()) throw std::runtime_error("compute_reference: empty trial group");
    const int C = trials.front()->channels();
    Mat sum = Mat::Zero(C, C);
    for (const Trial* tr : trials) {
        if (tr->channels() != C)
            throw std::runtime_error("compute_reference: mismatched channel counts");
        sum.noalias() += tr->samples * tr->samples.transpose();
    }
    AlignmentReference ref;
    ref.mean_cov = sum / static_cast<double>(trials.size());
    ref.mean_cov = 0.5 * (ref.mean_cov + ref.mean_cov.transpose()).eval();
    ref.epsilon = epsilon_rel * ref.mean_cov.trace() / static_cast<double>(C);
    ref.whitener = sqrt_inv_psd(ref.mean_cov, ref.epsilon);
    return ref;
}

AlignmentReference compute_reference(const std::vector<Trial>& trials, double epsilon_rel) {
    std::vector<const Trial*> ptrs;
    ptrs.reserve(trials.size());
    for (const Trial& t : trials) ptrs.push_back(&t);
    return compute_reference(ptrs, epsilon_rel);
}

Trial apply_reference(const AlignmentReference& ref, const Trial& trial) {
    Trial out = trial;
    out.samples = ref.whitener * trial.samples;
    return out;
}

std::pair<Dataset, std::vector<AlignmentReference>> align_dataset(const Dataset& ds,
                                                                  AlignScope scope,
                                                                  double epsilon_rel) {
    auto group_key = [&](const Trial& tr) -> std::string {
        switch (scope) {
            case AlignScope::Session: return tr.subject_id + "\x1f" + tr.session_id;
            case AlignScope::Subject: return tr.subject_id;
            case AlignScope::Global: return std::string();
        }
        return std::string();
    };

    // Group in first-appearance order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const Trial*>> groups;
    for (const Trial& tr : ds.trials) {
        const std::string key = group_key(tr);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(&tr);
    }

    std::map<std::string, AlignmentReference> refs;
    std::vector<AlignmentReference> ref_list;
    for (const std::string& key : order) {
        refs[key] = compute_reference(groups[key], epsilon_rel);
        ref_list.push_back(refs[key]);
    }

    Dataset out = ds;
    for (std::size_t i = 0; i < out.trials.size(); ++i)
        out.trials[i] = apply_reference(refs[group_key(ds.trials[i])], ds.trials[i]);
    return {std::move(out), std::move(ref_list)};
}

}  // namespace fusiongen
