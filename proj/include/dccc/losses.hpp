#pragma once

#include <algorithm>
#include <vector>

#include "dccc/core.hpp"
#include "dccc/memory_bank.hpp"

namespace dccc {

// Length-C probability vector over cluster representation vectors.
using ProbVector = std::vector<double>;

struct LossOutput {
    double loss = 0.0;
    Matrix grad; // d(loss)/d(student query features), B x D
};

namespace detail {

// logits_k = <q, c_k> / tau
inline std::vector<double> memory_logits(std::span<const double> q, const ClusterMemory& m, double tau) {
    std::vector<double> logits(m.num_clusters());
    for (std::size_t k = 0; k < m.num_clusters(); ++k)
        logits[k] = dot(q, m.vectors.row(k)) / tau;
    return logits;
}

inline double log_sum_exp(const std::vector<double>& logits, double* max_out = nullptr) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double l : logits) s += std::exp(l - m);
    if (max_out) *max_out = m;
    return m + std::log(s);
}

} // namespace detail

// Softmax similarity of a unit-norm query over all cluster vectors.
inline ProbVector similarity_probs(std::span<const double> q, const ClusterMemory& m, double tau) {
    if (m.num_clusters() == 0) throw ContractError("similarity_probs: memory is empty");
    if (!(tau > 0.0)) throw ContractError("similarity_probs: tau must be > 0");
    if (q.size() != m.dim()) throw ContractError("similarity_probs: query dimension mismatch");

    const auto logits = detail::memory_logits(q, m, tau);
    const double lz = detail::log_sum_exp(logits);
    ProbVector p(logits.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::exp(logits[k] - lz);
    return p;
}

// Cross-entropy of each student query against an explicit target distribution,
// batch-mean. Targets are treated as constants; the gradient flows through the
// student features only: d/dq_b = (1 / (B * tau)) * sum_k (p_k - y_k) c_k.
inline LossOutput soft_cross_entropy(const FeatureMatrix& q_s, const Matrix& targets,
                                     const ClusterMemory& m, double tau) {
    const std::size_t b = q_s.rows();
    const std::size_t c = m.num_clusters();
    if (c == 0) throw ContractError("soft_cross_entropy: memory is empty");
    if (!(tau > 0.0)) throw ContractError("soft_cross_entropy: tau must be > 0");
    if (q_s.cols() != m.dim()) throw ContractError("soft_cross_entropy: feature dimension mismatch");
    if (targets.rows() != b || targets.cols() != c)
        throw ContractError("soft_cross_entropy: target shape mismatch");

    LossOutput out;
    out.grad = Matrix(b, q_s.cols());
    const double scale = 1.0 / (static_cast<double>(b) * tau);

    for (std::size_t i = 0; i < b; ++i) {
        const auto logits = detail::memory_logits(q_s.row(i), m, tau);
        const double lz = detail::log_sum_exp(logits);

        // loss_i = sum_k y_k * (lz - logit_k); never takes log of a raw softmax
        double li = 0.0;
        for (std::size_t k = 0; k < c; ++k) li += targets(i, k) * (lz - logits[k]);
        out.loss += li / static_cast<double>(b);

        auto g = out.grad.row(i);
        for (std::size_t k = 0; k < c; ++k) {
            const double coeff = scale * (std::exp(logits[k] - lz) - targets(i, k));
            auto ck = m.vectors.row(k);
            for (std::size_t j = 0; j < g.size(); ++j) g[j] += coeff * ck[j];
        }
    }
    return out;
}

namespace detail {

inline Matrix one_hot_targets(const std::vector<int>& labels, std::size_t num_clusters) {
    Matrix t(labels.size(), num_clusters);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int l = labels[i];
        if (l == kOutlier)
            throw ContractError("loss: outlier-labeled query at batch position " + std::to_string(i));
        if (l < 0 || static_cast<std::size_t>(l) >= num_clusters)
            throw ContractError("loss: label out of range at batch position " + std::to_string(i));
        t(i, static_cast<std::size_t>(l)) = 1.0;
    }
    return t;
}

} // namespace detail

// Softmax cross-entropy of each query against its pseudo-class vector:
// batch-mean of -log p_plus. Memory vectors are constants.
inline LossOutput cluster_nce(const FeatureMatrix& q_s, const std::vector<int>& labels,
                              const ClusterMemory& m, double tau) {
    if (labels.size() != q_s.rows()) throw ContractError("cluster_nce: label count mismatch");
    return soft_cross_entropy(q_s, detail::one_hot_targets(labels, m.num_clusters()), m, tau);
}

// Plain cross-entropy baseline; same quantity as cluster_nce.
inline LossOutput cross_entropy_loss(const FeatureMatrix& q_s, const std::vector<int>& labels,
                                     const ClusterMemory& m, double tau) {
    return cluster_nce(q_s, labels, m, tau);
}

// y_sm = mu_s * y_t + (1 - mu_s) * onehot
inline std::vector<double> smooth_label(const ProbVector& y_t, std::size_t one_hot_class, double mu_s) {
    if (mu_s < 0.0 || mu_s > 1.0) throw ContractError("smooth_label: mu_s must be in [0, 1]");
    if (one_hot_class >= y_t.size()) throw ContractError("smooth_label: class index out of range");
    std::vector<double> y(y_t.size());
    for (std::size_t k = 0; k < y.size(); ++k) {
        y[k] = mu_s * y_t[k];
        if (k == one_hot_class) y[k] += 1.0 - mu_s;
    }
    return y;
}

// Smoothed teacher targets for a whole batch, one row per query.
inline Matrix smoothed_targets(const FeatureMatrix& q_t, const std::vector<int>& labels,
                               const ClusterMemory& m, double tau, double mu_s) {
    if (labels.size() != q_t.rows()) throw ContractError("smoothed_targets: label count mismatch");
    Matrix targets(q_t.rows(), m.num_clusters());
    for (std::size_t i = 0; i < q_t.rows(); ++i) {
        const int l = labels[i];
        if (l == kOutlier)
            throw ContractError("loss: outlier-labeled query at batch position " + std::to_string(i));
        const ProbVector y_t = similarity_probs(q_t.row(i), m, tau);
        const auto y_sm = smooth_label(y_t, static_cast<std::size_t>(l), mu_s);
        auto row = targets.row(i);
        std::copy(y_sm.begin(), y_sm.end(), row.begin());
    }
    return targets;
}

// Label-smoothing soft contrastive loss: cross-entropy of the student's
// similarity distribution against the mu_s-mix of the teacher distribution
// and the one-hot pseudo-label. The teacher and the memory are constants;
// gradients flow through q_s only.
inline LossOutput label_smooth_soft_loss(const FeatureMatrix& q_s, const FeatureMatrix& q_t,
                                         const std::vector<int>& labels, const ClusterMemory& m,
                                         double tau, double mu_s) {
    if (!q_s.same_shape(q_t))
        throw ContractError("label_smooth_soft_loss: student and teacher batches must match in shape");
    return soft_cross_entropy(q_s, smoothed_targets(q_t, labels, m, tau, mu_s), m, tau);
}

} // namespace dccc
