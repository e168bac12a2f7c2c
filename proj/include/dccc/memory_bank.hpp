#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "dccc/core.hpp"
#include "dccc/clustering.hpp"

namespace dccc {

enum class MemoryMode { avg, hardest, dynamic };

inline std::string to_string(MemoryMode m) {
    switch (m) {
        case MemoryMode::avg: return "avg";
        case MemoryMode::hardest: return "hardest";
        case MemoryMode::dynamic: return "dynamic";
    }
    return "?";
}

inline MemoryMode memory_mode_from_string(const std::string& s) {
    if (s == "avg") return MemoryMode::avg;
    if (s == "hardest") return MemoryMode::hardest;
    if (s == "dynamic") return MemoryMode::dynamic;
    throw ConfigError("unknown memory mode: " + s);
}

// Cluster representation vectors, one unit-norm row per cluster.
struct ClusterMemory {
    Matrix vectors; // C x D
    double gamma = 0.1;
    MemoryMode mode = MemoryMode::dynamic;
    double tau_w = 0.09;

    std::size_t num_clusters() const { return vectors.rows(); }
    std::size_t dim() const { return vectors.cols(); }
};

// Same-pseudo-class slice of a mini-batch.
struct BatchGroup {
    std::size_t cluster_id = 0;
    Matrix features; // N_i x D, unit-norm rows
};

namespace detail {

inline void normalize_row(std::span<double> v, const char* what) {
    const double n = norm2(v);
    if (!(n > 1e-12)) throw NumericalError(std::string(what) + ": zero-norm vector");
    for (auto& x : v) x /= n;
}

} // namespace detail

// Initializes each cluster vector to the L2-normalized mean of that cluster's
// dataset features. Outliers are ignored.
inline ClusterMemory init_memory(const FeatureMatrix& f, const PseudoLabeling& labels,
                                 double gamma, MemoryMode mode, double tau_w) {
    if (labels.num_clusters < 1) throw ContractError("init_memory: need at least one cluster");
    if (labels.size() != f.rows()) throw ContractError("init_memory: labeling does not match features");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("init_memory: gamma must be in [0, 1]");
    if (!(tau_w > 0.0)) throw ConfigError("init_memory: tau_w must be > 0");

    ClusterMemory m;
    m.gamma = gamma;
    m.mode = mode;
    m.tau_w = tau_w;
    m.vectors = Matrix(labels.num_clusters, f.cols());

    std::vector<std::size_t> counts(labels.num_clusters, 0);
    for (std::size_t i = 0; i < f.rows(); ++i) {
        const int a = labels.assignment[i];
        if (a == kOutlier) continue;
        auto row = m.vectors.row(static_cast<std::size_t>(a));
        auto feat = f.row(i);
        for (std::size_t j = 0; j < f.cols(); ++j) row[j] += feat[j];
        counts[static_cast<std::size_t>(a)] += 1;
    }
    for (std::size_t c = 0; c < labels.num_clusters; ++c) {
        if (counts[c] == 0) throw ContractError("init_memory: empty cluster " + std::to_string(c));
        auto row = m.vectors.row(c);
        for (auto& v : row) v /= static_cast<double>(counts[c]);
        detail::normalize_row(row, "init_memory");
    }
    return m;
}

// Hardness weights for one group: softmax of -<c, z_j> / tau_w, so less
// similar (harder) instances weigh more. Max-subtracted for stability.
inline std::vector<double> dynamic_weights(std::span<const double> cluster_vector,
                                           const BatchGroup& g, double tau_w) {
    if (!(tau_w > 0.0)) throw ContractError("dynamic_weights: tau_w must be > 0");
    const std::size_t n = g.features.rows();
    if (n == 0) throw ContractError("dynamic_weights: empty group");

    std::vector<double> logits(n);
    for (std::size_t j = 0; j < n; ++j)
        logits[j] = -dot(cluster_vector, g.features.row(j)) / tau_w;
    const double m = *std::max_element(logits.begin(), logits.end());

    std::vector<double> w(n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        w[j] = std::exp(logits[j] - m);
        sum += w[j];
    }
    for (auto& x : w) x /= sum;
    return w;
}

// Weighted batch centroid, not normalized here.
inline std::vector<double> dynamic_centroid(const std::vector<double>& weights, const BatchGroup& g) {
    if (weights.size() != g.features.rows())
        throw ContractError("dynamic_centroid: weight count does not match group size");
    double sum = 0.0;
    for (double w : weights) sum += w;
    if (std::abs(sum - 1.0) > 1e-6)
        throw ContractError("dynamic_centroid: weights must sum to 1");

    std::vector<double> c(g.features.cols(), 0.0);
    for (std::size_t j = 0; j < weights.size(); ++j) {
        auto z = g.features.row(j);
        for (std::size_t k = 0; k < c.size(); ++k) c[k] += weights[j] * z[k];
    }
    return c;
}

// c_i <- gamma * c_i + (1 - gamma) * c_hat, then re-normalized so dot
// products against memory rows stay cosine similarities.
inline void momentum_update(ClusterMemory& m, std::size_t cluster_id, std::span<const double> centroid) {
    if (cluster_id >= m.num_clusters()) throw ContractError("momentum_update: cluster_id out of range");
    if (centroid.size() != m.dim()) throw ContractError("momentum_update: centroid dimension mismatch");
    auto row = m.vectors.row(cluster_id);
    for (std::size_t j = 0; j < row.size(); ++j)
        row[j] = m.gamma * row[j] + (1.0 - m.gamma) * centroid[j];
    detail::normalize_row(row, "momentum_update");
}

// Applies the configured update rule to every pseudo-class present in the
// batch, groups processed in ascending cluster-id order.
inline void batch_update(ClusterMemory& m, const FeatureMatrix& batch_features,
                         const std::vector<int>& batch_pseudo_labels) {
    if (batch_features.rows() != batch_pseudo_labels.size())
        throw ContractError("batch_update: features and labels disagree in length");

    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < batch_pseudo_labels.size(); ++i) {
        const int label = batch_pseudo_labels[i];
        if (label == kOutlier || label < 0 || static_cast<std::size_t>(label) >= m.num_clusters())
            throw ContractError("batch_update: label " + std::to_string(label) + " not in memory");
        groups[label].push_back(i);
    }

    for (const auto& [label, rows] : groups) {
        const auto cid = static_cast<std::size_t>(label);
        BatchGroup g;
        g.cluster_id = cid;
        g.features = Matrix(rows.size(), batch_features.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            auto src = batch_features.row(rows[r]);
            auto dst = g.features.row(r);
            std::copy(src.begin(), src.end(), dst.begin());
        }

        std::vector<double> centroid;
        switch (m.mode) {
            case MemoryMode::avg: {
                std::vector<double> uniform(rows.size(), 1.0 / static_cast<double>(rows.size()));
                centroid = dynamic_centroid(uniform, g);
                break;
            }
            case MemoryMode::hardest: {
                // single least-similar instance, ties to the lowest index
                std::size_t hardest = 0;
                double best = dot(m.vectors.row(cid), g.features.row(0));
                for (std::size_t j = 1; j < rows.size(); ++j) {
                    const double s = dot(m.vectors.row(cid), g.features.row(j));
                    if (s < best) { best = s; hardest = j; }
                }
                auto z = g.features.row(hardest);
                centroid.assign(z.begin(), z.end());
                break;
            }
            case MemoryMode::dynamic: {
                const auto w = dynamic_weights(m.vectors.row(cid), g, m.tau_w);
                centroid = dynamic_centroid(w, g);
                break;
            }
        }
        momentum_update(m, cid, centroid);
    }
}

} // namespace dccc
