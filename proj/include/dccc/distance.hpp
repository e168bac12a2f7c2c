#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "dccc/core.hpp"

namespace dccc {

enum class Metric { euclidean, cosine, jaccard };

inline std::string to_string(Metric m) {
    switch (m) {
        case Metric::euclidean: return "euclidean";
        case Metric::cosine: return "cosine";
        case Metric::jaccard: return "jaccard";
    }
    return "?";
}

// N x N symmetric dissimilarity matrix with zero diagonal.
struct DistanceMatrix {
    Matrix values;
    Metric metric = Metric::cosine;

    std::size_t size() const { return values.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return values(i, j); }
};

// Per-instance ordered list of the k nearest indices, self excluded.
struct NeighborSets {
    std::vector<std::vector<std::size_t>> neighbors;
    std::size_t k = 0;
};

// Dense pairwise distances. Cosine assumes unit-norm rows, so 1 - <f_i, f_j>.
inline DistanceMatrix pairwise_distance(const FeatureMatrix& f, Metric metric) {
    if (f.rows() < 2) throw ContractError("pairwise_distance: need at least 2 rows");
    if (!all_finite(f)) throw NumericalError("pairwise_distance: non-finite features");
    if (metric == Metric::jaccard)
        throw ContractError("pairwise_distance: use jaccard_distance for the jaccard metric");

    const std::size_t n = f.rows();
    DistanceMatrix d;
    d.metric = metric;
    d.values = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v;
            if (metric == Metric::euclidean)
                v = std::sqrt(squared_distance(f.row(i), f.row(j)));
            else
                v = 1.0 - dot(f.row(i), f.row(j));
            d.values(i, j) = v;
            d.values(j, i) = v;
        }
    }
    return d;
}

// k nearest neighbors per row, ties broken by ascending index.
inline NeighborSets knn_sets(const DistanceMatrix& d, std::size_t k) {
    if (k < 1) throw ContractError("knn_sets: k must be >= 1");
    const std::size_t n = d.size();
    const std::size_t take = std::min(k, n - 1);

    NeighborSets sets;
    sets.k = k;
    sets.neighbors.resize(n);

    std::vector<std::size_t> order;
    order.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        order.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        // stable sort on distance keeps the ascending-index tie-break
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return d.values(i, a) < d.values(i, b);
        });
        sets.neighbors[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
    }
    return sets;
}

// kNN-set Jaccard distance on cosine neighborhoods: S_i is the k nearest
// neighbors of i plus i itself; d(i,j) = 1 - |S_i & S_j| / |S_i | S_j|.
inline DistanceMatrix jaccard_distance(const FeatureMatrix& f, std::size_t k) {
    const DistanceMatrix cos = pairwise_distance(f, Metric::cosine);
    const NeighborSets knn = knn_sets(cos, k);
    const std::size_t n = f.rows();

    // Sorted member lists make intersections a linear merge.
    std::vector<std::vector<std::size_t>> sets(n);
    for (std::size_t i = 0; i < n; ++i) {
        sets[i] = knn.neighbors[i];
        sets[i].push_back(i);
        std::sort(sets[i].begin(), sets[i].end());
    }

    DistanceMatrix d;
    d.metric = Metric::jaccard;
    d.values = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& a = sets[i];
            const auto& b = sets[j];
            std::size_t inter = 0, ai = 0, bi = 0;
            while (ai < a.size() && bi < b.size()) {
                if (a[ai] < b[bi]) ++ai;
                else if (b[bi] < a[ai]) ++bi;
                else { ++inter; ++ai; ++bi; }
            }
            const std::size_t uni = a.size() + b.size() - inter;
            const double v = 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
            d.values(i, j) = v;
            d.values(j, i) = v;
        }
    }
    return d;
}

} // namespace dccc
