#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "dccc/core.hpp"
#include "dccc/clustering.hpp"

namespace dccc {

struct RetrievalResult {
    double map = 0.0;
    double rank1 = 0.0;
    double rank5 = 0.0;
    double rank10 = 0.0;
    std::size_t skipped_queries = 0; // queries with no valid relevant gallery item
};

struct ClusterQuality {
    std::optional<double> nmi;
    std::optional<double> ari;
    std::size_t num_clusters = 0;
    std::size_t num_outliers = 0;
};

struct DistanceStats {
    std::optional<double> intra_mean;
    std::optional<double> inter_mean;
};

// Ranks the gallery per query by descending cosine similarity (ties broken by
// ascending gallery index), drops gallery items sharing both ID and camera
// with the query, and accumulates AP and CMC over the filtered ranking.
// Queries with no valid relevant item are excluded from both averages.
inline RetrievalResult evaluate_retrieval(const FeatureMatrix& query_feats,
                                          const FeatureMatrix& gallery_feats,
                                          const std::vector<int>& q_ids,
                                          const std::vector<int>& g_ids,
                                          const std::vector<int>& q_cams,
                                          const std::vector<int>& g_cams) {
    const std::size_t nq = query_feats.rows();
    const std::size_t ng = gallery_feats.rows();
    if (nq == 0 || ng == 0) throw ContractError("evaluate_retrieval: empty query or gallery");
    if (q_ids.size() != nq || q_cams.size() != nq || g_ids.size() != ng || g_cams.size() != ng)
        throw ContractError("evaluate_retrieval: label array lengths do not match features");

    RetrievalResult res;
    double ap_sum = 0.0;
    double r1 = 0.0, r5 = 0.0, r10 = 0.0;
    std::size_t valid_queries = 0;

    std::vector<std::size_t> order(ng);
    std::vector<double> sim(ng);
    for (std::size_t q = 0; q < nq; ++q) {
        for (std::size_t g = 0; g < ng; ++g)
            sim[g] = dot(query_feats.row(q), gallery_feats.row(g));

        order.resize(ng);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });

        std::size_t rank = 0;       // 1-based position in the filtered ranking
        std::size_t hits = 0;
        double ap = 0.0;
        std::size_t first_hit_rank = 0;
        for (std::size_t g : order) {
            if (g_ids[g] == q_ids[q] && g_cams[g] == q_cams[q]) continue; // protocol exclusion
            ++rank;
            if (g_ids[g] == q_ids[q]) {
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(rank);
                if (first_hit_rank == 0) first_hit_rank = rank;
            }
        }
        if (hits == 0) {
            res.skipped_queries += 1;
            continue;
        }
        ++valid_queries;
        ap_sum += ap / static_cast<double>(hits);
        if (first_hit_rank <= 1) r1 += 1.0;
        if (first_hit_rank <= 5) r5 += 1.0;
        if (first_hit_rank <= 10) r10 += 1.0;
    }

    if (valid_queries == 0) throw ContractError("evaluate_retrieval: no query has a valid relevant item");
    res.map = ap_sum / static_cast<double>(valid_queries);
    res.rank1 = r1 / static_cast<double>(valid_queries);
    res.rank5 = r5 / static_cast<double>(valid_queries);
    res.rank10 = r10 / static_cast<double>(valid_queries);
    return res;
}

namespace detail {

// n-choose-2 in double precision; exact for desk-scale counts.
inline double comb2(double n) { return n * (n - 1.0) / 2.0; }

} // namespace detail

// NMI (arithmetic normalization) and ARI over non-outlier instances.
inline ClusterQuality clustering_quality(const PseudoLabeling& pseudo, const std::vector<int>& truth) {
    if (pseudo.size() != truth.size())
        throw ContractError("clustering_quality: label lengths do not match");

    ClusterQuality q;
    q.num_clusters = pseudo.num_clusters;
    q.num_outliers = pseudo.num_outliers();

    // contingency over clustered instances only
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> pred_count, true_count;
    double n = 0.0;
    for (std::size_t i = 0; i < pseudo.size(); ++i) {
        if (pseudo.is_outlier(i)) continue;
        joint[{pseudo.assignment[i], truth[i]}] += 1.0;
        pred_count[pseudo.assignment[i]] += 1.0;
        true_count[truth[i]] += 1.0;
        n += 1.0;
    }
    if (n == 0.0) return q; // all outliers: quality absent

    // entropies and mutual information in nats
    double h_pred = 0.0, h_true = 0.0, mi = 0.0;
    for (const auto& [label, c] : pred_count) h_pred -= (c / n) * std::log(c / n);
    for (const auto& [label, c] : true_count) h_true -= (c / n) * std::log(c / n);
    for (const auto& [pair, c] : joint) {
        const double pij = c / n;
        mi += pij * std::log(pij * n * n / (pred_count.at(pair.first) * true_count.at(pair.second)));
    }

    if (pred_count.size() == 1 && true_count.size() == 1) {
        q.nmi = 1.0; // both partitions trivial and identical
    } else {
        const double denom = 0.5 * (h_pred + h_true);
        q.nmi = (mi <= 1e-15 || denom <= 1e-15) ? 0.0 : std::clamp(mi / denom, 0.0, 1.0);
    }

    // adjusted Rand index from the same contingency table
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [pair, c] : joint) sum_ij += detail::comb2(c);
    for (const auto& [label, c] : pred_count) sum_a += detail::comb2(c);
    for (const auto& [label, c] : true_count) sum_b += detail::comb2(c);
    const double total = detail::comb2(n);

    if (pred_count.size() == 1 && true_count.size() == 1) {
        q.ari = 1.0;
    } else if (total <= 0.0) {
        q.ari = 1.0;
    } else {
        const double expected = sum_a * sum_b / total;
        const double max_index = 0.5 * (sum_a + sum_b);
        const double denom = max_index - expected;
        q.ari = (denom == 0.0) ? 1.0 : (sum_ij - expected) / denom;
    }
    return q;
}

// Mean pairwise cosine distance within identities and across identities.
inline DistanceStats distance_stats(const FeatureMatrix& features, const std::vector<int>& truth_ids) {
    if (features.rows() != truth_ids.size())
        throw ContractError("distance_stats: label length does not match features");
    const std::size_t n = features.rows();

    std::map<int, std::size_t> id_count;
    for (int id : truth_ids) id_count[id] += 1;
    bool intra_ok = !id_count.empty();
    for (const auto& [id, c] : id_count)
        if (c < 2) intra_ok = false;
    const bool inter_ok = id_count.size() >= 2;

    DistanceStats stats;
    if (!intra_ok && !inter_ok) return stats;

    auto cosine = [&](std::size_t i, std::size_t j) {
        const double ni = norm2(features.row(i));
        const double nj = norm2(features.row(j));
        if (!(ni > 1e-12) || !(nj > 1e-12))
            throw NumericalError("distance_stats: zero-norm feature row");
        return 1.0 - dot(features.row(i), features.row(j)) / (ni * nj);
    };

    double intra_sum = 0.0, inter_sum = 0.0;
    std::size_t intra_pairs = 0, inter_pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = cosine(i, j);
            if (truth_ids[i] == truth_ids[j]) {
                intra_sum += d;
                ++intra_pairs;
            } else {
                inter_sum += d;
                ++inter_pairs;
            }
        }
    }
    if (intra_ok && intra_pairs > 0) stats.intra_mean = intra_sum / static_cast<double>(intra_pairs);
    if (inter_ok && inter_pairs > 0) stats.inter_mean = inter_sum / static_cast<double>(inter_pairs);
    return stats;
}

} // namespace dccc
