#pragma once

#include <algorithm>
#include <vector>

#include "dccc/core.hpp"
#include "dccc/clustering.hpp"

namespace dccc {

struct PkConfig {
    std::size_t num_ids = 8;       // P
    std::size_t num_instances = 4; // K

    std::size_t batch_size() const { return num_ids * num_instances; }

    void validate() const {
        if (num_ids < 1) throw ConfigError("PkConfig: P must be >= 1");
        if (num_instances < 1) throw ConfigError("PkConfig: K must be >= 1");
    }
};

struct PkBatch {
    std::vector<std::size_t> indices;   // P*K dataset rows
    std::vector<int> pseudo_labels;     // cluster id per row
};

// P distinct pseudo-identities drawn uniformly without replacement, K
// instances each: without replacement when the cluster is large enough,
// with replacement otherwise. Outliers are never sampled.
inline PkBatch pk_sample(const PseudoLabeling& labels, const PkConfig& cfg, Rng& rng) {
    cfg.validate();
    auto members = labels.members();

    std::vector<std::size_t> cluster_ids;
    for (std::size_t c = 0; c < members.size(); ++c)
        if (!members[c].empty()) cluster_ids.push_back(c);

    if (cluster_ids.size() < cfg.num_ids)
        throw DegenerateEpochError("pk_sample: only " + std::to_string(cluster_ids.size()) +
                                   " clusters available for P=" + std::to_string(cfg.num_ids));

    // partial Fisher-Yates picks the P clusters
    for (std::size_t i = 0; i < cfg.num_ids; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, cluster_ids.size() - 1);
        std::swap(cluster_ids[i], cluster_ids[pick(rng)]);
    }

    PkBatch batch;
    batch.indices.reserve(cfg.batch_size());
    batch.pseudo_labels.reserve(cfg.batch_size());

    for (std::size_t i = 0; i < cfg.num_ids; ++i) {
        const std::size_t cid = cluster_ids[i];
        auto& rows = members[cid];
        if (rows.size() >= cfg.num_instances) {
            for (std::size_t j = 0; j < cfg.num_instances; ++j) {
                std::uniform_int_distribution<std::size_t> pick(j, rows.size() - 1);
                std::swap(rows[j], rows[pick(rng)]);
                batch.indices.push_back(rows[j]);
                batch.pseudo_labels.push_back(static_cast<int>(cid));
            }
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
            for (std::size_t j = 0; j < cfg.num_instances; ++j) {
                batch.indices.push_back(rows[pick(rng)]);
                batch.pseudo_labels.push_back(static_cast<int>(cid));
            }
        }
    }
    return batch;
}

} // namespace dccc
