#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "dccc/core.hpp"

namespace dccc {

// Describes a synthetic "person" dataset: identity blobs around a shared base
// direction, with per-camera additive offsets standing in for camera bias.
struct DatasetSpec {
    std::size_t num_ids = 32;
    std::size_t images_per_id = 16;
    std::size_t input_dim = 64;
    double id_spread = 1.0;    // length of each ID's random offset from the base direction
    double intra_noise = 0.05; // per-coordinate Gaussian std within an ID
    std::size_t num_cameras = 4;
    double camera_shift = 0.2; // norm of each fixed per-camera offset vector
    std::uint64_t seed = 1;

    void validate() const {
        if (num_ids < 2) throw ConfigError("DatasetSpec: num_ids must be >= 2");
        if (images_per_id < 2) throw ConfigError("DatasetSpec: images_per_id must be >= 2");
        if (input_dim < 2) throw ConfigError("DatasetSpec: input_dim must be >= 2");
        if (id_spread < 0.0) throw ConfigError("DatasetSpec: id_spread must be >= 0");
        if (intra_noise < 0.0) throw ConfigError("DatasetSpec: intra_noise must be >= 0");
        if (num_cameras < 1) throw ConfigError("DatasetSpec: num_cameras must be >= 1");
        if (camera_shift < 0.0) throw ConfigError("DatasetSpec: camera_shift must be >= 0");
    }
};

struct SyntheticDataset {
    Matrix samples; // N x input_dim, raw (unnormalized) features
    std::vector<int> true_ids;
    std::vector<int> cam_ids;

    std::size_t size() const { return samples.rows(); }
};

struct AugmentParams {
    double noise_std = 0.05;
    double dropout_prob = 0.1;

    void validate() const {
        if (noise_std < 0.0) throw ConfigError("AugmentParams: noise_std must be >= 0");
        if (dropout_prob < 0.0 || dropout_prob >= 1.0)
            throw ConfigError("AugmentParams: dropout_prob must be in [0, 1)");
    }
};

namespace detail {

inline std::vector<double> random_unit_vector(std::size_t dim, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(dim);
    double n = 0.0;
    do {
        for (auto& x : v) x = gauss(rng);
        n = norm2(v);
    } while (n < 1e-12);
    for (auto& x : v) x /= n;
    return v;
}

} // namespace detail

// Builds the dataset deterministically from spec.seed. Sample layout is
// ID-major: rows [id * images_per_id, (id + 1) * images_per_id). Cameras are
// assigned round-robin so every ID spans all cameras.
inline SyntheticDataset generate_dataset(const DatasetSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const std::size_t n = spec.num_ids * spec.images_per_id;
    const std::size_t d = spec.input_dim;

    // Shared base direction plus one offset of length id_spread per identity.
    const std::vector<double> base = detail::random_unit_vector(d, rng);
    std::vector<std::vector<double>> id_means(spec.num_ids);
    for (std::size_t id = 0; id < spec.num_ids; ++id) {
        auto u = detail::random_unit_vector(d, rng);
        id_means[id].resize(d);
        for (std::size_t j = 0; j < d; ++j) id_means[id][j] = base[j] + spec.id_spread * u[j];
    }

    // Fixed per-camera offset vectors of norm camera_shift.
    std::vector<std::vector<double>> cam_offsets(spec.num_cameras);
    for (std::size_t c = 0; c < spec.num_cameras; ++c) {
        auto u = detail::random_unit_vector(d, rng);
        cam_offsets[c].resize(d);
        for (std::size_t j = 0; j < d; ++j) cam_offsets[c][j] = spec.camera_shift * u[j];
    }

    SyntheticDataset ds;
    ds.samples = Matrix(n, d);
    ds.true_ids.resize(n);
    ds.cam_ids.resize(n);

    std::size_t row = 0;
    for (std::size_t id = 0; id < spec.num_ids; ++id) {
        for (std::size_t img = 0; img < spec.images_per_id; ++img, ++row) {
            const std::size_t cam = img % spec.num_cameras;
            ds.true_ids[row] = static_cast<int>(id);
            ds.cam_ids[row] = static_cast<int>(cam);
            auto out = ds.samples.row(row);
            for (std::size_t j = 0; j < d; ++j) {
                double v = id_means[id][j] + cam_offsets[cam][j];
                if (spec.intra_noise > 0.0) v += spec.intra_noise * gauss(rng);
                out[j] = v;
            }
        }
    }
    return ds;
}

// Holds query/gallery row indices into a SyntheticDataset.
struct QueryGallerySplit {
    std::vector<std::size_t> query;
    std::vector<std::size_t> gallery;
};

// Picks query_per_id rows per identity as queries; the rest form the gallery.
// Both index lists come out sorted ascending.
inline QueryGallerySplit split_query_gallery(const SyntheticDataset& ds,
                                             std::size_t query_per_id,
                                             std::uint64_t seed) {
    if (ds.size() == 0) throw ConfigError("split_query_gallery: empty dataset");

    // Group rows by identity.
    int max_id = 0;
    for (int id : ds.true_ids) max_id = std::max(max_id, id);
    std::vector<std::vector<std::size_t>> by_id(static_cast<std::size_t>(max_id) + 1);
    for (std::size_t i = 0; i < ds.size(); ++i)
        by_id[static_cast<std::size_t>(ds.true_ids[i])].push_back(i);

    for (const auto& rows : by_id)
        if (!rows.empty() && query_per_id >= rows.size())
            throw ConfigError("split_query_gallery: query_per_id must be < images per id");

    Rng rng(seed);
    QueryGallerySplit split;
    for (auto& rows : by_id) {
        if (rows.empty()) continue;
        std::vector<std::size_t> shuffled = rows;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        for (std::size_t j = 0; j < shuffled.size(); ++j) {
            if (j < query_per_id)
                split.query.push_back(shuffled[j]);
            else
                split.gallery.push_back(shuffled[j]);
        }
    }
    std::sort(split.query.begin(), split.query.end());
    std::sort(split.gallery.begin(), split.gallery.end());
    return split;
}

// Stochastic view perturbation: additive Gaussian noise, then independent
// per-coordinate dropout. Stands in for image augmentation.
inline std::vector<double> augment(std::span<const double> x, const AugmentParams& p, Rng& rng) {
    p.validate();
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> out(x.begin(), x.end());
    for (auto& v : out) {
        if (p.noise_std > 0.0) v += p.noise_std * gauss(rng);
        if (p.dropout_prob > 0.0 && unif(rng) < p.dropout_prob) v = 0.0;
    }
    return out;
}

} // namespace dccc
