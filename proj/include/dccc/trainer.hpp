#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "dccc/clustering.hpp"
#include "dccc/config.hpp"
#include "dccc/core.hpp"
#include "dccc/distance.hpp"
#include "dccc/encoder.hpp"
#include "dccc/io.hpp"
#include "dccc/losses.hpp"
#include "dccc/memory_bank.hpp"
#include "dccc/metrics.hpp"
#include "dccc/sampler.hpp"
#include "dccc/synthetic.hpp"

namespace dccc {

// One row of the per-epoch training log. Metrics that could not be computed
// (degenerate epoch, all-outlier clustering, too few IDs) stay empty.
struct EpochReport {
    std::size_t epoch = 0; // 1-based in reports
    double eps = 0.0;
    std::size_t num_clusters = 0;
    std::size_t num_outliers = 0;
    std::optional<double> mean_loss;
    std::optional<double> nmi, ari;
    std::optional<double> intra_mean, inter_mean;
    std::optional<double> map, rank1, rank5, rank10;
    bool degenerate = false;
};

struct TrainerState {
    SyntheticDataset data;
    QueryGallerySplit split;
    EncoderParams student;
    EncoderParams teacher;
    AdamState adam;
    ClusterMemory memory;
    bool has_memory = false;
    Rng rng;
};

// All state derives from the config: dataset from data_seed, parameters and
// the training loop's randomness from seed. The teacher starts as a copy of
// the student.
inline TrainerState init_trainer(const TrainConfig& cfg) {
    cfg.validate();
    TrainerState st;
    st.data = generate_dataset(cfg.data);
    st.split = split_query_gallery(st.data, cfg.query_per_id, cfg.data.seed);
    st.rng.seed(cfg.seed);
    st.student = EncoderParams::random_init(cfg.data.input_dim, cfg.encoder_out_dim, st.rng);
    st.teacher = st.student;
    st.adam = AdamState::init(st.student, cfg.weight_decay);
    st.adam.beta1 = cfg.adam_beta1;
    st.adam.beta2 = cfg.adam_beta2;
    st.adam.eps = cfg.adam_eps;
    return st;
}

namespace detail {

inline Matrix augment_batch(const SyntheticDataset& ds, const std::vector<std::size_t>& indices,
                            const AugmentParams& p, Rng& rng) {
    Matrix out(indices.size(), ds.samples.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto v = augment(ds.samples.row(indices[i]), p, rng);
        std::copy(v.begin(), v.end(), out.row(i).begin());
    }
    return out;
}

inline LossOutput compute_loss(const TrainConfig& cfg, const FeatureMatrix& q_s,
                               const FeatureMatrix& q_t, const std::vector<int>& labels,
                               const ClusterMemory& memory) {
    switch (cfg.loss_kind) {
        case LossKind::cluster_nce:
            return cluster_nce(q_s, labels, memory, cfg.tau);
        case LossKind::lss:
            return label_smooth_soft_loss(q_s, q_t, labels, memory, cfg.tau, cfg.mu_s);
        case LossKind::ce_plus_lss: {
            const LossOutput ce = cross_entropy_loss(q_s, labels, memory, cfg.tau);
            const LossOutput ss = label_smooth_soft_loss(q_s, q_t, labels, memory, cfg.tau, cfg.mu_s);
            const double w = cfg.ce_weight;
            LossOutput out;
            out.loss = w * ce.loss + (1.0 - w) * ss.loss;
            out.grad = Matrix(ce.grad.rows(), ce.grad.cols());
            for (std::size_t i = 0; i < out.grad.size(); ++i)
                out.grad.data()[i] = w * ce.grad.data()[i] + (1.0 - w) * ss.grad.data()[i];
            return out;
        }
    }
    throw ContractError("compute_loss: unreachable loss kind");
}

template <typename T>
inline std::vector<T> gather(const std::vector<T>& src, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(src[i]);
    return out;
}

inline Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), src.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        auto s = src.row(idx[i]);
        std::copy(s.begin(), s.end(), out.row(i).begin());
    }
    return out;
}

} // namespace detail

// One full epoch: extract features with the student, schedule eps, cluster,
// rebuild the memory, then run the contrastive iterations. If clustering
// yields fewer clusters than the sampler needs the epoch is degenerate: the
// encoder and optimizer stay untouched and the loss is reported absent.
inline EpochReport run_epoch(TrainerState& st, const TrainConfig& cfg, std::size_t epoch) {
    EpochReport rep;
    rep.epoch = epoch + 1;

    const FeatureMatrix features = forward(st.student, st.data.samples);
    rep.eps = eps_at(cfg.schedule, epoch);

    const DistanceMatrix dist = jaccard_distance(features, cfg.knn_k);
    const PseudoLabeling labels = dbscan(dist, DbscanParams{rep.eps, cfg.min_samples});
    rep.num_clusters = labels.num_clusters;
    rep.num_outliers = labels.num_outliers();

    const ClusterQuality quality = clustering_quality(labels, st.data.true_ids);
    rep.nmi = quality.nmi;
    rep.ari = quality.ari;

    rep.degenerate = labels.num_clusters < cfg.pk.num_ids;
    if (!rep.degenerate) {
        ClusterMemory memory = init_memory(features, labels, cfg.gamma, cfg.memory_mode, cfg.tau_w);
        const double lr = warmup_lr(epoch, cfg.base_lr, cfg.warmup_epochs);
        double loss_sum = 0.0;
        for (std::size_t it = 0; it < cfg.iters_per_epoch; ++it) {
            const PkBatch batch = pk_sample(labels, cfg.pk, st.rng);
            const Matrix view_s = detail::augment_batch(st.data, batch.indices, cfg.augment, st.rng);
            const Matrix view_t = detail::augment_batch(st.data, batch.indices, cfg.augment, st.rng);

            ForwardCache cache;
            const FeatureMatrix q_s = forward(st.student, view_s, &cache);
            const FeatureMatrix q_t = forward(st.teacher, view_t);

            const LossOutput out = detail::compute_loss(cfg, q_s, q_t, batch.pseudo_labels, memory);
            const EncoderGradients grads = backward(st.student, cache, out.grad);
            adam_step(st.adam, st.student, grads, lr);
            ema_update(st.teacher, st.student, cfg.ema);
            batch_update(memory, q_s, batch.pseudo_labels);
            loss_sum += out.loss;
        }
        rep.mean_loss = loss_sum / static_cast<double>(cfg.iters_per_epoch);
        st.memory = std::move(memory);
        st.has_memory = true;
    }

    const EncoderParams& eval_net =
        cfg.eval_network == EvalNetwork::student ? st.student : st.teacher;
    const FeatureMatrix eval_feats = forward(eval_net, st.data.samples);

    const DistanceStats stats = distance_stats(eval_feats, st.data.true_ids);
    rep.intra_mean = stats.intra_mean;
    rep.inter_mean = stats.inter_mean;

    const Matrix qf = detail::gather_rows(eval_feats, st.split.query);
    const Matrix gf = detail::gather_rows(eval_feats, st.split.gallery);
    const RetrievalResult ret = evaluate_retrieval(
        qf, gf, detail::gather(st.data.true_ids, st.split.query),
        detail::gather(st.data.true_ids, st.split.gallery),
        detail::gather(st.data.cam_ids, st.split.query),
        detail::gather(st.data.cam_ids, st.split.gallery));
    rep.map = ret.map;
    rep.rank1 = ret.rank1;
    rep.rank5 = ret.rank5;
    rep.rank10 = ret.rank10;
    return rep;
}

struct TrainResult {
    std::vector<EpochReport> reports;
    TrainerState state;
};

inline TrainResult train(const TrainConfig& cfg) {
    TrainResult res;
    res.state = init_trainer(cfg);
    res.reports.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch)
        res.reports.push_back(run_epoch(res.state, cfg, epoch));
    return res;
}

namespace detail {

inline std::string csv_cell(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string csv_cell(const std::optional<double>& v) {
    return v ? csv_cell(*v) : "nan";
}

} // namespace detail

inline std::string reports_csv(const std::vector<EpochReport>& reports) {
    std::string out = "epoch,eps,clusters,outliers,loss,nmi,ari,intra,inter,map,r1,r5,r10\n";
    for (const auto& r : reports) {
        out += std::to_string(r.epoch);
        out += ',';
        out += detail::csv_cell(r.eps);
        out += ',';
        out += std::to_string(r.num_clusters);
        out += ',';
        out += std::to_string(r.num_outliers);
        for (const auto* m : {&r.mean_loss, &r.nmi, &r.ari, &r.intra_mean, &r.inter_mean, &r.map,
                              &r.rank1, &r.rank5, &r.rank10}) {
            out += ',';
            out += detail::csv_cell(*m);
        }
        out += '\n';
    }
    return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open file for writing: " + path);
    out << text;
    if (!out) throw ConfigError("write failed: " + path);
}

inline Checkpoint make_checkpoint(const TrainerState& st, std::size_t epochs_run) {
    Checkpoint ck;
    ck.student = st.student;
    ck.teacher = st.teacher;
    ck.adam = st.adam;
    ck.epoch = epochs_run;
    ck.memory = st.memory;
    return ck;
}

// Runs training and persists reports.csv + checkpoint.json under out_dir.
inline TrainResult train_to_dir(const TrainConfig& cfg, const std::string& out_dir) {
    TrainResult res = train(cfg);
    write_text_file(out_dir + "/reports.csv", reports_csv(res.reports));
    write_checkpoint(out_dir + "/checkpoint.json", make_checkpoint(res.state, cfg.epochs));
    return res;
}

} // namespace dccc
