#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dccc/core.hpp"
#include "dccc/clustering.hpp"
#include "dccc/encoder.hpp"
#include "dccc/memory_bank.hpp"
#include "dccc/sampler.hpp"
#include "dccc/synthetic.hpp"

namespace dccc {

enum class LossKind { lss, cluster_nce, ce_plus_lss };

inline std::string to_string(LossKind k) {
    switch (k) {
        case LossKind::lss: return "lss";
        case LossKind::cluster_nce: return "cluster_nce";
        case LossKind::ce_plus_lss: return "ce_plus_lss";
    }
    return "?";
}

inline LossKind loss_kind_from_string(const std::string& s) {
    if (s == "lss") return LossKind::lss;
    if (s == "cluster_nce") return LossKind::cluster_nce;
    if (s == "ce_plus_lss") return LossKind::ce_plus_lss;
    throw ConfigError("unknown loss kind: " + s);
}

enum class EvalNetwork { student, teacher };

inline std::string to_string(EvalNetwork n) {
    return n == EvalNetwork::student ? "student" : "teacher";
}

inline EvalNetwork eval_network_from_string(const std::string& s) {
    if (s == "student") return EvalNetwork::student;
    if (s == "teacher") return EvalNetwork::teacher;
    throw ConfigError("unknown eval network: " + s);
}

// Full experiment description. Field defaults are the documented defaults of
// the flat key = value config format; schedule decay values are derived from
// epochs / eps_begin when their keys are absent.
struct TrainConfig {
    DatasetSpec data;
    std::size_t query_per_id = 4;
    AugmentParams augment;

    std::size_t encoder_out_dim = 32;
    double base_lr = 0.00035;
    std::size_t warmup_epochs = 20;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 5e-4;

    EpsSchedule schedule;
    std::size_t min_samples = 4;
    std::size_t knn_k = 30;

    MemoryMode memory_mode = MemoryMode::dynamic;
    double gamma = 0.1;
    double tau_w = 0.09;

    LossKind loss_kind = LossKind::lss;
    double tau = 0.05;
    double mu_s = 0.3;
    double ce_weight = 0.7; // weight on the cross-entropy part of ce_plus_lss

    EmaConfig ema;
    PkConfig pk;

    std::size_t epochs = 15;
    std::size_t iters_per_epoch = 50;
    std::uint64_t seed = 42;
    EvalNetwork eval_network = EvalNetwork::student;

    friend bool operator==(const TrainConfig&, const TrainConfig&);

    void validate() const {
        data.validate();
        augment.validate();
        schedule.validate();
        ema.validate();
        pk.validate();
        if (encoder_out_dim < 2) throw ConfigError("TrainConfig: encoder_out_dim must be >= 2");
        if (base_lr < 0.0) throw ConfigError("TrainConfig: base_lr must be >= 0");
        if (warmup_epochs < 1) throw ConfigError("TrainConfig: warmup_epochs must be >= 1");
        if (min_samples < 1) throw ConfigError("TrainConfig: min_samples must be >= 1");
        if (knn_k < 1) throw ConfigError("TrainConfig: knn_k must be >= 1");
        if (gamma < 0.0 || gamma > 1.0) throw ConfigError("TrainConfig: gamma must be in [0, 1]");
        if (!(tau_w > 0.0)) throw ConfigError("TrainConfig: tau_w must be > 0");
        if (!(tau > 0.0)) throw ConfigError("TrainConfig: tau must be > 0");
        if (mu_s < 0.0 || mu_s > 1.0) throw ConfigError("TrainConfig: mu_s must be in [0, 1]");
        if (ce_weight < 0.0 || ce_weight > 1.0) throw ConfigError("TrainConfig: ce_weight must be in [0, 1]");
        if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
        if (iters_per_epoch < 1) throw ConfigError("TrainConfig: iters_per_epoch must be >= 1");
        if (query_per_id >= data.images_per_id)
            throw ConfigError("TrainConfig: query_per_id must be < data_images_per_id");
    }
};

inline bool operator==(const TrainConfig& a, const TrainConfig& b);

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_f64(const std::string& v) {
    double out = 0.0;
    const char* begin = v.data();
    const char* end = v.data() + v.size();
    const auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc{} || res.ptr != end) throw ConfigError("not a number: '" + v + "'");
    return out;
}

inline std::uint64_t parse_u64(const std::string& v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError("not a nonnegative integer: '" + v + "'");
    return out;
}

inline std::string format_f64(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

// Parses the flat `key = value` config text. Unknown keys are rejected with
// the offending line number; absent keys keep the documented defaults.
inline TrainConfig parse_config_text(const std::string& text) {
    TrainConfig cfg;
    bool saw_floor = false, saw_expo_decay = false, saw_linear_decrement = false;

    using Setter = std::function<void(TrainConfig&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"data_num_ids", [](TrainConfig& c, const std::string& v) { c.data.num_ids = detail::parse_u64(v); }},
        {"data_images_per_id", [](TrainConfig& c, const std::string& v) { c.data.images_per_id = detail::parse_u64(v); }},
        {"data_input_dim", [](TrainConfig& c, const std::string& v) { c.data.input_dim = detail::parse_u64(v); }},
        {"data_id_spread", [](TrainConfig& c, const std::string& v) { c.data.id_spread = detail::parse_f64(v); }},
        {"data_intra_noise", [](TrainConfig& c, const std::string& v) { c.data.intra_noise = detail::parse_f64(v); }},
        {"data_num_cameras", [](TrainConfig& c, const std::string& v) { c.data.num_cameras = detail::parse_u64(v); }},
        {"data_camera_shift", [](TrainConfig& c, const std::string& v) { c.data.camera_shift = detail::parse_f64(v); }},
        {"data_seed", [](TrainConfig& c, const std::string& v) { c.data.seed = detail::parse_u64(v); }},
        {"query_per_id", [](TrainConfig& c, const std::string& v) { c.query_per_id = detail::parse_u64(v); }},
        {"aug_noise_std", [](TrainConfig& c, const std::string& v) { c.augment.noise_std = detail::parse_f64(v); }},
        {"aug_dropout_prob", [](TrainConfig& c, const std::string& v) { c.augment.dropout_prob = detail::parse_f64(v); }},
        {"encoder_out_dim", [](TrainConfig& c, const std::string& v) { c.encoder_out_dim = detail::parse_u64(v); }},
        {"base_lr", [](TrainConfig& c, const std::string& v) { c.base_lr = detail::parse_f64(v); }},
        {"warmup_epochs", [](TrainConfig& c, const std::string& v) { c.warmup_epochs = detail::parse_u64(v); }},
        {"adam_beta1", [](TrainConfig& c, const std::string& v) { c.adam_beta1 = detail::parse_f64(v); }},
        {"adam_beta2", [](TrainConfig& c, const std::string& v) { c.adam_beta2 = detail::parse_f64(v); }},
        {"adam_eps", [](TrainConfig& c, const std::string& v) { c.adam_eps = detail::parse_f64(v); }},
        {"weight_decay", [](TrainConfig& c, const std::string& v) { c.weight_decay = detail::parse_f64(v); }},
        {"scheduler", [](TrainConfig& c, const std::string& v) { c.schedule.kind = scheduler_kind_from_string(v); }},
        {"eps_begin", [](TrainConfig& c, const std::string& v) { c.schedule.eps_begin = detail::parse_f64(v); }},
        {"step_size", [](TrainConfig& c, const std::string& v) { c.schedule.step_size = detail::parse_u64(v); }},
        {"step_factor", [](TrainConfig& c, const std::string& v) { c.schedule.step_factor = detail::parse_f64(v); }},
        {"min_samples", [](TrainConfig& c, const std::string& v) { c.min_samples = detail::parse_u64(v); }},
        {"knn_k", [](TrainConfig& c, const std::string& v) { c.knn_k = detail::parse_u64(v); }},
        {"memory_mode", [](TrainConfig& c, const std::string& v) { c.memory_mode = memory_mode_from_string(v); }},
        {"gamma", [](TrainConfig& c, const std::string& v) { c.gamma = detail::parse_f64(v); }},
        {"tau_w", [](TrainConfig& c, const std::string& v) { c.tau_w = detail::parse_f64(v); }},
        {"loss_kind", [](TrainConfig& c, const std::string& v) { c.loss_kind = loss_kind_from_string(v); }},
        {"tau", [](TrainConfig& c, const std::string& v) { c.tau = detail::parse_f64(v); }},
        {"mu_s", [](TrainConfig& c, const std::string& v) { c.mu_s = detail::parse_f64(v); }},
        {"ce_weight", [](TrainConfig& c, const std::string& v) { c.ce_weight = detail::parse_f64(v); }},
        {"ema_lambda", [](TrainConfig& c, const std::string& v) { c.ema.lambda = detail::parse_f64(v); }},
        {"sampler_p", [](TrainConfig& c, const std::string& v) { c.pk.num_ids = detail::parse_u64(v); }},
        {"sampler_k", [](TrainConfig& c, const std::string& v) { c.pk.num_instances = detail::parse_u64(v); }},
        {"epochs", [](TrainConfig& c, const std::string& v) { c.epochs = detail::parse_u64(v); }},
        {"iters_per_epoch", [](TrainConfig& c, const std::string& v) { c.iters_per_epoch = detail::parse_u64(v); }},
        {"seed", [](TrainConfig& c, const std::string& v) { c.seed = detail::parse_u64(v); }},
        {"eval_network", [](TrainConfig& c, const std::string& v) { c.eval_network = eval_network_from_string(v); }},
    };

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");

        // three keys handled outside the table so absence can trigger derivation
        try {
            if (key == "eps_floor") {
                cfg.schedule.floor = detail::parse_f64(value);
                saw_floor = true;
            } else if (key == "expo_decay") {
                cfg.schedule.decay = detail::parse_f64(value);
                saw_expo_decay = true;
            } else if (key == "linear_decrement") {
                cfg.schedule.decrement = detail::parse_f64(value);
                saw_linear_decrement = true;
            } else {
                const auto it = setters.find(key);
                if (it == setters.end())
                    throw ConfigError("unknown key '" + key + "'");
                it->second(cfg, value);
            }
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + " (key '" + key +
                              "'): " + e.what());
        }
    }

    // Derived defaults: floor at half the initial eps; decay rates chosen so
    // the floor is reached near mid-training (sigma_e = 0.5^(1/T_half)).
    const double half_life = std::max(1.0, static_cast<double>(cfg.epochs) / 2.0);
    if (!saw_floor) cfg.schedule.floor = cfg.schedule.eps_begin / 2.0;
    if (!saw_expo_decay) cfg.schedule.decay = EpsSchedule::expo_decay_for_half_life(half_life);
    if (!saw_linear_decrement)
        cfg.schedule.decrement = (cfg.schedule.eps_begin - cfg.schedule.floor) / half_life;
    return cfg;
}

inline TrainConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

// Writes every key explicitly so parse_config(write_config(c)) == c.
inline std::string write_config(const TrainConfig& c) {
    std::ostringstream out;
    auto kv = [&out](const std::string& k, const std::string& v) { out << k << " = " << v << "\n"; };
    auto kf = [&](const std::string& k, double v) { kv(k, detail::format_f64(v)); };
    auto ku = [&](const std::string& k, std::uint64_t v) { kv(k, std::to_string(v)); };

    ku("data_num_ids", c.data.num_ids);
    ku("data_images_per_id", c.data.images_per_id);
    ku("data_input_dim", c.data.input_dim);
    kf("data_id_spread", c.data.id_spread);
    kf("data_intra_noise", c.data.intra_noise);
    ku("data_num_cameras", c.data.num_cameras);
    kf("data_camera_shift", c.data.camera_shift);
    ku("data_seed", c.data.seed);
    ku("query_per_id", c.query_per_id);
    kf("aug_noise_std", c.augment.noise_std);
    kf("aug_dropout_prob", c.augment.dropout_prob);
    ku("encoder_out_dim", c.encoder_out_dim);
    kf("base_lr", c.base_lr);
    ku("warmup_epochs", c.warmup_epochs);
    kf("adam_beta1", c.adam_beta1);
    kf("adam_beta2", c.adam_beta2);
    kf("adam_eps", c.adam_eps);
    kf("weight_decay", c.weight_decay);
    kv("scheduler", to_string(c.schedule.kind));
    kf("eps_begin", c.schedule.eps_begin);
    kf("eps_floor", c.schedule.floor);
    kf("expo_decay", c.schedule.decay);
    kf("linear_decrement", c.schedule.decrement);
    ku("step_size", c.schedule.step_size);
    kf("step_factor", c.schedule.step_factor);
    ku("min_samples", c.min_samples);
    ku("knn_k", c.knn_k);
    kv("memory_mode", to_string(c.memory_mode));
    kf("gamma", c.gamma);
    kf("tau_w", c.tau_w);
    kv("loss_kind", to_string(c.loss_kind));
    kf("tau", c.tau);
    kf("mu_s", c.mu_s);
    kf("ce_weight", c.ce_weight);
    kf("ema_lambda", c.ema.lambda);
    ku("sampler_p", c.pk.num_ids);
    ku("sampler_k", c.pk.num_instances);
    ku("epochs", c.epochs);
    ku("iters_per_epoch", c.iters_per_epoch);
    ku("seed", c.seed);
    kv("eval_network", to_string(c.eval_network));
    return out.str();
}

inline bool operator==(const TrainConfig& a, const TrainConfig& b) {
    return write_config(a) == write_config(b);
}

} // namespace dccc
