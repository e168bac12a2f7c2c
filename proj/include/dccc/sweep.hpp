#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "dccc/config.hpp"
#include "dccc/core.hpp"
#include "dccc/trainer.hpp"

namespace dccc {

namespace detail {

inline bool known_axis(const std::string& axis) {
    return axis == "scheduler_kind" || axis == "memory_mode" || axis == "loss_kind" ||
           axis == "tau_w" || axis == "mu_s" || axis == "step_size" || axis == "components";
}

} // namespace detail

// One ablation axis swept over a list of values, each value run once per seed.
// The per-run seed replaces both the training seed and the dataset seed, so
// every seed is an independent end-to-end replicate.
struct SweepSpec {
    std::string axis;
    std::vector<std::string> values;
    TrainConfig base;
    std::vector<std::uint64_t> seeds;

    void validate() const {
        base.validate();
        // a bad axis name is a spec mistake, not a per-run failure: reject it
        // here so it cannot dissolve into a CSV full of error rows
        if (!detail::known_axis(axis))
            throw ConfigError("SweepSpec: unknown axis '" + axis + "'");
        if (values.empty()) throw ConfigError("SweepSpec: need at least one value");
        if (seeds.empty()) throw ConfigError("SweepSpec: need at least one seed");
    }
};

namespace detail {

// The component axis toggles the three method pieces by name: the scheduler
// (off = constant eps), the dynamic memory (off = uniform averaging), and the
// smoothed soft loss (off = plain cluster NCE). Combinations join with '+'.
inline void apply_components(TrainConfig& cfg, const std::string& value) {
    cfg.schedule.kind = SchedulerKind::constant;
    cfg.memory_mode = MemoryMode::avg;
    cfg.loss_kind = LossKind::cluster_nce;
    if (value == "none") return;

    std::string rest = value;
    while (!rest.empty()) {
        const auto plus = rest.find('+');
        const std::string part = rest.substr(0, plus);
        rest = plus == std::string::npos ? "" : rest.substr(plus + 1);
        if (part == "dcps")
            cfg.schedule.kind = SchedulerKind::expo;
        else if (part == "dycl")
            cfg.memory_mode = MemoryMode::dynamic;
        else if (part == "lss")
            cfg.loss_kind = LossKind::lss;
        else
            throw ConfigError("unknown component '" + part + "' in value '" + value + "'");
    }
}

inline void apply_axis(TrainConfig& cfg, const std::string& axis, const std::string& value) {
    if (axis == "scheduler_kind") {
        cfg.schedule.kind = scheduler_kind_from_string(value);
    } else if (axis == "memory_mode") {
        cfg.memory_mode = memory_mode_from_string(value);
    } else if (axis == "loss_kind") {
        cfg.loss_kind = loss_kind_from_string(value);
    } else if (axis == "tau_w") {
        cfg.tau_w = parse_f64(value);
    } else if (axis == "mu_s") {
        cfg.mu_s = parse_f64(value);
    } else if (axis == "step_size") {
        // step-count sensitivity only makes sense under the step scheduler
        cfg.schedule.kind = SchedulerKind::step;
        const std::uint64_t s = parse_u64(value);
        if (s < 1) throw ConfigError("step_size value must be >= 1");
        cfg.schedule.step_size = s;
    } else if (axis == "components") {
        apply_components(cfg, value);
    } else {
        throw ConfigError("unknown sweep axis '" + axis + "'");
    }
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace detail

struct SweepRow {
    std::string value;
    std::uint64_t seed = 0;
    std::optional<double> map, r1, ari, nmi;
    std::string error; // non-empty if the run failed
};

inline std::vector<SweepRow> run_sweep_rows(const SweepSpec& spec) {
    spec.validate();
    std::vector<SweepRow> rows;
    for (const auto& value : spec.values) {
        for (const auto seed : spec.seeds) {
            SweepRow row;
            row.value = value;
            row.seed = seed;
            try {
                TrainConfig cfg = spec.base;
                detail::apply_axis(cfg, spec.axis, value);
                cfg.seed = seed;
                cfg.data.seed = seed;
                const TrainResult res = train(cfg);
                const EpochReport& last = res.reports.back();
                row.map = last.map;
                row.r1 = last.rank1;
                row.ari = last.ari;
                row.nmi = last.nmi;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

// CSV layout: header, one data row per (value, seed) in spec order, then a
// comment block with per-value medians over the seeds that produced a metric.
inline std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
    std::string out = "axis,value,seed,map,r1,ari,nmi\n";
    for (const auto& r : rows) {
        out += spec.axis;
        out += ',';
        out += r.value;
        out += ',';
        out += std::to_string(r.seed);
        for (const auto* m : {&r.map, &r.r1, &r.ari, &r.nmi}) {
            out += ',';
            out += detail::csv_cell(*m);
        }
        out += '\n';
        if (!r.error.empty()) {
            std::string msg = r.error;
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            out += "# error value=" + r.value + " seed=" + std::to_string(r.seed) + ": " + msg + "\n";
        }
    }

    for (const auto& value : spec.values) {
        std::vector<double> map_v, r1_v, ari_v, nmi_v;
        for (const auto& r : rows) {
            if (r.value != value) continue;
            if (r.map) map_v.push_back(*r.map);
            if (r.r1) r1_v.push_back(*r.r1);
            if (r.ari) ari_v.push_back(*r.ari);
            if (r.nmi) nmi_v.push_back(*r.nmi);
        }
        auto cell = [](const std::vector<double>& v) {
            return v.empty() ? std::string("nan") : detail::csv_cell(detail::median(v));
        };
        out += "# median axis=" + spec.axis + " value=" + value + " map=" + cell(map_v) +
               " r1=" + cell(r1_v) + " ari=" + cell(ari_v) + " nmi=" + cell(nmi_v) + "\n";
    }
    return out;
}

inline std::string run_sweep(const SweepSpec& spec) {
    return sweep_csv(spec, run_sweep_rows(spec));
}

} // namespace dccc
