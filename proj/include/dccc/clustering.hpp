#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "dccc/core.hpp"
#include "dccc/distance.hpp"

namespace dccc {

constexpr int kOutlier = -1;

// Per-instance cluster assignment. Cluster ids are contiguous 0..C-1,
// outliers carry kOutlier.
struct PseudoLabeling {
    std::vector<int> assignment;
    std::size_t num_clusters = 0;

    std::size_t size() const { return assignment.size(); }
    bool is_outlier(std::size_t i) const { return assignment[i] == kOutlier; }
    std::size_t num_outliers() const {
        std::size_t n = 0;
        for (int a : assignment)
            if (a == kOutlier) ++n;
        return n;
    }
    // Member indices per cluster, ascending within each cluster.
    std::vector<std::vector<std::size_t>> members() const {
        std::vector<std::vector<std::size_t>> m(num_clusters);
        for (std::size_t i = 0; i < assignment.size(); ++i)
            if (assignment[i] != kOutlier) m[static_cast<std::size_t>(assignment[i])].push_back(i);
        return m;
    }
};

struct DbscanParams {
    double eps = 0.5;
    std::size_t min_samples = 4;

    void validate() const {
        if (!(eps > 0.0)) throw ConfigError("DbscanParams: eps must be > 0");
        if (min_samples < 1) throw ConfigError("DbscanParams: min_samples must be >= 1");
    }
};

enum class SchedulerKind { step, linear, expo, constant };

inline std::string to_string(SchedulerKind k) {
    switch (k) {
        case SchedulerKind::step: return "step";
        case SchedulerKind::linear: return "linear";
        case SchedulerKind::expo: return "expo";
        case SchedulerKind::constant: return "constant";
    }
    return "?";
}

inline SchedulerKind scheduler_kind_from_string(const std::string& s) {
    if (s == "step") return SchedulerKind::step;
    if (s == "linear") return SchedulerKind::linear;
    if (s == "expo") return SchedulerKind::expo;
    if (s == "constant") return SchedulerKind::constant;
    throw ConfigError("unknown scheduler kind: " + s);
}

// Per-epoch eps decay with a floor, by default half the initial value.
// "constant" turns the scheduler off and always yields eps_begin.
struct EpsSchedule {
    SchedulerKind kind = SchedulerKind::expo;
    double eps_begin = 0.7;
    double decay = 0.91;       // expo: per-epoch ratio sigma_e in (0, 1]
    double decrement = 0.0467; // linear: per-epoch subtraction
    std::size_t step_size = 5; // step: epochs per stage
    double step_factor = 0.75; // step: per-stage ratio
    double floor = 0.35;

    void validate() const {
        if (!(eps_begin > 0.0)) throw ConfigError("EpsSchedule: eps_begin must be > 0");
        if (!(floor > 0.0)) throw ConfigError("EpsSchedule: floor must be > 0");
        if (floor > eps_begin) throw ConfigError("EpsSchedule: floor must be <= eps_begin");
        if (!(decay > 0.0) || decay > 1.0) throw ConfigError("EpsSchedule: expo decay must be in (0, 1]");
        if (decrement < 0.0) throw ConfigError("EpsSchedule: linear decrement must be >= 0");
        if (step_size < 1) throw ConfigError("EpsSchedule: step_size must be >= 1");
        if (!(step_factor > 0.0) || step_factor > 1.0)
            throw ConfigError("EpsSchedule: step_factor must be in (0, 1]");
    }

    // Decay ratio that reaches the half-value floor after half_life epochs.
    static double expo_decay_for_half_life(double half_life) {
        if (!(half_life > 0.0)) throw ConfigError("expo half-life must be > 0");
        return std::pow(0.5, 1.0 / half_life);
    }
};

inline double eps_at(const EpsSchedule& s, std::size_t epoch) {
    s.validate();
    double eps = s.eps_begin;
    switch (s.kind) {
        case SchedulerKind::expo:
            eps = s.eps_begin * std::pow(s.decay, static_cast<double>(epoch));
            break;
        case SchedulerKind::linear:
            eps = s.eps_begin - s.decrement * static_cast<double>(epoch);
            break;
        case SchedulerKind::step:
            eps = s.eps_begin * std::pow(s.step_factor, static_cast<double>(epoch / s.step_size));
            break;
        case SchedulerKind::constant:
            return s.eps_begin;
    }
    return std::max(s.floor, eps);
}

// DBSCAN over a precomputed distance matrix. A point is core iff its
// eps-neighborhood (itself included) holds at least min_samples points.
// Clusters grow by BFS from the lowest-index unvisited core point, with
// neighbor queues in ascending index order, so border points reachable from
// several clusters always land in the cluster discovered first.
inline PseudoLabeling dbscan(const DistanceMatrix& d, const DbscanParams& p) {
    p.validate();
    const std::size_t n = d.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (d.values(i, i) != 0.0)
            throw ContractError("dbscan: distance matrix must have a zero diagonal");
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(d.values(i, j) - d.values(j, i)) > 1e-9)
                throw ContractError("dbscan: distance matrix must be symmetric");
    }

    std::vector<std::vector<std::size_t>> neighborhood(n);
    std::vector<bool> core(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            if (d.values(i, j) <= p.eps) neighborhood[i].push_back(j);
        core[i] = neighborhood[i].size() >= p.min_samples;
    }

    PseudoLabeling labels;
    labels.assignment.assign(n, kOutlier);
    std::vector<bool> enqueued(n, false);
    int next_cluster = 0;

    for (std::size_t seed = 0; seed < n; ++seed) {
        if (!core[seed] || labels.assignment[seed] != kOutlier) continue;
        const int cid = next_cluster++;
        std::deque<std::size_t> queue;
        queue.push_back(seed);
        enqueued[seed] = true;
        while (!queue.empty()) {
            const std::size_t cur = queue.front();
            queue.pop_front();
            if (labels.assignment[cur] != kOutlier) continue;
            labels.assignment[cur] = cid;
            if (!core[cur]) continue; // border points do not expand
            for (std::size_t nb : neighborhood[cur]) {
                if (labels.assignment[nb] == kOutlier && !enqueued[nb]) {
                    queue.push_back(nb);
                    enqueued[nb] = true;
                }
            }
        }
        std::fill(enqueued.begin(), enqueued.end(), false);
    }

    labels.num_clusters = static_cast<std::size_t>(next_cluster);
    return labels;
}

} // namespace dccc
