#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "dccc/core.hpp"
#include "dccc/encoder.hpp"
#include "dccc/memory_bank.hpp"
#include "dccc/synthetic.hpp"

namespace dccc {

namespace detail {

inline nlohmann::json json_from_matrix(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& what,
                               bool allow_empty = false) {
    if (!j.is_array()) throw ConfigError(what + ": expected an array of rows");
    if (j.empty()) {
        if (allow_empty) return Matrix();
        throw ConfigError(what + ": expected a non-empty array of rows");
    }
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ConfigError(what + ": ragged rows");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
}

inline void save_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open file for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw ConfigError("write failed: " + path);
}

} // namespace detail

inline nlohmann::json to_json(const DatasetSpec& s) {
    return {
        {"num_ids", s.num_ids},
        {"images_per_id", s.images_per_id},
        {"input_dim", s.input_dim},
        {"id_spread", s.id_spread},
        {"intra_noise", s.intra_noise},
        {"num_cameras", s.num_cameras},
        {"camera_shift", s.camera_shift},
        {"seed", s.seed},
    };
}

inline DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
    DatasetSpec s;
    try {
        s.num_ids = j.at("num_ids").get<std::size_t>();
        s.images_per_id = j.at("images_per_id").get<std::size_t>();
        s.input_dim = j.at("input_dim").get<std::size_t>();
        s.id_spread = j.at("id_spread").get<double>();
        s.intra_noise = j.at("intra_noise").get<double>();
        s.num_cameras = j.at("num_cameras").get<std::size_t>();
        s.camera_shift = j.at("camera_shift").get<double>();
        s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad dataset spec: ") + e.what());
    }
    s.validate();
    return s;
}

inline void write_dataset(const std::string& path, const DatasetSpec& spec,
                          const SyntheticDataset& ds) {
    nlohmann::json j;
    j["spec"] = to_json(spec);
    j["samples"] = detail::json_from_matrix(ds.samples);
    j["true_ids"] = ds.true_ids;
    j["cam_ids"] = ds.cam_ids;
    detail::save_json_file(path, j);
}

inline std::pair<DatasetSpec, SyntheticDataset> read_dataset(const std::string& path) {
    const nlohmann::json j = detail::load_json_file(path);
    if (!j.contains("spec") || !j.contains("samples") || !j.contains("true_ids") ||
        !j.contains("cam_ids"))
        throw ConfigError("dataset file " + path + ": missing spec/samples/true_ids/cam_ids");

    DatasetSpec spec = dataset_spec_from_json(j["spec"]);
    SyntheticDataset ds;
    ds.samples = detail::matrix_from_json(j["samples"], "dataset " + path);
    try {
        ds.true_ids = j["true_ids"].get<std::vector<int>>();
        ds.cam_ids = j["cam_ids"].get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("dataset file " + path + ": " + e.what());
    }
    if (ds.true_ids.size() != ds.samples.rows() || ds.cam_ids.size() != ds.samples.rows())
        throw ConfigError("dataset file " + path + ": label arrays do not match sample count");
    return {spec, ds};
}

// Snapshot of the trainable state plus the cluster memory at a given epoch.
struct Checkpoint {
    EncoderParams student;
    EncoderParams teacher;
    AdamState adam;
    std::size_t epoch = 0;
    ClusterMemory memory;
};

namespace detail {

inline nlohmann::json json_from_encoder(const EncoderParams& p) {
    return {{"weight", json_from_matrix(p.weight)}, {"bias", p.bias}};
}

inline EncoderParams encoder_from_json(const nlohmann::json& j, const std::string& what) {
    EncoderParams p;
    p.weight = matrix_from_json(j.at("weight"), what + ".weight");
    p.bias = j.at("bias").get<std::vector<double>>();
    if (p.bias.size() != p.weight.rows())
        throw ConfigError(what + ": bias length does not match weight rows");
    return p;
}

} // namespace detail

inline void write_checkpoint(const std::string& path, const Checkpoint& ck) {
    nlohmann::json j;
    j["student"] = detail::json_from_encoder(ck.student);
    j["teacher"] = detail::json_from_encoder(ck.teacher);
    j["adam"] = {
        {"m_weight", detail::json_from_matrix(ck.adam.m_weight)},
        {"v_weight", detail::json_from_matrix(ck.adam.v_weight)},
        {"m_bias", ck.adam.m_bias},
        {"v_bias", ck.adam.v_bias},
        {"step", ck.adam.step},
        {"beta1", ck.adam.beta1},
        {"beta2", ck.adam.beta2},
        {"eps", ck.adam.eps},
        {"weight_decay", ck.adam.weight_decay},
    };
    j["epoch"] = ck.epoch;
    j["memory"] = detail::json_from_matrix(ck.memory.vectors);
    j["gamma"] = ck.memory.gamma;
    j["mode"] = to_string(ck.memory.mode);
    j["tau_w"] = ck.memory.tau_w;
    detail::save_json_file(path, j);
}

inline Checkpoint read_checkpoint(const std::string& path) {
    const nlohmann::json j = detail::load_json_file(path);
    Checkpoint ck;
    try {
        ck.student = detail::encoder_from_json(j.at("student"), "checkpoint student");
        ck.teacher = detail::encoder_from_json(j.at("teacher"), "checkpoint teacher");
        const auto& a = j.at("adam");
        ck.adam.m_weight = detail::matrix_from_json(a.at("m_weight"), "checkpoint adam.m_weight");
        ck.adam.v_weight = detail::matrix_from_json(a.at("v_weight"), "checkpoint adam.v_weight");
        ck.adam.m_bias = a.at("m_bias").get<std::vector<double>>();
        ck.adam.v_bias = a.at("v_bias").get<std::vector<double>>();
        ck.adam.step = a.at("step").get<std::size_t>();
        ck.adam.beta1 = a.at("beta1").get<double>();
        ck.adam.beta2 = a.at("beta2").get<double>();
        ck.adam.eps = a.at("eps").get<double>();
        ck.adam.weight_decay = a.at("weight_decay").get<double>();
        ck.epoch = j.at("epoch").get<std::size_t>();
        ck.memory.vectors =
            detail::matrix_from_json(j.at("memory"), "checkpoint memory", /*allow_empty=*/true);
        ck.memory.gamma = j.at("gamma").get<double>();
        ck.memory.mode = memory_mode_from_string(j.at("mode").get<std::string>());
        ck.memory.tau_w = j.at("tau_w").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("checkpoint file " + path + ": " + e.what());
    }
    if (!same_shape(ck.student, ck.teacher))
        throw ConfigError("checkpoint file " + path + ": student/teacher shape mismatch");
    return ck;
}

} // namespace dccc
