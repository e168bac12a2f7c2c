#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <dccc/io.hpp>

using namespace dccc;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

DatasetSpec small_spec() {
    DatasetSpec s;
    s.num_ids = 4;
    s.images_per_id = 3;
    s.input_dim = 5;
    s.num_cameras = 2;
    s.seed = 5;
    return s;
}

} // namespace

TEST_CASE("a dataset survives the disk round trip") {
    const auto spec = small_spec();
    const auto ds = generate_dataset(spec);
    TempFile f("io_ds_roundtrip.json");
    write_dataset(f.path, spec, ds);

    const auto [spec2, ds2] = read_dataset(f.path);
    REQUIRE(spec2.num_ids == spec.num_ids);
    REQUIRE(spec2.images_per_id == spec.images_per_id);
    REQUIRE(spec2.input_dim == spec.input_dim);
    REQUIRE(spec2.seed == spec.seed);
    REQUIRE_THAT(spec2.intra_noise, Catch::Matchers::WithinAbs(spec.intra_noise, 0.0));
    REQUIRE(ds2.samples == ds.samples);
    REQUIRE(ds2.true_ids == ds.true_ids);
    REQUIRE(ds2.cam_ids == ds.cam_ids);
}

TEST_CASE("writing the same dataset twice produces identical bytes") {
    const auto spec = small_spec();
    const auto ds = generate_dataset(spec);
    TempFile a("io_ds_a.json"), b("io_ds_b.json");
    write_dataset(a.path, spec, ds);
    write_dataset(b.path, spec, ds);
    const auto sa = slurp(a.path);
    REQUIRE(!sa.empty());
    REQUIRE(sa == slurp(b.path));
}

TEST_CASE("dataset files missing a section name the file") {
    TempFile f("io_ds_missing.json");
    {
        std::ofstream out(f.path);
        out << R"({"spec": {}, "true_ids": [], "cam_ids": []})";
    }
    REQUIRE_THROWS_MATCHES(read_dataset(f.path), ConfigError,
                           MessageMatches(ContainsSubstring(f.path) &&
                                          ContainsSubstring("samples")));
}

TEST_CASE("unreadable and unparseable files are distinct failures") {
    REQUIRE_THROWS_MATCHES(read_dataset("no_such_dir/x.json"), ConfigError,
                           MessageMatches(ContainsSubstring("cannot open")));
    TempFile f("io_bad.json");
    {
        std::ofstream out(f.path);
        out << "{ not json";
    }
    REQUIRE_THROWS_MATCHES(read_dataset(f.path), ConfigError,
                           MessageMatches(ContainsSubstring("invalid JSON")));
}

TEST_CASE("label arrays must match the sample count") {
    const auto spec = small_spec();
    const auto ds = generate_dataset(spec);
    nlohmann::json j;
    j["spec"] = to_json(spec);
    j["samples"] = detail::json_from_matrix(ds.samples);
    j["true_ids"] = std::vector<int>{1, 2};
    j["cam_ids"] = ds.cam_ids;
    TempFile f("io_ds_shortlabels.json");
    detail::save_json_file(f.path, j);
    REQUIRE_THROWS_MATCHES(read_dataset(f.path), ConfigError,
                           MessageMatches(ContainsSubstring("label arrays")));
}

TEST_CASE("ragged sample rows are rejected") {
    TempFile f("io_ds_ragged.json");
    {
        std::ofstream out(f.path);
        out << R"({"spec":)" << to_json(small_spec()).dump()
            << R"(,"samples":[[1,2],[3]],"true_ids":[0,0],"cam_ids":[0,1]})";
    }
    REQUIRE_THROWS_MATCHES(read_dataset(f.path), ConfigError,
                           MessageMatches(ContainsSubstring("ragged")));
}

TEST_CASE("an invalid embedded spec fails validation on read") {
    TempFile f("io_ds_badspec.json");
    auto spec_json = to_json(small_spec());
    spec_json["num_ids"] = 0;
    {
        std::ofstream out(f.path);
        out << R"({"spec":)" << spec_json.dump()
            << R"(,"samples":[[1,2]],"true_ids":[0],"cam_ids":[0]})";
    }
    REQUIRE_THROWS_AS(read_dataset(f.path), ConfigError);
}

static Checkpoint sample_checkpoint() {
    Rng rng(80);
    Checkpoint ck;
    ck.student = EncoderParams::random_init(5, 3, rng);
    ck.teacher = EncoderParams::random_init(5, 3, rng);
    ck.adam = AdamState::init(ck.student, 3e-4);
    ck.adam.m_weight(0, 1) = 0.25;
    ck.adam.v_weight(2, 4) = 1e-3;
    ck.adam.m_bias[1] = -0.5;
    ck.adam.v_bias[2] = 0.125;
    ck.adam.step = 17;
    ck.epoch = 7;

    Matrix f(4, 3);
    f(0, 0) = 1.0;
    f(1, 1) = 1.0;
    f(2, 2) = 1.0;
    f(3, 0) = 0.6;
    f(3, 1) = 0.8;
    PseudoLabeling l;
    l.assignment = {0, 1, 0, 1};
    l.num_clusters = 2;
    ck.memory = init_memory(f, l, 0.2, MemoryMode::hardest, 0.11);
    return ck;
}

TEST_CASE("a checkpoint survives the disk round trip") {
    const auto ck = sample_checkpoint();
    TempFile f("io_ck_roundtrip.json");
    write_checkpoint(f.path, ck);

    const auto back = read_checkpoint(f.path);
    REQUIRE(back.student.weight == ck.student.weight);
    REQUIRE(back.student.bias == ck.student.bias);
    REQUIRE(back.teacher.weight == ck.teacher.weight);
    REQUIRE(back.teacher.bias == ck.teacher.bias);
    REQUIRE(back.adam.m_weight == ck.adam.m_weight);
    REQUIRE(back.adam.v_weight == ck.adam.v_weight);
    REQUIRE(back.adam.m_bias == ck.adam.m_bias);
    REQUIRE(back.adam.v_bias == ck.adam.v_bias);
    REQUIRE(back.adam.step == 17);
    REQUIRE(back.adam.weight_decay == ck.adam.weight_decay);
    REQUIRE(back.epoch == 7);
    REQUIRE(back.memory.vectors == ck.memory.vectors);
    REQUIRE(back.memory.gamma == ck.memory.gamma);
    REQUIRE(back.memory.mode == MemoryMode::hardest);
    REQUIRE(back.memory.tau_w == ck.memory.tau_w);
}

TEST_CASE("checkpoint fields live where the format promises") {
    const auto ck = sample_checkpoint();
    TempFile f("io_ck_layout.json");
    write_checkpoint(f.path, ck);
    const auto j = detail::load_json_file(f.path);

    REQUIRE(j.contains("student"));
    REQUIRE(j["student"].contains("weight"));
    REQUIRE(j["student"].contains("bias"));
    REQUIRE(j.contains("teacher"));
    REQUIRE(j["adam"].contains("m_weight"));
    REQUIRE(j["adam"].contains("step"));
    REQUIRE(j["epoch"] == 7);
    REQUIRE(j["memory"].is_array());
    REQUIRE(j["memory"].size() == 2);
    REQUIRE(j["mode"] == "hardest");
    REQUIRE(j["gamma"] == 0.2);
    REQUIRE(j["tau_w"] == 0.11);
}

TEST_CASE("an empty memory is a valid checkpoint state") {
    auto ck = sample_checkpoint();
    ck.memory.vectors = Matrix();
    TempFile f("io_ck_emptymem.json");
    write_checkpoint(f.path, ck);
    const auto back = read_checkpoint(f.path);
    REQUIRE(back.memory.vectors.rows() == 0);
}

TEST_CASE("missing checkpoint keys name the file") {
    TempFile f("io_ck_missing.json");
    {
        std::ofstream out(f.path);
        out << R"({"student": {"weight": [[1]], "bias": [0]}})";
    }
    REQUIRE_THROWS_MATCHES(read_checkpoint(f.path), ConfigError,
                           MessageMatches(ContainsSubstring(f.path)));
}

TEST_CASE("student and teacher must agree in shape on read") {
    auto ck = sample_checkpoint();
    Rng rng(81);
    ck.teacher = EncoderParams::random_init(5, 2, rng); // different out dim
    TempFile f("io_ck_shapes.json");
    write_checkpoint(f.path, ck);
    REQUIRE_THROWS_MATCHES(read_checkpoint(f.path), ConfigError,
                           MessageMatches(ContainsSubstring("shape mismatch")));
}
