#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <dccc/dccc.hpp>

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

CliResult run_cli(const std::string& args) {
    const char* bin = std::getenv("DCCC_CLI");
    REQUIRE(bin != nullptr);
    const std::string out_f = "cli_stdout.tmp";
    const std::string err_f = "cli_stderr.tmp";
    const std::string cmd = std::string("'") + bin + "' " + args + " >" + out_f + " 2>" + err_f;

    const int raw = std::system(cmd.c_str());
    REQUIRE(raw != -1);
    REQUIRE(WIFEXITED(raw));

    CliResult res;
    res.code = WEXITSTATUS(raw);
    res.out = slurp(out_f);
    res.err = slurp(err_f);
    std::remove(out_f.c_str());
    std::remove(err_f.c_str());
    return res;
}

// scratch directory wiped on scope exit
struct Workspace {
    fs::path dir;
    explicit Workspace(const std::string& name) : dir(name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string path(const std::string& leaf) const { return (dir / leaf).string(); }
    void write(const std::string& leaf, const std::string& text) const {
        std::ofstream out(path(leaf));
        out << text;
    }
};

const std::string kTinyConfig =
    "data_num_ids = 5\n"
    "data_images_per_id = 6\n"
    "data_input_dim = 16\n"
    "data_intra_noise = 0\n"
    "data_camera_shift = 0\n"
    "data_num_cameras = 3\n"
    "data_seed = 9\n"
    "query_per_id = 2\n"
    "encoder_out_dim = 8\n"
    "knn_k = 5\n"
    "sampler_p = 3\n"
    "sampler_k = 2\n"
    "epochs = 2\n"
    "iters_per_epoch = 5\n"
    "seed = 100\n";

// the dataset the tiny config trains on, as a generate spec
const std::string kTinySpec = R"({"num_ids": 5, "images_per_id": 6, "input_dim": 16,
    "id_spread": 1.0, "intra_noise": 0.0, "num_cameras": 3, "camera_shift": 0.0, "seed": 9})";

} // namespace

TEST_CASE("the command line requires a subcommand but helps politely") {
    REQUIRE(run_cli("").code == 1);
    REQUIRE(run_cli("--help").code == 0);
    REQUIRE(run_cli("frobnicate").code == 1);
    REQUIRE(run_cli("generate").code == 1); // --spec/--out missing
}

TEST_CASE("generate writes a loadable dataset and reports the sample count") {
    Workspace ws("cli_ws_generate");
    ws.write("spec.json",
             R"({"num_ids": 4, "images_per_id": 3, "input_dim": 5, "id_spread": 1.0,
                 "intra_noise": 0.05, "num_cameras": 2, "camera_shift": 0.2, "seed": 5})");

    const auto res = run_cli("generate --spec " + ws.path("spec.json") + " --out " + ws.path("ds.json"));
    REQUIRE(res.code == 0);
    REQUIRE_THAT(res.out, ContainsSubstring("wrote 12 samples"));

    const auto [spec, ds] = dccc::read_dataset(ws.path("ds.json"));
    REQUIRE(spec.num_ids == 4);
    REQUIRE(ds.samples.rows() == 12);
    REQUIRE(ds.true_ids.size() == 12);

    // regeneration is byte-identical
    REQUIRE(run_cli("generate --spec " + ws.path("spec.json") + " --out " + ws.path("ds2.json")).code == 0);
    REQUIRE(slurp(ws.path("ds.json")) == slurp(ws.path("ds2.json")));
}

TEST_CASE("generate rejects broken specs with a configuration exit") {
    Workspace ws("cli_ws_genbad");
    REQUIRE(run_cli("generate --spec " + ws.path("absent.json") + " --out " + ws.path("x.json")).code == 1);

    ws.write("notjson.json", "{ nope");
    REQUIRE(run_cli("generate --spec " + ws.path("notjson.json") + " --out " + ws.path("x.json")).code == 1);

    ws.write("zeroids.json",
             R"({"num_ids": 0, "images_per_id": 3, "input_dim": 5, "id_spread": 1.0,
                 "intra_noise": 0.05, "num_cameras": 2, "camera_shift": 0.2, "seed": 5})");
    const auto res = run_cli("generate --spec " + ws.path("zeroids.json") + " --out " + ws.path("x.json"));
    REQUIRE(res.code == 1);
    REQUIRE_THAT(res.err, ContainsSubstring("error:"));
}

TEST_CASE("train produces the report, the checkpoint, and a summary line") {
    Workspace ws("cli_ws_train");
    ws.write("train.conf", kTinyConfig);

    const auto res = run_cli("train --config " + ws.path("train.conf") + " --out-dir " + ws.path("run"));
    REQUIRE(res.code == 0);
    REQUIRE_THAT(res.out, ContainsSubstring("trained 2 epochs"));
    REQUIRE_THAT(res.out, ContainsSubstring("final map="));

    const std::string csv = slurp(ws.path("run/reports.csv"));
    REQUIRE(csv.rfind("epoch,eps,clusters,outliers,loss,nmi,ari,intra,inter,map,r1,r5,r10\n", 0) == 0);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 3); // header + 2 epochs

    const auto ck = dccc::read_checkpoint(ws.path("run/checkpoint.json"));
    REQUIRE(ck.epoch == 2);
    REQUIRE(ck.student.in_dim() == 16);
    REQUIRE(ck.student.out_dim() == 8);

    // a second run from the same config reproduces the report bytes
    REQUIRE(run_cli("train --config " + ws.path("train.conf") + " --out-dir " + ws.path("run2")).code == 0);
    REQUIRE(slurp(ws.path("run/reports.csv")) == slurp(ws.path("run2/reports.csv")));
    REQUIRE(slurp(ws.path("run/checkpoint.json")) == slurp(ws.path("run2/checkpoint.json")));
}

TEST_CASE("train refuses malformed configuration") {
    Workspace ws("cli_ws_trainbad");
    ws.write("bad.conf", "gamma = abc\n");
    const auto res = run_cli("train --config " + ws.path("bad.conf") + " --out-dir " + ws.path("run"));
    REQUIRE(res.code == 1);
    REQUIRE_THAT(res.err, ContainsSubstring("gamma"));

    REQUIRE(run_cli("train --config " + ws.path("missing.conf") + " --out-dir " + ws.path("run")).code == 1);
}

TEST_CASE("evaluate scores a trained checkpoint on a dataset file") {
    Workspace ws("cli_ws_eval");
    ws.write("train.conf", kTinyConfig);
    ws.write("spec.json", kTinySpec);
    REQUIRE(run_cli("train --config " + ws.path("train.conf") + " --out-dir " + ws.path("run")).code == 0);
    REQUIRE(run_cli("generate --spec " + ws.path("spec.json") + " --out " + ws.path("ds.json")).code == 0);

    const auto res = run_cli("evaluate --checkpoint " + ws.path("run/checkpoint.json") +
                             " --data " + ws.path("ds.json") +
                             " --query-per-id 2 --eps 0.5 --knn-k 5");
    REQUIRE(res.code == 0);

    const auto j = nlohmann::json::parse(res.out);
    REQUIRE(j["map"] == 1.0);
    REQUIRE(j["r1"] == 1.0);
    REQUIRE(j["r5"] == 1.0);
    REQUIRE(j["r10"] == 1.0);
    REQUIRE(j["nmi"] == 1.0);
    REQUIRE(j["ari"] == 1.0);

    // the teacher network of the same checkpoint also evaluates
    const auto teach = run_cli("evaluate --checkpoint " + ws.path("run/checkpoint.json") +
                               " --data " + ws.path("ds.json") +
                               " --query-per-id 2 --eps 0.5 --knn-k 5 --network teacher");
    REQUIRE(teach.code == 0);
    REQUIRE(nlohmann::json::parse(teach.out).contains("map"));

    REQUIRE(run_cli("evaluate --checkpoint " + ws.path("run/checkpoint.json") +
                    " --data " + ws.path("ds.json") + " --network sideways").code == 1);
}

TEST_CASE("evaluate flags dimension mismatches as configuration errors") {
    Workspace ws("cli_ws_evaldim");
    ws.write("train.conf", kTinyConfig);
    ws.write("narrow.json",
             R"({"num_ids": 4, "images_per_id": 6, "input_dim": 8, "id_spread": 1.0,
                 "intra_noise": 0.0, "num_cameras": 2, "camera_shift": 0.0, "seed": 3})");
    REQUIRE(run_cli("train --config " + ws.path("train.conf") + " --out-dir " + ws.path("run")).code == 0);
    REQUIRE(run_cli("generate --spec " + ws.path("narrow.json") + " --out " + ws.path("narrow_ds.json")).code == 0);

    const auto res = run_cli("evaluate --checkpoint " + ws.path("run/checkpoint.json") +
                             " --data " + ws.path("narrow_ds.json"));
    REQUIRE(res.code == 1);
    REQUIRE_THAT(res.err, ContainsSubstring("dim"));
}

TEST_CASE("a protocol with no reachable matches is a runtime failure") {
    Workspace ws("cli_ws_evalruntime");
    ws.write("train.conf", kTinyConfig);
    // one camera: every same-identity pair shares it, so retrieval filters everything
    ws.write("onecam.json",
             R"({"num_ids": 4, "images_per_id": 6, "input_dim": 16, "id_spread": 1.0,
                 "intra_noise": 0.0, "num_cameras": 1, "camera_shift": 0.0, "seed": 3})");
    REQUIRE(run_cli("train --config " + ws.path("train.conf") + " --out-dir " + ws.path("run")).code == 0);
    REQUIRE(run_cli("generate --spec " + ws.path("onecam.json") + " --out " + ws.path("onecam_ds.json")).code == 0);

    const auto res = run_cli("evaluate --checkpoint " + ws.path("run/checkpoint.json") +
                             " --data " + ws.path("onecam_ds.json") + " --query-per-id 2 --knn-k 5");
    REQUIRE(res.code == 2);
    REQUIRE_THAT(res.err, ContainsSubstring("error:"));
}

TEST_CASE("sweep writes the grid with explicit seeds") {
    Workspace ws("cli_ws_sweep");
    ws.write("train.conf", kTinyConfig);

    const auto res = run_cli("sweep --axis mu_s --values 0,0.3 --config " + ws.path("train.conf") +
                             " --seeds 7,8 --out " + ws.path("sweep.csv"));
    REQUIRE(res.code == 0);
    REQUIRE_THAT(res.out, ContainsSubstring("wrote 4 runs"));

    const std::string csv = slurp(ws.path("sweep.csv"));
    REQUIRE(csv.rfind("axis,value,seed,map,r1,ari,nmi\n", 0) == 0);
    REQUIRE_THAT(csv, ContainsSubstring("mu_s,0,7,"));
    REQUIRE_THAT(csv, ContainsSubstring("mu_s,0,8,"));
    REQUIRE_THAT(csv, ContainsSubstring("mu_s,0.3,7,"));
    REQUIRE_THAT(csv, ContainsSubstring("mu_s,0.3,8,"));
    REQUIRE_THAT(csv, ContainsSubstring("# median axis=mu_s value=0 "));
    REQUIRE_THAT(csv, ContainsSubstring("# median axis=mu_s value=0.3 "));
}

TEST_CASE("sweep defaults to five seeds rooted at the config seed") {
    Workspace ws("cli_ws_sweepdef");
    ws.write("train.conf", kTinyConfig);

    const auto res = run_cli("sweep --axis memory_mode --values avg --config " + ws.path("train.conf") +
                             " --out " + ws.path("sweep.csv"));
    REQUIRE(res.code == 0);
    REQUIRE_THAT(res.out, ContainsSubstring("wrote 5 runs"));
    const std::string csv = slurp(ws.path("sweep.csv"));
    for (int s = 100; s < 105; ++s)
        REQUIRE_THAT(csv, ContainsSubstring("memory_mode,avg," + std::to_string(s) + ","));
}

TEST_CASE("sweep rejects malformed value lists") {
    Workspace ws("cli_ws_sweepbad");
    ws.write("train.conf", kTinyConfig);
    const auto res = run_cli("sweep --axis mu_s --values '0,,0.3' --config " + ws.path("train.conf") +
                             " --seeds 7 --out " + ws.path("sweep.csv"));
    REQUIRE(res.code == 1);
    REQUIRE_THAT(res.err, ContainsSubstring("empty entry"));
}
