#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <dccc/dccc.hpp>

namespace {

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& v : out) {
        v = dccc::detail::trim(v);
        if (v.empty()) throw dccc::ConfigError("empty entry in list '" + s + "'");
    }
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> out;
    for (const auto& v : split_csv_list(s)) out.push_back(dccc::detail::parse_u64(v));
    return out;
}

void cmd_generate(const std::string& spec_path, const std::string& out_path) {
    const dccc::DatasetSpec spec =
        dccc::dataset_spec_from_json(dccc::detail::load_json_file(spec_path));
    const dccc::SyntheticDataset ds = dccc::generate_dataset(spec);
    dccc::write_dataset(out_path, spec, ds);
    std::cout << "wrote " << ds.size() << " samples to " << out_path << "\n";
}

void cmd_train(const std::string& config_path, const std::string& out_dir) {
    const dccc::TrainConfig cfg = dccc::parse_config(config_path);
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    const dccc::TrainResult res = dccc::train_to_dir(cfg, out_dir);
    const dccc::EpochReport& last = res.reports.back();
    std::cout << "trained " << cfg.epochs << " epochs; final map="
              << dccc::detail::csv_cell(last.map) << " ari=" << dccc::detail::csv_cell(last.ari)
              << "; outputs in " << out_dir << "\n";
}

struct EvaluateArgs {
    std::string checkpoint_path;
    std::string data_path;
    std::string network = "student";
    std::size_t query_per_id = 4;
    double eps = 0.35;
    std::size_t min_samples = 4;
    std::size_t knn_k = 30;
};

void cmd_evaluate(const EvaluateArgs& args) {
    const dccc::Checkpoint ck = dccc::read_checkpoint(args.checkpoint_path);
    const auto [spec, ds] = dccc::read_dataset(args.data_path);
    const dccc::EncoderParams& net =
        dccc::eval_network_from_string(args.network) == dccc::EvalNetwork::student ? ck.student
                                                                                   : ck.teacher;
    if (net.in_dim() != ds.samples.cols())
        throw dccc::ConfigError("checkpoint input dim does not match dataset feature dim");

    const dccc::FeatureMatrix feats = dccc::forward(net, ds.samples);

    const dccc::QueryGallerySplit split =
        dccc::split_query_gallery(ds, args.query_per_id, spec.seed);
    const dccc::Matrix qf = dccc::detail::gather_rows(feats, split.query);
    const dccc::Matrix gf = dccc::detail::gather_rows(feats, split.gallery);
    const dccc::RetrievalResult ret = dccc::evaluate_retrieval(
        qf, gf, dccc::detail::gather(ds.true_ids, split.query),
        dccc::detail::gather(ds.true_ids, split.gallery),
        dccc::detail::gather(ds.cam_ids, split.query),
        dccc::detail::gather(ds.cam_ids, split.gallery));

    const dccc::DistanceMatrix dist = dccc::jaccard_distance(feats, args.knn_k);
    const dccc::PseudoLabeling labels =
        dccc::dbscan(dist, dccc::DbscanParams{args.eps, args.min_samples});
    const dccc::ClusterQuality quality = dccc::clustering_quality(labels, ds.true_ids);

    nlohmann::json out;
    out["map"] = ret.map;
    out["r1"] = ret.rank1;
    out["r5"] = ret.rank5;
    out["r10"] = ret.rank10;
    out["nmi"] = quality.nmi ? nlohmann::json(*quality.nmi) : nlohmann::json(nullptr);
    out["ari"] = quality.ari ? nlohmann::json(*quality.ari) : nlohmann::json(nullptr);
    std::cout << out.dump() << "\n";
}

struct SweepArgs {
    std::string axis;
    std::string values;
    std::string config_path;
    std::string seeds; // empty -> seed .. seed+4 from the base config
    std::string out_path;
};

void cmd_sweep(const SweepArgs& args) {
    dccc::SweepSpec spec;
    spec.axis = args.axis;
    spec.values = split_csv_list(args.values);
    spec.base = dccc::parse_config(args.config_path);
    if (args.seeds.empty()) {
        for (std::uint64_t i = 0; i < 5; ++i) spec.seeds.push_back(spec.base.seed + i);
    } else {
        spec.seeds = parse_seed_list(args.seeds);
    }
    const std::string csv = dccc::run_sweep(spec);
    dccc::write_text_file(args.out_path, csv);
    std::cout << "wrote " << spec.values.size() * spec.seeds.size() << " runs to " << args.out_path
              << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale lab for dynamic-clustering contrastive re-identification"};
    app.require_subcommand(1);

    std::string gen_spec, gen_out;
    auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset JSON file");
    gen->add_option("--spec", gen_spec, "Dataset spec JSON file")->required();
    gen->add_option("--out", gen_out, "Output dataset path")->required();

    std::string train_config, train_out_dir;
    auto* tr = app.add_subcommand("train", "Run training from a config file");
    tr->add_option("--config", train_config, "Config file (key = value lines)")->required();
    tr->add_option("--out-dir", train_out_dir, "Directory for reports.csv and checkpoint.json")
        ->required();

    EvaluateArgs ev_args;
    auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
    ev->add_option("--checkpoint", ev_args.checkpoint_path, "Checkpoint JSON file")->required();
    ev->add_option("--data", ev_args.data_path, "Dataset JSON file")->required();
    ev->add_option("--network", ev_args.network, "student or teacher (default student)");
    ev->add_option("--query-per-id", ev_args.query_per_id, "Queries held out per identity");
    ev->add_option("--eps", ev_args.eps, "DBSCAN eps for the label-quality metrics");
    ev->add_option("--min-samples", ev_args.min_samples, "DBSCAN min_samples");
    ev->add_option("--knn-k", ev_args.knn_k, "Neighborhood size for the set-overlap distance");

    SweepArgs sw_args;
    auto* sw = app.add_subcommand("sweep", "Sweep one axis over values x seeds");
    sw->add_option("--axis", sw_args.axis, "Axis name")->required();
    sw->add_option("--values", sw_args.values, "Comma-separated values")->required();
    sw->add_option("--config", sw_args.config_path, "Base config file")->required();
    sw->add_option("--seeds", sw_args.seeds, "Comma-separated seeds (default: seed..seed+4)");
    sw->add_option("--out", sw_args.out_path, "Output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gen)
            cmd_generate(gen_spec, gen_out);
        else if (*tr)
            cmd_train(train_config, train_out_dir);
        else if (*ev)
            cmd_evaluate(ev_args);
        else if (*sw)
            cmd_sweep(sw_args);
    } catch (const dccc::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
