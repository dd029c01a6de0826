// Command-line front end for the synthetic-fundus disentanglement lab.
//
//   dlab <synth|train|audit|compare|all> --config <path> --in <dir> --out <dir>
//        [--in2 <dir>] [--resume <snapshot-dir>] [--seed <u64>]
//
// Exit codes: 0 success, 1 validation error (bad config/arguments/schema),
// 2 runtime failure. TOOL_THREADS caps worker parallelism.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "dlab/checkpoint.hpp"
#include "dlab/config.hpp"
#include "dlab/fairaudit.hpp"
#include "dlab/manifest.hpp"
#include "dlab/report.hpp"
#include "dlab/synthgen.hpp"
#include "dlab/trainer.hpp"

namespace fs = std::filesystem;
using dlab::config::ExperimentConfig;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::size_t worker_threads() {
    if (const char* env = std::getenv("TOOL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v < 1) throw std::invalid_argument("TOOL_THREADS must be a positive integer");
        return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

struct CommonArgs {
    std::string config_path;
    std::string in_dir;
    std::string in2_dir;
    std::string out_dir;
    std::string resume;
    std::optional<std::uint64_t> seed;
};

ExperimentConfig load_config_or_default(const CommonArgs& args) {
    if (args.config_path.empty()) return {};
    return dlab::config::load_config(args.config_path);
}

dlab::manifest::Manifest base_manifest(const std::string& command, const CommonArgs& args,
                                       const ExperimentConfig& cfg) {
    dlab::manifest::Manifest m;
    m.tool_version = dlab::manifest::kToolVersion;
    m.command = command;
    m.config_echo = cfg.raw;
    if (!args.config_path.empty())
        m.input_hashes["config"] = dlab::manifest::hash_file(args.config_path);
    return m;
}

void finish_manifest(dlab::manifest::Manifest& m, const std::string& out_dir,
                     const std::map<std::string, double>& timings) {
    // hash outputs first, then write the manifest and timings (which are not
    // part of the hashed set: the manifest must not hash itself, and timings
    // are the one deliberately non-reproducible file)
    m.output_hashes = dlab::manifest::hash_tree(out_dir);
    dlab::manifest::write_manifest(m, out_dir + "/manifest.json");
    dlab::manifest::write_timings(timings, out_dir + "/timings.json");
}

dlab::synthgen::SplitAssignment splits_from_tags(const dlab::synthgen::Dataset& ds) {
    dlab::synthgen::SplitAssignment sp;
    std::map<std::string, std::string> seen;  // patient -> split
    for (const auto& s : ds.samples) {
        auto [it, inserted] = seen.emplace(s.patient_id, s.split);
        if (!inserted && it->second != s.split)
            throw dlab::synthgen::SplitError("patient " + s.patient_id +
                                             " appears in multiple splits");
        if (!inserted) continue;
        if (s.split == "train") sp.train.push_back(s.patient_id);
        else if (s.split == "val") sp.val.push_back(s.patient_id);
        else if (s.split == "test") sp.test.push_back(s.patient_id);
        else
            throw dlab::synthgen::SplitError("sample " + s.image_id +
                                             " has no split tag; run synth first");
    }
    return sp;
}

int cmd_synth(const CommonArgs& args) {
    Timer timer;
    ExperimentConfig cfg = load_config_or_default(args);
    if (args.seed) cfg.gen.seed = *args.seed;
    cfg.gen.validate();
    fs::create_directories(args.out_dir);

    auto dataset = dlab::synthgen::generate_dataset(cfg.gen, worker_threads());
    const auto split = dlab::synthgen::split_dataset(dataset, cfg.fractions, cfg.gen.seed);
    dlab::synthgen::apply_split(dataset, split);
    dlab::synthgen::save_dataset(dataset, args.out_dir);

    std::cout << "synth: " << dataset.samples.size() << " images from "
              << cfg.gen.n_patients << " patients; empirical confound("
              << cfg.gen.primary_sa
              << ") = " << dlab::synthgen::empirical_confound(dataset, cfg.gen.primary_sa)
              << "\n";

    auto m = base_manifest("synth", args, cfg);
    m.seeds = {cfg.gen.seed};
    finish_manifest(m, args.out_dir, {{"total_seconds", timer.seconds()}});
    return 0;
}

int cmd_train(const CommonArgs& args) {
    Timer timer;
    ExperimentConfig cfg = load_config_or_default(args);
    if (args.seed) cfg.train.seed = *args.seed;
    cfg.train.threads = worker_threads();
    cfg.train.validate();
    fs::create_directories(args.out_dir);

    auto dataset = dlab::synthgen::load_dataset(args.in_dir);
    const auto splits = splits_from_tags(dataset);

    std::optional<dlab::trainer::TrainerSnapshot> resume;
    if (!args.resume.empty()) resume = dlab::trainer::load_snapshot(args.resume);

    const std::string snapshot_dir = args.out_dir + "/snapshot";
    fs::create_directories(snapshot_dir);
    const bool baseline = cfg.train.mode == dlab::trainer::Mode::baseline;
    auto result = baseline
                      ? dlab::trainer::train_baseline(dataset, splits, cfg.train, snapshot_dir,
                                                      resume ? &*resume : nullptr)
                      : dlab::trainer::train_disentangled(dataset, splits, cfg.train,
                                                          snapshot_dir,
                                                          resume ? &*resume : nullptr);

    dlab::save_checkpoint(args.out_dir + "/model.ckpt", result.params);
    dlab::trainer::write_history_csv(result.history, args.out_dir + "/history.csv");
    const auto preds = dlab::trainer::predict(result.params, dataset, "test");
    dlab::trainer::write_predictions_csv(preds, args.out_dir + "/predictions.csv");

    std::map<std::string, double> timings{{"total_seconds", timer.seconds()}};
    for (const auto& e : result.history.epochs)
        timings["epoch_" + std::to_string(e.epoch) + "_seconds"] = e.seconds;

    std::cout << "train(" << (baseline ? "baseline" : "disentangled") << "): best epoch "
              << result.history.best_epoch << ", val F1 " << result.history.best_val_f1
              << ", " << preds.size() << " test predictions\n";

    auto m = base_manifest("train", args, cfg);
    m.input_hashes["dataset/meta.csv"] = dlab::manifest::hash_file(args.in_dir + "/meta.csv");
    m.input_hashes["dataset/images.bin"] =
        dlab::manifest::hash_file(args.in_dir + "/images.bin");
    m.seeds = {cfg.train.seed};
    finish_manifest(m, args.out_dir, timings);
    return 0;
}

int cmd_audit(const CommonArgs& args) {
    Timer timer;
    ExperimentConfig cfg = load_config_or_default(args);
    if (args.seed) cfg.audit.seed = *args.seed;
    fs::create_directories(args.out_dir);

    const std::string pred_path =
        fs::is_directory(args.in_dir) ? args.in_dir + "/predictions.csv" : args.in_dir;
    const auto records = dlab::trainer::read_predictions_csv(pred_path);
    const auto rep = dlab::fairaudit::build_report(records, cfg.audit);
    dlab::report::write_audit_outputs(rep, args.out_dir);

    std::cout << "audit: " << records.size() << " records, overall AUROC "
              << (rep.overall.auroc ? dlab::report::format6(*rep.overall.auroc) : "NA")
              << "\n";

    auto m = base_manifest("audit", args, cfg);
    m.input_hashes["predictions.csv"] = dlab::manifest::hash_file(pred_path);
    m.seeds = {cfg.audit.seed};
    finish_manifest(m, args.out_dir, {{"total_seconds", timer.seconds()}});
    return 0;
}

int cmd_compare(const CommonArgs& args) {
    Timer timer;
    ExperimentConfig cfg = load_config_or_default(args);
    fs::create_directories(args.out_dir);

    const std::string base_json = args.in_dir + "/report.json";
    const std::string dis_json = args.in2_dir + "/report.json";
    const auto baseline = dlab::report::load_report_json(base_json);
    const auto disentangled = dlab::report::load_report_json(dis_json);
    const auto delta = dlab::fairaudit::compare_reports(baseline, disentangled);
    dlab::report::write_compare_outputs(baseline, disentangled, delta, args.out_dir);

    std::cout << "compare: overall AUROC delta " << dlab::report::format6(delta.overall_auroc)
              << "\n";

    auto m = base_manifest("compare", args, cfg);
    m.input_hashes["baseline/report.json"] = dlab::manifest::hash_file(base_json);
    m.input_hashes["disentangled/report.json"] = dlab::manifest::hash_file(dis_json);
    finish_manifest(m, args.out_dir, {{"total_seconds", timer.seconds()}});
    return 0;
}

void write_probe_csv(const std::string& path, const dlab::synthgen::Dataset& dataset,
                     const std::string& target_sa,
                     const dlab::ModelParams<float>& baseline_params,
                     const dlab::ModelParams<float>& disent_params, std::uint64_t seed) {
    using dlab::trainer::LatentView;
    std::vector<int> sa_labels;
    for (const auto& s : dataset.samples)
        if (s.split == "test") sa_labels.push_back(s.sa_value(target_sa));

    auto probe = [&](const dlab::ModelParams<float>& p, LatentView view) {
        const auto feats = dlab::trainer::extract_latents(p, dataset, "test", view);
        return dlab::fairaudit::probe_leakage(feats, sa_labels, seed);
    };
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "model,latent,sa,probe_auroc\n";
    os << "baseline,full," << target_sa << ","
       << dlab::report::format6(probe(baseline_params, LatentView::full)) << "\n";
    os << "disentangled,med," << target_sa << ","
       << dlab::report::format6(probe(disent_params, LatentView::med)) << "\n";
    os << "disentangled,sensit," << target_sa << ","
       << dlab::report::format6(probe(disent_params, LatentView::sensit)) << "\n";
}

int cmd_all(const CommonArgs& args) {
    Timer timer;
    ExperimentConfig cfg = load_config_or_default(args);
    if (args.seed) {
        cfg.gen.seed = *args.seed;
        cfg.train.seed = *args.seed;
    }
    cfg.gen.validate();
    cfg.train.threads = worker_threads();
    fs::create_directories(args.out_dir);
    std::map<std::string, double> timings;

    // 1. generate + split + persist
    Timer t_synth;
    auto dataset = dlab::synthgen::generate_dataset(cfg.gen, worker_threads());
    const auto splits = dlab::synthgen::split_dataset(dataset, cfg.fractions, cfg.gen.seed);
    dlab::synthgen::apply_split(dataset, splits);
    const std::string ds_dir = args.out_dir + "/dataset";
    fs::create_directories(ds_dir);
    dlab::synthgen::save_dataset(dataset, ds_dir);
    timings["synth_seconds"] = t_synth.seconds();
    std::cout << "all: dataset ready (" << dataset.samples.size() << " images)\n";

    // 2. the two training regimes
    auto run_train = [&](dlab::trainer::Mode mode, const std::string& dir) {
        Timer t_train;
        auto tc = cfg.train;
        tc.mode = mode;
        tc.validate();
        fs::create_directories(dir + "/snapshot");
        auto result = mode == dlab::trainer::Mode::baseline
                          ? dlab::trainer::train_baseline(dataset, splits, tc,
                                                          dir + "/snapshot")
                          : dlab::trainer::train_disentangled(dataset, splits, tc,
                                                              dir + "/snapshot");
        dlab::save_checkpoint(dir + "/model.ckpt", result.params);
        dlab::trainer::write_history_csv(result.history, dir + "/history.csv");
        const auto preds = dlab::trainer::predict(result.params, dataset, "test");
        dlab::trainer::write_predictions_csv(preds, dir + "/predictions.csv");
        timings[fs::path(dir).filename().string() + "_seconds"] = t_train.seconds();
        std::cout << "all: trained "
                  << (mode == dlab::trainer::Mode::baseline ? "baseline" : "disentangled")
                  << " (best epoch " << result.history.best_epoch << ")\n";
        return result.params;
    };
    const auto base_params = run_train(dlab::trainer::Mode::baseline,
                                       args.out_dir + "/train_baseline");
    const auto dis_params = run_train(dlab::trainer::Mode::disentangled,
                                      args.out_dir + "/train_disentangled");

    // 3. audits
    auto run_audit = [&](const std::string& train_dir, const std::string& dir) {
        Timer t_audit;
        fs::create_directories(dir);
        const auto records =
            dlab::trainer::read_predictions_csv(train_dir + "/predictions.csv");
        const auto rep = dlab::fairaudit::build_report(records, cfg.audit);
        dlab::report::write_audit_outputs(rep, dir);
        timings[fs::path(dir).filename().string() + "_seconds"] = t_audit.seconds();
    };
    run_audit(args.out_dir + "/train_baseline", args.out_dir + "/audit_baseline");
    run_audit(args.out_dir + "/train_disentangled", args.out_dir + "/audit_disentangled");
    std::cout << "all: audits done\n";

    // 4. comparison + leakage probes
    const std::string cmp_dir = args.out_dir + "/compare";
    fs::create_directories(cmp_dir);
    const auto rep_b = dlab::report::load_report_json(args.out_dir +
                                                      "/audit_baseline/report.json");
    const auto rep_d = dlab::report::load_report_json(args.out_dir +
                                                      "/audit_disentangled/report.json");
    dlab::report::write_compare_outputs(rep_b, rep_d,
                                        dlab::fairaudit::compare_reports(rep_b, rep_d),
                                        cmp_dir);
    write_probe_csv(args.out_dir + "/probes.csv", dataset, cfg.train.target_sa, base_params,
                    dis_params, cfg.train.seed);
    std::cout << "all: compare + probes done\n";

    timings["total_seconds"] = timer.seconds();
    auto m = base_manifest("all", args, cfg);
    m.seeds = {cfg.gen.seed, cfg.train.seed, cfg.audit.seed};
    finish_manifest(m, args.out_dir, timings);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic-fundus disentanglement and fairness-audit pipeline"};
    app.require_subcommand(1);

    CommonArgs args;
    std::map<std::string, std::function<int(const CommonArgs&)>> handlers = {
        {"synth", cmd_synth}, {"train", cmd_train},     {"audit", cmd_audit},
        {"compare", cmd_compare}, {"all", cmd_all},
    };

    auto add_common = [&](CLI::App* sub, bool needs_config, bool needs_in) {
        auto* c = sub->add_option("--config", args.config_path, "experiment config file");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        else c->check(CLI::ExistingFile);
        auto* i = sub->add_option("--in", args.in_dir, "input directory");
        if (needs_in) i->required();
        sub->add_option("--out", args.out_dir, "output directory")->required();
        sub->add_option("--seed", args.seed, "seed override");
        return sub;
    };
    add_common(app.add_subcommand("synth", "generate and split a dataset"), true, false);
    auto* train_sub = add_common(
        app.add_subcommand("train", "train one model on a generated dataset"), true, true);
    train_sub->add_option("--resume", args.resume, "snapshot directory to resume from")
        ->check(CLI::ExistingDirectory);
    add_common(app.add_subcommand("audit", "fairness audit of a predictions file"), false,
               true);
    auto* cmp_sub = add_common(
        app.add_subcommand("compare", "compare a baseline audit (--in) with a "
                                      "disentangled audit (--in2)"),
        false, true);
    cmp_sub->add_option("--in2", args.in2_dir, "second (disentangled) audit directory")
        ->required();
    add_common(app.add_subcommand("all", "full pipeline: synth, train x2, audit x2, compare"),
               true, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        return handlers.at(sub)(args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
