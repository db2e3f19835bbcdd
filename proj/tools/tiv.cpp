// tiv: self-supervised representation learning on longitudinal video streams.
// Subcommands: ingest, synth, train, probe, analyze, report.
// Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tiv/config.hpp"
#include "tiv/errors.hpp"
#include "tiv/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string output_dir;
    std::optional<std::int64_t> seed;
    std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file (supports include lists)");
    cmd->add_option("--output-dir", args.output_dir,
                    "directory for all outputs (falls back to the config's output_dir)");
    cmd->add_option("--seed", args.seed, "global seed (overrides config)");
    cmd->add_option("--workers", args.workers, "data-loading worker count");
}

// flag > file > default
nlohmann::json resolve(const CommonArgs& args) {
    nlohmann::json cfg = nlohmann::json::object();
    if (!args.config_path.empty()) cfg = tiv::load_config_file(args.config_path);
    if (args.seed) cfg["seed"] = *args.seed;
    if (args.workers) cfg["workers"] = *args.workers;
    if (!args.output_dir.empty()) cfg["output_dir"] = args.output_dir;
    if (!cfg.contains("output_dir"))
        throw tiv::ConfigError("no output directory: pass --output-dir or set output_dir");
    return cfg;
}

std::string out_dir_of(const nlohmann::json& cfg) {
    return cfg.at("output_dir").get<std::string>();
}

void set_if(nlohmann::json& cfg, const std::string& section, const std::string& key,
            const nlohmann::json& value) {
    cfg[section][key] = value;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tiv: temporal-invariance representation learning"};
    app.require_subcommand(1);

    // --- ingest
    CommonArgs ingest_args;
    std::optional<double> ingest_fps;
    std::optional<double> ingest_segment;
    std::string recordings_json;
    auto* cmd_ingest = app.add_subcommand("ingest", "decode recordings into a frame dataset");
    add_common(cmd_ingest, ingest_args);
    cmd_ingest->add_option("--fps", ingest_fps, "sampling rate (frames/second)");
    cmd_ingest->add_option("--segment-length", ingest_segment,
                           "segment length in seconds; writes a temporal-class preview");
    cmd_ingest->add_option("--recordings", recordings_json,
                           "inline JSON list of {id, uri, native_fps}");

    // --- synth
    CommonArgs synth_args;
    std::string synth_kind;
    auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic fixture dataset");
    add_common(cmd_synth, synth_args);
    cmd_synth->add_option("--kind", synth_kind, "episodic | shapes");

    // --- train
    CommonArgs train_args;
    std::string train_data, train_objective, train_resume, train_arch;
    std::optional<double> train_lr, train_segment;
    std::optional<int> train_epochs, train_batch;
    auto* cmd_train = app.add_subcommand("train", "train a self-supervised model");
    add_common(cmd_train, train_args);
    cmd_train->add_option("--data", train_data, "dataset directory")->required();
    cmd_train->add_option("--objective", train_objective,
                          "temporal_classification | static_contrastive | temporal_contrastive");
    cmd_train->add_option("--lr", train_lr, "learning rate");
    cmd_train->add_option("--segment-length", train_segment, "segment length in seconds");
    cmd_train->add_option("--epochs", train_epochs, "training epochs");
    cmd_train->add_option("--batch-size", train_batch, "batch size");
    cmd_train->add_option("--architecture", train_arch, "backbone architecture id");
    cmd_train->add_option("--resume", train_resume, "checkpoint to continue from");

    // --- probe
    CommonArgs probe_args;
    std::string probe_data, probe_model, probe_split, probe_family;
    std::optional<int> probe_factor;
    auto* cmd_probe = app.add_subcommand("probe", "linear evaluation of a frozen trunk");
    add_common(cmd_probe, probe_args);
    cmd_probe->add_option("--data", probe_data, "dataset directory")->required();
    cmd_probe->add_option("--model", probe_model,
                          "checkpoint:<path> | hog | random[:arch]");
    cmd_probe->add_option("--split", probe_split, "iid | subsample | exemplar");
    cmd_probe->add_option("--factor", probe_factor, "subsample factor");
    cmd_probe->add_option("--family", probe_family, "logistic | hinge | auto");

    // --- analyze
    CommonArgs analyze_args;
    std::string analyze_data, analyze_ckpt;
    bool analyze_sweep = false;
    auto* cmd_analyze = app.add_subcommand("analyze", "representation analysis exports");
    add_common(cmd_analyze, analyze_args);
    cmd_analyze->add_option("--data", analyze_data, "dataset directory")->required();
    cmd_analyze->add_option("--checkpoint", analyze_ckpt, "trained checkpoint");
    cmd_analyze->add_flag("--sweep", analyze_sweep, "run the factor sweep from the config");

    // --- report
    std::string report_run, report_out;
    bool report_skip_plots = false;
    auto* cmd_report = app.add_subcommand("report", "render plots from run outputs");
    cmd_report->add_option("--run", report_run, "run directory with outputs")->required();
    cmd_report->add_option("--output-dir", report_out, "directory for plots")->required();
    cmd_report->add_flag("--skip-plots", report_skip_plots, "summary only, no images");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (cmd_ingest->parsed()) {
            nlohmann::json cfg = resolve(ingest_args);
            if (ingest_fps) set_if(cfg, "data", "fps", *ingest_fps);
            if (ingest_segment) set_if(cfg, "train", "segment_length_s", *ingest_segment);
            if (!recordings_json.empty())
                set_if(cfg, "data", "recordings", nlohmann::json::parse(recordings_json));
            const auto summary = tiv::run_ingest(cfg, out_dir_of(cfg));
            std::cout << summary.dump() << "\n";
        } else if (cmd_synth->parsed()) {
            nlohmann::json cfg = resolve(synth_args);
            if (!synth_kind.empty()) {
                if (synth_kind == "episodic") set_if(cfg, "data", "kind", "synthetic_episodic");
                else if (synth_kind == "shapes") set_if(cfg, "data", "kind", "synthetic_shapes");
                else throw tiv::ConfigError("synth: unknown kind '" + synth_kind + "'");
            }
            const auto summary = tiv::run_synth(cfg, out_dir_of(cfg));
            std::cout << summary.dump() << "\n";
        } else if (cmd_train->parsed()) {
            nlohmann::json cfg = resolve(train_args);
            if (!train_objective.empty()) set_if(cfg, "train", "objective", train_objective);
            if (train_lr) set_if(cfg, "train", "lr", *train_lr);
            if (train_segment) set_if(cfg, "train", "segment_length_s", *train_segment);
            if (train_epochs) set_if(cfg, "train", "epochs", *train_epochs);
            if (train_batch) set_if(cfg, "train", "batch_size", *train_batch);
            if (!train_arch.empty()) set_if(cfg, "train", "architecture", train_arch);
            const auto result = tiv::run_train(cfg, train_data, out_dir_of(cfg), train_resume);
            nlohmann::json out = {{"checkpoint", result.checkpoint_path},
                                  {"loss", result.final_loss},
                                  {"accuracy", result.final_accuracy},
                                  {"epochs", result.epochs_run}};
            std::cout << out.dump() << "\n";
        } else if (cmd_probe->parsed()) {
            nlohmann::json cfg = resolve(probe_args);
            if (!probe_model.empty()) set_if(cfg, "probe", "model", probe_model);
            if (!probe_split.empty())
                cfg["probe"]["split"]["kind"] =
                    tiv::split_kind_name(tiv::split_kind_from_name(probe_split));
            if (probe_factor) cfg["probe"]["split"]["subsample_factor"] = *probe_factor;
            if (!probe_family.empty()) set_if(cfg, "probe", "family", probe_family);
            const auto results = tiv::run_probe(cfg, probe_data, out_dir_of(cfg));
            std::cout << results.dump() << "\n";
        } else if (cmd_analyze->parsed()) {
            nlohmann::json cfg = resolve(analyze_args);
            if (!analyze_ckpt.empty()) set_if(cfg, "analysis", "checkpoint", analyze_ckpt);
            if (!analyze_sweep && cfg.contains("analysis")) cfg["analysis"].erase("sweep");
            const auto summary = tiv::run_analyze(cfg, analyze_data, out_dir_of(cfg));
            std::cout << summary.dump() << "\n";
        } else if (cmd_report->parsed()) {
            const auto summary = tiv::run_report(report_run, report_out, report_skip_plots);
            const nlohmann::json report_cfg = {
                {"run", report_run}, {"output_dir", report_out}, {"skip_plots", report_skip_plots}};
            tiv::write_resolved_config(report_cfg, report_out);
            std::cout << summary.dump() << "\n";
        }
    } catch (const tiv::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tiv::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const tiv::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
