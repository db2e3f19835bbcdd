#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string g_cli_path;

int run_cli(const std::string& args) {
    const std::string cmd = g_cli_path + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path temp_dir(const char* name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string file_contents(const fs::path& p) {
    std::ifstream f(p);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

TEST(Cli, NoSubcommandIsUsageError) { EXPECT_EQ(run_cli(""), 2); }

TEST(Cli, OutputDirFallsBackToConfig) {
    const fs::path root = temp_dir("tiv_cli_outdir");
    std::ofstream(root / "synth.json") << nlohmann::json{
        {"output_dir", (root / "from_config").string()},
        {"data",
         {{"kind", "synthetic_episodic"},
          {"episodic", {{"n_episodes", 2}, {"frames_per_episode", 4}, {"image_size", 16}}}}},
    }.dump();
    ASSERT_EQ(run_cli("synth --seed 1 --config " + (root / "synth.json").string()), 0);
    EXPECT_TRUE(fs::exists(root / "from_config" / "manifest.jsonl"));
    // no output dir anywhere is a usage error
    EXPECT_EQ(run_cli("synth --kind episodic --seed 1"), 2);
    fs::remove_all(root);
}

TEST(Cli, UnknownFlagIsUsageError) {
    EXPECT_EQ(run_cli("synth --output-dir /tmp/x --bogus-flag"), 2);
}

TEST(Cli, IngestZeroFpsIsUsageError) {
    const fs::path out = temp_dir("tiv_cli_fps0");
    const int code = run_cli(
        "ingest --fps 0 --output-dir " + (out / "o").string() +
        " --recordings '[{\"id\":\"r\",\"uri\":\"/none\",\"native_fps\":30}]'");
    EXPECT_EQ(code, 2);
    fs::remove_all(out);
}

TEST(Cli, IngestMissingSourceIsDataError) {
    const fs::path out = temp_dir("tiv_cli_nosrc");
    const int code = run_cli(
        "ingest --fps 1 --output-dir " + (out / "o").string() +
        " --recordings '[{\"id\":\"r\",\"uri\":\"/nonexistent\",\"native_fps\":30}]'");
    EXPECT_EQ(code, 3);
    fs::remove_all(out);
}

TEST(Cli, SynthTrainProbeAnalyzeReportPipeline) {
    const fs::path root = temp_dir("tiv_cli_pipeline");
    const std::string data = (root / "data").string();
    const std::string train_out = (root / "train").string();
    const std::string probe_out = (root / "probe").string();
    const std::string analyze_out = (root / "analyze").string();
    const std::string report_out = (root / "report").string();

    ASSERT_EQ(run_cli("synth --kind episodic --seed 3 --output-dir " + data +
                      " --config " + (root / "synth.json").string()),
              3);  // config file does not exist yet -> data error

    std::ofstream((root / "synth.json")) << R"({
      "data": {"kind": "synthetic_episodic",
               "episodic": {"n_episodes": 3, "frames_per_episode": 12, "image_size": 16}}
    })";
    ASSERT_EQ(run_cli("synth --seed 3 --output-dir " + data + " --config " +
                      (root / "synth.json").string()),
              0);
    EXPECT_TRUE(fs::exists(fs::path(data) / "manifest.jsonl"));
    EXPECT_TRUE(fs::exists(fs::path(data) / "resolved_config.json"));

    ASSERT_EQ(run_cli("train --data " + data + " --output-dir " + train_out +
                      " --objective temporal_classification --segment-length 2.4 "
                      "--epochs 2 --batch-size 12 --architecture small_cnn_64 --seed 3"),
              0);
    const std::string ckpt = train_out + "/checkpoint.tivckpt";
    EXPECT_TRUE(fs::exists(ckpt));
    EXPECT_TRUE(fs::exists(fs::path(train_out) / "train_log.jsonl"));

    ASSERT_EQ(run_cli("probe --data " + data + " --output-dir " + probe_out +
                      " --model checkpoint:" + ckpt + " --split iid --seed 3"),
              0);
    ASSERT_TRUE(fs::exists(fs::path(probe_out) / "results.json"));
    const auto results = nlohmann::json::parse(file_contents(fs::path(probe_out) / "results.json"));
    EXPECT_TRUE(results.contains("top1"));
    EXPECT_TRUE(results.contains("majority"));
    EXPECT_EQ(results.at("split").get<std::string>(), "iid");

    ASSERT_EQ(run_cli("analyze --data " + data + " --output-dir " + analyze_out +
                      " --checkpoint " + ckpt + " --seed 3"),
              0);
    EXPECT_TRUE(fs::exists(fs::path(analyze_out) / "csi.tsv"));
    EXPECT_TRUE(fs::exists(fs::path(analyze_out) / "pca_curve.tsv"));

    ASSERT_EQ(run_cli("report --run " + analyze_out + " --output-dir " + report_out), 0);
    EXPECT_TRUE(fs::exists(fs::path(report_out) / "report_summary.json"));
    EXPECT_TRUE(fs::exists(fs::path(report_out) / "pca_curve.ppm"));

    ASSERT_EQ(run_cli("report --run " + analyze_out + " --output-dir " + report_out +
                      "_noplots --skip-plots"),
              0);
    EXPECT_FALSE(fs::exists(fs::path(report_out + "_noplots") / "pca_curve.ppm"));
    EXPECT_TRUE(fs::exists(fs::path(report_out + "_noplots") / "report_summary.json"));

    fs::remove_all(root);
}

TEST(Cli, ExemplarSplitProbeOnShapes) {
    const fs::path root = temp_dir("tiv_cli_exemplar");
    const std::string data = (root / "data").string();
    std::ofstream((root / "synth.json")) << R"({
      "data": {"kind": "synthetic_shapes",
               "shapes": {"n_classes": 3, "exemplars_per_class": 10,
                           "views_per_exemplar": 2, "image_size": 16}}
    })";
    ASSERT_EQ(run_cli("synth --seed 5 --output-dir " + data + " --config " +
                      (root / "synth.json").string()),
              0);
    ASSERT_EQ(run_cli("probe --data " + data + " --output-dir " + (root / "probe").string() +
                      " --model random:small_cnn_64 --split exemplar --seed 5"),
              0);
    const auto results =
        nlohmann::json::parse(file_contents(root / "probe" / "results.json"));
    EXPECT_EQ(results.at("split").get<std::string>(), "exemplar_holdout");
    // 3 classes x 10 exemplars, 10% holdout -> 1 exemplar (2 frames) per class
    EXPECT_EQ(results.at("n_test").get<int>(), 3 * 1 * 2);
    EXPECT_EQ(results.at("n_train").get<int>(), 3 * 9 * 2);
    fs::remove_all(root);
}

TEST(Cli, AnalyzeCamExportCountAndSweep) {
    const fs::path root = temp_dir("tiv_cli_cam");
    const std::string data = (root / "data").string();
    std::ofstream((root / "synth.json")) << R"({
      "data": {"kind": "synthetic_episodic",
               "episodic": {"n_episodes": 3, "frames_per_episode": 12, "image_size": 16}}
    })";
    ASSERT_EQ(run_cli("synth --seed 2 --output-dir " + data + " --config " +
                      (root / "synth.json").string()),
              0);
    ASSERT_EQ(run_cli("train --data " + data + " --output-dir " + (root / "train").string() +
                      " --objective temporal_classification --segment-length 2.4 "
                      "--epochs 2 --batch-size 12 --architecture small_cnn_64 --seed 2"),
              0);
    std::ofstream((root / "analyze.json")) << R"({
      "analysis": {
        "cam": {"classes": ["ep000", "ep001"], "n_images": 3, "out_size": 16},
        "sweep": {"fps": [5.0], "segment_length": [2.4], "augment": [true, false],
                   "episode_duration_s": 2.4, "n_episodes": 3, "epochs": 1}
      }
    })";
    ASSERT_EQ(run_cli("analyze --data " + data + " --output-dir " +
                      (root / "analysis").string() + " --checkpoint " +
                      (root / "train" / "checkpoint.tivckpt").string() + " --seed 2 --sweep" +
                      " --config " + (root / "analyze.json").string()),
              0);
    const auto index =
        nlohmann::json::parse(file_contents(root / "analysis" / "cam_index.json"));
    EXPECT_EQ(index.size(), 2u * 3u);  // classes x n_images
    for (const auto& entry : index)
        EXPECT_TRUE(fs::exists(root / "analysis" / entry.at("file").get<std::string>()));

    // one accuracy per sweep cell
    const std::string sweep = file_contents(root / "analysis" / "sweep.tsv");
    EXPECT_EQ(std::count(sweep.begin(), sweep.end(), '\n'), 3);  // header + 2 cells
    fs::remove_all(root);
}

TEST(Cli, ProbeUnknownModelIsUsageError) {
    const fs::path root = temp_dir("tiv_cli_badmodel");
    const std::string data = (root / "data").string();
    std::ofstream((root / "synth.json")) << R"({
      "data": {"kind": "synthetic_episodic",
               "episodic": {"n_episodes": 2, "frames_per_episode": 6, "image_size": 16}}
    })";
    ASSERT_EQ(run_cli("synth --seed 1 --output-dir " + data + " --config " +
                      (root / "synth.json").string()),
              0);
    EXPECT_EQ(run_cli("probe --data " + data + " --output-dir " + (root / "probe").string() +
                      " --model teleport"),
              2);
    fs::remove_all(root);
}

TEST(Cli, IngestRerunGivesIdenticalManifest) {
    const fs::path root = temp_dir("tiv_cli_ingest_det");
    fs::create_directories(root / "rec0");
    // four tiny synthetic PPM frames
    for (int i = 0; i < 4; ++i) {
        std::ofstream f(root / "rec0" / ("f" + std::to_string(i) + ".ppm"), std::ios::binary);
        f << "P6\n2 2\n255\n";
        for (int px = 0; px < 4; ++px) {
            const char rgb[3] = {static_cast<char>(i * 40), static_cast<char>(px * 50), 7};
            f.write(rgb, 3);
        }
    }
    const std::string recordings =
        "'[{\"id\":\"rec0\",\"uri\":\"" + (root / "rec0").string() + "\",\"native_fps\":2}]'";
    const std::string a = (root / "a").string();
    const std::string b = (root / "b").string();
    ASSERT_EQ(run_cli("ingest --fps 1 --recordings " + recordings + " --output-dir " + a), 0);
    ASSERT_EQ(run_cli("ingest --fps 1 --recordings " + recordings + " --output-dir " + b), 0);
    EXPECT_EQ(file_contents(fs::path(a) / "manifest.jsonl"),
              file_contents(fs::path(b) / "manifest.jsonl"));
    fs::remove_all(root);
}

TEST(Cli, SynthRerunIsDeterministic) {
    const fs::path root = temp_dir("tiv_cli_det");
    std::ofstream((root / "synth.json")) << R"({
      "data": {"kind": "synthetic_shapes",
               "shapes": {"n_classes": 2, "exemplars_per_class": 3,
                           "views_per_exemplar": 2, "image_size": 16}}
    })";
    const std::string a = (root / "a").string();
    const std::string b = (root / "b").string();
    ASSERT_EQ(run_cli("synth --seed 7 --output-dir " + a + " --config " +
                      (root / "synth.json").string()),
              0);
    ASSERT_EQ(run_cli("synth --seed 7 --output-dir " + b + " --config " +
                      (root / "synth.json").string()),
              0);
    EXPECT_EQ(file_contents(fs::path(a) / "manifest.jsonl"),
              file_contents(fs::path(b) / "manifest.jsonl"));
    EXPECT_EQ(file_contents(fs::path(a) / "frames-00000.shard"),
              file_contents(fs::path(b) / "frames-00000.shard"));
    fs::remove_all(root);
}

int main(int argc, char** argv) {
    ::testing::InitGoogleTest(&argc, argv);
    if (argc > 1) g_cli_path = argv[1];
    if (g_cli_path.empty()) {
        std::fprintf(stderr, "usage: test_cli <path-to-tiv-binary>\n");
        return 1;
    }
    return RUN_ALL_TESTS();
}
