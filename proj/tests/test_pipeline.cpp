#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "pipeline_support.hpp"
#include "redraw/pipeline/commands.hpp"
#include "temp_dir.hpp"

using namespace redraw;
using namespace redraw::pipeline;
using redraw::testing_support::TempDir;
namespace ts = redraw::testing_support;
namespace fs = std::filesystem;

namespace {

struct Quiet {
    std::ostringstream out, err;
    Console io() { return {out, err}; }
};

int count_lines(const fs::path& p) {
    std::istringstream in(ts::slurp(p));
    int n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

void run_training_stages(const RunConfig& c) {
    Quiet q;
    cmd_synth(c, q.io());
    cmd_train_encoder(c, q.io());
    cmd_embed(c, q.io());
    cmd_cluster(c, q.io());
    cmd_train_redrawer(c, q.io());
}

std::vector<style::EmbeddingRecord> one_hot_records(int designs, int per_design) {
    std::vector<style::EmbeddingRecord> out;
    for (int d = 0; d < designs; ++d)
        for (int k = 0; k < per_design; ++k) {
            style::Embedding e(style::kEmbeddingDim, 0.0);
            e[d] = 1.0;
            out.push_back({"p" + std::to_string(d) + "_" + std::to_string(k), "prod", "d" + std::to_string(d), e});
        }
    return out;
}

std::string cli() { return REDRAW_CLI_PATH; }

int run_cli(const std::string& args) {
    const int status = std::system((cli() + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// config

TEST(Config, DefaultsRoundTripThroughJson) {
    const RunConfig c = ts::tiny_run_config("/tmp/x");
    const RunConfig back = parse_config(nlohmann::json::parse(dump_config(c)));
    EXPECT_EQ(dump_config(back), dump_config(c));
}

TEST(Config, DefaultsCarryNamedConstants) {
    const RunConfig c;
    EXPECT_EQ(c.redrawer.gamma, 10.0);
    EXPECT_EQ(c.redrawer.filter_threshold, 0.06);
    EXPECT_EQ(c.ingest.lod.low_below, 0.0031);
    EXPECT_EQ(c.ingest.lod.high_above, 0.0048);
    EXPECT_NO_THROW(validate(c));
}

TEST(Config, PartialFileKeepsDefaults) {
    const RunConfig c = parse_config(nlohmann::json::parse(R"({"seed": 9, "redrawer": {"steps": 7}})"));
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.redrawer.steps, 7);
    EXPECT_EQ(c.redrawer.batch, RunConfig{}.redrawer.batch);
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"sed": 1})")), ValidationError);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"redrawer": {"stepz": 1}})")), ValidationError);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"redraw": {"guide_boxes": [{"x": 1, "q": 2}]}})")), ValidationError);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"seed": "nine"})")), ValidationError);
    EXPECT_NO_THROW(parse_config(nlohmann::json::parse(R"({"redraw": {"pairing": {"*": "d0"}}})")));
}

TEST(Config, ValidateRejectsOutOfRangeValues) {
    RunConfig c;
    c.redrawer.classes = "everything";
    EXPECT_THROW(validate(c), ValidationError);
    c = RunConfig{};
    c.redrawer.band_fraction = 0.5;
    EXPECT_THROW(validate(c), ValidationError);
    c = RunConfig{};
    c.redrawer.generator.image_size = 64;
    EXPECT_THROW(validate(c), ValidationError);
}

TEST(Config, LoadErrors) {
    TempDir dir;
    EXPECT_THROW(load_config(dir.path() / "none.json"), IoError);
    std::ofstream(dir.path() / "bad.json") << "{ not json";
    EXPECT_THROW(load_config(dir.path() / "bad.json"), FormatError);
}

// ---------------------------------------------------------------------------------------------
// synth

TEST(Synth, LabelIndexRowCount) {
    TempDir dir;
    Quiet q;
    RunConfig c = ts::tiny_run_config(dir.path());
    c.synth = {3, 4, 5, 16};
    cmd_synth(c, q.io());
    EXPECT_EQ(count_lines(fs::path(c.corpus) / "labels.tsv"), 1 + 3 * 4 * 5 * 2);
    EXPECT_NE(q.out.str().find("120 patches"), std::string::npos);
}

TEST(Synth, SameSeedGivesIdenticalCorpus) {
    TempDir a, b;
    Quiet q;
    const RunConfig ca = ts::tiny_run_config(a.path()), cb = ts::tiny_run_config(b.path());
    const data::Corpus corpus = cmd_synth(ca, q.io());
    cmd_synth(cb, q.io());
    EXPECT_EQ(ts::slurp(fs::path(ca.corpus) / "labels.tsv"), ts::slurp(fs::path(cb.corpus) / "labels.tsv"));
    for (const auto& p : corpus.patches) {
        const std::string rel = "patches/" + p.id + ".png";
        ASSERT_EQ(ts::slurp(fs::path(ca.corpus) / rel), ts::slurp(fs::path(cb.corpus) / rel)) << rel;
    }
}

TEST(Synth, ZeroDesignsIsValidationErrorAndWritesNothing) {
    TempDir dir;
    Quiet q;
    RunConfig c = ts::tiny_run_config(dir.path());
    c.synth.designs = 0;
    EXPECT_THROW(cmd_synth(c, q.io()), ValidationError);
    EXPECT_FALSE(fs::exists(c.corpus));
}

TEST(Synth, UnwritablePathIsIoError) {
    TempDir dir;
    Quiet q;
    RunConfig c = ts::tiny_run_config(dir.path());
    std::ofstream(dir.path() / "file") << "x";
    c.corpus = (dir.path() / "file" / "corpus").string();
    EXPECT_THROW(cmd_synth(c, q.io()), IoError);
}

// ---------------------------------------------------------------------------------------------
// ingest

TEST(Ingest, BuildsCorpusFromManifest) {
    TempDir dir;
    Quiet q;
    const ts::Scene s = ts::write_scene(dir.path(), 5, 2);
    RunConfig c = ts::tiny_run_config(dir.path());
    c.ingest.manifest = s.manifest.string();
    c.ingest.lod = {0.5, 0.6};  // every 12x12 box on a 64x64 frame is low detail
    const data::Corpus corpus = cmd_ingest(c, q.io());
    ASSERT_EQ(corpus.size(), 4u);
    for (const auto& p : corpus.patches) {
        EXPECT_EQ(p.detail, data::DetailLabel::low);
        EXPECT_EQ(p.image.height(), 16);
        EXPECT_EQ(p.design, "prod0-d0");
    }
    EXPECT_EQ(count_lines(fs::path(c.corpus) / "labels.tsv"), 5);
}

TEST(Ingest, MidDetailRowsAreDroppedWithNote) {
    TempDir dir;
    Quiet q;
    const ts::Scene s = ts::write_scene(dir.path(), 5, 1);
    RunConfig c = ts::tiny_run_config(dir.path());
    c.ingest.manifest = s.manifest.string();
    c.ingest.lod = {0.01, 0.9};
    EXPECT_THROW(cmd_ingest(c, q.io()), DatasetError);
    EXPECT_FALSE(fs::exists(c.corpus));
}

// ---------------------------------------------------------------------------------------------
// training stages

TEST(TrainEncoder, LossDecreasesOnSyntheticCorpus) {
    TempDir dir;
    Quiet q;
    RunConfig c = ts::tiny_run_config(dir.path());
    c.encoder.steps = 120;
    cmd_synth(c, q.io());
    const auto losses = cmd_train_encoder(c, q.io());
    ASSERT_EQ(losses.size(), 120u);
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 20; ++i) {
        first += losses[i];
        last += losses[losses.size() - 1 - i];
    }
    EXPECT_LT(last, first);
    EXPECT_EQ(count_lines(Artifacts{c.out}.encoder_log()), 121);
    EXPECT_TRUE(fs::exists(Artifacts{c.out}.encoder_weights()));
}

TEST(TrainRedrawer, MissingEncoderWeightsNamesTheFile) {
    TempDir dir;
    Quiet q;
    const RunConfig c = ts::tiny_run_config(dir.path());
    cmd_synth(c, q.io());
    try {
        cmd_train_redrawer(c, q.io());
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("encoder.wts"), std::string::npos) << e.what();
    }
    EXPECT_FALSE(fs::exists(Artifacts{c.out}.redrawer_log()));
}

TEST(TrainRedrawer, MissingClustersIsReported) {
    TempDir dir;
    Quiet q;
    const RunConfig c = ts::tiny_run_config(dir.path());
    cmd_synth(c, q.io());
    cmd_train_encoder(c, q.io());
    EXPECT_THROW(cmd_train_redrawer(c, q.io()), IoError);
    RunConfig by_design = c;
    by_design.redrawer.classes = "designs";
    const auto log = cmd_train_redrawer(by_design, q.io());
    EXPECT_EQ(log.size(), 4u);
    EXPECT_EQ(count_lines(Artifacts{c.out}.classes()), 1 + 6);
}

TEST(TrainRedrawer, ClustersBecomeClasses) {
    TempDir dir;
    const RunConfig c = ts::tiny_run_config(dir.path());
    run_training_stages(c);
    const Artifacts a{c.out};
    const auto assign = read_clusters(a.clusters());
    std::set<int> distinct;
    for (const auto& [id, k] : assign) distinct.insert(k);
    EXPECT_EQ(read_classes(a.classes()).size(), distinct.size());
    EXPECT_EQ(count_lines(a.redrawer_log()), 1 + 4);
    for (const auto& p : {a.generator_weights(), a.quality_weights(), a.context_weights(), a.config()}) EXPECT_TRUE(fs::exists(p)) << p;
}

// ---------------------------------------------------------------------------------------------
// cluster

TEST(Cluster, OneHotGroundTruthHasPurityOne) {
    TempDir dir;
    Quiet q;
    const RunConfig c = ts::tiny_run_config(dir.path());
    const auto records = one_hot_records(4, 5);
    style::write_embeddings(dir.path() / "onehot.tsv", records);
    const ClusterReport r = cmd_cluster(c, q.io(), (dir.path() / "onehot.tsv").string());
    ASSERT_TRUE(r.purity.has_value());
    EXPECT_EQ(*r.purity, 1.0);
    EXPECT_EQ(r.productions.front().clusters, 4);
    ASSERT_TRUE(r.separation_ratio.has_value());
    EXPECT_EQ(*r.separation_ratio, 0.0);
    EXPECT_EQ(count_lines(Artifacts{c.out}.clusters()), 21);
}

TEST(Cluster, SingleEmbeddingIsOneClusterWithoutRatio) {
    TempDir dir;
    Quiet q;
    const RunConfig c = ts::tiny_run_config(dir.path());
    style::write_embeddings(dir.path() / "one.tsv", one_hot_records(1, 1));
    const ClusterReport r = cmd_cluster(c, q.io(), (dir.path() / "one.tsv").string());
    EXPECT_EQ(r.labels, std::vector<int>{0});
    EXPECT_FALSE(r.separation_ratio.has_value());
    EXPECT_NE(ts::slurp(Artifacts{c.out}.cluster_report()).find("unavailable"), std::string::npos);
}

TEST(Cluster, FixedCutSplitsByDistance) {
    auto records = one_hot_records(2, 3);
    const ClusterReport merged = cluster_embeddings(records, 10.0);
    EXPECT_EQ(merged.productions.front().clusters, 1);
    const ClusterReport split = cluster_embeddings(records, 0.5);
    EXPECT_EQ(split.productions.front().clusters, 2);
}

TEST(Cluster, ProductionsAreClusteredSeparately) {
    auto records = one_hot_records(2, 3);
    for (auto r : one_hot_records(2, 3)) {
        r.id += "b";
        r.production = "other";
        records.push_back(r);
    }
    const ClusterReport rep = cluster_embeddings(records, -1.0);
    ASSERT_EQ(rep.productions.size(), 2u);
    std::set<int> ids(rep.labels.begin(), rep.labels.end());
    EXPECT_EQ(ids.size(), 4u);
    EXPECT_EQ(*rep.purity, 1.0);
}

TEST(Cluster, MalformedEmbeddingsAreFormatError) {
    TempDir dir;
    Quiet q;
    const RunConfig c = ts::tiny_run_config(dir.path());
    std::ofstream(dir.path() / "bad.tsv") << "id\tproduction\tdesign\te0\nx\tp\td\t1.0\n";
    EXPECT_THROW(cmd_cluster(c, q.io(), (dir.path() / "bad.tsv").string()), FormatError);
    EXPECT_FALSE(fs::exists(Artifacts{c.out}.clusters()));
}

// ---------------------------------------------------------------------------------------------
// redraw

class Redraw : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new TempDir;
        config_ = ts::tiny_run_config(dir_->path());
        run_training_stages(config_);
    }
    static void TearDownTestSuite() {
        delete dir_;
        dir_ = nullptr;
    }

    static inline TempDir* dir_ = nullptr;
    static inline RunConfig config_;
};

TEST_F(Redraw, ZeroRegionsLeavesFramesBitIdentical) {
    TempDir scene_dir;
    const ts::Scene s = ts::write_scene(scene_dir.path(), 8, 3, false);
    RunConfig c = config_;
    ts::use_scene(c, s);
    c.out = (scene_dir.path() / "out").string();
    fs::create_directories(c.out);
    fs::copy(Artifacts{config_.out}.encoder_weights(), Artifacts{c.out}.encoder_weights());
    fs::copy(Artifacts{config_.out}.generator_weights(), Artifacts{c.out}.generator_weights());
    Quiet q;
    const RedrawOutput out = cmd_redraw(c, q.io());
    EXPECT_TRUE(out.regions.empty());
    for (int f = 0; f < 3; ++f) {
        const std::string name = "f" + std::to_string(f) + ".png";
        EXPECT_EQ(read_png((Artifacts{c.out}.redraw_dir() / "frames" / name).string()), read_png((s.frames / name).string()));
    }
    EXPECT_FALSE(fs::exists(Artifacts{c.out}.redraw_dir() / "grid.png"));
}

TEST_F(Redraw, OnlyMaskedPixelsChange) {
    TempDir scene_dir;
    const ts::Scene s = ts::write_scene(scene_dir.path(), 8, 2);
    RunConfig c = config_;
    ts::use_scene(c, s);
    c.out = (scene_dir.path() / "out").string();
    fs::create_directories(c.out);
    fs::copy(Artifacts{config_.out}.encoder_weights(), Artifacts{c.out}.encoder_weights());
    fs::copy(Artifacts{config_.out}.generator_weights(), Artifacts{c.out}.generator_weights());
    Quiet q;
    const RedrawOutput out = cmd_redraw(c, q.io());
    ASSERT_EQ(out.regions.size(), 4u);
    for (const auto& r : out.regions) EXPECT_EQ(r.status, "redrawn") << r.status;
    for (int f = 0; f < 2; ++f) {
        const std::string name = "f" + std::to_string(f) + ".png";
        const RasterImage before = read_png((s.frames / name).string());
        const RasterImage after = read_png((Artifacts{c.out}.redraw_dir() / "frames" / name).string());
        const RegionMask& m = out.touched.at(name);
        int outside_diff = 0, inside_diff = 0;
        for (int ch = 0; ch < 3; ++ch)
            for (int y = 0; y < before.height(); ++y)
                for (int x = 0; x < before.width(); ++x) {
                    const bool differs = before.at(ch, y, x) != after.at(ch, y, x);
                    (m(y, x) > 0.0 ? inside_diff : outside_diff) += differs;
                }
        EXPECT_EQ(outside_diff, 0) << name;
        EXPECT_GT(inside_diff, 0) << name;
        for (int y = 0; y < before.height(); ++y)
            for (int x = 0; x < before.width(); ++x) {
                if (m(y, x) == 0.0) continue;
                EXPECT_TRUE(std::any_of(s.eye_boxes.begin(), s.eye_boxes.end(), [&](const Box& e) { return e.contains(x, y); })) << x << "," << y;
            }
    }
    EXPECT_TRUE(fs::exists(Artifacts{c.out}.redraw_dir() / "grid.png"));
    EXPECT_EQ(read_png((Artifacts{c.out}.redraw_dir() / "grid.png").string()).height(), 4 * 16 + 3 * 2);
    EXPECT_EQ(count_lines(Artifacts{c.out}.redraw_dir() / "regions.tsv"), 5);
}

TEST_F(Redraw, PairingOverrideForcesGuideDesign) {
    TempDir scene_dir;
    const ts::Scene s = ts::write_scene(scene_dir.path(), 8, 1);
    RunConfig c = config_;
    ts::use_scene(c, s);
    const auto enc = std::make_shared<style::StyleEncoder>(c.encoder.arch, c.seed);
    const translate::Generator g(c.redrawer.generator, enc, c.seed);
    Quiet q;
    RedrawInputs in = load_redraw_inputs(c, q.io());
    in.pairing = {{"*", "d1"}};
    for (const auto& r : redraw_frames(g, in, c.context_margin, q.io()).regions) EXPECT_EQ(r.guide, "d1");
    in.pairing = {{"prod0-d0", "d0"}, {"*", "d1"}};
    for (const auto& r : redraw_frames(g, in, c.context_margin, q.io()).regions) EXPECT_EQ(r.guide, "d0");
    in.pairing = {{"*", "nobody"}};
    EXPECT_THROW(redraw_frames(g, in, c.context_margin, q.io()), ValidationError);
}

TEST_F(Redraw, RegionWithoutGuideCropsIsSkippedWithWarning) {
    TempDir scene_dir;
    const ts::Scene s = ts::write_scene(scene_dir.path(), 8, 1);
    RunConfig c = config_;
    ts::use_scene(c, s);
    c.redraw.guide_boxes.clear();
    const auto enc = std::make_shared<style::StyleEncoder>(c.encoder.arch, c.seed);
    const translate::Generator g(c.redrawer.generator, enc, c.seed);
    Quiet q;
    const RedrawInputs in = load_redraw_inputs(c, q.io());
    const RedrawOutput out = redraw_frames(g, in, c.context_margin, q.io());
    ASSERT_EQ(out.regions.size(), 2u);
    for (const auto& r : out.regions) EXPECT_EQ(r.status.rfind("skipped", 0), 0u);
    EXPECT_NE(q.err.str().find("warning"), std::string::npos);
    EXPECT_EQ(out.frames.at("f0.png"), in.frames.at("f0.png"));
}

TEST_F(Redraw, MissingInputsAreIoErrors) {
    TempDir scene_dir;
    const ts::Scene s = ts::write_scene(scene_dir.path(), 8, 1);
    RunConfig c = config_;
    ts::use_scene(c, s);
    Quiet q;
    RunConfig no_guide = c;
    no_guide.redraw.color_guide = (scene_dir.path() / "absent.png").string();
    EXPECT_THROW(cmd_redraw(no_guide, q.io()), IoError);
    fs::remove(s.frames / "f0.png");
    EXPECT_THROW(cmd_redraw(c, q.io()), IoError);
    EXPECT_FALSE(fs::exists(Artifacts{c.out}.redraw_dir() / "regions.tsv"));
}

// ---------------------------------------------------------------------------------------------
// determinism and CLI

TEST(Determinism, EveryCommandReproducesItsArtifacts) {
    TempDir a, b;
    std::vector<fs::path> roots{a.path(), b.path()};
    for (const auto& root : roots) {
        RunConfig c = ts::tiny_run_config(root);
        run_training_stages(c);
        const ts::Scene s = ts::write_scene(root / "scene", 8, 2);
        ts::use_scene(c, s);
        Quiet q;
        cmd_eval(c, q.io());
        cmd_redraw(c, q.io());
    }
    const std::vector<std::string> files{"corpus/labels.tsv",      "out/encoder_loss.tsv", "out/encoder.wts",   "out/embeddings.tsv",
                                         "out/clusters.tsv",       "out/cluster_report.tsv", "out/classes.tsv", "out/redrawer_loss.tsv",
                                         "out/generator.wts",      "out/eval.tsv",         "out/redraw/grid.png", "out/redraw/regions.tsv",
                                         "out/redraw/frames/f0.png", "out/redraw/frames/f1.png"};
    for (const auto& f : files) {
        ASSERT_TRUE(fs::exists(a.path() / f)) << f;
        EXPECT_EQ(ts::slurp(a.path() / f), ts::slurp(b.path() / f)) << f;
    }
}

TEST(Cli, ExitCodes) {
    TempDir dir;
    const std::string base = "--corpus " + (dir.path() / "corpus").string() + " --out " + (dir.path() / "out").string();
    EXPECT_EQ(run_cli(base + " synth --productions 2 --designs 2 --patches 1 --size 16"), 0);
    EXPECT_EQ(run_cli(base + " synth --designs 0"), 1);
    EXPECT_EQ(run_cli("--config " + (dir.path() / "missing.json").string() + " synth"), 2);
    EXPECT_EQ(run_cli(base + " train-redrawer"), 2);
    EXPECT_EQ(run_cli(base + " no-such-command"), 1);
    EXPECT_EQ(run_cli(base + " train-redrawer --classes sometimes"), 1);
    std::ofstream(dir.path() / "bad.json") << "{\"unknown\": 1}";
    EXPECT_EQ(run_cli("--config " + (dir.path() / "bad.json").string() + " print-config"), 1);
}

TEST(Cli, ConfigFileDrivesTheRun) {
    TempDir dir;
    RunConfig c = ts::tiny_run_config(dir.path());
    std::ofstream(dir.path() / "run.json") << dump_config(c);
    EXPECT_EQ(run_cli("--config " + (dir.path() / "run.json").string() + " synth"), 0);
    EXPECT_EQ(count_lines(fs::path(c.corpus) / "labels.tsv"), 1 + 2 * 3 * 6 * 2);
    EXPECT_EQ(run_cli("--config " + (dir.path() / "run.json").string() + " train-encoder --steps 3"), 0);
    EXPECT_EQ(count_lines(Artifacts{c.out}.encoder_log()), 4);
    EXPECT_NE(ts::slurp(Artifacts{c.out}.config()).find("\"steps\": 3"), std::string::npos);
}
