#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "redraw/color_transfer.hpp"
#include "redraw/datasetgen/corpus.hpp"
#include "redraw/datasetgen/crop.hpp"
#include "redraw/datasetgen/region.hpp"
#include "redraw/datasetgen/synth.hpp"
#include "redraw/nn/weights_io.hpp"
#include "redraw/pipeline/config.hpp"
#include "redraw/png_io.hpp"
#include "redraw/poisson.hpp"
#include "redraw/resample.hpp"
#include "redraw/styleenc/metrics.hpp"
#include "redraw/styleenc/train.hpp"
#include "redraw/styleenc/upgma.hpp"
#include "redraw/translator/train.hpp"

namespace redraw::pipeline {

namespace fs = std::filesystem;

struct Console {
    std::ostream& out;
    std::ostream& err;
};

/// File names under the run's output directory.
struct Artifacts {
    fs::path root;

    fs::path config() const { return root / "config.json"; }
    fs::path encoder_weights() const { return root / "encoder.wts"; }
    fs::path encoder_log() const { return root / "encoder_loss.tsv"; }
    fs::path embeddings() const { return root / "embeddings.tsv"; }
    fs::path clusters() const { return root / "clusters.tsv"; }
    fs::path cluster_report() const { return root / "cluster_report.tsv"; }
    fs::path classes() const { return root / "classes.tsv"; }
    fs::path generator_weights() const { return root / "generator.wts"; }
    fs::path quality_weights() const { return root / "quality.wts"; }
    fs::path context_weights() const { return root / "context.wts"; }
    fs::path redrawer_log() const { return root / "redrawer_loss.tsv"; }
    fs::path eval_report() const { return root / "eval.tsv"; }
    fs::path redraw_dir() const { return root / "redraw"; }
};

namespace detail {

using style::format_double;

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

inline void require_file(const fs::path& path, const std::string& what) {
    if (!fs::is_regular_file(path)) throw IoError("missing " + what + ": " + path.string());
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string or_unavailable(const std::optional<double>& v) { return v ? format_double(*v) : "unavailable"; }

inline translate::RedrawerConfig redrawer_config(const RunConfig& c) {
    const auto& r = c.redrawer;
    translate::RedrawerConfig rc;
    rc.generator = r.generator;
    rc.discriminator = r.discriminator;
    rc.steps = r.steps;
    rc.batch = r.batch;
    rc.lr_generator = r.lr_generator;
    rc.lr_discriminator = r.lr_discriminator;
    rc.beta1 = r.beta1;
    rc.beta2 = r.beta2;
    rc.gamma = r.gamma;
    rc.band_fraction = r.band_fraction;
    rc.border_fraction = r.border_fraction;
    rc.filter_threshold = r.filter_threshold;
    rc.style_set_size = static_cast<std::size_t>(r.style_set_size);
    rc.hinge_generator = r.hinge_generator;
    rc.validation_size = r.validation_size;
    rc.validation_every = r.validation_every;
    rc.seed = c.seed;
    return rc;
}

inline std::shared_ptr<const style::StyleEncoder> load_encoder(const RunConfig& c) {
    const Artifacts a{c.out};
    require_file(a.encoder_weights(), "encoder weights (run train-encoder first)");
    auto enc = std::make_shared<style::StyleEncoder>(c.encoder.arch, c.seed);
    enc->load(nn::load_weights(a.encoder_weights().string()));
    return enc;
}

inline translate::Generator load_generator(const RunConfig& c, std::shared_ptr<const style::StyleEncoder> enc) {
    const Artifacts a{c.out};
    require_file(a.generator_weights(), "generator weights (run train-redrawer first)");
    translate::Generator g(c.redrawer.generator, std::move(enc), c.seed);
    g.load(nn::load_weights(a.generator_weights().string()));
    return g;
}

inline data::Corpus load_checked_corpus(const RunConfig& c) {
    data::Corpus corpus = data::load_corpus(c.corpus);
    if (corpus.patches.empty()) throw DatasetError("corpus " + c.corpus + " holds no patches");
    return corpus;
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// synth / ingest

inline data::Corpus synth_corpus(const RunConfig& c) {
    const auto& s = c.synth;
    if (s.productions < 2) throw ValidationError("synth.productions must be at least 2, got " + std::to_string(s.productions));
    if (s.designs < 2) throw ValidationError("synth.designs must be at least 2, got " + std::to_string(s.designs));
    if (s.patches_per_level < 1) throw ValidationError("synth.patches_per_level must be positive");
    return data::synth_generate(data::default_style_specs(s.productions, c.seed), s.designs, 2 * s.patches_per_level, s.patch_size,
                                c.context_margin);
}

inline data::Corpus cmd_synth(const RunConfig& c, Console io) {
    validate(c);
    data::Corpus corpus = synth_corpus(c);
    data::save_corpus(corpus, c.corpus);
    io.out << "synth: " << c.synth.productions << " productions x " << c.synth.designs << " designs x " << c.synth.patches_per_level
           << " patches x 2 detail levels = " << corpus.size() << " patches -> " << c.corpus << "\n";
    return corpus;
}

/// Standardized eye crops from an annotated frame manifest, split by level of detail.
/// Rows without a design id, non-eye rows and mid-detail rows are dropped with a note.
inline data::Corpus ingest_corpus(const RunConfig& c, std::vector<std::string>& notes) {
    if (c.ingest.manifest.empty()) throw ValidationError("ingest.manifest must be set");
    const fs::path manifest = c.ingest.manifest;
    data::ManifestReport report = data::ingest_manifest(manifest);
    notes = report.diagnostics;
    std::map<std::string, RasterImage> frames;
    data::Corpus corpus;
    const int size = c.synth.patch_size;
    for (const auto& r : report.regions) {
        const std::string at = "line " + std::to_string(r.line) + ": ";
        if (r.kind != data::RegionKind::eye) {
            notes.push_back(at + "not an eye region");
            continue;
        }
        if (!r.design_id) {
            notes.push_back(at + "no design id");
            continue;
        }
        auto it = frames.find(r.frame_ref);
        if (it == frames.end()) it = frames.emplace(r.frame_ref, read_png((manifest.parent_path() / r.frame_ref).string())).first;
        const RasterImage& frame = it->second;
        const data::DetailLabel level = data::lod_split(r, static_cast<long long>(frame.width()) * frame.height(), c.ingest.lod);
        if (level == data::DetailLabel::discarded) {
            notes.push_back(at + "between the detail thresholds");
            continue;
        }
        const data::StandardCrop crop = data::standardize_crop(frame, r.box, size, size, c.context_margin);
        corpus.patches.push_back({"m" + std::to_string(r.line), crop.image, r.production_id, *r.design_id, level, crop.inner});
    }
    if (corpus.patches.empty()) throw DatasetError("ingest: no usable regions in " + manifest.string());
    return corpus;
}

inline data::Corpus cmd_ingest(const RunConfig& c, Console io) {
    validate(c);
    std::vector<std::string> notes;
    data::Corpus corpus = ingest_corpus(c, notes);
    for (const auto& n : notes) io.err << "warning: " << n << "\n";
    data::save_corpus(corpus, c.corpus);
    int low = 0;
    for (const auto& p : corpus.patches) low += p.detail == data::DetailLabel::low;
    io.out << "ingest: " << corpus.size() << " patches (" << low << " low, " << corpus.size() - low << " high), " << notes.size()
           << " rows dropped -> " << c.corpus << "\n";
    return corpus;
}

// ---------------------------------------------------------------------------------------------
// encoder

inline std::vector<double> cmd_train_encoder(const RunConfig& c, Console io) {
    validate(c);
    const data::Corpus corpus = detail::load_checked_corpus(c);
    const style::EncoderTrainConfig tc{c.encoder.steps, c.encoder.batch, c.encoder.lr, c.encoder.context_size, c.seed};
    const auto t0 = std::chrono::steady_clock::now();
    const auto report_every = std::max(1, c.encoder.steps / 10);
    auto r = style::train_style_encoder(corpus, c.encoder.arch, tc, [&](int step, double loss) {
        if ((step + 1) % report_every == 0) io.out << "train-encoder: step " << step + 1 << " loss " << detail::format_double(loss) << "\n";
    });
    const Artifacts a{c.out};
    std::ostringstream log;
    log << "step\tloss\n";
    for (std::size_t i = 0; i < r.losses.size(); ++i) log << i + 1 << '\t' << detail::format_double(r.losses[i]) << '\n';
    detail::ensure_dir(a.root);
    nn::save_weights(a.encoder_weights().string(), r.encoder.weights());
    detail::write_text(a.encoder_log(), log.str());
    detail::write_text(a.config(), dump_config(c));
    if (!r.losses.empty())
        io.out << "train-encoder: loss " << detail::format_double(r.losses.front()) << " -> " << detail::format_double(r.losses.back()) << "\n";
    io.err << "train-encoder: " << r.losses.size() << " steps in " << detail::seconds_since(t0) << " s\n";
    return r.losses;
}

inline std::vector<style::EmbeddingRecord> embed_records(const style::StyleEncoder& enc, const data::Corpus& corpus, const RunConfig& c) {
    const auto e = style::embed_corpus(enc, corpus, c.encoder.embed_context, c.seed);
    std::vector<style::EmbeddingRecord> out;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& p = corpus.patches[i];
        out.push_back({p.id, p.production, p.design, e[i]});
    }
    return out;
}

inline void cmd_embed(const RunConfig& c, Console io) {
    validate(c);
    const auto enc = detail::load_encoder(c);
    const data::Corpus corpus = detail::load_checked_corpus(c);
    const auto records = embed_records(*enc, corpus, c);
    const Artifacts a{c.out};
    detail::ensure_dir(a.root);
    style::write_embeddings(a.embeddings(), records);
    io.out << "embed: " << records.size() << " embeddings -> " << a.embeddings().string() << "\n";
}

// ---------------------------------------------------------------------------------------------
// cluster

struct ProductionClusters {
    std::string production;
    int points = 0;
    int clusters = 0;
    double cut = 0.0;
    double silhouette = 0.0;
    std::optional<double> separation_ratio;  // by ground-truth design
    std::optional<double> purity;
};

struct ClusterReport {
    std::vector<int> labels;  // global cluster id per record
    std::vector<ProductionClusters> productions;
    std::optional<double> purity;            // over all records
    std::optional<double> separation_ratio;  // mean over productions that have one
};

/// UPGMA inside each production (embeddings are only comparable within one production's
/// normalisation). Cluster ids are numbered globally in production order.
inline ClusterReport cluster_embeddings(const std::vector<style::EmbeddingRecord>& records, double cut) {
    if (records.empty()) throw ValidationError("cluster: no embeddings");
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i) groups[records[i].production].push_back(i);

    ClusterReport rep;
    rep.labels.assign(records.size(), -1);
    const bool truth = std::all_of(records.begin(), records.end(), [](const auto& r) { return !r.design.empty(); });
    int next = 0;
    double ratio_sum = 0.0;
    int ratio_count = 0;
    for (const auto& [prod, idx] : groups) {
        std::vector<std::vector<double>> pts;
        std::vector<std::string> designs;
        for (std::size_t i : idx) {
            pts.push_back(records[i].vector);
            designs.push_back(records[i].design);
        }
        style::ClusterResult cr;
        if (cut < 0.0) {
            cr = style::upgma_auto_cluster(pts);
        } else {
            cr.merges = style::upgma_merges(pts);
            cr.labels = style::cut_dendrogram(cr.merges, static_cast<int>(pts.size()), cut);
            cr.cut_distance = cut;
        }
        ProductionClusters pc{prod, static_cast<int>(pts.size()), *std::max_element(cr.labels.begin(), cr.labels.end()) + 1,
                              cr.cut_distance, cr.silhouette, std::nullopt, std::nullopt};
        for (std::size_t k = 0; k < idx.size(); ++k) rep.labels[idx[k]] = next + cr.labels[k];
        next += pc.clusters;
        if (truth) {
            pc.purity = style::cluster_purity(cr.labels, designs);
            try {
                pc.separation_ratio = style::separation_ratio(pts, designs);
                ratio_sum += *pc.separation_ratio;
                ++ratio_count;
            } catch (const DegenerateStatistics&) {
            }
        }
        rep.productions.push_back(pc);
    }
    if (truth) {
        std::vector<std::string> keys;
        for (const auto& r : records) keys.push_back(r.production + "\t" + r.design);
        rep.purity = style::cluster_purity(rep.labels, keys);
    }
    if (ratio_count > 0) rep.separation_ratio = ratio_sum / ratio_count;
    return rep;
}

inline constexpr const char* kClustersHeader = "id\tproduction\tdesign\tcluster";

inline std::map<std::string, int> read_clusters(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::map<std::string, int> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != kClustersHeader) throw FormatError("missing cluster header", lineno);
            continue;
        }
        const auto f = data::detail::split(line, '\t');
        if (f.size() != 4) throw FormatError("expected 4 fields, found " + std::to_string(f.size()), lineno);
        const int k = data::detail::parse_int(f[3], "cluster", lineno);
        if (k < 0) throw FormatError("negative cluster id", lineno);
        if (!out.emplace(f[0], k).second) throw FormatError("duplicate id '" + f[0] + "'", lineno);
    }
    return out;
}

inline ClusterReport cmd_cluster(const RunConfig& c, Console io, const std::string& embeddings_path = {}) {
    validate(c);
    const Artifacts a{c.out};
    const fs::path src = embeddings_path.empty() ? a.embeddings() : fs::path(embeddings_path);
    const auto records = style::read_embeddings(src);
    const ClusterReport rep = cluster_embeddings(records, c.cluster.cut);

    std::ostringstream assign, report;
    assign << kClustersHeader << '\n';
    for (std::size_t i = 0; i < records.size(); ++i)
        assign << records[i].id << '\t' << records[i].production << '\t' << (records[i].design.empty() ? "-" : records[i].design) << '\t'
               << rep.labels[i] << '\n';
    report << "production\tpoints\tclusters\tcut\tsilhouette\tseparation_ratio\tpurity\n";
    int total = 0;
    for (const auto& p : rep.productions) {
        report << p.production << '\t' << p.points << '\t' << p.clusters << '\t' << detail::format_double(p.cut) << '\t'
               << detail::format_double(p.silhouette) << '\t' << detail::or_unavailable(p.separation_ratio) << '\t'
               << detail::or_unavailable(p.purity) << '\n';
        total += p.clusters;
    }
    report << "*\t" << records.size() << '\t' << total << "\t-\t-\t" << detail::or_unavailable(rep.separation_ratio) << '\t'
           << detail::or_unavailable(rep.purity) << '\n';
    detail::write_text(a.clusters(), assign.str());
    detail::write_text(a.cluster_report(), report.str());
    io.out << "cluster: " << records.size() << " embeddings in " << rep.productions.size() << " productions -> " << total
           << " clusters; separation ratio " << detail::or_unavailable(rep.separation_ratio) << ", purity "
           << detail::or_unavailable(rep.purity) << "\n";
    return rep;
}

// ---------------------------------------------------------------------------------------------
// redrawer

/// Relabels patches with their cluster (classes = "clusters") or keeps design ids, and
/// numbers the labels as discriminator classes.
inline std::pair<data::Corpus, translate::ClassMap> class_corpus(const RunConfig& c, data::Corpus corpus) {
    if (c.redrawer.classes == "clusters") {
        const Artifacts a{c.out};
        detail::require_file(a.clusters(), "cluster assignments (run embed and cluster first)");
        const auto assign = read_clusters(a.clusters());
        for (auto& p : corpus.patches) {
            const auto it = assign.find(p.id);
            if (it == assign.end()) throw DatasetError("patch '" + p.id + "' has no cluster in " + a.clusters().string());
            p.design = "c" + std::to_string(it->second);
        }
    }
    translate::ClassMap classes;
    for (const auto& label : corpus.designs()) classes.emplace(label, static_cast<int>(classes.size()));
    return {std::move(corpus), std::move(classes)};
}

inline std::string format_classes(const translate::ClassMap& classes) {
    std::ostringstream os;
    os << "label\tclass\n";
    for (const auto& [label, k] : classes) os << label << '\t' << k << '\n';
    return os.str();
}

inline translate::ClassMap read_classes(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    translate::ClassMap out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1) continue;
        const auto f = data::detail::split(line, '\t');
        if (f.size() != 2) throw FormatError("expected 2 fields, found " + std::to_string(f.size()), lineno);
        out[f[0]] = data::detail::parse_int(f[1], "class", lineno);
    }
    return out;
}

inline std::vector<translate::LossRow> cmd_train_redrawer(const RunConfig& c, Console io) {
    validate(c);
    const auto enc = detail::load_encoder(c);
    auto [corpus, classes] = class_corpus(c, detail::load_checked_corpus(c));
    const translate::RedrawerConfig rc = detail::redrawer_config(c);
    const int report_every = std::max(1, rc.steps / 20);
    const auto t0 = std::chrono::steady_clock::now();
    auto r = translate::train_redrawer(corpus, enc, classes, rc, nullptr, [&](const translate::LossRow& row) {
        if (row.step % report_every == 0 || row.validation_reconstruction) {
            io.out << "train-redrawer: step " << row.step << " L_R " << detail::format_double(row.reconstruction) << " G "
                   << detail::format_double(row.generator_total);
            if (row.validation_reconstruction) io.out << " val L_R " << detail::format_double(*row.validation_reconstruction);
            io.out << "\n";
        }
    });
    const Artifacts a{c.out};
    detail::ensure_dir(a.root);
    nn::save_weights(a.generator_weights().string(), r.models.generator.weights());
    nn::save_weights(a.quality_weights().string(), r.models.quality.weights());
    nn::save_weights(a.context_weights().string(), r.models.context.weights());
    translate::write_loss_log(a.redrawer_log(), r.log);
    detail::write_text(a.classes(), format_classes(classes));
    detail::write_text(a.config(), dump_config(c));
    io.out << "train-redrawer: " << classes.size() << " classes (" << c.redrawer.classes << "), " << r.log.size() << " steps\n";
    io.err << "train-redrawer: " << r.log.size() << " steps in " << detail::seconds_since(t0) << " s\n";
    return r.log;
}

struct EvalSummary {
    translate::EvalReport redrawer;
    std::optional<double> separation_ratio;  // encoder, by ground-truth design, mean over productions
};

inline EvalSummary cmd_eval(const RunConfig& c, Console io) {
    validate(c);
    const Artifacts a{c.out};
    const auto enc = detail::load_encoder(c);
    detail::require_file(a.classes(), "class table (run train-redrawer first)");
    const data::Corpus raw = detail::load_checked_corpus(c);
    auto [corpus, labels] = class_corpus(c, raw);
    const translate::ClassMap classes = read_classes(a.classes());
    for (const auto& [label, k] : labels)
        if (!classes.contains(label)) throw DatasetError("label '" + label + "' is missing from " + a.classes().string());

    translate::RedrawerConfig rc = detail::redrawer_config(c);
    rc.discriminator.classes = translate::detail::class_count(classes);
    rc.discriminator.image_size = rc.generator.image_size;
    for (const auto& p : {a.generator_weights(), a.quality_weights(), a.context_weights()}) detail::require_file(p, "redrawer weights");
    translate::RedrawerModels m{detail::load_generator(c, enc), translate::Discriminator(rc.discriminator, "quality", c.seed + 1),
                                translate::Discriminator(rc.discriminator, "context", c.seed + 2)};
    m.quality.load(nn::load_weights(a.quality_weights().string()));
    m.context.load(nn::load_weights(a.context_weights().string()));

    const Box region = translate::detail::common_region(corpus, rc.generator.image_size);
    const int size = rc.generator.image_size;
    const auto masks = translate::build_masks(size, size, region, rc.band_fraction, rc.border_fraction);
    EvalSummary s;
    s.redrawer = translate::evaluate_redrawer(m, translate::validation_batches(corpus, classes, rc), masks, region, rc.filter_threshold);

    const auto records = embed_records(*enc, raw, c);
    s.separation_ratio = cluster_embeddings(records, 0.0).separation_ratio;

    std::ostringstream os;
    using detail::format_double;
    os << "metric\tvalue\n"
       << "samples\t" << s.redrawer.samples << '\n'
       << "reconstruction\t" << format_double(s.redrawer.reconstruction) << '\n'
       << "detail_gain_fraction\t" << format_double(s.redrawer.detail_gain_fraction) << '\n'
       << "mean_hf_t\t" << format_double(s.redrawer.mean_hf_t) << '\n'
       << "mean_hf_l\t" << format_double(s.redrawer.mean_hf_l) << '\n'
       << "quality_score_t\t" << format_double(s.redrawer.quality_score_t) << '\n'
       << "quality_score_l\t" << format_double(s.redrawer.quality_score_l) << '\n'
       << "separation_ratio\t" << detail::or_unavailable(s.separation_ratio) << '\n';
    detail::write_text(a.eval_report(), os.str());
    io.out << os.str();
    return s;
}

// ---------------------------------------------------------------------------------------------
// redraw

struct GuideCrop {
    std::string design;
    Box box;
    RasterImage image;  // standardized
};

struct RegionOutcome {
    std::string frame;
    Box box;
    std::string design;  // manifest design id or "-"
    std::string guide;   // matched color-guide design, empty when skipped early
    std::string status;  // "redrawn" or "skipped: <reason>"
    RasterImage before, after;  // standardized views for the grid (redrawn regions only)
};

struct RedrawInputs {
    std::map<std::string, RasterImage> frames;  // output name -> frame
    std::vector<data::AnnotatedRegion> regions;  // frame_ref is an output name
    RasterImage guide;
    std::vector<GuideBox> guide_boxes;
    std::map<std::string, std::string> pairing;
};

struct RedrawOutput {
    std::map<std::string, RasterImage> frames;
    std::map<std::string, RegionMask> touched;  // union of blend masks per frame
    std::vector<RegionOutcome> regions;
};

namespace detail {

inline std::vector<double> centroid(const std::vector<style::Embedding>& e, const std::vector<std::size_t>& idx) {
    std::vector<double> c(e.front().size(), 0.0);
    for (std::size_t i : idx)
        for (std::size_t k = 0; k < c.size(); ++k) c[k] += e[i][k];
    for (double& v : c) v /= static_cast<double>(idx.size());
    return c;
}

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return s;
}

/// Binary blend mask over the source crop: the region box minus any pixel on the source or
/// frame border.
inline RegionMask blend_mask(const Box& source, const Box& region, int frame_h, int frame_w) {
    RegionMask m(source.h, source.w);
    for (int y = region.y; y < region.y + region.h; ++y)
        for (int x = region.x; x < region.x + region.w; ++x) {
            const int fy = source.y + y, fx = source.x + x;
            if (y < 1 || x < 1 || y > source.h - 2 || x > source.w - 2) continue;
            if (fy < 1 || fx < 1 || fy > frame_h - 2 || fx > frame_w - 2) continue;
            m.set(y, x, 1.0);
        }
    return m;
}

inline RasterImage side_by_side_grid(const std::vector<RegionOutcome>& rows, int size) {
    constexpr int kGap = 2;
    std::vector<const RegionOutcome*> shown;
    for (const auto& r : rows)
        if (!r.after.empty()) shown.push_back(&r);
    const int n = static_cast<int>(shown.size());
    RasterImage grid(n * size + (n - 1) * kGap, 2 * size + kGap, 1.0);
    for (int i = 0; i < n; ++i)
        for (int side = 0; side < 2; ++side) {
            const RasterImage& img = side == 0 ? shown[i]->before : shown[i]->after;
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < size; ++y)
                    for (int x = 0; x < size; ++x) grid.set(c, i * (size + kGap) + y, side * (size + kGap) + x, img.at(c, y, x));
        }
    return grid;
}

}  // namespace detail

/// Per region: standardize, generate with the matched color-guide style set, resample to the
/// source box, transfer colour statistics from the guide region, blend into the frame.
inline RedrawOutput redraw_frames(const translate::Generator& g, const RedrawInputs& in, double context_margin, Console io) {
    const int size = g.config().image_size;
    const style::StyleEncoder& enc = g.encoder();

    std::vector<GuideCrop> guides;
    for (const auto& b : in.guide_boxes) {
        const Box box{b.x, b.y, b.w, b.h};
        if (b.design.empty()) throw ValidationError("color guide box without a design name");
        if (!box.inside(in.guide.width(), in.guide.height())) throw ValidationError("color guide box for '" + b.design + "' lies outside the guide image");
        guides.push_back({b.design, box, data::standardize_crop(in.guide, box, size, size, context_margin).image});
    }
    std::map<std::string, std::vector<std::size_t>> by_design;
    for (std::size_t i = 0; i < guides.size(); ++i) by_design[guides[i].design].push_back(i);
    for (const auto& [from, to] : in.pairing)
        if (!by_design.contains(to)) throw ValidationError("pairing '" + from + "' names unknown guide design '" + to + "'");

    std::vector<RasterImage> guide_images;
    for (const auto& gc : guides) guide_images.push_back(gc.image);
    std::map<std::string, std::vector<double>> centroids;
    if (!guides.empty()) {
        const auto e = enc.encode(guide_images, guide_images);
        for (const auto& [d, idx] : by_design) centroids[d] = detail::centroid(e, idx);
    }

    RedrawOutput out;
    out.frames = in.frames;
    for (const auto& [name, f] : in.frames) out.touched.emplace(name, RegionMask(f.height(), f.width()));

    for (const auto& r : in.regions) {
        RegionOutcome o{r.frame_ref, r.box, r.design_id.value_or("-"), "", "", {}, {}};
        auto skip = [&](const std::string& why) {
            o.status = "skipped: " + why;
            io.err << "warning: " << r.frame_ref << " " << r.box.x << "," << r.box.y << "," << r.box.w << "," << r.box.h << ": " << why << "\n";
            out.regions.push_back(o);
        };
        const auto fit = in.frames.find(r.frame_ref);
        if (fit == in.frames.end()) throw ValidationError("region refers to unknown frame '" + r.frame_ref + "'");
        const RasterImage& original = fit->second;
        if (r.kind != data::RegionKind::eye) {
            skip("not an eye region");
            continue;
        }
        if (guides.empty()) {
            skip("no usable color-guide crop");
            continue;
        }
        const data::StandardCrop crop = data::standardize_crop(original, r.box, size, size, context_margin);

        auto forced = r.design_id ? in.pairing.find(*r.design_id) : in.pairing.end();
        if (forced == in.pairing.end()) forced = in.pairing.find("*");
        if (forced != in.pairing.end()) {
            o.guide = forced->second;
        } else {
            const auto e = style::encode_design(enc, crop.image, guide_images);
            double best = std::numeric_limits<double>::infinity();
            for (const auto& [d, c] : centroids)
                if (const double dist = detail::squared_distance(e, c); dist < best) {
                    best = dist;
                    o.guide = d;
                }
        }
        std::vector<RasterImage> style_set;
        for (std::size_t i : by_design.at(o.guide)) style_set.push_back(guides[i].image);

        const RasterImage generated = g.generate(crop.image, style_set);
        const RasterImage resized = resample_bilinear(generated, crop.source.h, crop.source.w);
        const Box local{r.box.x - crop.source.x, r.box.y - crop.source.y, r.box.w, r.box.h};
        RegionMask guide_mask(in.guide.height(), in.guide.width());
        for (std::size_t i : by_design.at(o.guide)) {
            const Box& b = guides[i].box;
            for (int y = b.y; y < b.y + b.h; ++y)
                for (int x = b.x; x < b.x + b.w; ++x) guide_mask.set(y, x, 1.0);
        }
        RasterImage transferred;
        try {
            transferred = color_transfer(resized, RegionMask::from_box(crop.source.h, crop.source.w, local), in.guide, guide_mask);
        } catch (const DegenerateStatistics& e) {
            skip(std::string("color transfer impossible: ") + e.what());
            continue;
        }
        const RegionMask mask = detail::blend_mask(crop.source, local, original.height(), original.width());
        if (mask.nonzero_count() == 0) {
            skip("region too small to blend");
            continue;
        }
        RasterImage& frame = out.frames.at(r.frame_ref);
        frame = poisson_blend(transferred, frame, mask, Offset{crop.source.y, crop.source.x});
        RegionMask& touched = out.touched.at(r.frame_ref);
        for (int y = 0; y < mask.height(); ++y)
            for (int x = 0; x < mask.width(); ++x)
                if (mask(y, x) > 0.0) touched.set(crop.source.y + y, crop.source.x + x, 1.0);
        o.status = "redrawn";
        o.before = resample_bilinear(original.crop(crop.source), size, size);
        o.after = resample_bilinear(frame.crop(crop.source), size, size);
        out.regions.push_back(std::move(o));
    }
    return out;
}

namespace detail {

inline std::vector<std::pair<std::string, fs::path>> list_pngs(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("missing frames directory: " + dir.string());
    std::vector<std::pair<std::string, fs::path>> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") out.emplace_back(fs::relative(e.path(), dir).generic_string(), e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

/// Loads every input of the redraw command; nothing is written.
inline RedrawInputs load_redraw_inputs(const RunConfig& c, Console io) {
    const auto& rs = c.redraw;
    if (rs.manifest.empty() && rs.frames.empty()) throw ValidationError("redraw.manifest or redraw.frames must be set");
    if (rs.color_guide.empty()) throw ValidationError("redraw.color_guide must be set");
    detail::require_file(rs.color_guide, "color guide");
    RedrawInputs in;
    in.guide = read_png(rs.color_guide);
    in.guide_boxes = rs.guide_boxes;
    in.pairing = rs.pairing;

    std::map<fs::path, std::string> known;  // canonical path -> output name
    if (!rs.frames.empty())
        for (const auto& [name, path] : detail::list_pngs(rs.frames)) {
            in.frames.emplace(name, read_png(path.string()));
            known.emplace(fs::weakly_canonical(path), name);
        }
    if (!rs.manifest.empty()) {
        detail::require_file(rs.manifest, "manifest");
        data::ManifestReport report = data::ingest_manifest(rs.manifest);
        for (const auto& d : report.diagnostics) {
            if (d.find("missing or unreadable frame") != std::string::npos) throw IoError(rs.manifest + ": " + d);
            io.err << "warning: " << d << "\n";
        }
        const fs::path root = fs::path(rs.manifest).parent_path();
        for (auto r : report.regions) {
            const fs::path p = fs::weakly_canonical(root / r.frame_ref);
            auto it = known.find(p);
            if (it == known.end()) {
                it = known.emplace(p, r.frame_ref).first;
                if (!in.frames.contains(r.frame_ref)) in.frames.emplace(r.frame_ref, read_png(p.string()));
            }
            r.frame_ref = it->second;
            in.regions.push_back(std::move(r));
        }
    }
    return in;
}

inline RedrawOutput cmd_redraw(const RunConfig& c, Console io) {
    validate(c);
    const auto enc = detail::load_encoder(c);
    const translate::Generator g = detail::load_generator(c, enc);
    const RedrawInputs in = load_redraw_inputs(c, io);
    const auto t0 = std::chrono::steady_clock::now();
    RedrawOutput out = redraw_frames(g, in, c.context_margin, io);
    const double elapsed = detail::seconds_since(t0);

    const Artifacts a{c.out};
    const fs::path frames_dir = a.redraw_dir() / "frames";
    for (const auto& [name, frame] : out.frames) {
        const fs::path p = frames_dir / name;
        detail::ensure_dir(p.parent_path());
        write_png(p.string(), frame);
    }
    std::ostringstream os;
    os << "frame\tx\ty\tw\th\tdesign\tguide\tstatus\n";
    int redrawn = 0;
    for (const auto& r : out.regions) {
        os << r.frame << '\t' << r.box.x << '\t' << r.box.y << '\t' << r.box.w << '\t' << r.box.h << '\t' << r.design << '\t'
           << (r.guide.empty() ? "-" : r.guide) << '\t' << r.status << '\n';
        redrawn += r.status == "redrawn";
    }
    detail::write_text(a.redraw_dir() / "regions.tsv", os.str());
    if (c.redraw.grid && redrawn > 0) write_png((a.redraw_dir() / "grid.png").string(), detail::side_by_side_grid(out.regions, g.config().image_size));
    io.out << "redraw: " << out.frames.size() << " frames, " << redrawn << " of " << out.regions.size() << " regions redrawn -> "
           << a.redraw_dir().string() << "\n";
    io.err << "redraw: " << out.regions.size() << " regions in " << elapsed << " s\n";
    return out;
}

}  // namespace redraw::pipeline
