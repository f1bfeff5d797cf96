#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "redraw/datasetgen/crop.hpp"
#include "redraw/datasetgen/region.hpp"
#include "redraw/styleenc/encoder.hpp"
#include "redraw/translator/train.hpp"

namespace redraw {

namespace data {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LodThresholds, low_below, high_above)
}
namespace style {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EncoderConfig, image_size, content_blocks, content_width, style_blocks, style_width, hidden)
}
namespace translate {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GeneratorConfig, image_size, base_width, down_blocks, res_blocks)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DiscriminatorConfig, image_size, base_width, blocks, classes)
}

namespace pipeline {

struct SynthSection {
    int productions = 4;
    int designs = 4;
    int patches_per_level = 25;  // per design and detail level
    int patch_size = 32;
};

struct IngestSection {
    std::string manifest;
    data::LodThresholds lod;
};

struct EncoderSection {
    style::EncoderConfig arch{32, 4, 32, 4, 16, 64};
    int steps = 2000;
    int batch = 8;
    double lr = 1e-4;
    int context_size = 4;
    int embed_context = 8;  // portraits per production used as context when embedding
};

struct RedrawerSection {
    translate::GeneratorConfig generator;
    translate::DiscriminatorConfig discriminator;
    int steps = 2000;
    int batch = 8;
    double lr_generator = 1e-4;
    double lr_discriminator = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double gamma = translate::kR1Gamma;
    double band_fraction = translate::kDefaultBandFraction;
    double border_fraction = translate::kDefaultBorderFraction;
    double filter_threshold = fourier::kDefaultThreshold;
    int style_set_size = 3;
    bool hinge_generator = false;
    int validation_size = 32;
    int validation_every = 100;
    std::string classes = "clusters";  // or "designs"
};

struct ClusterSection {
    double cut = -1.0;  // negative: choose the cut by silhouette
};

struct GuideBox {
    int x = 0, y = 0, w = 0, h = 0;
    std::string design;
};

struct RedrawSection {
    std::string manifest;
    std::string frames;  // optional directory; every PNG in it is written out, redrawn or not
    std::string color_guide;
    std::vector<GuideBox> guide_boxes;
    std::map<std::string, std::string> pairing;  // manifest design id (or "*") -> guide design
    bool grid = true;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string corpus = "runs/corpus";
    std::string out = "runs/out";
    double context_margin = data::kDefaultContextMargin;
    SynthSection synth;
    IngestSection ingest;
    EncoderSection encoder;
    RedrawerSection redrawer;
    ClusterSection cluster;
    RedrawSection redraw;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SynthSection, productions, designs, patches_per_level, patch_size)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(IngestSection, manifest, lod)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EncoderSection, arch, steps, batch, lr, context_size, embed_context)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RedrawerSection, generator, discriminator, steps, batch, lr_generator, lr_discriminator, beta1,
                                                beta2, gamma, band_fraction, border_fraction, filter_threshold, style_set_size, hinge_generator,
                                                validation_size, validation_every, classes)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ClusterSection, cut)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GuideBox, x, y, w, h, design)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RedrawSection, manifest, frames, color_guide, guide_boxes, pairing, grid)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, seed, corpus, out, context_margin, synth, ingest, encoder, redrawer, cluster, redraw)

namespace detail {

// Every key of `given` must exist in `known`; free-form maps are not descended into.
inline void reject_unknown_keys(const nlohmann::json& given, const nlohmann::json& known, const std::string& where) {
    if (!given.is_object() || !known.is_object()) return;
    for (const auto& [key, value] : given.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!known.contains(key)) throw ValidationError("config: unknown key '" + path + "'");
        if (key == "pairing") continue;
        const auto& k = known.at(key);
        if (k.is_array() && value.is_array() && key == "guide_boxes") {
            for (const auto& item : value) reject_unknown_keys(item, nlohmann::json(GuideBox{}), path + "[]");
            continue;
        }
        reject_unknown_keys(value, k, path);
    }
}

}  // namespace detail

/// Structural checks shared by all commands. Values that only one command uses are checked there.
inline void validate(const RunConfig& c) {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ValidationError("config: " + what);
    };
    require(!c.corpus.empty() && !c.out.empty(), "corpus and out must be set");
    require(c.context_margin >= 0.0 && c.context_margin < 2.0, "context_margin must lie in [0, 2)");
    require(c.synth.patch_size >= 8, "synth.patch_size must be at least 8");
    require(c.encoder.steps >= 0 && c.encoder.batch >= 1 && c.encoder.lr > 0.0 && c.encoder.context_size >= 1 && c.encoder.embed_context >= 1,
            "encoder steps >= 0, batch >= 1, lr > 0, context_size >= 1 and embed_context >= 1 required");
    const auto& r = c.redrawer;
    require(r.steps >= 0 && r.batch >= 1 && r.lr_generator > 0.0 && r.lr_discriminator > 0.0, "redrawer steps >= 0, batch >= 1 and positive lrs required");
    require(r.beta1 >= 0.0 && r.beta1 < 1.0 && r.beta2 >= 0.0 && r.beta2 < 1.0, "redrawer betas must lie in [0, 1)");
    require(r.gamma >= 0.0, "redrawer.gamma must be non-negative");
    require(r.band_fraction > 0.0 && r.band_fraction < 0.5 && r.border_fraction > 0.0 && r.border_fraction < 0.5,
            "mask fractions must lie in (0, 0.5)");
    require(r.filter_threshold >= 0.0 && r.filter_threshold <= 0.7071, "filter_threshold must lie in [0, sqrt(0.5)]");
    require(r.style_set_size >= 1 && r.validation_size >= 1, "style_set_size and validation_size must be positive");
    require(r.classes == "clusters" || r.classes == "designs", "redrawer.classes must be 'clusters' or 'designs'");
    require(r.generator.image_size == c.encoder.arch.image_size, "redrawer.generator.image_size must equal encoder.arch.image_size");
}

inline nlohmann::json to_json_value(const RunConfig& c) { return nlohmann::json(c); }

inline RunConfig parse_config(const nlohmann::json& j) {
    detail::reject_unknown_keys(j, to_json_value(RunConfig{}), "");
    RunConfig c;
    try {
        c = j.get<RunConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("config is not valid JSON: ") + e.what(), 0);
    }
    return parse_config(j);
}

inline std::string dump_config(const RunConfig& c) { return to_json_value(c).dump(2) + "\n"; }

}  // namespace pipeline
}  // namespace redraw
