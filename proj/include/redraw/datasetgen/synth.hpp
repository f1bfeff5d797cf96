#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "redraw/datasetgen/corpus.hpp"
#include "redraw/datasetgen/crop.hpp"
#include "redraw/resample.hpp"

namespace redraw::data {

struct Rgb {
    double r = 0.0, g = 0.0, b = 0.0;
};

/// Drawing conventions shared by every design of one synthetic production.
struct SyntheticStyleSpec {
    std::string production_id;
    std::vector<Rgb> palette;          // iris colours handed out to designs
    double line_width = 0.035;         // lid stroke, fraction of patch side
    std::vector<double> iris_shape{0.65, 1.0};  // {lid openness, iris radius / lid half-height}
    int highlight_count_low = 1;
    int highlight_count_high = 3;
    std::uint64_t seed = 0;
    Rgb skin{0.96, 0.86, 0.78};
    Rgb sclera{0.84, 0.84, 0.86};
    Rgb line{0.18, 0.12, 0.12};
};

struct Highlight {
    double dx, dy, r;  // relative to the iris centre and radius
};

struct EyeDesign {
    Rgb iris;
    double openness = 0.65;
    double iris_ratio = 1.0;
    double pupil_ratio = 0.45;
    double gaze = 0.0;
    std::vector<Highlight> highlights;  // drawn in order; the first is the main one
};

/// Per-render jitter that carries no design information.
struct Nuisance {
    double dx = 0.0, dy = 0.0;
    double scale = 1.0;
    double brightness = 1.0;
};

inline constexpr int kLowDetailDivisor = 2;
inline constexpr int kMaxHighlights = 4;

namespace detail {

inline Rgb hsv(double h, double s, double v) {
    h = std::fmod(h, 1.0) * 6.0;
    const int i = static_cast<int>(h) % 6;
    const double f = h - std::floor(h), p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    switch (i) {
        case 0: return {v, t, p};
        case 1: return {q, v, p};
        case 2: return {p, v, t};
        case 3: return {p, q, v};
        case 4: return {t, p, v};
        default: return {v, p, q};
    }
}

inline Rgb mix(Rgb a, Rgb b, double t) { return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t}; }
inline Rgb scaled(Rgb a, double k) { return {a.r * k, a.g * k, a.b * k}; }

inline std::mt19937_64 seeded(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                      static_cast<std::uint32_t>(b >> 32), static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
    return std::mt19937_64(seq);
}

constexpr std::array<Highlight, kMaxHighlights> kHighlightSlots{{
    {-0.38, -0.38, 0.34},
    {0.42, 0.30, 0.24},
    {-0.14, 0.50, 0.22},
    {0.44, -0.42, 0.22},
}};

}  // namespace detail

/// `count` production styles with well separated palettes; ids are prefix0, prefix1, ...
inline std::vector<SyntheticStyleSpec> default_style_specs(int count, std::uint64_t seed, const std::string& prefix = "prod") {
    if (count < 1) throw ValidationError("default_style_specs: count must be positive");
    std::vector<SyntheticStyleSpec> specs;
    for (int p = 0; p < count; ++p) {
        auto rng = detail::seeded(seed, static_cast<std::uint64_t>(p), 0x5713);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        SyntheticStyleSpec s;
        s.production_id = prefix + std::to_string(p);
        s.seed = rng();
        const double offset = u(rng);
        for (int k = 0; k < 6; ++k) s.palette.push_back(detail::hsv(offset + k / 6.0, 0.55 + 0.35 * u(rng), 0.45 + 0.4 * u(rng)));
        s.line_width = 0.025 + 0.025 * u(rng);
        s.iris_shape = {0.55 + 0.2 * u(rng), 0.9 + 0.2 * u(rng)};
        s.skin = detail::mix(Rgb{0.98, 0.88, 0.80}, Rgb{0.80, 0.64, 0.52}, u(rng));
        s.sclera = detail::mix(Rgb{0.86, 0.86, 0.86}, detail::hsv(u(rng), 0.25, 0.84), 0.5 * u(rng));
        s.line = detail::hsv(u(rng), 0.5 * u(rng), 0.08 + 0.15 * u(rng));
        specs.push_back(std::move(s));
    }
    return specs;
}

inline EyeDesign make_design(const SyntheticStyleSpec& spec, int index) {
    if (spec.palette.empty()) throw ValidationError("style spec '" + spec.production_id + "' has an empty palette");
    auto rng = detail::seeded(spec.seed, static_cast<std::uint64_t>(index), 0xde51);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    EyeDesign d;
    const Rgb base = spec.palette[static_cast<std::size_t>(index) % spec.palette.size()];
    d.iris = {std::clamp(base.r + 0.04 * u(rng), 0.0, 1.0), std::clamp(base.g + 0.04 * u(rng), 0.0, 1.0),
              std::clamp(base.b + 0.04 * u(rng), 0.0, 1.0)};
    d.openness = std::clamp(spec.iris_shape.at(0) + 0.12 * u(rng), 0.35, 0.9);
    d.iris_ratio = std::clamp(spec.iris_shape.at(1) + 0.1 * u(rng), 0.7, 1.3);
    d.pupil_ratio = 0.45 + 0.1 * u(rng);
    d.gaze = 0.12 * u(rng);
    for (const auto& slot : detail::kHighlightSlots)
        d.highlights.push_back({slot.dx + 0.05 * u(rng), slot.dy + 0.05 * u(rng), slot.r * (1.0 + 0.08 * u(rng))});
    return d;
}

inline Nuisance sample_nuisance(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Nuisance n;
    n.dx = 0.03 * u(rng);
    n.dy = 0.03 * u(rng);
    n.scale = 1.0 + 0.06 * u(rng);
    n.brightness = 1.0 + 0.05 * u(rng);
    return n;
}

/// Renders one eye glyph into a square patch whose central box (per `context_margin`)
/// holds the eye. Low detail is drawn at reduced resolution with fewer features and
/// upsampled, which leaves it visibly softer.
inline RasterImage render_eye(const SyntheticStyleSpec& spec, const EyeDesign& d, DetailLabel detail, const Nuisance& nz, int size,
                              double context_margin = kDefaultContextMargin) {
    if (size < 8) throw ValidationError("render_eye: patch size must be at least 8");
    if (detail == DetailLabel::discarded) throw ValidationError("render_eye: detail must be low or high");
    const bool high = detail == DetailLabel::high;
    const int res = high ? size : std::max(4, size / kLowDetailDivisor);
    const int hl_count = std::clamp(high ? spec.highlight_count_high : spec.highlight_count_low, 0, kMaxHighlights);

    const double m = context_margin / (1.0 + 2.0 * context_margin);
    const double cx = 0.5 + nz.dx, cy = 0.5 + nz.dy;
    const double a = (0.5 - m) * 0.92 * nz.scale, b = a * d.openness;
    const double icx = cx + d.gaze * a, icy = cy + 0.1 * b, ri = b * d.iris_ratio;
    const double lw = spec.line_width;
    const double low_boost = high ? 1.0 : 1.35;

    auto shade = [&](double u, double v) -> Rgb {
        Rgb c = spec.skin;
        const double brow = cy - b - 0.11;
        if (std::abs(u - cx) < 0.8 * a && std::abs(v - (brow + 0.05 * std::pow((u - cx) / a, 2))) < 0.45 * lw) c = spec.line;
        const double ex = (u - cx) / a, ey = (v - cy) / b;
        const double e = std::sqrt(ex * ex + ey * ey);
        if (e <= 1.0) {
            c = spec.sclera;
            const double dr = std::hypot(u - icx, v - icy);
            if (dr <= ri) {
                if (high) {
                    const double grad = 0.75 + 0.4 * std::clamp((v - (icy - ri)) / (2.0 * ri), 0.0, 1.0);
                    c = detail::scaled(d.iris, dr > 0.8 * ri ? 0.55 : grad);
                    if (dr <= ri * d.pupil_ratio) c = detail::scaled(d.iris, 0.2);
                } else {
                    c = dr <= ri * d.pupil_ratio ? detail::scaled(d.iris, 0.35) : d.iris;
                }
            }
        }
        const double edge = (e - 1.0) * b;
        if (ey < 0.35 && std::abs(edge) < (high ? 1.0 : 1.2) * lw) c = spec.line;
        if (high && ey >= 0.35 && std::abs(edge) < 0.35 * lw) c = spec.line;
        c = detail::scaled(c, nz.brightness);
        if (e <= 1.0)
            for (int k = 0; k < hl_count; ++k) {
                const auto& h = d.highlights[k];
                if (std::hypot(u - (icx + h.dx * ri), v - (icy + h.dy * ri)) <= h.r * ri * (k == 0 ? low_boost : 1.0)) c = {1.0, 1.0, 1.0};
            }
        return c;
    };

    constexpr int ss = 4;
    RasterImage img(res, res);
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
            Rgb acc;
            for (int sy = 0; sy < ss; ++sy)
                for (int sx = 0; sx < ss; ++sx) {
                    const Rgb c = shade((x + (sx + 0.5) / ss) / res, (y + (sy + 0.5) / ss) / res);
                    acc.r += c.r;
                    acc.g += c.g;
                    acc.b += c.b;
                }
            const double k = 1.0 / (ss * ss);
            img.set(0, y, x, acc.r * k);
            img.set(1, y, x, acc.g * k);
            img.set(2, y, x, acc.b * k);
        }
    return res == size ? img : resample_bilinear(img, size, size);
}

/// Labeled patches for every production x design. Each design gets `patches_per_design`
/// patches, half high detail and half low detail, each with independent nuisance jitter.
inline Corpus synth_generate(const std::vector<SyntheticStyleSpec>& specs, int designs_per_production, int patches_per_design,
                             int patch_size = 32, double context_margin = kDefaultContextMargin) {
    if (specs.size() < 2) throw ValidationError("synth_generate: at least 2 productions required");
    if (designs_per_production < 2) throw ValidationError("synth_generate: at least 2 designs per production required");
    if (patches_per_design < 2 || patches_per_design % 2 != 0)
        throw ValidationError("synth_generate: patches per design must be even and at least 2");
    for (std::size_t i = 0; i < specs.size(); ++i)
        for (std::size_t j = i + 1; j < specs.size(); ++j)
            if (specs[i].production_id == specs[j].production_id)
                throw ValidationError("synth_generate: duplicate production id '" + specs[i].production_id + "'");
    for (const auto& s : specs)
        if (s.highlight_count_high <= s.highlight_count_low)
            throw ValidationError("synth_generate: high-detail highlight count must exceed the low-detail count");

    Corpus corpus;
    const Box inner = centered_inner_box(patch_size, context_margin);
    for (const auto& spec : specs)
        for (int d = 0; d < designs_per_production; ++d) {
            const EyeDesign design = make_design(spec, d);
            const std::string design_id = spec.production_id + "-d" + std::to_string(d);
            auto rng = detail::seeded(spec.seed, static_cast<std::uint64_t>(d), 0x9a7c);
            for (int k = 0; k < patches_per_design; ++k) {
                const DetailLabel level = k % 2 == 0 ? DetailLabel::high : DetailLabel::low;
                const Nuisance nz = sample_nuisance(rng);
                Patch p;
                p.id = design_id + "-" + to_string(level) + "-" + std::to_string(k / 2);
                p.image = render_eye(spec, design, level, nz, patch_size, context_margin);
                p.production = spec.production_id;
                p.design = design_id;
                p.detail = level;
                p.region = inner;
                corpus.patches.push_back(std::move(p));
            }
        }
    return corpus;
}

/// A synthetic frame containing one eye of `design` per box, pasted with its context ring.
/// Boxes must be square and leave room for the margin inside the frame.
inline RasterImage render_frame(const SyntheticStyleSpec& spec, const EyeDesign& design, DetailLabel detail, int height, int width,
                                const std::vector<Box>& eye_boxes, std::uint64_t seed, double context_margin = kDefaultContextMargin) {
    RasterImage frame(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double shade = 1.0 - 0.04 * static_cast<double>(y) / height;
            frame.set(0, y, x, spec.skin.r * shade);
            frame.set(1, y, x, spec.skin.g * shade);
            frame.set(2, y, x, spec.skin.b * shade);
        }
    auto rng = detail::seeded(seed, spec.seed, 0xf4a3);
    for (const Box& box : eye_boxes) {
        if (box.w != box.h) throw ValidationError("render_frame: eye boxes must be square");
        const int m = static_cast<int>(std::lround(context_margin * box.w));
        const Box outer{box.x - m, box.y - m, box.w + 2 * m, box.h + 2 * m};
        if (!outer.inside(width, height)) throw ValidationError("render_frame: eye box plus margin leaves the frame");
        Nuisance nz = sample_nuisance(rng);
        nz.brightness = 1.0;
        const RasterImage patch = render_eye(spec, design, detail, nz, outer.w, static_cast<double>(m) / box.w);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < outer.h; ++y)
                for (int x = 0; x < outer.w; ++x) {
                    const double shade = 1.0 - 0.04 * static_cast<double>(outer.y + y) / height;
                    const double skin = (c == 0 ? spec.skin.r : c == 1 ? spec.skin.g : spec.skin.b);
                    const double v = patch.at(c, y, x);
                    // Keep the frame's own shading where the patch shows plain skin.
                    frame.set(c, outer.y + y, outer.x + x, std::abs(v - std::clamp(skin, 0.0, 1.0)) < 1e-12 ? skin * shade : v);
                }
    }
    return frame;
}

}  // namespace redraw::data
