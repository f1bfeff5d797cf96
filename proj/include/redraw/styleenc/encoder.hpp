#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "redraw/color.hpp"
#include "redraw/nn/layers.hpp"
#include "redraw/nn/weights_io.hpp"

namespace redraw::style {

inline constexpr int kEmbeddingDim = 32;

struct EncoderConfig {
    int image_size = 64;
    int content_blocks = 4;
    int content_width = 32;
    int style_blocks = 4;
    int style_width = 16;
    int hidden = 64;
};

using Embedding = std::vector<double>;

/// Lightness planes of `images` as an [N, 1, H, W] tensor.
inline nn::Tensor lightness_tensor(std::span<const RasterImage> images) {
    if (images.empty()) throw ShapeError("lightness_tensor: empty list");
    const int h = images[0].height(), w = images[0].width();
    nn::Tensor out(nn::Shape{static_cast<int>(images.size()), 1, h, w});
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].height() != h || images[i].width() != w) throw ShapeError("lightness_tensor: size mismatch");
        const Plane l = color::lightness(images[i]);
        std::copy(l.values().begin(), l.values().end(), out.data() + i * l.size());
    }
    return out;
}

/// Lightness planes [N, 1, H, W] of an RGB batch [N, 3, H, W].
inline nn::Tensor lightness_tensor_from(const nn::Tensor& rgb) {
    const nn::Shape s = rgb.shape();
    if (s.c != 3) throw ShapeError("lightness_tensor_from: expected 3 channels, got " + s.str());
    nn::Tensor out(nn::Shape{s.n, 1, s.h, s.w});
    for (int n = 0; n < s.n; ++n)
        for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x)
                out(n, 0, y, x) = color::rgb_to_lab_pixel({rgb(n, 0, y, x), rgb(n, 1, y, x), rgb(n, 2, y, x)})[0];
    return out;
}

namespace detail {

inline int block_width(int base, int i) { return base << std::min(i, 2); }

// softplus(x) == 1 here, so freshly initialised AdaIN scales start at one.
inline constexpr double kUnitSoftplus = 0.5413248546129181;

struct ResidualDown {
    nn::Conv2d a, b, skip;

    ResidualDown() = default;
    ResidualDown(nn::ParameterSet& ps, const std::string& name, int in, int out, std::mt19937_64& rng)
        : a(ps, name + ".a", in, out, 3, 2, rng), b(ps, name + ".b", out, out, 3, 1, rng), skip(ps, name + ".skip", in, out, 1, 2, rng) {}

    nn::Var operator()(const nn::Var& x) const { return nn::relu(nn::add(b(nn::relu(a(x))), skip(x))); }
};

}  // namespace detail

/// Design encoder. A residual content branch embeds each portrait; a plain convolutional
/// branch reads only the lightness of a set of same-production portraits, is mean-pooled
/// over that set and predicts AdaIN statistics that normalise the content features before
/// two linear layers produce the 32-component embedding.
class StyleEncoder {
public:
    explicit StyleEncoder(EncoderConfig cfg, std::uint64_t seed = 0) : cfg_(cfg) {
        const int reduce = 1 << cfg.content_blocks;
        if (cfg.content_blocks < 1 || cfg.style_blocks < 1 || cfg.content_width < 1 || cfg.style_width < 1 || cfg.hidden < 1)
            throw ValidationError("encoder: block counts and widths must be positive");
        if (cfg.image_size % reduce != 0 || cfg.image_size / reduce < 2)
            throw ValidationError("encoder: image size must be a multiple of " + std::to_string(reduce) + " leaving at least 2x2 features");
        std::mt19937_64 rng(seed);
        stem_ = nn::Conv2d(ps_, "enc.content.stem", 3, cfg.content_width, 3, 1, rng);
        int c = cfg.content_width;
        for (int i = 0; i < cfg.content_blocks; ++i) {
            const int out = detail::block_width(cfg.content_width, i);
            blocks_.emplace_back(ps_, "enc.content.block" + std::to_string(i), c, out, rng);
            c = out;
        }
        content_channels_ = c;
        int s = 1;
        for (int i = 0; i < cfg.style_blocks; ++i) {
            const int out = detail::block_width(cfg.style_width, i);
            style_.emplace_back(ps_, "enc.style.block" + std::to_string(i), s, out, 3, 2, rng);
            s = out;
        }
        style_head_ = nn::Linear(ps_, "enc.style.adain", s, 2 * c, rng);
        nn::Tensor& bias = style_head_.conv.bias.mutable_value();
        for (int k = c; k < 2 * c; ++k) bias(0, k, 0, 0) = detail::kUnitSoftplus;
        const int side = cfg.image_size / reduce;
        hidden_ = nn::Linear(ps_, "enc.head.hidden", c * side * side, cfg.hidden, rng);
        out_ = nn::Linear(ps_, "enc.head.out", cfg.hidden, kEmbeddingDim, rng);
    }

    const EncoderConfig& config() const { return cfg_; }
    nn::ParameterSet& params() { return ps_; }
    const nn::ParameterSet& params() const { return ps_; }
    int trunk_width() const { return cfg_.hidden; }

    /// Production code [G, S, 1, 1]: per-portrait lightness features averaged over each run of
    /// `context_sizes` consecutive context portraits.
    nn::Var production_code(const nn::Var& context_lightness, const std::vector<int>& context_sizes) const {
        nn::Var h = context_lightness;
        for (const auto& conv : style_) h = nn::relu(conv(h));
        return nn::segment_mean(nn::spatial_mean(h), context_sizes);
    }

    /// Everything up to, and excluding, the final 32-output layer: [N, hidden, 1, 1].
    /// Portrait run i (portrait_counts[i] consecutive images) is normalised by context run i.
    nn::Var trunk(const nn::Var& images, const nn::Var& context_lightness, const std::vector<int>& context_sizes,
                  const std::vector<int>& portrait_counts) const {
        check(images, context_lightness, context_sizes, portrait_counts);
        nn::Var h = nn::relu(stem_(images));
        for (const auto& block : blocks_) h = block(h);

        const int c = content_channels_;
        const nn::Var stats = nn::segment_repeat(style_head_(production_code(context_lightness, context_sizes)), portrait_counts);
        const nn::Var mu = nn::slice_channels(stats, 0, c);
        const nn::Var sd = nn::softplus(nn::slice_channels(stats, c, c));
        h = nn::relu(nn::adain(h, mu, sd));
        return nn::relu(hidden_(h));
    }

    /// Embeddings [N, 32, 1, 1].
    nn::Var forward(const nn::Var& images, const nn::Var& context_lightness, const std::vector<int>& context_sizes,
                    const std::vector<int>& portrait_counts) const {
        return out_(trunk(images, context_lightness, context_sizes, portrait_counts));
    }

    /// Embeds every portrait against one shared context set, without recording a graph.
    std::vector<Embedding> encode(std::span<const RasterImage> portraits, std::span<const RasterImage> context) const {
        if (context.empty()) throw ValidationError("encode_design: production context is empty");
        if (portraits.empty()) return {};
        nn::NoGradGuard off;
        const nn::Var out = forward(nn::Var::constant(nn::stack_images(portraits)), nn::Var::constant(lightness_tensor(context)),
                                    {static_cast<int>(context.size())}, {static_cast<int>(portraits.size())});
        std::vector<Embedding> result(portraits.size(), Embedding(kEmbeddingDim));
        for (std::size_t i = 0; i < portraits.size(); ++i)
            for (int k = 0; k < kEmbeddingDim; ++k) result[i][k] = out.value()(static_cast<int>(i), k, 0, 0);
        return result;
    }

    nn::ModelWeights weights() const { return nn::export_weights(ps_); }
    void load(const nn::ModelWeights& w) const { nn::import_weights(ps_, w); }

private:
    void check(const nn::Var& images, const nn::Var& context, const std::vector<int>& context_sizes,
               const std::vector<int>& portrait_counts) const {
        const nn::Shape is = images.shape(), cs = context.shape();
        if (is.c != 3 || is.h != cfg_.image_size || is.w != cfg_.image_size)
            throw ShapeError("encoder: portraits must be [N,3," + std::to_string(cfg_.image_size) + "," + std::to_string(cfg_.image_size) +
                             "], got " + is.str());
        if (cs.c != 1 || cs.h != is.h || cs.w != is.w) throw ShapeError("encoder: context must be lightness planes of portrait size");
        if (context_sizes.size() != portrait_counts.size() || context_sizes.empty())
            throw ShapeError("encoder: one context run per portrait run required");
        for (int k : context_sizes)
            if (k < 1) throw ValidationError("encode_design: production context is empty");
        if (std::accumulate(portrait_counts.begin(), portrait_counts.end(), 0) != is.n)
            throw ShapeError("encoder: portrait counts do not cover the batch");
    }

    EncoderConfig cfg_;
    nn::ParameterSet ps_;
    nn::Conv2d stem_;
    std::vector<detail::ResidualDown> blocks_;
    std::vector<nn::Conv2d> style_;
    nn::Linear style_head_, hidden_, out_;
    int content_channels_ = 0;
};

/// Single-portrait form.
inline Embedding encode_design(const StyleEncoder& encoder, const RasterImage& portrait, std::span<const RasterImage> context) {
    return encoder.encode(std::span<const RasterImage>(&portrait, 1), context).front();
}

}  // namespace redraw::style
