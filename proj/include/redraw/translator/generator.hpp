#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "redraw/nn/layers.hpp"
#include "redraw/nn/weights_io.hpp"
#include "redraw/styleenc/encoder.hpp"

namespace redraw::translate {

struct GeneratorConfig {
    int image_size = 32;
    int base_width = 16;
    int down_blocks = 3;
    int res_blocks = 2;
};

/// A batch of style sets laid out back to back: run i holds sizes[i] images.
struct StyleBatch {
    nn::Tensor images;
    std::vector<int> sizes;
};

inline StyleBatch make_style_batch(const std::vector<std::vector<RasterImage>>& sets) {
    std::vector<RasterImage> flat;
    std::vector<int> sizes;
    for (const auto& s : sets) {
        if (s.empty()) throw ValidationError("generate: style set is empty");
        flat.insert(flat.end(), s.begin(), s.end());
        sizes.push_back(static_cast<int>(s.size()));
    }
    if (flat.empty()) throw ValidationError("generate: no style sets given");
    return {nn::stack_images(flat), std::move(sizes)};
}

namespace detail {

struct ResBlock {
    nn::Conv2d a, b;

    ResBlock() = default;
    ResBlock(nn::ParameterSet& ps, const std::string& name, int width, std::mt19937_64& rng)
        : a(ps, name + ".a", width, width, 3, 1, rng), b(ps, name + ".b", width, width, 3, 1, rng) {}

    nn::Var operator()(const nn::Var& x) const { return nn::add(x, b(nn::relu(a(x)))); }
};

}  // namespace detail

/// Encoder-decoder redrawer. The content path downsamples with strided convolutions, passes
/// residual blocks and is upsampled again, each upsampling block normalised by AdaIN statistics
/// predicted from the style set and joined additively to the matching content features. The
/// style path is a frozen design-encoder trunk applied to the style set with that set as its
/// own production context, mean-pooled over the set.
class Generator {
public:
    Generator(GeneratorConfig cfg, std::shared_ptr<const style::StyleEncoder> encoder, std::uint64_t seed = 0)
        : cfg_(cfg), encoder_(std::move(encoder)) {
        if (!encoder_) throw ValidationError("generator: style encoder required");
        if (cfg.down_blocks < 1 || cfg.res_blocks < 0 || cfg.base_width < 1)
            throw ValidationError("generator: down_blocks >= 1, res_blocks >= 0 and base_width >= 1 required");
        if (cfg.image_size % (1 << cfg.down_blocks) != 0)
            throw ValidationError("generator: image size must be a multiple of " + std::to_string(1 << cfg.down_blocks));
        if (encoder_->config().image_size != cfg.image_size)
            throw ValidationError("generator: style encoder expects " + std::to_string(encoder_->config().image_size) + "px images, generator " +
                                  std::to_string(cfg.image_size) + "px");
        std::mt19937_64 rng(seed);
        widths_.push_back(cfg.base_width);
        stem_ = nn::Conv2d(ps_, "gen.stem", 3, cfg.base_width, 3, 1, rng);
        for (int i = 0; i < cfg.down_blocks; ++i) {
            const int out = style::detail::block_width(cfg.base_width, i + 1);
            down_.emplace_back(ps_, "gen.down" + std::to_string(i), widths_.back(), out, 3, 2, rng);
            widths_.push_back(out);
        }
        for (int i = 0; i < cfg.res_blocks; ++i) res_.emplace_back(ps_, "gen.res" + std::to_string(i), widths_.back(), rng);
        int c = widths_.back(), adain_params = 0;
        for (int i = 0; i < cfg.down_blocks; ++i) {
            const int out = widths_[widths_.size() - 2 - i];
            up_.emplace_back(ps_, "gen.up" + std::to_string(i), c, out, 3, 1, rng);
            adain_params += 2 * out;
            c = out;
        }
        style_head_ = nn::Linear(ps_, "gen.style", encoder_->trunk_width(), adain_params, rng);
        nn::Tensor& bias = style_head_.conv.bias.mutable_value();
        int at = 0;
        for (int i = 0; i < cfg.down_blocks; ++i) {
            const int w = widths_[widths_.size() - 2 - i];
            for (int k = at + w; k < at + 2 * w; ++k) bias(0, k, 0, 0) = style::detail::kUnitSoftplus;
            at += 2 * w;
        }
        out_ = nn::Conv2d(ps_, "gen.out", c, 3, 3, 1, rng);
    }

    const GeneratorConfig& config() const { return cfg_; }
    nn::ParameterSet& params() { return ps_; }
    const nn::ParameterSet& params() const { return ps_; }
    const style::StyleEncoder& encoder() const { return *encoder_; }

    /// Pooled style features [B, hidden, 1, 1], computed without a graph since the encoder is frozen.
    nn::Tensor style_code(const StyleBatch& styles) const {
        nn::NoGradGuard off;
        const nn::Var imgs = nn::Var::constant(styles.images);
        const nn::Var ctx = nn::Var::constant(style::lightness_tensor_from(styles.images));
        const nn::Var feats = encoder_->trunk(imgs, ctx, styles.sizes, styles.sizes);
        return nn::segment_mean(feats, styles.sizes).value();
    }

    /// Redrawings [B, 3, H, W] in [0, 1]; content row i is styled by style run i.
    nn::Var forward(const nn::Var& content, const nn::Tensor& code) const {
        const nn::Shape s = content.shape();
        if (s.c != 3 || s.h != cfg_.image_size || s.w != cfg_.image_size)
            throw ShapeError("generator: content must be [N,3," + std::to_string(cfg_.image_size) + "," + std::to_string(cfg_.image_size) +
                             "], got " + s.str());
        if (code.shape().n != s.n) throw ShapeError("generator: one style run per content image required");

        std::vector<nn::Var> skips{nn::relu(stem_(content))};
        for (const auto& d : down_) skips.push_back(nn::relu(d(skips.back())));
        nn::Var h = skips.back();
        for (const auto& r : res_) h = r(h);

        const nn::Var stats = style_head_(nn::Var::constant(code));
        int at = 0;
        for (std::size_t i = 0; i < up_.size(); ++i) {
            const int w = up_[i].weight.shape().n;
            const nn::Var mu = nn::slice_channels(stats, at, w);
            const nn::Var sd = nn::softplus(nn::slice_channels(stats, at + w, w));
            at += 2 * w;
            h = nn::relu(nn::adain(up_[i](nn::upsample2x(h)), mu, sd));
            h = nn::add(h, skips[skips.size() - 2 - i]);
        }
        return nn::sigmoid(out_(h));
    }

    nn::Var forward(const nn::Var& content, const StyleBatch& styles) const { return forward(content, style_code(styles)); }

    /// Inference on one content image; deterministic and independent of style-set order.
    RasterImage generate(const RasterImage& content, std::span<const RasterImage> style_set) const {
        if (style_set.empty()) throw ValidationError("generate: style set is empty");
        nn::NoGradGuard off;
        const StyleBatch sb{nn::stack_images(style_set), {static_cast<int>(style_set.size())}};
        return nn::tensor_image(forward(nn::Var::constant(nn::image_tensor(content)), sb).value());
    }

    nn::ModelWeights weights() const { return nn::export_weights(ps_); }
    void load(const nn::ModelWeights& w) const { nn::import_weights(ps_, w); }

private:
    GeneratorConfig cfg_;
    std::shared_ptr<const style::StyleEncoder> encoder_;
    nn::ParameterSet ps_;
    nn::Conv2d stem_, out_;
    std::vector<nn::Conv2d> down_, up_;
    std::vector<detail::ResBlock> res_;
    nn::Linear style_head_;
    std::vector<int> widths_;
};

}  // namespace redraw::translate
