#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "redraw/nn/layers.hpp"
#include "redraw/nn/weights_io.hpp"
#include "redraw/styleenc/encoder.hpp"
#include "redraw/translator/masks.hpp"

namespace redraw::translate {

inline constexpr double kLeakySlope = 0.2;

struct DiscriminatorConfig {
    int image_size = 32;
    int base_width = 32;
    int blocks = 4;
    int classes = 2;
};

struct DiscriminatorOutput {
    nn::Var scores;    // [N, K, h, w], one real-score map per design class
    nn::Var features;  // [N, C, h, w], output of the last downsampling block
};

/// Coverage tensor [N, 1, H, W] holding `mask` for every sample.
inline nn::Tensor mask_tensor(const RegionMask& mask, int n) {
    nn::Tensor t(nn::Shape{n, 1, mask.height(), mask.width()});
    const auto v = mask.plane().values();
    for (int i = 0; i < n; ++i) std::copy(v.begin(), v.end(), t.data() + t.offset(i, 0, 0, 0));
    return t;
}

/// Multi-class patch discriminator built from partial convolutions. The role mask enters
/// as the initial coverage, so pixels outside it never reach the scores.
class Discriminator {
public:
    Discriminator(DiscriminatorConfig cfg, const std::string& name, std::uint64_t seed = 0) : cfg_(cfg) {
        if (cfg.blocks < 1 || cfg.base_width < 1) throw ValidationError("discriminator: blocks and width must be positive");
        if (cfg.classes < 2) throw DatasetError("discriminator: at least 2 design classes required, got " + std::to_string(cfg.classes));
        if (cfg.image_size % (1 << cfg.blocks) != 0)
            throw ValidationError("discriminator: image size must be a multiple of " + std::to_string(1 << cfg.blocks));
        std::mt19937_64 rng(seed);
        int c = 3;
        for (int i = 0; i < cfg.blocks; ++i) {
            const int out = style::detail::block_width(cfg.base_width, i);
            blocks_.emplace_back(ps_, name + ".block" + std::to_string(i), c, out, 3, 2, rng);
            c = out;
        }
        head_ = nn::PartialConv2d(ps_, name + ".classes", c, cfg.classes, 1, 1, rng);
    }

    const DiscriminatorConfig& config() const { return cfg_; }
    int classes() const { return cfg_.classes; }
    nn::ParameterSet& params() { return ps_; }
    const nn::ParameterSet& params() const { return ps_; }

    DiscriminatorOutput operator()(const nn::Var& images, const nn::Tensor& coverage) const {
        const nn::Shape s = images.shape();
        if (s.c != 3 || s.h != cfg_.image_size || s.w != cfg_.image_size)
            throw ShapeError("discriminator: images must be [N,3," + std::to_string(cfg_.image_size) + "," +
                             std::to_string(cfg_.image_size) + "], got " + s.str());
        nn::PartialConvState st{images, coverage};
        for (const auto& b : blocks_) {
            st = b(st);
            st.features = nn::leaky_relu(st.features, kLeakySlope);
        }
        const nn::Var features = st.features;
        return {head_(st).features, features};
    }

    DiscriminatorOutput operator()(const nn::Var& images, const RegionMask& mask) const {
        return (*this)(images, mask_tensor(mask, images.shape().n));
    }

    nn::ModelWeights weights() const { return nn::export_weights(ps_); }
    void load(const nn::ModelWeights& w) const { nn::import_weights(ps_, w); }

private:
    DiscriminatorConfig cfg_;
    nn::ParameterSet ps_;
    std::vector<nn::PartialConv2d> blocks_;
    nn::PartialConv2d head_;
};

}  // namespace redraw::translate
