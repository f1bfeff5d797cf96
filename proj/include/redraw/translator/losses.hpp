#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "redraw/color.hpp"
#include "redraw/fourier.hpp"
#include "redraw/nn/ops.hpp"
#include "redraw/translator/discriminator.hpp"

namespace redraw::translate {

inline constexpr double kR1Gamma = 10.0;

// ---------------------------------------------------------------------------------------------
// Scalar forms on a single sample's score maps.

/// Real-score maps [1, K, h, w] of one image.
struct ClassScores {
    nn::Tensor maps;

    int classes() const { return maps.shape().c; }
    double mean_score(int class_id) const {
        check(class_id);
        const nn::Shape s = maps.shape();
        double sum = 0.0;
        for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x) sum += maps(0, class_id, y, x);
        return sum / static_cast<double>(s.plane());
    }
    void check(int class_id) const {
        if (maps.shape().n != 1) throw ShapeError("class scores hold one sample");
        if (class_id < 0 || class_id >= classes())
            throw ValidationError("unknown design class " + std::to_string(class_id) + " (have " + std::to_string(classes()) + ")");
        for (double v : maps.values())
            if (!std::isfinite(v)) throw InvalidImage("class scores must be finite");
    }
};

namespace detail {

template <typename F>
double map_mean(const ClassScores& s, int class_id, F f) {
    s.check(class_id);
    const nn::Shape sh = s.maps.shape();
    double sum = 0.0;
    for (int y = 0; y < sh.h; ++y)
        for (int x = 0; x < sh.w; ++x) sum += f(s.maps(0, class_id, y, x));
    return sum / static_cast<double>(sh.plane());
}

}  // namespace detail

/// L_P: mean of max(0, 1 - score) over the class map plus gamma times the squared input-gradient norm.
inline double hinge_positive(const ClassScores& scores, int class_id, double input_gradient_sq_norm, double gamma = kR1Gamma) {
    if (!(input_gradient_sq_norm >= 0.0)) throw ValidationError("hinge_positive: gradient norm must be non-negative");
    return detail::map_mean(scores, class_id, [](double v) { return std::max(0.0, 1.0 - v); }) + gamma * input_gradient_sq_norm;
}

/// L_N: mean of max(0, 1 + score) over the class map.
inline double hinge_negative(const ClassScores& scores, int class_id) {
    return detail::map_mean(scores, class_id, [](double v) { return std::max(0.0, 1.0 + v); });
}

// ---------------------------------------------------------------------------------------------
// Batched, differentiable forms. Class ids are per sample.

inline nn::Var class_maps(const nn::Var& scores, const std::vector<int>& class_ids) {
    const int k = scores.shape().c;
    if (static_cast<int>(class_ids.size()) != scores.shape().n) throw ShapeError("one class id per sample required");
    for (int c : class_ids)
        if (c < 0 || c >= k) throw ValidationError("unknown design class " + std::to_string(c) + " (have " + std::to_string(k) + ")");
    return nn::gather_channels(scores, class_ids);
}

inline nn::Var hinge_negative(const nn::Var& scores, const std::vector<int>& class_ids) {
    return nn::mean(nn::relu(nn::add_scalar(class_maps(scores, class_ids), 1.0)));
}

/// Hinge part of L_P alone.
inline nn::Var hinge_positive_term(const nn::Var& scores, const std::vector<int>& class_ids) {
    return nn::mean(nn::relu(nn::add_scalar(nn::scale(class_maps(scores, class_ids), -1.0), 1.0)));
}

/// Batch mean of ||d D(x)_S / dx||^2, D(x)_S being the spatial mean of the class map. The
/// gradient graph is kept so the penalty can itself be differentiated.
inline nn::Var r1_penalty(const nn::Var& scores, const std::vector<int>& class_ids, const nn::Var& images) {
    const nn::Var total = nn::sum(nn::spatial_mean(class_maps(scores, class_ids)));
    const nn::Var g = nn::grad(total, {images}, true).front();
    return nn::scale(nn::sum(nn::mul(g, g)), 1.0 / static_cast<double>(images.shape().n));
}

/// L_P on real images under the given coverage.
inline nn::Var positive_loss(const Discriminator& d, const nn::Tensor& images, const nn::Tensor& coverage, const std::vector<int>& class_ids,
                             double gamma = kR1Gamma) {
    nn::GradModeGuard on(true);
    const nn::Var x = nn::Var::leaf(images, true);
    const nn::Var scores = d(x, coverage).scores;
    return nn::add(hinge_positive_term(scores, class_ids), nn::scale(r1_penalty(scores, class_ids, x), gamma));
}

inline nn::Var negative_loss(const Discriminator& d, const nn::Tensor& images, const nn::Tensor& coverage, const std::vector<int>& class_ids) {
    return hinge_negative(d(nn::Var::constant(images), coverage).scores, class_ids);
}

// ---------------------------------------------------------------------------------------------
// Discriminator objectives.

enum class Role { quality, context };

inline std::string to_string(Role r) { return r == Role::quality ? "quality" : "context"; }

/// Quality: L_P(h, H) + (L_N(l, H) + L_N(t, H)) / 2.
inline nn::Var quality_objective(const nn::Var& lp_h, const nn::Var& ln_l, const nn::Var& ln_t) {
    return nn::add(lp_h, nn::scale(nn::add(ln_l, ln_t), 0.5));
}

/// Context: L_P(h, H) + L_N(t, H) + L_P(l, L) + L_N(l_hat, L).
inline nn::Var context_objective(const nn::Var& lp_h, const nn::Var& ln_t, const nn::Var& lp_l, const nn::Var& ln_lhat) {
    return nn::add(nn::add(lp_h, ln_t), nn::add(lp_l, ln_lhat));
}

struct Classes {
    std::vector<int> low;   // class of design L per sample
    std::vector<int> high;  // class of design H per sample

    void check() const {
        if (low.size() != high.size()) throw ShapeError("class lists differ in length");
        for (std::size_t i = 0; i < low.size(); ++i)
            if (low[i] == high[i]) throw ValidationError("low and high design classes must differ (sample " + std::to_string(i) + ")");
    }
};

/// Generated images as seen by the discriminators (no generator graph).
struct GeneratedImages {
    nn::Tensor t, l_hat, h_hat;
};

inline nn::Var discriminator_objective(Role role, const Discriminator& d, const nn::Tensor& coverage, const nn::Tensor& l, const nn::Tensor& h,
                                       const GeneratedImages& gen, const Classes& cls, double gamma = kR1Gamma) {
    cls.check();
    const nn::Var lp_h = positive_loss(d, h, coverage, cls.high, gamma);
    const nn::Var ln_t = negative_loss(d, gen.t, coverage, cls.high);
    if (role == Role::quality) return quality_objective(lp_h, negative_loss(d, l, coverage, cls.high), ln_t);
    return context_objective(lp_h, ln_t, positive_loss(d, l, coverage, cls.low, gamma), negative_loss(d, gen.l_hat, coverage, cls.low));
}

// ---------------------------------------------------------------------------------------------
// Generator losses.

/// L_D: mean|1 - D(x)_S| + mean|D^F(x) - D^F(s)|. With `hinge` the first term becomes
/// mean max(0, 1 - D(x)_S).
inline nn::Var adversarial_generator_loss(const Discriminator& d, const nn::Tensor& coverage, const nn::Var& x, const std::vector<int>& class_ids,
                                          const nn::Tensor& reference, bool hinge = false) {
    if (reference.shape() != x.shape()) throw ShapeError("adversarial loss: reference " + reference.shape().str() + " vs " + x.shape().str());
    const DiscriminatorOutput out = d(x, coverage);
    const nn::Var ref_features = d(nn::Var::constant(reference), coverage).features;
    const nn::Var gap = nn::add_scalar(nn::scale(class_maps(out.scores, class_ids), -1.0), 1.0);
    const nn::Var first = nn::mean(hinge ? nn::relu(gap) : nn::abs(gap));
    const nn::Var second = nn::mean(nn::abs(nn::sub(out.features, ref_features)));
    return nn::add(first, second);
}

/// Differentiable lightness [N, 1, H, W]: the first lab channel of an RGB batch.
inline nn::Var lightness(const nn::Var& rgb) {
    if (rgb.shape().c != 3) throw ShapeError("lightness: expected 3 channels, got " + rgb.shape().str());
    const auto& m = color::rgb_to_lms_matrix();
    nn::Tensor to_lms(nn::Shape{3, 3, 1, 1});
    for (int o = 0; o < 3; ++o)
        for (int i = 0; i < 3; ++i) to_lms(o, i, 0, 0) = m[o][i];
    const nn::Tensor sum3(nn::Shape{1, 3, 1, 1}, 1.0 / (std::sqrt(3.0) * std::numbers::ln10));
    const nn::Var lms = nn::clamp_min(nn::conv2d(rgb, nn::Var::constant(to_lms), nn::ConvGeometry{1, 0}), color::kLmsFloor);
    return nn::conv2d(nn::log(lms), nn::Var::constant(sum3), nn::ConvGeometry{1, 0});
}

struct Triplet {
    nn::Var t, l_hat, h_hat;
};

/// L_R: mean|h - h_hat| + mean|F(L(l)) - F(L(t))| + mean|F(L(l)) - F(L(l_hat))|.
inline nn::Var reconstruction_loss(const Triplet& g, const nn::Tensor& l, const nn::Tensor& h, double threshold = fourier::kDefaultThreshold) {
    const nn::Shape s = l.shape();
    if (h.shape() != s || g.t.shape() != s || g.l_hat.shape() != s || g.h_hat.shape() != s)
        throw ShapeError("reconstruction_loss: all images must share shape " + s.str());
    const nn::Tensor fl = nn::lowpass(lightness(nn::Var::constant(l)), threshold).value();
    const nn::Var target = nn::Var::constant(fl);
    const nn::Var rec = nn::mean(nn::abs(nn::sub(nn::Var::constant(h), g.h_hat)));
    const nn::Var keep_t = nn::mean(nn::abs(nn::sub(target, nn::lowpass(lightness(g.t), threshold))));
    const nn::Var keep_l = nn::mean(nn::abs(nn::sub(target, nn::lowpass(lightness(g.l_hat), threshold))));
    return nn::add(rec, nn::add(keep_t, keep_l));
}

struct GeneratorTerms {
    nn::Var reconstruction;  // L_R
    nn::Var quality_t;       // L_Q(t, H)
    nn::Var quality_lhat;    // L_Q(l_hat, L)
    nn::Var context_t;       // L_C(t, L)
    nn::Var context_hhat;    // L_C(h_hat, H)
};

inline nn::Var generator_objective(const GeneratorTerms& g) {
    return nn::add(nn::add(g.reconstruction, nn::add(g.quality_t, g.quality_lhat)), nn::add(g.context_t, g.context_hhat));
}

struct DiscriminatorPair {
    const Discriminator& quality;
    const Discriminator& context;
    nn::Tensor quality_coverage;
    nn::Tensor context_coverage;
};

inline GeneratorTerms generator_terms(const Triplet& g, const nn::Tensor& l, const nn::Tensor& h, const Classes& cls, const DiscriminatorPair& d,
                                      double threshold = fourier::kDefaultThreshold, bool hinge = false) {
    cls.check();
    return {reconstruction_loss(g, l, h, threshold),
            adversarial_generator_loss(d.quality, d.quality_coverage, g.t, cls.high, h, hinge),
            adversarial_generator_loss(d.quality, d.quality_coverage, g.l_hat, cls.low, l, hinge),
            adversarial_generator_loss(d.context, d.context_coverage, g.t, cls.low, l, hinge),
            adversarial_generator_loss(d.context, d.context_coverage, g.h_hat, cls.high, h, hinge)};
}

}  // namespace redraw::translate
