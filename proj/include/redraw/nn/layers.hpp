#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "redraw/nn/ops.hpp"

namespace redraw::nn {

struct NamedParameter {
    std::string name;
    Var var;
};

/// Ordered, named collection of trainable leaves owned by one model.
class ParameterSet {
public:
    Var add(std::string name, Tensor init) {
        for (const auto& p : params_)
            if (p.name == name) throw ValidationError("duplicate parameter name '" + name + "'");
        Var v = Var::leaf(std::move(init), true);
        params_.push_back({std::move(name), v});
        return v;
    }

    const std::vector<NamedParameter>& entries() const { return params_; }

    std::vector<Var> vars() const {
        std::vector<Var> out;
        out.reserve(params_.size());
        for (const auto& p : params_) out.push_back(p.var);
        return out;
    }

    /// Freezing detaches the model from graph recording without touching its values.
    void set_trainable(bool on) const {
        for (const auto& p : params_) p.var.set_requires_grad(on);
    }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.var.value().size();
        return n;
    }

private:
    std::vector<NamedParameter> params_;
};

/// Fan-in scaled uniform initialisation (He-uniform bound sqrt(6 / fan_in)).
inline Tensor fan_in_uniform(Shape shape, int fan_in, std::mt19937_64& rng, double gain = 1.0) {
    const double bound = gain * std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(shape);
    for (double& v : t.values()) v = dist(rng);
    return t;
}

struct Conv2d {
    Var weight;
    Var bias;  // [1, out, 1, 1]; may be undefined
    ConvGeometry geo;

    Conv2d() = default;
    Conv2d(ParameterSet& ps, const std::string& name, int in, int out, int kernel, int stride, std::mt19937_64& rng,
           bool with_bias = true, double gain = 1.0)
        : geo{stride, kernel / 2} {
        weight = ps.add(name + ".weight", fan_in_uniform(Shape{out, in, kernel, kernel}, in * kernel * kernel, rng, gain));
        if (with_bias) bias = ps.add(name + ".bias", Tensor(Shape{1, out, 1, 1}));
    }

    Var operator()(const Var& x) const {
        Var y = conv2d(x, weight, geo);
        if (bias.defined()) y = add(y, broadcast_to(bias, y.shape()));
        return y;
    }
};

/// Fully connected layer on [N, in, 1, 1] features, stored as a 1x1 convolution.
struct Linear {
    Conv2d conv;

    Linear() = default;
    Linear(ParameterSet& ps, const std::string& name, int in, int out, std::mt19937_64& rng, double gain = 1.0)
        : conv(ps, name, in, out, 1, 1, rng, true, gain) {}

    Var operator()(const Var& x) const {
        const Shape s = x.shape();
        const Var flat = (s.h == 1 && s.w == 1) ? x : reshape(x, Shape{s.n, s.c * s.h * s.w, 1, 1});
        return conv(flat);
    }
};

inline constexpr double kNormEpsilon = 1e-5;

/// Per-sample, per-channel normalisation over the spatial extent (population variance).
inline Var instance_norm(const Var& x, double eps = kNormEpsilon) {
    const Shape s = x.shape();
    const Var centered = sub(x, broadcast_to(spatial_mean(x), s));
    const Var var = spatial_mean(mul(centered, centered));
    return mul(centered, broadcast_to(powv(add_scalar(var, eps), -0.5), s));
}

/// Adaptive instance normalisation; style tensors are [N, C, 1, 1].
inline Var adain(const Var& content, const Var& style_mean, const Var& style_std, double eps = kNormEpsilon) {
    const Shape s = content.shape();
    const Shape stat{s.n, s.c, 1, 1};
    if (style_mean.shape() != stat || style_std.shape() != stat)
        throw ShapeError("adain: style statistics must be " + stat.str());
    return add(mul(instance_norm(content, eps), broadcast_to(style_std, s)), broadcast_to(style_mean, s));
}

/// Plain-vector form of adain for a single [1, C, H, W] feature map.
inline Tensor adain(const Tensor& content, const std::vector<double>& style_mean, const std::vector<double>& style_std,
                    double eps = kNormEpsilon) {
    const Shape s = content.shape();
    if (static_cast<int>(style_mean.size()) != s.c || static_cast<int>(style_std.size()) != s.c)
        throw ShapeError("adain: style vectors must match the channel count");
    Tensor mu(Shape{s.n, s.c, 1, 1}), sd(Shape{s.n, s.c, 1, 1});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            if (style_std[c] < 0.0) throw ValidationError("adain: style std must be non-negative");
            mu(n, c, 0, 0) = style_mean[c];
            sd(n, c, 0, 0) = style_std[c];
        }
    NoGradGuard off;
    return adain(Var::constant(content), Var::constant(mu), Var::constant(sd), eps).value();
}

/// Features together with their single-channel coverage mask [N, 1, H, W].
struct PartialConvState {
    Var features;
    Tensor coverage;
};

namespace detail {

inline Tensor repeat_channels(const Tensor& mask, int channels) {
    const Shape s = mask.shape();
    Tensor out(Shape{s.n, channels, s.h, s.w});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < channels; ++c)
            std::copy_n(mask.data() + mask.offset(n, 0, 0, 0), s.plane(), out.data() + out.offset(n, c, 0, 0));
    return out;
}

}  // namespace detail

/// Mask-renormalised convolution. Padding positions count as covered, so a full mask
/// reproduces an ordinary zero-padded convolution exactly.
struct PartialConv2d {
    Var weight;
    Var bias;
    ConvGeometry geo;

    PartialConv2d() = default;
    PartialConv2d(ParameterSet& ps, const std::string& name, int in, int out, int kernel, int stride, std::mt19937_64& rng,
                  double gain = 1.0)
        : geo{stride, kernel / 2} {
        if (kernel % 2 == 0) throw ShapeError("partial conv kernel size must be odd");
        weight = ps.add(name + ".weight", fan_in_uniform(Shape{out, in, kernel, kernel}, in * kernel * kernel, rng, gain));
        bias = ps.add(name + ".bias", Tensor(Shape{1, out, 1, 1}));
    }

    PartialConvState operator()(const PartialConvState& in) const { return partial_conv2d(in, weight, bias, geo); }

    static PartialConvState partial_conv2d(const PartialConvState& in, const Var& weight, const Var& bias, ConvGeometry geo) {
        const Shape fs = in.features.shape(), ms = in.coverage.shape();
        if (ms.n != fs.n || ms.c != 1 || ms.h != fs.h || ms.w != fs.w)
            throw ShapeError("partial_conv2d: coverage " + ms.str() + " does not match features " + fs.str());
        const Shape ws = weight.shape();
        if (ws.c != fs.c) throw ShapeError("partial_conv2d: kernel expects " + std::to_string(ws.c) + " input channels");
        if (ws.h % 2 == 0 || ws.h != ws.w) throw ShapeError("partial_conv2d: kernel must be square with odd size");
        const int k = ws.h;
        const double area = static_cast<double>(k) * k;

        // Mask sums over each window, with padding counted as covered.
        Tensor padded_mask(Shape{ms.n, 1, ms.h + 2 * geo.pad, ms.w + 2 * geo.pad}, 1.0);
        for (int n = 0; n < ms.n; ++n)
            for (int y = 0; y < ms.h; ++y)
                for (int x = 0; x < ms.w; ++x) padded_mask(n, 0, y + geo.pad, x + geo.pad) = in.coverage(n, 0, y, x);
        const Tensor support = detail::conv_forward(padded_mask, Tensor(Shape{1, 1, k, k}, 1.0), ConvGeometry{geo.stride, 0});

        const Shape os = support.shape();
        Tensor ratio(os), coverage(os);
        for (std::size_t i = 0; i < support.size(); ++i) {
            const bool covered = support[i] > 1e-12;
            ratio[i] = covered ? area / support[i] : 0.0;
            coverage[i] = covered ? 1.0 : 0.0;
        }

        const Var masked = mul_const(in.features, detail::repeat_channels(in.coverage, fs.c));
        Var y = conv2d(masked, weight, geo);
        const Shape ys = y.shape();
        y = mul_const(y, detail::repeat_channels(ratio, ys.c));
        if (bias.defined()) y = add(y, broadcast_to(bias, ys));
        y = mul_const(y, detail::repeat_channels(coverage, ys.c));
        return {y, std::move(coverage)};
    }
};

}  // namespace redraw::nn
