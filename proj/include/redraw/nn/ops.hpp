#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "redraw/fourier.hpp"
#include "redraw/nn/autograd.hpp"

// Differentiable operations on NCHW tensors. Every backward rule is written with ops from
// this file, so gradients can be differentiated again (needed for gradient penalties).
// Rules that multiply by a locally constant factor (relu, abs, clamp) have zero second
// derivative almost everywhere, which is exact away from their kinks.

namespace redraw::nn {

namespace detail {

inline void require_same(const Var& a, const Var& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

template <typename F>
Tensor map(const Tensor& a, F f) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// Elementwise arithmetic

inline Var add(const Var& a, const Var& b) {
    detail::require_same(a, b, "add");
    return make_op(detail::zip(a.value(), b.value(), [](double x, double y) { return x + y; }), {a, b},
                   [](const Var& g, const std::vector<bool>&) { return std::vector<Var>{g, g}; });
}

inline Var scale(const Var& a, double k);

inline Var sub(const Var& a, const Var& b) {
    detail::require_same(a, b, "sub");
    return make_op(detail::zip(a.value(), b.value(), [](double x, double y) { return x - y; }), {a, b},
                   [](const Var& g, const std::vector<bool>& need) {
                       return std::vector<Var>{g, need[1] ? scale(g, -1.0) : Var()};
                   });
}

inline Var mul(const Var& a, const Var& b) {
    detail::require_same(a, b, "mul");
    return make_op(detail::zip(a.value(), b.value(), [](double x, double y) { return x * y; }), {a, b},
                   [a, b](const Var& g, const std::vector<bool>& need) {
                       return std::vector<Var>{need[0] ? mul(g, b) : Var(), need[1] ? mul(g, a) : Var()};
                   });
}

inline Var scale(const Var& a, double k) {
    return make_op(detail::map(a.value(), [k](double x) { return k * x; }), {a},
                   [k](const Var& g, const std::vector<bool>&) { return std::vector<Var>{scale(g, k)}; });
}

inline Var add_scalar(const Var& a, double k) {
    return make_op(detail::map(a.value(), [k](double x) { return x + k; }), {a},
                   [](const Var& g, const std::vector<bool>&) { return std::vector<Var>{g}; });
}

/// Product with a tensor that is not differentiated.
inline Var mul_const(const Var& a, std::shared_ptr<const Tensor> c) {
    if (c->shape() != a.shape()) throw ShapeError("mul_const: shape mismatch " + a.shape().str() + " vs " + c->shape().str());
    return make_op(detail::zip(a.value(), *c, [](double x, double y) { return x * y; }), {a},
                   [c](const Var& g, const std::vector<bool>&) { return std::vector<Var>{mul_const(g, c)}; });
}

inline Var mul_const(const Var& a, Tensor c) { return mul_const(a, std::make_shared<const Tensor>(std::move(c))); }

inline Var powv(const Var& a, double p) {
    return make_op(detail::map(a.value(), [p](double x) { return std::pow(x, p); }), {a},
                   [a, p](const Var& g, const std::vector<bool>&) {
                       return std::vector<Var>{mul(g, scale(powv(a, p - 1.0), p))};
                   });
}

inline Var exp(const Var& a) {
    return make_op(detail::map(a.value(), [](double x) { return std::exp(x); }), {a},
                   [a](const Var& g, const std::vector<bool>&) { return std::vector<Var>{mul(g, exp(a))}; });
}

inline Var log(const Var& a) {
    return make_op(detail::map(a.value(), [](double x) { return std::log(x); }), {a},
                   [a](const Var& g, const std::vector<bool>&) { return std::vector<Var>{mul(g, powv(a, -1.0))}; });
}

inline double sigmoid_scalar(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline Var sigmoid(const Var& a) {
    return make_op(detail::map(a.value(), sigmoid_scalar), {a}, [a](const Var& g, const std::vector<bool>&) {
        const Var s = sigmoid(a);
        return std::vector<Var>{mul(g, mul(s, add_scalar(scale(s, -1.0), 1.0)))};
    });
}

inline Var softplus(const Var& a) {
    return make_op(detail::map(a.value(), [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }),
                   {a}, [a](const Var& g, const std::vector<bool>&) { return std::vector<Var>{mul(g, sigmoid(a))}; });
}

inline Var relu(const Var& a) {
    return mul_const(a, detail::map(a.value(), [](double x) { return x > 0.0 ? 1.0 : 0.0; }));
}

inline Var leaky_relu(const Var& a, double slope) {
    return mul_const(a, detail::map(a.value(), [slope](double x) { return x > 0.0 ? 1.0 : slope; }));
}

inline Var abs(const Var& a) {
    return mul_const(a, detail::map(a.value(), [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }));
}

/// max(a, lo); the gradient is passed only where a > lo.
inline Var clamp_min(const Var& a, double lo) {
    auto pass = std::make_shared<const Tensor>(detail::map(a.value(), [lo](double x) { return x > lo ? 1.0 : 0.0; }));
    return make_op(detail::map(a.value(), [lo](double x) { return std::max(x, lo); }), {a},
                   [pass](const Var& g, const std::vector<bool>&) { return std::vector<Var>{mul_const(g, pass)}; });
}

// ---------------------------------------------------------------------------------------------
// Broadcasting and reductions

inline Var reduce_to(const Var& a, Shape target);

/// Repeats `a` along every axis where its extent is 1 and the target's is not.
inline Var broadcast_to(const Var& a, Shape target) {
    const Shape s = a.shape();
    if (s == target) return a;
    auto ok = [](int from, int to) { return from == to || from == 1; };
    if (!ok(s.n, target.n) || !ok(s.c, target.c) || !ok(s.h, target.h) || !ok(s.w, target.w))
        throw ShapeError("broadcast_to: " + s.str() + " -> " + target.str());
    Tensor out(target);
    const Tensor& v = a.value();
    for (int n = 0; n < target.n; ++n)
        for (int c = 0; c < target.c; ++c)
            for (int h = 0; h < target.h; ++h)
                for (int w = 0; w < target.w; ++w)
                    out(n, c, h, w) = v(s.n == 1 ? 0 : n, s.c == 1 ? 0 : c, s.h == 1 ? 0 : h, s.w == 1 ? 0 : w);
    return make_op(std::move(out), {a},
                   [s](const Var& g, const std::vector<bool>&) { return std::vector<Var>{reduce_to(g, s)}; });
}

/// Sums over every axis whose target extent is 1.
inline Var reduce_to(const Var& a, Shape target) {
    const Shape s = a.shape();
    if (s == target) return a;
    auto ok = [](int from, int to) { return from == to || to == 1; };
    if (!ok(s.n, target.n) || !ok(s.c, target.c) || !ok(s.h, target.h) || !ok(s.w, target.w))
        throw ShapeError("reduce_to: " + s.str() + " -> " + target.str());
    Tensor out(target);
    const Tensor& v = a.value();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int h = 0; h < s.h; ++h)
                for (int w = 0; w < s.w; ++w)
                    out(target.n == 1 ? 0 : n, target.c == 1 ? 0 : c, target.h == 1 ? 0 : h, target.w == 1 ? 0 : w) +=
                        v(n, c, h, w);
    return make_op(std::move(out), {a},
                   [s](const Var& g, const std::vector<bool>&) { return std::vector<Var>{broadcast_to(g, s)}; });
}

inline Var sum(const Var& a) { return reduce_to(a, Shape{}); }

inline Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

/// Per (n, c) spatial mean, shape [N, C, 1, 1].
inline Var spatial_mean(const Var& a) {
    const Shape s = a.shape();
    return scale(reduce_to(a, Shape{s.n, s.c, 1, 1}), 1.0 / static_cast<double>(s.plane()));
}

inline Var reshape(const Var& a, Shape target) {
    if (a.shape().numel() != target.numel()) throw ShapeError("reshape: " + a.shape().str() + " -> " + target.str());
    const Shape s = a.shape();
    return make_op(Tensor(target, std::vector<double>(a.value().values().begin(), a.value().values().end())), {a},
                   [s](const Var& g, const std::vector<bool>&) { return std::vector<Var>{reshape(g, s)}; });
}

// ---------------------------------------------------------------------------------------------
// Batch and channel indexing

inline Var pad_batch(const Var& a, int start, int total);

inline Var slice_batch(const Var& a, int start, int count) {
    const Shape s = a.shape();
    if (start < 0 || count <= 0 || start + count > s.n) throw ShapeError("slice_batch: range out of bounds");
    const std::size_t per = s.numel() / s.n;
    Tensor out(Shape{count, s.c, s.h, s.w},
               std::vector<double>(a.value().data() + start * per, a.value().data() + (start + count) * per));
    return make_op(std::move(out), {a}, [start, total = s.n](const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{pad_batch(g, start, total)};
    });
}

/// Places `a` at batch offset `start` of a zero tensor with `total` samples.
inline Var pad_batch(const Var& a, int start, int total) {
    const Shape s = a.shape();
    if (start < 0 || start + s.n > total) throw ShapeError("pad_batch: range out of bounds");
    Tensor out(Shape{total, s.c, s.h, s.w});
    std::copy(a.value().data(), a.value().data() + s.numel(), out.data() + start * (s.numel() / s.n));
    return make_op(std::move(out), {a}, [start, count = s.n](const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{slice_batch(g, start, count)};
    });
}

inline Var concat_batch(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_batch: empty input");
    Shape s = parts[0].shape();
    int total = 0;
    for (const auto& p : parts) {
        const Shape ps = p.shape();
        if (ps.c != s.c || ps.h != s.h || ps.w != s.w) throw ShapeError("concat_batch: sample shape mismatch");
        total += ps.n;
    }
    Tensor out(Shape{total, s.c, s.h, s.w});
    std::vector<int> starts;
    double* dst = out.data();
    int at = 0;
    for (const auto& p : parts) {
        starts.push_back(at);
        at += p.shape().n;
        dst = std::copy(p.value().data(), p.value().data() + p.value().size(), dst);
    }
    std::vector<int> counts;
    for (const auto& p : parts) counts.push_back(p.shape().n);
    return make_op(std::move(out), parts, [starts, counts](const Var& g, const std::vector<bool>& need) {
        std::vector<Var> r(starts.size());
        for (std::size_t i = 0; i < starts.size(); ++i)
            if (need[i]) r[i] = slice_batch(g, starts[i], counts[i]);
        return r;
    });
}

inline Var pad_channels(const Var& a, int start, int total);

/// Channels [start, start + count) of every sample.
inline Var slice_channels(const Var& a, int start, int count) {
    const Shape s = a.shape();
    if (start < 0 || count < 1 || start + count > s.c) throw ShapeError("slice_channels: range outside " + s.str());
    Tensor out(Shape{s.n, count, s.h, s.w});
    const std::size_t len = static_cast<std::size_t>(count) * s.plane();
    for (int n = 0; n < s.n; ++n) std::copy_n(a.value().data() + a.value().offset(n, start, 0, 0), len, out.data() + out.offset(n, 0, 0, 0));
    return make_op(std::move(out), {a}, [start, total = s.c](const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{pad_channels(g, start, total)};
    });
}

/// Zero-pads the channel axis so the input occupies [start, start + c) of `total`.
inline Var pad_channels(const Var& a, int start, int total) {
    const Shape s = a.shape();
    if (start < 0 || start + s.c > total) throw ShapeError("pad_channels: range outside target");
    Tensor out(Shape{s.n, total, s.h, s.w});
    const std::size_t len = static_cast<std::size_t>(s.c) * s.plane();
    for (int n = 0; n < s.n; ++n) std::copy_n(a.value().data() + a.value().offset(n, 0, 0, 0), len, out.data() + out.offset(n, start, 0, 0));
    return make_op(std::move(out), {a}, [start, count = s.c](const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{slice_channels(g, start, count)};
    });
}

inline Var scatter_channels(const Var& a, std::vector<int> index, int channels);

/// out[n, 0] = a[n, index[n]].
inline Var gather_channels(const Var& a, std::vector<int> index) {
    const Shape s = a.shape();
    if (static_cast<int>(index.size()) != s.n) throw ShapeError("gather_channels: one index per sample required");
    Tensor out(Shape{s.n, 1, s.h, s.w});
    for (int n = 0; n < s.n; ++n) {
        if (index[n] < 0 || index[n] >= s.c) throw ShapeError("gather_channels: channel index out of range");
        std::copy_n(a.value().data() + a.value().offset(n, index[n], 0, 0), s.plane(), out.data() + out.offset(n, 0, 0, 0));
    }
    return make_op(std::move(out), {a}, [index, c = s.c](const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{scatter_channels(g, index, c)};
    });
}

inline Var scatter_channels(const Var& a, std::vector<int> index, int channels) {
    const Shape s = a.shape();
    Tensor out(Shape{s.n, channels, s.h, s.w});
    for (int n = 0; n < s.n; ++n)
        std::copy_n(a.value().data() + a.value().offset(n, 0, 0, 0), s.plane(), out.data() + out.offset(n, index[n], 0, 0));
    return make_op(std::move(out), {a}, [index](const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{gather_channels(g, index)};
    });
}

inline Var segment_repeat(const Var& a, std::vector<int> sizes);

/// Sums consecutive runs of samples: run i has sizes[i] samples.
inline Var segment_sum(const Var& a, std::vector<int> sizes) {
    const Shape s = a.shape();
    if (std::accumulate(sizes.begin(), sizes.end(), 0) != s.n) throw ShapeError("segment_sum: sizes do not cover batch");
    const std::size_t per = s.numel() / s.n;
    Tensor out(Shape{static_cast<int>(sizes.size()), s.c, s.h, s.w});
    int at = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i)
        for (int k = 0; k < sizes[i]; ++k, ++at)
            for (std::size_t j = 0; j < per; ++j) out[i * per + j] += a.value()[at * per + j];
    return make_op(std::move(out), {a}, [sizes](const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{segment_repeat(g, sizes)};
    });
}

inline Var segment_repeat(const Var& a, std::vector<int> sizes) {
    const Shape s = a.shape();
    if (static_cast<int>(sizes.size()) != s.n) throw ShapeError("segment_repeat: one size per sample required");
    const int total = std::accumulate(sizes.begin(), sizes.end(), 0);
    const std::size_t per = s.numel() / s.n;
    Tensor out(Shape{total, s.c, s.h, s.w});
    int at = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i)
        for (int k = 0; k < sizes[i]; ++k, ++at)
            std::copy_n(a.value().data() + i * per, per, out.data() + at * per);
    return make_op(std::move(out), {a}, [sizes](const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{segment_sum(g, sizes)};
    });
}

/// Mean over each run of samples.
inline Var segment_mean(const Var& a, const std::vector<int>& sizes) {
    const Var total = segment_sum(a, sizes);
    const Shape s = total.shape();
    Tensor inv(s);
    const std::size_t per = s.numel() / s.n;
    for (int i = 0; i < s.n; ++i) std::fill_n(inv.data() + i * per, per, 1.0 / sizes[i]);
    return mul_const(total, std::move(inv));
}

// ---------------------------------------------------------------------------------------------
// Resolution changes and filtering

inline Var sum_pool2x(const Var& a);

/// Nearest-neighbour 2x upsampling.
inline Var upsample2x(const Var& a) {
    const Shape s = a.shape();
    Tensor out(Shape{s.n, s.c, 2 * s.h, 2 * s.w});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int h = 0; h < 2 * s.h; ++h)
                for (int w = 0; w < 2 * s.w; ++w) out(n, c, h, w) = a.value()(n, c, h / 2, w / 2);
    return make_op(std::move(out), {a},
                   [](const Var& g, const std::vector<bool>&) { return std::vector<Var>{sum_pool2x(g)}; });
}

inline Var sum_pool2x(const Var& a) {
    const Shape s = a.shape();
    if (s.h % 2 || s.w % 2) throw ShapeError("sum_pool2x: extents must be even");
    Tensor out(Shape{s.n, s.c, s.h / 2, s.w / 2});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int h = 0; h < s.h; ++h)
                for (int w = 0; w < s.w; ++w) out(n, c, h / 2, w / 2) += a.value()(n, c, h, w);
    return make_op(std::move(out), {a},
                   [](const Var& g, const std::vector<bool>&) { return std::vector<Var>{upsample2x(g)}; });
}

/// Radial low-pass applied to every (n, c) plane. The filter is a symmetric projection,
/// so it is its own adjoint.
inline Var lowpass(const Var& a, double threshold) {
    Tensor out = a.value();
    const Shape s = out.shape();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            fourier::lowpass_inplace(std::span<double>(out.data() + out.offset(n, c, 0, 0), s.plane()), s.h, s.w, threshold);
    return make_op(std::move(out), {a}, [threshold](const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{lowpass(g, threshold)};
    });
}

// ---------------------------------------------------------------------------------------------
// Convolution

/// Geometry of a square-kernel 2-D convolution.
struct ConvGeometry {
    int stride = 1;
    int pad = 0;

    int out_extent(int in, int kernel) const { return (in + 2 * pad - kernel) / stride + 1; }
};

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

inline void im2col(const double* x, int c, int h, int w, int k, ConvGeometry geo, int ho, int wo, RowMatrix& cols) {
    cols.resize(static_cast<Eigen::Index>(c) * k * k, static_cast<Eigen::Index>(ho) * wo);
    for (int ci = 0; ci < c; ++ci)
        for (int ki = 0; ki < k; ++ki)
            for (int kj = 0; kj < k; ++kj) {
                double* row = cols.data() + ((static_cast<std::size_t>(ci) * k + ki) * k + kj) * ho * wo;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * geo.stride + ki - geo.pad;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * geo.stride + kj - geo.pad;
                        row[oy * wo + ox] = (iy >= 0 && iy < h && ix >= 0 && ix < w) ? x[(static_cast<std::size_t>(ci) * h + iy) * w + ix] : 0.0;
                    }
                }
            }
}

inline void col2im(const RowMatrix& cols, int c, int h, int w, int k, ConvGeometry geo, int ho, int wo, double* x) {
    for (int ci = 0; ci < c; ++ci)
        for (int ki = 0; ki < k; ++ki)
            for (int kj = 0; kj < k; ++kj) {
                const double* row = cols.data() + ((static_cast<std::size_t>(ci) * k + ki) * k + kj) * ho * wo;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * geo.stride + ki - geo.pad;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * geo.stride + kj - geo.pad;
                        if (ix >= 0 && ix < w) x[(static_cast<std::size_t>(ci) * h + iy) * w + ix] += row[oy * wo + ox];
                    }
                }
            }
}

inline Tensor conv_forward(const Tensor& x, const Tensor& wt, ConvGeometry geo) {
    const Shape xs = x.shape(), ws = wt.shape();
    if (ws.c != xs.c || ws.h != ws.w) throw ShapeError("conv2d: weight " + ws.str() + " incompatible with input " + xs.str());
    const int k = ws.h, ho = geo.out_extent(xs.h, k), wo = geo.out_extent(xs.w, k);
    if (ho <= 0 || wo <= 0) throw ShapeError("conv2d: input too small for kernel");
    Tensor y(Shape{xs.n, ws.n, ho, wo});
    ConstRowMap wm(wt.data(), ws.n, static_cast<Eigen::Index>(ws.c) * k * k);
    RowMatrix cols;
    for (int n = 0; n < xs.n; ++n) {
        RowMap ym(y.data() + y.offset(n, 0, 0, 0), ws.n, static_cast<Eigen::Index>(ho) * wo);
        if (k == 1 && geo.stride == 1 && geo.pad == 0) {
            ym.noalias() = wm * ConstRowMap(x.data() + x.offset(n, 0, 0, 0), xs.c, static_cast<Eigen::Index>(xs.h) * xs.w);
        } else {
            im2col(x.data() + x.offset(n, 0, 0, 0), xs.c, xs.h, xs.w, k, geo, ho, wo, cols);
            ym.noalias() = wm * cols;
        }
    }
    return y;
}

inline Tensor conv_backward_input(const Tensor& g, const Tensor& wt, Shape xs, ConvGeometry geo) {
    const Shape gs = g.shape(), ws = wt.shape();
    const int k = ws.h;
    Tensor dx(xs);
    ConstRowMap wm(wt.data(), ws.n, static_cast<Eigen::Index>(ws.c) * k * k);
    RowMatrix cols;
    for (int n = 0; n < gs.n; ++n) {
        ConstRowMap gm(g.data() + g.offset(n, 0, 0, 0), gs.c, static_cast<Eigen::Index>(gs.h) * gs.w);
        if (k == 1 && geo.stride == 1 && geo.pad == 0) {
            RowMap(dx.data() + dx.offset(n, 0, 0, 0), xs.c, static_cast<Eigen::Index>(xs.h) * xs.w).noalias() = wm.transpose() * gm;
        } else {
            cols.noalias() = wm.transpose() * gm;
            col2im(cols, xs.c, xs.h, xs.w, k, geo, gs.h, gs.w, dx.data() + dx.offset(n, 0, 0, 0));
        }
    }
    return dx;
}

inline Tensor conv_backward_weight(const Tensor& x, const Tensor& g, Shape ws, ConvGeometry geo) {
    const Shape xs = x.shape(), gs = g.shape();
    const int k = ws.h;
    Tensor dw(ws);
    RowMap dwm(dw.data(), ws.n, static_cast<Eigen::Index>(ws.c) * k * k);
    RowMatrix cols;
    for (int n = 0; n < xs.n; ++n) {
        ConstRowMap gm(g.data() + g.offset(n, 0, 0, 0), gs.c, static_cast<Eigen::Index>(gs.h) * gs.w);
        if (k == 1 && geo.stride == 1 && geo.pad == 0) {
            dwm.noalias() += gm * ConstRowMap(x.data() + x.offset(n, 0, 0, 0), xs.c, static_cast<Eigen::Index>(xs.h) * xs.w).transpose();
        } else {
            im2col(x.data() + x.offset(n, 0, 0, 0), xs.c, xs.h, xs.w, k, geo, gs.h, gs.w, cols);
            dwm.noalias() += gm * cols.transpose();
        }
    }
    return dw;
}

}  // namespace detail

inline Var conv2d_input_grad(const Var& g, const Var& weight, Shape input_shape, ConvGeometry geo);
inline Var conv2d_weight_grad(const Var& x, const Var& g, Shape weight_shape, ConvGeometry geo);

/// Cross-correlation with zero padding; weight is [out, in, k, k]. No bias.
inline Var conv2d(const Var& x, const Var& weight, ConvGeometry geo) {
    const Shape xs = x.shape(), ws = weight.shape();
    return make_op(detail::conv_forward(x.value(), weight.value(), geo), {x, weight},
                   [x, weight, xs, ws, geo](const Var& g, const std::vector<bool>& need) {
                       return std::vector<Var>{need[0] ? conv2d_input_grad(g, weight, xs, geo) : Var(),
                                               need[1] ? conv2d_weight_grad(x, g, ws, geo) : Var()};
                   });
}

/// Adjoint of conv2d with respect to its input (a transposed convolution).
inline Var conv2d_input_grad(const Var& g, const Var& weight, Shape input_shape, ConvGeometry geo) {
    const Shape ws = weight.shape();
    return make_op(detail::conv_backward_input(g.value(), weight.value(), input_shape, geo), {g, weight},
                   [g, weight, ws, geo](const Var& gz, const std::vector<bool>& need) {
                       return std::vector<Var>{need[0] ? conv2d(gz, weight, geo) : Var(),
                                               need[1] ? conv2d_weight_grad(gz, g, ws, geo) : Var()};
                   });
}

/// Adjoint of conv2d with respect to its weight.
inline Var conv2d_weight_grad(const Var& x, const Var& g, Shape weight_shape, ConvGeometry geo) {
    const Shape xs = x.shape();
    return make_op(detail::conv_backward_weight(x.value(), g.value(), weight_shape, geo), {x, g},
                   [x, g, xs, geo](const Var& gu, const std::vector<bool>& need) {
                       return std::vector<Var>{need[0] ? conv2d_input_grad(g, gu, xs, geo) : Var(),
                                               need[1] ? conv2d(x, gu, geo) : Var()};
                   });
}

}  // namespace redraw::nn
