#pragma once

#include <algorithm>
#include <cmath>

#include "redraw/image.hpp"
#include "redraw/resample.hpp"

namespace redraw::data {

inline constexpr double kDefaultContextMargin = 0.25;

struct StandardCrop {
    RasterImage image;
    Box source;  // expanded, clipped box in frame coordinates
    Box inner;   // the region box mapped into crop coordinates
};

/// Crops `box` grown by `context_margin` of its size on every side (clipped to the frame)
/// and resamples the result to out_height x out_width.
inline StandardCrop standardize_crop(const RasterImage& frame, const Box& box, int out_height, int out_width,
                                     double context_margin = kDefaultContextMargin) {
    if (box.w <= 0 || box.h <= 0) throw ValidationError("standardize_crop: degenerate box");
    if (!box.inside(frame.width(), frame.height())) throw ValidationError("standardize_crop: box outside frame");
    if (out_height < 1 || out_width < 1) throw ShapeError("standardize_crop: output size must be positive");
    if (context_margin < 0.0) throw ValidationError("standardize_crop: margin must be non-negative");

    const int mx = static_cast<int>(std::lround(context_margin * box.w));
    const int my = static_cast<int>(std::lround(context_margin * box.h));
    const int x0 = std::max(0, box.x - mx), y0 = std::max(0, box.y - my);
    const int x1 = std::min(frame.width(), box.x + box.w + mx), y1 = std::min(frame.height(), box.y + box.h + my);
    const Box source{x0, y0, x1 - x0, y1 - y0};

    const double sx = static_cast<double>(out_width) / source.w, sy = static_cast<double>(out_height) / source.h;
    Box inner{static_cast<int>(std::lround((box.x - x0) * sx)), static_cast<int>(std::lround((box.y - y0) * sy)),
              std::max(1, static_cast<int>(std::lround(box.w * sx))), std::max(1, static_cast<int>(std::lround(box.h * sy)))};
    inner.w = std::min(inner.w, out_width - inner.x);
    inner.h = std::min(inner.h, out_height - inner.y);
    return {resample_bilinear(frame.crop(source), out_height, out_width), source, inner};
}

/// Region box inside a square standardized crop of side `size` whose region was centred
/// with `context_margin` on each side.
inline Box centered_inner_box(int size, double context_margin = kDefaultContextMargin) {
    const int m = static_cast<int>(std::floor(size * context_margin / (1.0 + 2.0 * context_margin)));
    return Box{m, m, size - 2 * m, size - 2 * m};
}

}  // namespace redraw::data
