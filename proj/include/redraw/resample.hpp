#pragma once

#include <algorithm>
#include <cmath>

#include "redraw/image.hpp"

namespace redraw {

namespace detail {

// Corner-aligned source coordinate of output index i.
inline double aligned_coord(int i, int out_n, int in_n) {
    if (out_n == 1) return 0.5 * (in_n - 1);
    return static_cast<double>(i) * (in_n - 1) / (out_n - 1);
}

}  // namespace detail

/// Bilinear resampling with corner-aligned sample grids.
inline Plane resample_bilinear(const Plane& src, int new_height, int new_width) {
    if (new_height < 1 || new_width < 1) throw ShapeError("resample: target dimensions must be >= 1");
    if (new_height == src.height() && new_width == src.width()) return src;
    Plane out(new_height, new_width);
    for (int i = 0; i < new_height; ++i) {
        const double sy = detail::aligned_coord(i, new_height, src.height());
        const int y0 = std::min(static_cast<int>(std::floor(sy)), src.height() - 1);
        const int y1 = std::min(y0 + 1, src.height() - 1);
        const double fy = sy - y0;
        for (int j = 0; j < new_width; ++j) {
            const double sx = detail::aligned_coord(j, new_width, src.width());
            const int x0 = std::min(static_cast<int>(std::floor(sx)), src.width() - 1);
            const int x1 = std::min(x0 + 1, src.width() - 1);
            const double fx = sx - x0;
            const double top = src(y0, x0) * (1.0 - fx) + src(y0, x1) * fx;
            const double bot = src(y1, x0) * (1.0 - fx) + src(y1, x1) * fx;
            out(i, j) = top * (1.0 - fy) + bot * fy;
        }
    }
    return out;
}

inline RasterImage resample_bilinear(const RasterImage& img, int new_height, int new_width) {
    if (new_height < 1 || new_width < 1) throw ShapeError("resample: target dimensions must be >= 1");
    if (new_height == img.height() && new_width == img.width()) return img;
    std::vector<double> chw;
    chw.reserve(static_cast<std::size_t>(3) * new_height * new_width);
    for (int c = 0; c < 3; ++c) {
        const Plane p = resample_bilinear(img.channel_plane(c), new_height, new_width);
        chw.insert(chw.end(), p.values().begin(), p.values().end());
    }
    return RasterImage(new_height, new_width, std::move(chw));
}

}  // namespace redraw
