#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "redraw/color.hpp"
#include "redraw/image.hpp"

namespace redraw {

/// Masked first and second moments of one lab channel.
struct ChannelStats {
    double mean = 0.0;
    double stddev = 0.0;
};

inline std::array<ChannelStats, 3> masked_lab_stats(const LabImage& lab, const RegionMask& mask) {
    std::array<ChannelStats, 3> out{};
    const double wsum = mask.support();
    for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int y = 0; y < lab.height(); ++y)
            for (int x = 0; x < lab.width(); ++x) s += mask(y, x) * lab.at(c, y, x);
        const double mu = s / wsum;
        double v = 0.0;
        for (int y = 0; y < lab.height(); ++y)
            for (int x = 0; x < lab.width(); ++x) {
                const double d = lab.at(c, y, x) - mu;
                v += mask(y, x) * d * d;
            }
        out[c] = {mu, std::sqrt(v / wsum)};
    }
    return out;
}

inline constexpr double kStdFloor = 1e-6;

/// Reinhard-style statistics transfer in lab space restricted to the mask supports.
/// Pixels with zero target weight are returned untouched; fractional weights blend linearly.
inline RasterImage color_transfer(const RasterImage& target, const RegionMask& target_mask, const RasterImage& reference,
                                  const RegionMask& reference_mask) {
    if (target_mask.height() != target.height() || target_mask.width() != target.width())
        throw ShapeError("color_transfer: target mask shape mismatch");
    if (reference_mask.height() != reference.height() || reference_mask.width() != reference.width())
        throw ShapeError("color_transfer: reference mask shape mismatch");
    if (target_mask.nonzero_count() < 2 || reference_mask.nonzero_count() < 2)
        throw DegenerateStatistics("color_transfer: mask support must cover at least 2 pixels");

    const LabImage tlab = color::rgb_to_lab(target);
    const auto ts = masked_lab_stats(tlab, target_mask);
    const auto rs = masked_lab_stats(color::rgb_to_lab(reference), reference_mask);

    RasterImage out = target;
    for (int y = 0; y < target.height(); ++y)
        for (int x = 0; x < target.width(); ++x) {
            const double w = target_mask(y, x);
            if (w == 0.0) continue;
            color::Vec3 lab;
            for (int c = 0; c < 3; ++c) {
                const double scale = rs[c].stddev / std::max(ts[c].stddev, kStdFloor);
                lab[c] = (tlab.at(c, y, x) - ts[c].mean) * scale + rs[c].mean;
            }
            const color::Vec3 rgb = color::lab_to_rgb_pixel(lab);
            for (int c = 0; c < 3; ++c) out.set(c, y, x, w * rgb[c] + (1.0 - w) * target.at(c, y, x));
        }
    return out;
}

}  // namespace redraw
