#pragma once

#include <algorithm>
#include <cmath>

#include "redraw/image.hpp"

namespace redraw::translate {

inline constexpr double kDefaultBandFraction = 0.125;
inline constexpr double kDefaultBorderFraction = 0.25;

struct MaskPair {
    RegionMask quality;  // the redrawn region
    RegionMask context;  // everything outside it plus an inner band along its edge
};

/// Band width along one axis of the region: never below one pixel.
inline int band_width(double fraction, int extent) { return std::max(1, static_cast<int>(std::lround(fraction * extent))); }

inline MaskPair build_masks(int crop_h, int crop_w, const Box& region, double band_fraction = kDefaultBandFraction,
                            double border_fraction = kDefaultBorderFraction) {
    if (crop_h <= 0 || crop_w <= 0) throw ShapeError("build_masks: crop dimensions must be positive");
    if (!region.inside(crop_w, crop_h)) throw ValidationError("build_masks: region box lies outside the crop");
    if (!(band_fraction > 0.0 && band_fraction < 0.5) || !(border_fraction > 0.0 && border_fraction < 0.5))
        throw ValidationError("build_masks: fractions must lie in (0, 0.5)");
    const int by = band_width(band_fraction, region.h), bx = band_width(band_fraction, region.w);
    const Box deep{region.x + bx, region.y + by, region.w - 2 * bx, region.h - 2 * by};

    MaskPair m{RegionMask::from_box(crop_h, crop_w, region), RegionMask(crop_h, crop_w, 1.0)};
    if (deep.w > 0 && deep.h > 0)
        for (int y = deep.y; y < deep.y + deep.h; ++y)
            for (int x = deep.x; x < deep.x + deep.w; ++x) m.context.set(y, x, 0.0);
    return m;
}

}  // namespace redraw::translate
