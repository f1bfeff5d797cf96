#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "redraw/error.hpp"

namespace redraw {

/// Axis-aligned integer box, top-left anchored.
struct Box {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    long long area() const { return static_cast<long long>(w) * h; }
    bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
    bool inside(int width, int height) const { return x >= 0 && y >= 0 && w > 0 && h > 0 && x + w <= width && y + h <= height; }
    bool operator==(const Box&) const = default;
};

/// Dense row-major 2-D real array.
class Plane {
public:
    Plane() = default;
    Plane(int height, int width, double fill = 0.0)
        : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width, fill) {
        if (height <= 0 || width <= 0) throw ShapeError("plane dimensions must be positive");
    }
    Plane(int height, int width, std::vector<double> values) : height_(height), width_(width), data_(std::move(values)) {
        if (height <= 0 || width <= 0) throw ShapeError("plane dimensions must be positive");
        if (data_.size() != static_cast<std::size_t>(height) * width) throw ShapeError("plane data size mismatch");
    }

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    double operator()(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }
    double mean() const {
        double s = 0.0;
        for (double v : data_) s += v;
        return s / static_cast<double>(data_.size());
    }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

namespace detail {

inline double clamp_unit(double v) {
    if (!std::isfinite(v)) throw InvalidImage("non-finite pixel value");
    return std::clamp(v, 0.0, 1.0);
}

}  // namespace detail

/// Planar 3-channel image, channel-major. Values are clamped to [0,1] whenever they are written.
class RasterImage {
public:
    static constexpr int kChannels = 3;

    RasterImage() = default;
    RasterImage(int height, int width, double fill = 0.0)
        : height_(height), width_(width), data_(static_cast<std::size_t>(kChannels) * height * width, detail::clamp_unit(fill)) {
        if (height <= 0 || width <= 0) throw ShapeError("image dimensions must be positive");
    }
    /// `chw` holds channel planes back to back.
    RasterImage(int height, int width, std::vector<double> chw) : height_(height), width_(width), data_(std::move(chw)) {
        if (height <= 0 || width <= 0) throw ShapeError("image dimensions must be positive");
        if (data_.size() != static_cast<std::size_t>(kChannels) * height * width) throw ShapeError("image data size mismatch");
        for (double& v : data_) v = detail::clamp_unit(v);
    }

    int height() const { return height_; }
    int width() const { return width_; }
    bool empty() const { return data_.empty(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

    double at(int c, int y, int x) const { return data_[index(c, y, x)]; }
    void set(int c, int y, int x, double v) { data_[index(c, y, x)] = detail::clamp_unit(v); }

    std::span<const double> values() const { return data_; }
    std::span<const double> channel(int c) const {
        return std::span<const double>(data_).subspan(static_cast<std::size_t>(c) * pixel_count(), pixel_count());
    }

    Plane channel_plane(int c) const {
        auto ch = channel(c);
        return Plane(height_, width_, std::vector<double>(ch.begin(), ch.end()));
    }

    RasterImage crop(const Box& box) const {
        if (!box.inside(width_, height_)) throw ShapeError("crop box outside image");
        RasterImage out(box.h, box.w);
        for (int c = 0; c < kChannels; ++c)
            for (int y = 0; y < box.h; ++y)
                for (int x = 0; x < box.w; ++x) out.data_[out.index(c, y, x)] = at(c, box.y + y, box.x + x);
        return out;
    }

    bool operator==(const RasterImage&) const = default;

private:
    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Lightness/opponent representation; same layout as RasterImage but unbounded.
class LabImage {
public:
    LabImage() = default;
    LabImage(int height, int width)
        : height_(height), width_(width), data_(static_cast<std::size_t>(3) * height * width, 0.0) {
        if (height <= 0 || width <= 0) throw ShapeError("image dimensions must be positive");
    }

    int height() const { return height_; }
    int width() const { return width_; }

    double& at(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }
    double at(int c, int y, int x) const { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }

    Plane channel_plane(int c) const {
        const std::size_t n = static_cast<std::size_t>(height_) * width_;
        return Plane(height_, width_, std::vector<double>(data_.begin() + c * n, data_.begin() + (c + 1) * n));
    }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Per-pixel weights in [0,1] over a host image.
class RegionMask {
public:
    RegionMask() = default;
    RegionMask(int height, int width, double fill = 0.0) : plane_(height, width, std::clamp(fill, 0.0, 1.0)) {}

    static RegionMask from_box(int height, int width, const Box& box) {
        RegionMask m(height, width);
        for (int y = std::max(0, box.y); y < std::min(height, box.y + box.h); ++y)
            for (int x = std::max(0, box.x); x < std::min(width, box.x + box.w); ++x) m.plane_(y, x) = 1.0;
        return m;
    }

    int height() const { return plane_.height(); }
    int width() const { return plane_.width(); }
    double operator()(int y, int x) const { return plane_(y, x); }
    void set(int y, int x, double v) {
        if (!std::isfinite(v)) throw InvalidImage("non-finite mask weight");
        plane_(y, x) = std::clamp(v, 0.0, 1.0);
    }

    const Plane& plane() const { return plane_; }

    bool is_binary() const {
        auto v = plane_.values();
        return std::all_of(v.begin(), v.end(), [](double w) { return w == 0.0 || w == 1.0; });
    }
    double support() const {
        double s = 0.0;
        for (double w : plane_.values()) s += w;
        return s;
    }
    std::size_t nonzero_count() const {
        auto v = plane_.values();
        return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double w) { return w > 0.0; }));
    }

private:
    Plane plane_;
};

inline void require_min_size(const RasterImage& img, const char* what) {
    if (img.height() < 4 || img.width() < 4)
        throw ShapeError(std::string(what) + ": image must be at least 4x4");
}

}  // namespace redraw
