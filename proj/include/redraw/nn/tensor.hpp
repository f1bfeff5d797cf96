#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "redraw/error.hpp"
#include "redraw/image.hpp"

namespace redraw::nn {

/// NCHW extent.
struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    std::size_t numel() const { return static_cast<std::size_t>(n) * c * h * w; }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    bool operator==(const Shape&) const = default;
    std::string str() const {
        return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + "]";
    }
};

/// Dense NCHW array of doubles with value semantics.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.numel(), fill) {
        if (shape.n <= 0 || shape.c <= 0 || shape.h <= 0 || shape.w <= 0) throw ShapeError("tensor extents must be positive");
    }
    Tensor(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
        if (data_.size() != shape.numel()) throw ShapeError("tensor data does not match shape " + shape.str());
    }

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& operator()(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
    double operator()(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }

    std::size_t offset(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
    }

    double item() const {
        if (data_.size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_.str());
        return data_[0];
    }

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_{};
    std::vector<double> data_;
};

inline Tensor stack_images(std::span<const RasterImage> images) {
    if (images.empty()) throw ShapeError("stack_images: empty list");
    const int h = images[0].height(), w = images[0].width();
    Tensor out(Shape{static_cast<int>(images.size()), 3, h, w});
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].height() != h || images[i].width() != w) throw ShapeError("stack_images: size mismatch");
        auto v = images[i].values();
        std::copy(v.begin(), v.end(), out.data() + i * v.size());
    }
    return out;
}

inline Tensor image_tensor(const RasterImage& img) { return stack_images(std::span<const RasterImage>(&img, 1)); }

inline RasterImage tensor_image(const Tensor& t, int n = 0) {
    const Shape& s = t.shape();
    if (s.c != 3) throw ShapeError("tensor_image: expected 3 channels");
    const std::size_t len = 3 * s.plane();
    return RasterImage(s.h, s.w, std::vector<double>(t.data() + n * len, t.data() + (n + 1) * len));
}

}  // namespace redraw::nn
