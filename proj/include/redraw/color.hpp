#pragma once

#include <array>
#include <cmath>

#include "redraw/image.hpp"

namespace redraw::color {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

// RGB -> LMS cone response from Reinhard et al.'s colour-transfer work, with each row
// rescaled to sum to one so that white (and every grey) lands on the achromatic axis.
inline const Mat3& rgb_to_lms_matrix() {
    static const Mat3 m = [] {
        Mat3 raw{{{0.3811, 0.5783, 0.0402}, {0.1967, 0.7244, 0.0782}, {0.0241, 0.1288, 0.8444}}};
        for (auto& row : raw) {
            const double s = row[0] + row[1] + row[2];
            for (double& v : row) v /= s;
        }
        return raw;
    }();
    return m;
}

inline Mat3 inverse(const Mat3& a) {
    const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                       a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                       a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    Mat3 r{};
    r[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
    r[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
    r[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
    r[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
    r[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
    r[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
    r[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
    r[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
    r[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
    return r;
}

inline const Mat3& lms_to_rgb_matrix() {
    static const Mat3 m = inverse(rgb_to_lms_matrix());
    return m;
}

inline Vec3 mat_vec(const Mat3& m, const Vec3& v) {
    return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2], m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

/// Floor applied to LMS responses before the logarithm.
inline constexpr double kLmsFloor = 1.0 / 255.0;

inline Vec3 rgb_to_lab_pixel(const Vec3& rgb) {
    Vec3 lms = mat_vec(rgb_to_lms_matrix(), rgb);
    for (double& v : lms) v = std::log10(std::max(v, kLmsFloor));
    const double s3 = std::sqrt(3.0), s6 = std::sqrt(6.0), s2 = std::sqrt(2.0);
    return {(lms[0] + lms[1] + lms[2]) / s3, (lms[0] + lms[1] - 2.0 * lms[2]) / s6, (lms[0] - lms[1]) / s2};
}

inline Vec3 lab_to_rgb_pixel(const Vec3& lab) {
    const double a = lab[0] / std::sqrt(3.0), b = lab[1] / std::sqrt(6.0), c = lab[2] / std::sqrt(2.0);
    Vec3 lms{a + b + c, a + b - c, a - 2.0 * b};
    for (double& v : lms) v = std::pow(10.0, v);
    return mat_vec(lms_to_rgb_matrix(), lms);
}

inline LabImage rgb_to_lab(const RasterImage& img) {
    LabImage out(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const Vec3 lab = rgb_to_lab_pixel({img.at(0, y, x), img.at(1, y, x), img.at(2, y, x)});
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = lab[c];
        }
    return out;
}

/// Inverse of rgb_to_lab; out-of-gamut results are clamped into [0,1].
inline RasterImage lab_to_rgb(const LabImage& img) {
    RasterImage out(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const Vec3 rgb = lab_to_rgb_pixel({img.at(0, y, x), img.at(1, y, x), img.at(2, y, x)});
            for (int c = 0; c < 3; ++c) out.set(c, y, x, rgb[c]);
        }
    return out;
}

inline Plane lightness(const RasterImage& img) {
    Plane out(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out(y, x) = rgb_to_lab_pixel({img.at(0, y, x), img.at(1, y, x), img.at(2, y, x)})[0];
    return out;
}

}  // namespace redraw::color
