#pragma once

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>

#include "redraw/image.hpp"

namespace redraw::fourier {

/// Default radial cutoff of the lightness low-pass filter.
inline constexpr double kDefaultThreshold = 0.06;

/// Signed normalized frequency of DFT bin k out of n, in [-0.5, 0.5).
inline double bin_frequency(int k, int n) {
    return 2 * k < n ? static_cast<double>(k) / n : static_cast<double>(k) / n - 1.0;
}

inline bool passes(int u, int v, int h, int w, double threshold) {
    const double fu = bin_frequency(u, h), fv = bin_frequency(v, w);
    return std::sqrt(fu * fu + fv * fv) <= threshold;
}

namespace detail {

// The FFTW planner is not re-entrant; plan execution on private buffers is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class Workspace {
public:
    Workspace(int h, int w) : h_(h), w_(w) {
        buf_ = fftw_alloc_complex(static_cast<std::size_t>(h) * w);
        std::lock_guard lock(planner_mutex());
        fwd_ = fftw_plan_dft_2d(h, w, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_2d(h, w, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Workspace() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(buf_);
    }
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    void run(std::span<double> plane, double threshold) {
        const std::size_t n = plane.size();
        for (std::size_t i = 0; i < n; ++i) {
            buf_[i][0] = plane[i];
            buf_[i][1] = 0.0;
        }
        fftw_execute(fwd_);
        for (int u = 0; u < h_; ++u)
            for (int v = 0; v < w_; ++v)
                if (!passes(u, v, h_, w_, threshold)) {
                    auto& c = buf_[static_cast<std::size_t>(u) * w_ + v];
                    c[0] = 0.0;
                    c[1] = 0.0;
                }
        fftw_execute(inv_);
        const double scale = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) plane[i] = buf_[i][0] * scale;
    }

private:
    int h_, w_;
    fftw_complex* buf_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

inline Workspace& workspace(int h, int w) {
    thread_local std::map<std::pair<int, int>, std::unique_ptr<Workspace>> cache;
    auto& slot = cache[{h, w}];
    if (!slot) slot = std::make_unique<Workspace>(h, w);
    return *slot;
}

}  // namespace detail

/// In-place hard radial low-pass of one row-major h x w plane.
inline void lowpass_inplace(std::span<double> plane, int h, int w, double threshold) {
    detail::workspace(h, w).run(plane, threshold);
}

/// Zeroes every DFT coefficient whose radial normalized frequency exceeds `threshold`
/// and returns the real part of the inverse transform.
inline Plane lowpass_filter(const Plane& lightness, double threshold = kDefaultThreshold) {
    if (!lightness.all_finite()) throw InvalidImage("lowpass_filter: non-finite input");
    if (!(threshold >= 0.0) || threshold > std::sqrt(0.5) + 1e-12)
        throw ValidationError("lowpass_filter: threshold must lie in [0, sqrt(0.5)]");
    Plane out = lightness;
    lowpass_inplace(out.values(), out.height(), out.width(), threshold);
    return out;
}

/// Fraction of a plane's mean-removed energy lying above the cutoff, i.e. 1 - |F(x)-mu|^2 / |x-mu|^2.
inline double high_frequency_fraction(const Plane& lightness, double threshold = kDefaultThreshold) {
    const Plane low = lowpass_filter(lightness, threshold);
    const double mu = lightness.mean();
    double total = 0.0, high = 0.0;
    for (std::size_t i = 0; i < lightness.size(); ++i) {
        const double v = lightness.values()[i];
        total += (v - mu) * (v - mu);
        const double r = v - low.values()[i];
        high += r * r;
    }
    return total > 0.0 ? high / total : 0.0;
}

}  // namespace redraw::fourier
