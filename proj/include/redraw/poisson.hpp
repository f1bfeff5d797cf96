#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <vector>

#include "redraw/image.hpp"

namespace redraw {

/// Placement of a source image inside a destination: destination(y + dy, x + dx) <- source(y, x).
struct Offset {
    int dy = 0;
    int dx = 0;
};

inline constexpr double kPoissonTolerance = 1e-8;

/// Seamless cloning. For every masked pixel the 5-point Laplacian of the result matches the
/// Laplacian of `source`, with Dirichlet values taken from `destination` around the mask.
/// Pixels outside the mask are copied from `destination` unchanged.
inline RasterImage poisson_blend(const RasterImage& source, const RasterImage& destination, const RegionMask& mask,
                                 Offset offset) {
    if (mask.height() != source.height() || mask.width() != source.width())
        throw ShapeError("poisson_blend: mask must match the source shape");
    if (!mask.is_binary()) throw ValidationError("poisson_blend: mask must be binary");

    const int sh = source.height(), sw = source.width();
    const int dh = destination.height(), dw = destination.width();

    std::vector<int> index(static_cast<std::size_t>(sh) * sw, -1);
    std::vector<std::pair<int, int>> pixels;
    for (int y = 0; y < sh; ++y)
        for (int x = 0; x < sw; ++x) {
            if (mask(y, x) != 1.0) continue;
            const int ty = y + offset.dy, tx = x + offset.dx;
            if (y == 0 || x == 0 || y == sh - 1 || x == sw - 1)
                throw ValidationError("poisson_blend: mask touches the source border");
            if (ty <= 0 || tx <= 0 || ty >= dh - 1 || tx >= dw - 1)
                throw ValidationError("poisson_blend: mask touches or leaves the destination border");
            index[static_cast<std::size_t>(y) * sw + x] = static_cast<int>(pixels.size());
            pixels.emplace_back(y, x);
        }
    if (pixels.empty()) return destination;

    const int n = static_cast<int>(pixels.size());
    constexpr int kDy[4] = {-1, 1, 0, 0};
    constexpr int kDx[4] = {0, 0, -1, 1};

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(n) * 5);
    for (int i = 0; i < n; ++i) {
        const auto [y, x] = pixels[i];
        entries.emplace_back(i, i, 4.0);
        for (int k = 0; k < 4; ++k) {
            const int j = index[static_cast<std::size_t>(y + kDy[k]) * sw + (x + kDx[k])];
            if (j >= 0) entries.emplace_back(i, j, -1.0);
        }
    }
    Eigen::SparseMatrix<double> laplacian(n, n);
    laplacian.setFromTriplets(entries.begin(), entries.end());

    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(kPoissonTolerance);
    cg.setMaxIterations(10 * n);
    cg.compute(laplacian);

    RasterImage out = destination;
    Eigen::VectorXd rhs(n), guess(n);
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < n; ++i) {
            const auto [y, x] = pixels[i];
            double b = 0.0;
            for (int k = 0; k < 4; ++k) {
                const int ny = y + kDy[k], nx = x + kDx[k];
                b += source.at(c, y, x) - source.at(c, ny, nx);
                if (index[static_cast<std::size_t>(ny) * sw + nx] < 0)
                    b += destination.at(c, ny + offset.dy, nx + offset.dx);
            }
            rhs[i] = b;
            guess[i] = destination.at(c, y + offset.dy, x + offset.dx);
        }
        const Eigen::VectorXd solution = cg.solveWithGuess(rhs, guess);
        for (int i = 0; i < n; ++i) {
            const auto [y, x] = pixels[i];
            out.set(c, y + offset.dy, x + offset.dx, solution[i]);
        }
    }
    return out;
}

}  // namespace redraw
