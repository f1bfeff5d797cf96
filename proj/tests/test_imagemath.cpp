#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "redraw/color.hpp"
#include "redraw/color_transfer.hpp"
#include "redraw/fourier.hpp"
#include "redraw/png_io.hpp"
#include "redraw/poisson.hpp"
#include "redraw/resample.hpp"

using namespace redraw;

namespace {

RasterImage random_image(int h, int w, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(static_cast<std::size_t>(3) * h * w);
    for (double& x : v) x = d(rng);
    return RasterImage(h, w, std::move(v));
}

Plane random_plane(int h, int w, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Plane p(h, w);
    for (double& x : p.values()) x = d(rng);
    return p;
}

}  // namespace

TEST(Color, GreyIsAchromatic) {
    const RasterImage grey(5, 5, 0.5);
    const LabImage lab = color::rgb_to_lab(grey);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) {
            EXPECT_NEAR(lab.at(1, y, x), 0.0, 1e-12);
            EXPECT_NEAR(lab.at(2, y, x), 0.0, 1e-12);
        }
}

TEST(Color, RoundTripWithinTolerance) {
    std::mt19937_64 rng(11);
    const RasterImage img = random_image(8, 8, rng, 1.0 / 255.0, 1.0);
    const RasterImage back = color::lab_to_rgb(color::rgb_to_lab(img));
    for (std::size_t i = 0; i < img.values().size(); ++i) EXPECT_NEAR(back.values()[i], img.values()[i], 1e-5);
}

TEST(Color, PureRedByHand) {
    // Row-normalised LMS responses of (1, 0, 0).
    const double l = 0.3811 / (0.3811 + 0.5783 + 0.0402);
    const double m = 0.1967 / (0.1967 + 0.7244 + 0.0782);
    const double s = 0.0241 / (0.0241 + 0.1288 + 0.8444);
    const double ll = std::log10(l), lm = std::log10(m), ls = std::log10(s);
    const double expect_l = (ll + lm + ls) / std::sqrt(3.0);
    const double expect_a = (ll + lm - 2.0 * ls) / std::sqrt(6.0);
    const double expect_b = (ll - lm) / std::sqrt(2.0);
    const auto lab = color::rgb_to_lab_pixel({1.0, 0.0, 0.0});
    EXPECT_NEAR(lab[0], expect_l, 1e-12);
    EXPECT_NEAR(lab[1], expect_a, 1e-12);
    EXPECT_NEAR(lab[2], expect_b, 1e-12);
}

TEST(Color, AchromaticLabDecodesToGrey) {
    const double lightness = color::rgb_to_lab_pixel({0.5, 0.5, 0.5})[0];
    LabImage lab(3, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) lab.at(0, y, x) = lightness;
    const RasterImage rgb = color::lab_to_rgb(lab);
    for (double v : rgb.values()) EXPECT_NEAR(v, 0.5, 1e-5);
}

TEST(Color, RandomLabVerifiedByReencoding) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-0.05, 0.05);
    const double base = color::rgb_to_lab_pixel({0.5, 0.5, 0.5})[0];
    LabImage lab(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            lab.at(0, y, x) = base + d(rng);
            lab.at(1, y, x) = d(rng);
            lab.at(2, y, x) = d(rng);
        }
    const LabImage again = color::rgb_to_lab(color::lab_to_rgb(lab));
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) EXPECT_NEAR(again.at(c, y, x), lab.at(c, y, x), 1e-5);
}

TEST(Lowpass, ConstantPassesThrough) {
    const Plane p(9, 12, 0.37);
    for (double t : {0.0, 0.06, 0.3, 0.7}) {
        const Plane f = fourier::lowpass_filter(p, t);
        for (double v : f.values()) EXPECT_NEAR(v, 0.37, 1e-9);
    }
}

TEST(Lowpass, ZeroThresholdKeepsMean) {
    std::mt19937_64 rng(2);
    const Plane p = random_plane(10, 7, rng);
    const Plane f = fourier::lowpass_filter(p, 0.0);
    for (double v : f.values()) EXPECT_NEAR(v, p.mean(), 1e-9);
}

TEST(Lowpass, MatchesDirectDftSum) {
    std::mt19937_64 rng(3);
    for (auto [h, w] : {std::pair{16, 16}, std::pair{15, 12}, std::pair{9, 13}}) {
        const Plane p = random_plane(h, w, rng);
        for (double t : {0.06, 0.2, 0.5}) {
            const Plane fast = fourier::lowpass_filter(p, t);
            const Plane slow = oracle::dft_lowpass(p, t);
            for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(fast.values()[i], slow.values()[i], 1e-9);
        }
    }
}

TEST(Lowpass, IdempotentAndLinear) {
    std::mt19937_64 rng(4);
    const Plane x = random_plane(16, 16, rng), y = random_plane(16, 16, rng);
    const Plane fx = fourier::lowpass_filter(x, 0.1);
    const Plane ffx = fourier::lowpass_filter(fx, 0.1);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(ffx.values()[i], fx.values()[i], 1e-9);
    Plane combo(16, 16);
    for (std::size_t i = 0; i < x.size(); ++i) combo.values()[i] = 2.5 * x.values()[i] - 0.75 * y.values()[i];
    const Plane fc = fourier::lowpass_filter(combo, 0.1), fy = fourier::lowpass_filter(y, 0.1);
    for (std::size_t i = 0; i < x.size(); ++i)
        EXPECT_NEAR(fc.values()[i], 2.5 * fx.values()[i] - 0.75 * fy.values()[i], 1e-9);
}

TEST(Lowpass, RejectsNonFinite) {
    Plane p(4, 4, 0.0);
    p(1, 2) = std::nan("");
    EXPECT_THROW(fourier::lowpass_filter(p, 0.06), InvalidImage);
    EXPECT_THROW(fourier::lowpass_filter(Plane(4, 4), 0.9), ValidationError);
}

TEST(ColorTransfer, IdentityWhenStatisticsMatch) {
    std::mt19937_64 rng(7);
    const RasterImage t = random_image(6, 6, rng, 0.2, 0.8);
    const RegionMask full(6, 6, 1.0);
    const RasterImage out = color_transfer(t, full, t, full);
    for (std::size_t i = 0; i < t.values().size(); ++i) EXPECT_NEAR(out.values()[i], t.values()[i], 1e-6);
}

TEST(ColorTransfer, ConstantReferenceCollapsesRegion) {
    std::mt19937_64 rng(8);
    const RasterImage t = random_image(6, 6, rng, 0.2, 0.8);
    RasterImage ref(6, 6);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) {
            ref.set(0, y, x, 0.6);
            ref.set(1, y, x, 0.3);
            ref.set(2, y, x, 0.2);
        }
    const RegionMask mask = RegionMask::from_box(6, 6, Box{1, 1, 3, 3});
    const RasterImage out = color_transfer(t, mask, ref, RegionMask(6, 6, 1.0));
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x)
            for (int c = 0; c < 3; ++c) {
                if (mask(y, x) == 1.0)
                    EXPECT_NEAR(out.at(c, y, x), ref.at(c, 0, 0), 1e-6);
                else
                    EXPECT_EQ(out.at(c, y, x), t.at(c, y, x));
            }
}

TEST(ColorTransfer, MaskedStatisticsMatchReference) {
    std::mt19937_64 rng(9);
    const RasterImage t = random_image(6, 6, rng, 0.3, 0.7);
    const RasterImage r = random_image(6, 6, rng, 0.3, 0.7);
    const RegionMask full(6, 6, 1.0);
    const RasterImage out = color_transfer(t, full, r, full);
    const auto got = masked_lab_stats(color::rgb_to_lab(out), full);
    const auto want = masked_lab_stats(color::rgb_to_lab(r), full);
    for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(got[c].mean, want[c].mean, 1e-6);
        EXPECT_NEAR(got[c].stddev, want[c].stddev, 1e-6);
    }
    const RasterImage again = color_transfer(out, full, r, full);
    for (std::size_t i = 0; i < out.values().size(); ++i) EXPECT_NEAR(again.values()[i], out.values()[i], 1e-6);
}

TEST(ColorTransfer, DegenerateMaskIsAnError) {
    const RasterImage t(6, 6, 0.5);
    const RegionMask one = RegionMask::from_box(6, 6, Box{2, 2, 1, 1});
    EXPECT_THROW(color_transfer(t, one, t, RegionMask(6, 6, 1.0)), DegenerateStatistics);
}

TEST(Poisson, IdenticalRegionIsUnchanged) {
    std::mt19937_64 rng(12);
    const RasterImage dst = random_image(12, 12, rng);
    const RasterImage src = dst.crop(Box{2, 2, 8, 8});
    const RegionMask mask = RegionMask::from_box(8, 8, Box{1, 1, 6, 6});
    const RasterImage out = poisson_blend(src, dst, mask, Offset{2, 2});
    for (std::size_t i = 0; i < dst.values().size(); ++i) EXPECT_NEAR(out.values()[i], dst.values()[i], 1e-6);
}

TEST(Poisson, ConstantIntoConstant) {
    const RasterImage dst(10, 10, 0.4), src(6, 6, 0.9);
    const RegionMask mask = RegionMask::from_box(6, 6, Box{1, 1, 4, 4});
    const RasterImage out = poisson_blend(src, dst, mask, Offset{2, 2});
    for (double v : out.values()) EXPECT_NEAR(v, 0.4, 1e-6);
}

TEST(Poisson, MatchesDenseSolveAndLeavesOutsideUntouched) {
    std::mt19937_64 rng(13);
    const RasterImage dst = random_image(12, 12, rng, 0.3, 0.7);
    const RasterImage src = random_image(12, 12, rng, 0.45, 0.55);
    const RegionMask mask = RegionMask::from_box(12, 12, Box{3, 3, 6, 6});
    const RasterImage out = poisson_blend(src, dst, mask, Offset{0, 0});
    const auto oracle = oracle::dense_poisson(src, dst, mask, 0, 0);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 12; ++x) {
                if (mask(y, x) == 1.0)
                    EXPECT_NEAR(out.at(c, y, x), std::clamp(oracle[c](y, x), 0.0, 1.0), 1e-5);
                else
                    EXPECT_EQ(out.at(c, y, x), dst.at(c, y, x));
            }
}

TEST(Poisson, InteriorSatisfiesStencil) {
    std::mt19937_64 rng(14);
    const RasterImage dst = random_image(14, 14, rng, 0.3, 0.7);
    const RasterImage src = random_image(10, 10, rng, 0.45, 0.55);
    const RegionMask mask = RegionMask::from_box(10, 10, Box{2, 2, 6, 5});
    const RasterImage out = poisson_blend(src, dst, mask, Offset{3, 1});
    const int ny[4] = {-1, 1, 0, 0}, nx[4] = {0, 0, -1, 1};
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 10; ++y)
            for (int x = 0; x < 10; ++x) {
                if (mask(y, x) != 1.0) continue;
                double lhs = 4.0 * out.at(c, y + 3, x + 1), rhs = 0.0;
                for (int k = 0; k < 4; ++k) {
                    lhs -= out.at(c, y + ny[k] + 3, x + nx[k] + 1);
                    rhs += src.at(c, y, x) - src.at(c, y + ny[k], x + nx[k]);
                }
                EXPECT_NEAR(lhs, rhs, 1e-5);
            }
}

TEST(Poisson, BorderAndEmptyMasks) {
    const RasterImage dst(8, 8, 0.2), src(8, 8, 0.6);
    EXPECT_THROW(poisson_blend(src, dst, RegionMask::from_box(8, 8, Box{0, 2, 3, 3}), Offset{}), ValidationError);
    EXPECT_THROW(poisson_blend(src, dst, RegionMask::from_box(8, 8, Box{2, 2, 3, 3}), Offset{4, 0}), ValidationError);
    EXPECT_EQ(poisson_blend(src, dst, RegionMask(8, 8), Offset{}), dst);
    RegionMask soft(8, 8);
    soft.set(3, 3, 0.5);
    EXPECT_THROW(poisson_blend(src, dst, soft, Offset{}), ValidationError);
}

TEST(Resample, IdentityIsBitExact) {
    std::mt19937_64 rng(15);
    const RasterImage img = random_image(7, 5, rng);
    EXPECT_EQ(resample_bilinear(img, 7, 5), img);
}

TEST(Resample, ConstantStaysConstant) {
    const RasterImage img(4, 6, 0.3);
    const RasterImage out = resample_bilinear(img, 9, 2);
    for (double v : out.values()) EXPECT_NEAR(v, 0.3, 1e-12);
}

TEST(Resample, TwoByTwoToThreeByThree) {
    const Plane src(2, 2, std::vector<double>{0.0, 1.0, 1.0, 0.0});
    const Plane out = resample_bilinear(src, 3, 3);
    // Corner-aligned: samples at 0, 0.5, 1 along each axis.
    const double want[3][3] = {{0.0, 0.5, 1.0}, {0.5, 0.5, 0.5}, {1.0, 0.5, 0.0}};
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) EXPECT_DOUBLE_EQ(out(y, x), want[y][x]);
}

TEST(Png, RoundsHalfUpAndRoundTrips) {
    EXPECT_EQ(to_byte(0.5 / 255.0), 1);
    EXPECT_EQ(to_byte(0.49 / 255.0), 0);
    EXPECT_EQ(to_byte(1.0), 255);
    RasterImage img(3, 4);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 4; ++x) img.set(c, y, x, ((c * 31 + y * 7 + x * 13) % 256) / 255.0);
    const auto path = (std::filesystem::temp_directory_path() / "redraw_png_roundtrip.png").string();
    write_png(path, img);
    const RasterImage back = read_png(path);
    ASSERT_EQ(back.height(), 3);
    ASSERT_EQ(back.width(), 4);
    for (std::size_t i = 0; i < img.values().size(); ++i) EXPECT_NEAR(back.values()[i], img.values()[i], 1e-12);
    EXPECT_THROW(read_png("/nonexistent/never.png"), IoError);
}
