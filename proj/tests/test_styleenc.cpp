#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "redraw/datasetgen/synth.hpp"
#include "redraw/nn/gradcheck.hpp"
#include "redraw/styleenc/encoder.hpp"
#include "redraw/styleenc/metrics.hpp"
#include "redraw/styleenc/train.hpp"
#include "redraw/styleenc/triplet.hpp"
#include "redraw/styleenc/upgma.hpp"
#include "temp_dir.hpp"

using namespace redraw;
using namespace redraw::style;
using redraw::testing_support::TempDir;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

std::vector<double> padded(std::initializer_list<double> head) {
    std::vector<double> v(kEmbeddingDim, 0.0);
    std::copy(head.begin(), head.end(), v.begin());
    return v;
}

// Random orthogonal matrix by Gram-Schmidt.
std::vector<std::vector<double>> random_rotation(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::vector<double>> q;
    while (q.size() < n) {
        auto v = random_vec(rng, n);
        for (const auto& u : q) {
            const double d = std::inner_product(v.begin(), v.end(), u.begin(), 0.0);
            for (std::size_t k = 0; k < n; ++k) v[k] -= d * u[k];
        }
        const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        for (double& x : v) x /= norm;
        q.push_back(v);
    }
    return q;
}

std::vector<double> apply(const std::vector<std::vector<double>>& m, const std::vector<double>& v) {
    std::vector<double> out(m.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = std::inner_product(m[i].begin(), m[i].end(), v.begin(), 0.0);
    return out;
}

nn::Tensor embedding_batch(const std::vector<std::vector<double>>& rows) {
    nn::Tensor t(nn::Shape{static_cast<int>(rows.size()), static_cast<int>(rows[0].size()), 1, 1});
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows[i].size(); ++k) t(static_cast<int>(i), static_cast<int>(k), 0, 0) = rows[i][k];
    return t;
}

EncoderConfig tiny_arch(int size = 16) {
    EncoderConfig a;
    a.image_size = size;
    a.content_blocks = 2;
    a.content_width = 4;
    a.style_blocks = 2;
    a.style_width = 3;
    a.hidden = 8;
    return a;
}

std::vector<RasterImage> synthetic_portraits(int count, int size, std::uint64_t seed) {
    const auto specs = data::default_style_specs(1, seed);
    std::mt19937_64 rng(seed);
    std::vector<RasterImage> out;
    for (int i = 0; i < count; ++i)
        out.push_back(data::render_eye(specs[0], data::make_design(specs[0], i % 3), i % 2 ? data::DetailLabel::low : data::DetailLabel::high,
                                       data::sample_nuisance(rng), size));
    return out;
}

}  // namespace

TEST(TripletLoss, HandExamples) {
    const auto z = padded({});
    EXPECT_DOUBLE_EQ(triplet_margin_loss(z, z, padded({1.0, 1.0})), 0.0);
    EXPECT_DOUBLE_EQ(triplet_margin_loss(z, z, z), 1.0);
    EXPECT_DOUBLE_EQ(triplet_margin_loss(z, padded({1.0}), padded({1.0})), 1.0);
}

TEST(TripletLoss, NonNegativeAndZeroExactlyWhenMarginMet) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 500; ++t) {
        const auto a = random_vec(rng, 32, 0.3), p = random_vec(rng, 32, 0.3), n = random_vec(rng, 32, 0.3);
        const double l = triplet_margin_loss(a, p, n);
        EXPECT_GE(l, 0.0);
        EXPECT_EQ(l == 0.0, squared_distance(a, n) >= squared_distance(a, p) + 1.0);
    }
}

TEST(TripletLoss, InvariantUnderCommonRotation) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t) {
        const auto r = random_rotation(rng, 32);
        const auto a = random_vec(rng, 32, 0.2), p = random_vec(rng, 32, 0.2), n = random_vec(rng, 32, 0.2);
        EXPECT_NEAR(triplet_margin_loss(a, p, n), triplet_margin_loss(apply(r, a), apply(r, p), apply(r, n)), 1e-12);
    }
}

TEST(TripletLoss, BatchFormMatchesScalarAndPassesGradcheck) {
    std::mt19937_64 rng(12);
    std::vector<std::vector<double>> a, p, n;
    for (int i = 0; i < 5; ++i) {
        a.push_back(random_vec(rng, 32, 0.15));
        p.push_back(random_vec(rng, 32, 0.15));
        n.push_back(random_vec(rng, 32, 0.15));
    }
    double want = 0.0;
    for (int i = 0; i < 5; ++i) want += triplet_margin_loss(a[i], p[i], n[i]) / 5.0;
    const nn::Var va = nn::Var::leaf(embedding_batch(a), true), vp = nn::Var::leaf(embedding_batch(p), true),
                  vn = nn::Var::leaf(embedding_batch(n), true);
    EXPECT_NEAR(triplet_margin_loss(va, vp, vn).value().item(), want, 1e-12);
    // Every per-sample gap is positive here, so the points sit away from the hinge.
    for (int i = 0; i < 5; ++i) ASSERT_GT(triplet_margin_loss(a[i], p[i], n[i]), 0.1);
    EXPECT_LE(nn::finite_diff_gradcheck([&] { return triplet_margin_loss(va, vp, vn); }, {va, vp, vn}, 1e-5), 1e-4);
}

TEST(Encoder, DeterministicAndContextOrderInvariant) {
    const StyleEncoder enc(tiny_arch(), 3);
    const auto imgs = synthetic_portraits(6, 16, 1);
    const std::vector<RasterImage> ctx(imgs.begin() + 1, imgs.end());
    const Embedding a = encode_design(enc, imgs[0], ctx), b = encode_design(enc, imgs[0], ctx);
    ASSERT_EQ(a.size(), 32u);
    EXPECT_EQ(a, b);
    std::vector<RasterImage> shuffled(ctx.rbegin(), ctx.rend());
    std::swap(shuffled[0], shuffled[2]);
    const Embedding c = encode_design(enc, imgs[0], shuffled);
    for (int k = 0; k < 32; ++k) EXPECT_NEAR(a[k], c[k], 1e-6);
    for (double v : a) EXPECT_TRUE(std::isfinite(v));
}

TEST(Encoder, ContextChangesTheEmbedding) {
    const StyleEncoder enc(tiny_arch(), 3);
    const auto imgs = synthetic_portraits(4, 16, 1);
    const auto other = synthetic_portraits(3, 16, 99);
    const Embedding a = encode_design(enc, imgs[0], std::vector<RasterImage>(imgs.begin() + 1, imgs.end()));
    const Embedding b = encode_design(enc, imgs[0], other);
    EXPECT_GT(squared_distance(a, b), 1e-12);
}

TEST(Encoder, EmptyContextIsAnError) {
    const StyleEncoder enc(tiny_arch(), 3);
    const auto imgs = synthetic_portraits(1, 16, 1);
    EXPECT_THROW(encode_design(enc, imgs[0], std::vector<RasterImage>{}), ValidationError);
}

TEST(Encoder, RejectsBadGeometry) {
    EncoderConfig a = tiny_arch(16);
    a.content_blocks = 4;
    EXPECT_THROW(StyleEncoder(a, 0), ValidationError);
    const StyleEncoder enc(tiny_arch(16), 0);
    const auto imgs = synthetic_portraits(2, 24, 1);
    EXPECT_THROW(encode_design(enc, imgs[0], imgs), ShapeError);
}

TEST(Encoder, SeededForwardMatchesRegressionFixture) {
    const StyleEncoder enc(tiny_arch(), 7);
    const auto imgs = synthetic_portraits(4, 16, 21);
    const Embedding e = encode_design(enc, imgs[0], std::vector<RasterImage>(imgs.begin() + 1, imgs.end()));
    std::ifstream in(std::string(REDRAW_FIXTURE_DIR) + "/encoder_seed7.txt");
    ASSERT_TRUE(in) << "missing fixture";
    std::vector<double> want;
    for (double v; in >> v;) want.push_back(v);
    ASSERT_EQ(want.size(), 32u);
    for (int k = 0; k < 32; ++k) EXPECT_NEAR(e[k], want[k], 1e-9 * std::max(1.0, std::abs(want[k])));
}

TEST(Encoder, GradientsMatchFiniteDifferences) {
    const StyleEncoder enc(tiny_arch(), 5);
    const auto imgs = synthetic_portraits(5, 16, 2);
    const nn::Var x = nn::Var::constant(nn::stack_images(std::span<const RasterImage>(imgs.data(), 2)));
    const nn::Var ctx = nn::Var::constant(lightness_tensor(std::span<const RasterImage>(imgs.data() + 2, 3)));
    std::mt19937_64 rng(1);
    const nn::Tensor r(nn::Shape{2, 32, 1, 1}, random_vec(rng, 64));
    // Zero-initialised biases over blank regions put ReLU inputs exactly on the kink.
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    for (const auto& e : enc.params().entries())
        if (e.name.ends_with(".bias"))
            for (double& v : e.var.mutable_value().values()) v += jitter(rng);
    const auto params = enc.params().vars();
    const double err = nn::finite_diff_gradcheck(
        [&] { return nn::sum(nn::mul_const(enc.forward(x, ctx, {2, 1}, {1, 1}), r)); }, params, 1e-5, 150, 3);
    EXPECT_LE(err, 1e-4);
}

TEST(EncoderTraining, LossDecreasesOnTwoDesigns) {
    const auto specs = data::default_style_specs(2, 31);
    data::Corpus corpus = data::synth_generate(specs, 2, 10, 16);
    // Keep a single production: 2 designs x 10 portraits.
    std::erase_if(corpus.patches, [&](const data::Patch& p) { return p.production != specs[0].production_id; });
    ASSERT_EQ(corpus.size(), 20u);
    EncoderTrainConfig cfg;
    cfg.steps = 200;
    cfg.lr = 1e-3;
    cfg.seed = 4;
    const auto res = train_style_encoder(corpus, tiny_arch(), cfg);
    ASSERT_EQ(res.losses.size(), 200u);
    const double first = std::accumulate(res.losses.begin(), res.losses.begin() + 20, 0.0) / 20;
    const double last = std::accumulate(res.losses.end() - 20, res.losses.end(), 0.0) / 20;
    EXPECT_LT(last, first);
}

TEST(EncoderTraining, FixedSeedIsDeterministic) {
    const data::Corpus corpus = data::synth_generate(data::default_style_specs(2, 3), 2, 4, 16);
    EncoderTrainConfig cfg;
    cfg.steps = 8;
    cfg.batch = 3;
    cfg.seed = 9;
    const auto a = train_style_encoder(corpus, tiny_arch(), cfg), b = train_style_encoder(corpus, tiny_arch(), cfg);
    EXPECT_EQ(a.losses, b.losses);
    const auto wa = a.encoder.weights(), wb = b.encoder.weights();
    for (std::size_t i = 0; i < wa.entries.size(); ++i)
        EXPECT_TRUE(std::ranges::equal(wa.entries[i].second.values(), wb.entries[i].second.values()));
}

TEST(EncoderTraining, SingleDesignIsADatasetError) {
    data::Corpus corpus = data::synth_generate(data::default_style_specs(2, 3), 2, 4, 16);
    const std::string keep = corpus.patches[0].design;
    std::erase_if(corpus.patches, [&](const data::Patch& p) { return p.design != keep; });
    EXPECT_THROW(train_style_encoder(corpus, tiny_arch(), EncoderTrainConfig{}), DatasetError);
}

TEST(Upgma, ObviousSeparation) {
    const std::vector<std::vector<double>> pts{padded({0.0}), padded({1.0}), padded({10.0})};
    const auto labels = upgma_cluster(pts, 5.0);
    EXPECT_EQ(labels, (std::vector<int>{0, 0, 1}));
    const auto merges = upgma_merges(pts);
    ASSERT_EQ(merges.size(), 2u);
    EXPECT_EQ(merges[0], (Merge{0, 1, 1.0, 2}));
    EXPECT_EQ(merges[1].a, 0);
    EXPECT_EQ(merges[1].b, 2);
    EXPECT_DOUBLE_EQ(merges[1].height, 9.5);
}

TEST(Upgma, IdenticalPointsFormOneCluster) {
    const std::vector<std::vector<double>> pts(6, padded({0.3, -2.0}));
    for (double cut : {1e-9, 0.5, 100.0}) {
        const auto labels = upgma_cluster(pts, cut);
        EXPECT_TRUE(std::all_of(labels.begin(), labels.end(), [](int l) { return l == 0; }));
    }
    EXPECT_EQ(upgma_auto_cluster(pts).labels, std::vector<int>(6, 0));
}

TEST(Upgma, TiesBreakOnSmallestIndexPair) {
    // Unit square corners: four pairs at distance 1; (0,1) must merge first, then (2,3).
    const std::vector<std::vector<double>> pts{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    const auto m = upgma_merges(pts);
    EXPECT_EQ(m[0].a, 0);
    EXPECT_EQ(m[0].b, 1);
    EXPECT_EQ(m[1].a, 2);
    EXPECT_EQ(m[1].b, 3);
}

TEST(Upgma, MatchesBruteForceReference) {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 50; ++t) {
        std::vector<std::vector<double>> pts;
        for (int i = 0; i < 8; ++i) pts.push_back(random_vec(rng, 32));
        const auto got = upgma_merges(pts);
        const auto want = oracle::brute_force_upgma(pts);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            EXPECT_EQ(got[k].a, want[k].a) << "instance " << t << " step " << k;
            EXPECT_EQ(got[k].b, want[k].b) << "instance " << t << " step " << k;
            EXPECT_NEAR(got[k].height, want[k].height, 1e-9);
        }
    }
}

TEST(Upgma, PermutationInvariantUpToRelabeling) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        std::vector<std::vector<double>> pts;
        for (int i = 0; i < 12; ++i) pts.push_back(random_vec(rng, 4));
        std::vector<int> perm(12);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::vector<double>> shuffled;
        for (int i : perm) shuffled.push_back(pts[i]);
        const double cut = upgma_merges(pts)[6].height + 1e-9;
        const auto a = upgma_cluster(pts, cut), b = upgma_cluster(shuffled, cut);
        for (int i = 0; i < 12; ++i)
            for (int j = 0; j < 12; ++j) EXPECT_EQ(a[perm[i]] == a[perm[j]], b[i] == b[j]);
    }
}

TEST(Upgma, AutoCutRecoversOneHotDesignPartition) {
    const data::Corpus corpus = data::synth_generate(data::default_style_specs(2, 6), 3, 4, 16);
    std::map<std::string, int> design_index;
    for (const auto& p : corpus.patches) design_index.emplace(p.design, static_cast<int>(design_index.size()));
    std::vector<std::vector<double>> pts;
    std::vector<std::string> truth;
    for (const auto& p : corpus.patches) {
        std::vector<double> v(kEmbeddingDim, 0.0);
        v[design_index[p.design]] = 1.0;
        pts.push_back(v);
        truth.push_back(p.design);
    }
    const auto r = upgma_auto_cluster(pts);
    EXPECT_DOUBLE_EQ(cluster_purity(r.labels, truth), 1.0);
    EXPECT_EQ(*std::max_element(r.labels.begin(), r.labels.end()) + 1, 6);
    EXPECT_DOUBLE_EQ(r.silhouette, 1.0);
}

TEST(Upgma, SingleAndPairInputs) {
    EXPECT_EQ(upgma_auto_cluster({padded({1.0})}).labels, std::vector<int>{0});
    EXPECT_EQ(upgma_auto_cluster({padded({1.0}), padded({5.0})}).labels, (std::vector<int>{0, 0}));
    EXPECT_THROW(upgma_merges({}), ValidationError);
    EXPECT_THROW(upgma_cluster({padded({1.0})}, -1.0), ValidationError);
}

TEST(SeparationRatio, HandExamples) {
    EXPECT_DOUBLE_EQ(separation_ratio<int>({{1.0}, {1.0}, {4.0}, {4.0}}, {0, 0, 1, 1}), 0.0);
    EXPECT_DOUBLE_EQ(separation_ratio<int>({{0.0}, {2.0}, {10.0}, {12.0}}, {0, 0, 1, 1}), 0.04);
}

TEST(SeparationRatio, Errors) {
    EXPECT_THROW(separation_ratio<int>({{0.0}, {1.0}, {5.0}}, {0, 0, 1}), DegenerateStatistics);
    EXPECT_THROW(separation_ratio<int>({{0.0}, {2.0}, {2.0}, {0.0}}, {0, 0, 1, 1}), DegenerateStatistics);
    EXPECT_THROW(separation_ratio<int>({{0.0}, {2.0}}, {0, 0}), DegenerateStatistics);
}

TEST(SeparationRatio, InvariantUnderRigidMotionAndScale) {
    std::mt19937_64 rng(19);
    std::vector<std::vector<double>> pts;
    std::vector<int> labels;
    for (int d = 0; d < 4; ++d) {
        const auto centre = random_vec(rng, 32, 3.0);
        for (int k = 0; k < 5; ++k) {
            auto v = random_vec(rng, 32, 0.5);
            for (int i = 0; i < 32; ++i) v[i] += centre[i];
            pts.push_back(v);
            labels.push_back(d);
        }
    }
    const double base = separation_ratio(pts, labels);
    const auto rot = random_rotation(rng, 32);
    const auto shift = random_vec(rng, 32, 10.0);
    std::vector<std::vector<double>> moved, scaled;
    for (const auto& p : pts) {
        auto q = apply(rot, p);
        for (int i = 0; i < 32; ++i) q[i] += shift[i];
        moved.push_back(q);
        auto s = p;
        for (double& x : s) x *= 7.5;
        scaled.push_back(s);
    }
    EXPECT_NEAR(separation_ratio(moved, labels), base, 1e-10 * base);
    EXPECT_NEAR(separation_ratio(scaled, labels), base, 1e-10 * base);
}

TEST(Purity, CountsMajorityLabels) {
    EXPECT_DOUBLE_EQ(cluster_purity<std::string>({0, 0, 1, 1}, {"a", "a", "b", "b"}), 1.0);
    EXPECT_DOUBLE_EQ(cluster_purity<std::string>({0, 0, 0, 1}, {"a", "a", "b", "b"}), 0.75);
}

TEST(Embeddings, TsvRoundTripIsExact) {
    TempDir dir;
    std::mt19937_64 rng(2);
    std::vector<EmbeddingRecord> recs{{"a", "p0", "d0", random_vec(rng, 32)}, {"b", "p1", "", random_vec(rng, 32)}};
    write_embeddings(dir.path() / "e.tsv", recs);
    const auto back = read_embeddings(dir.path() / "e.tsv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].vector, recs[0].vector);
    EXPECT_EQ(back[1].design, "");
    EXPECT_EQ(back[1].vector, recs[1].vector);

    std::ofstream(dir.path() / "bad.tsv") << "id\tproduction\tdesign\n" << "x\tp\td\t1.0\n";
    EXPECT_THROW(read_embeddings(dir.path() / "bad.tsv"), FormatError);
}
