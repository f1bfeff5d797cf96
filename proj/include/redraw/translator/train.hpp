#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "redraw/datasetgen/samplers.hpp"
#include "redraw/fourier.hpp"
#include "redraw/nn/adam.hpp"
#include "redraw/styleenc/train.hpp"
#include "redraw/translator/discriminator.hpp"
#include "redraw/translator/generator.hpp"
#include "redraw/translator/losses.hpp"
#include "redraw/translator/masks.hpp"

namespace redraw::translate {

struct RedrawerConfig {
    GeneratorConfig generator;
    DiscriminatorConfig discriminator;  // class count is taken from the class map
    int steps = 2000;
    int batch = 8;
    double lr_generator = 1e-4;
    double lr_discriminator = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double gamma = kR1Gamma;
    double band_fraction = kDefaultBandFraction;
    double border_fraction = kDefaultBorderFraction;
    double filter_threshold = fourier::kDefaultThreshold;
    std::size_t style_set_size = data::kDefaultStyleSetSize;
    bool hinge_generator = false;
    int validation_size = 16;
    int validation_every = 100;
    std::uint64_t seed = 0;
};

/// Design id -> discriminator class.
using ClassMap = std::map<std::string, int>;

struct TranslationBatch {
    nn::Tensor low, high;
    StyleBatch styles;  // style sets of design H
    Classes classes;
};

struct LossRow {
    int step = 0;
    double reconstruction = 0.0;
    double quality_t = 0.0, quality_lhat = 0.0, context_t = 0.0, context_hhat = 0.0;
    double disc_quality = 0.0, disc_context = 0.0;
    double generator_total = 0.0;
    std::optional<double> validation_reconstruction;
};

namespace detail {

inline int class_of(const ClassMap& classes, const std::string& design) {
    const auto it = classes.find(design);
    if (it == classes.end()) throw DatasetError("design '" + design + "' has no class");
    return it->second;
}

inline int class_count(const ClassMap& classes) {
    int k = 0;
    for (const auto& [design, c] : classes) {
        if (c < 0) throw ValidationError("class ids must be non-negative (design '" + design + "')");
        k = std::max(k, c + 1);
    }
    return k;
}

/// All crops must share size and region so that one mask pair serves every sample.
inline Box common_region(const data::Corpus& corpus, int size) {
    if (corpus.patches.empty()) throw DatasetError("translation corpus is empty");
    const Box r = corpus.patches.front().region;
    for (const auto& p : corpus.patches) {
        if (p.image.height() != size || p.image.width() != size)
            throw ValidationError("patch '" + p.id + "' is not " + std::to_string(size) + "x" + std::to_string(size));
        if (p.region != r) throw ValidationError("patch '" + p.id + "' has a different region box; crops must be standardized");
    }
    return r;
}

}  // namespace detail

/// Translation draws whose L and H designs fall into different classes.
class ClassedSampler {
public:
    ClassedSampler(const data::Corpus& corpus, const ClassMap& classes, std::uint64_t seed, std::size_t style_set_size)
        : corpus_(corpus), classes_(classes), sampler_(corpus, seed, style_set_size) {
        for (const auto& p : corpus.patches) detail::class_of(classes, p.design);
    }

    TranslationBatch next_batch(int n) {
        std::vector<RasterImage> low, high;
        std::vector<std::vector<RasterImage>> sets;
        Classes cls;
        for (int i = 0; i < n; ++i) {
            const data::TranslationDraw d = next();
            low.push_back(corpus_.patches[d.low].image);
            high.push_back(corpus_.patches[d.high].image);
            std::vector<RasterImage> s;
            for (std::size_t k : d.style_set) s.push_back(corpus_.patches[k].image);
            sets.push_back(std::move(s));
            cls.low.push_back(detail::class_of(classes_, d.design_low));
            cls.high.push_back(detail::class_of(classes_, d.design_high));
        }
        return {nn::stack_images(low), nn::stack_images(high), make_style_batch(sets), std::move(cls)};
    }

private:
    data::TranslationDraw next() {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            data::TranslationDraw d = sampler_.next();
            if (detail::class_of(classes_, d.design_low) != detail::class_of(classes_, d.design_high)) return d;
        }
        throw DatasetError("translation sampler: cannot find design pairs in different classes");
    }

    const data::Corpus& corpus_;
    const ClassMap& classes_;
    data::TranslationSampler sampler_;
};

/// t = G(l, S_H), l_hat = G(l, {l}), h_hat = G(h, {h}) in one generator pass.
inline Triplet redraw_triplet(const Generator& g, const TranslationBatch& b) {
    const int n = b.low.shape().n;
    const nn::Shape s = b.low.shape();
    const std::size_t per = 3 * s.plane();
    nn::Tensor content(nn::Shape{3 * n, 3, s.h, s.w});
    std::copy_n(b.low.data(), n * per, content.data());
    std::copy_n(b.low.data(), n * per, content.data() + n * per);
    std::copy_n(b.high.data(), n * per, content.data() + 2 * n * per);

    const int styled = b.styles.images.shape().n;
    StyleBatch sb{nn::Tensor(nn::Shape{styled + 2 * n, 3, s.h, s.w}), b.styles.sizes};
    std::copy_n(b.styles.images.data(), styled * per, sb.images.data());
    std::copy_n(b.low.data(), n * per, sb.images.data() + styled * per);
    std::copy_n(b.high.data(), n * per, sb.images.data() + (styled + n) * per);
    sb.sizes.insert(sb.sizes.end(), 2 * n, 1);

    const nn::Var out = g.forward(nn::Var::constant(content), sb);
    return {nn::slice_batch(out, 0, n), nn::slice_batch(out, n, n), nn::slice_batch(out, 2 * n, n)};
}

struct RedrawerModels {
    Generator generator;
    Discriminator quality;
    Discriminator context;
};

struct RedrawerResult {
    RedrawerModels models;
    std::vector<LossRow> log;
    MaskPair masks;
};

/// Mean L_R of the generator over fixed batches, without recording.
inline double validation_reconstruction(const Generator& g, const std::vector<TranslationBatch>& batches, double threshold) {
    nn::NoGradGuard off;
    double sum = 0.0;
    int n = 0;
    for (const auto& b : batches) {
        const int bn = b.low.shape().n;
        sum += reconstruction_loss(redraw_triplet(g, b), b.low, b.high, threshold).value().item() * bn;
        n += bn;
    }
    return sum / n;
}

inline std::vector<TranslationBatch> validation_batches(const data::Corpus& corpus, const ClassMap& classes, const RedrawerConfig& cfg) {
    ClassedSampler s(corpus, classes, cfg.seed ^ 0x5eedf00dULL, cfg.style_set_size);
    std::vector<TranslationBatch> out;
    for (int left = cfg.validation_size; left > 0; left -= cfg.batch) out.push_back(s.next_batch(std::min(left, cfg.batch)));
    return out;
}

/// Adversarial training: per batch one step of both discriminators, then one generator step.
/// `validation` defaults to the training corpus.
inline RedrawerResult train_redrawer(const data::Corpus& corpus, std::shared_ptr<const style::StyleEncoder> encoder, const ClassMap& classes,
                                     RedrawerConfig cfg, const data::Corpus* validation = nullptr,
                                     const std::function<void(const LossRow&)>& on_step = {}) {
    if (cfg.steps < 0 || cfg.batch < 1 || cfg.validation_size < 1 || !(cfg.lr_generator > 0.0) || !(cfg.lr_discriminator > 0.0))
        throw ValidationError("train_redrawer: steps >= 0, batch >= 1, validation_size >= 1 and positive learning rates required");
    const int k = detail::class_count(classes);
    if (k < 2) throw DatasetError("train_redrawer: at least 2 design classes required");
    cfg.discriminator.classes = k;
    cfg.discriminator.image_size = cfg.generator.image_size;
    const Box region = detail::common_region(corpus, cfg.generator.image_size);
    if (validation) detail::common_region(*validation, cfg.generator.image_size);
    const int size = cfg.generator.image_size;
    MaskPair masks = build_masks(size, size, region, cfg.band_fraction, cfg.border_fraction);

    ClassedSampler sampler(corpus, classes, cfg.seed, cfg.style_set_size);
    const auto val = validation_batches(validation ? *validation : corpus, classes, cfg);

    RedrawerResult r{{Generator(cfg.generator, std::move(encoder), cfg.seed), Discriminator(cfg.discriminator, "quality", cfg.seed + 1),
                      Discriminator(cfg.discriminator, "context", cfg.seed + 2)},
                     {},
                     masks};
    auto& [g, q, c] = r.models;
    const auto gp = g.params().vars(), qp = q.params().vars(), cp = c.params().vars();
    nn::Adam opt_g(gp, {cfg.lr_generator, cfg.beta1, cfg.beta2}), opt_q(qp, {cfg.lr_discriminator, cfg.beta1, cfg.beta2}),
        opt_c(cp, {cfg.lr_discriminator, cfg.beta1, cfg.beta2});
    const nn::Tensor qcov = mask_tensor(masks.quality, cfg.batch), ccov = mask_tensor(masks.context, cfg.batch);
    const DiscriminatorPair pair{q, c, qcov, ccov};

    for (int step = 1; step <= cfg.steps; ++step) {
        const TranslationBatch b = sampler.next_batch(cfg.batch);
        const Triplet tr = redraw_triplet(g, b);
        const GeneratedImages gen{tr.t.value(), tr.l_hat.value(), tr.h_hat.value()};

        const nn::Var dq = discriminator_objective(Role::quality, q, qcov, b.low, b.high, gen, b.classes, cfg.gamma);
        const nn::Var dc = discriminator_objective(Role::context, c, ccov, b.low, b.high, gen, b.classes, cfg.gamma);
        opt_q.step(nn::grad(dq, qp));
        opt_c.step(nn::grad(dc, cp));

        const GeneratorTerms terms = generator_terms(tr, b.low, b.high, b.classes, pair, cfg.filter_threshold, cfg.hinge_generator);
        const nn::Var total = generator_objective(terms);
        opt_g.step(nn::grad(total, gp));

        LossRow row{step,
                    terms.reconstruction.value().item(),
                    terms.quality_t.value().item(),
                    terms.quality_lhat.value().item(),
                    terms.context_t.value().item(),
                    terms.context_hhat.value().item(),
                    dq.value().item(),
                    dc.value().item(),
                    total.value().item(),
                    std::nullopt};
        if (step == 1 || step == cfg.steps || (cfg.validation_every > 0 && step % cfg.validation_every == 0))
            row.validation_reconstruction = validation_reconstruction(g, val, cfg.filter_threshold);
        r.log.push_back(row);
        if (on_step) on_step(row);
    }
    return r;
}

inline constexpr const char* kLossLogHeader = "step\tL_R\tL_Q_t\tL_Q_lhat\tL_C_t\tL_C_hhat\tD_quality\tD_context\tG_total\tval_L_R";

inline void write_loss_log(const std::filesystem::path& path, const std::vector<LossRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << kLossLogHeader << '\n';
    using style::format_double;
    for (const auto& r : rows) {
        out << r.step << '\t' << format_double(r.reconstruction) << '\t' << format_double(r.quality_t) << '\t' << format_double(r.quality_lhat)
            << '\t' << format_double(r.context_t) << '\t' << format_double(r.context_hhat) << '\t' << format_double(r.disc_quality) << '\t'
            << format_double(r.disc_context) << '\t' << format_double(r.generator_total) << '\t'
            << (r.validation_reconstruction ? format_double(*r.validation_reconstruction) : "-") << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------------------------
// Evaluation

/// High-frequency fraction of an image's lightness inside `box`.
inline double region_high_frequency(const RasterImage& img, const Box& box, double threshold = fourier::kDefaultThreshold) {
    const Plane l = color::lightness(img);
    Plane crop(box.h, box.w);
    for (int y = 0; y < box.h; ++y)
        for (int x = 0; x < box.w; ++x) crop(y, x) = l(box.y + y, box.x + x);
    return fourier::high_frequency_fraction(crop, threshold);
}

struct EvalReport {
    int samples = 0;
    double reconstruction = 0.0;         // mean L_R
    double detail_gain_fraction = 0.0;   // share of samples with hf(t) > hf(l) in the region
    double mean_hf_t = 0.0, mean_hf_l = 0.0;
    double quality_score_t = 0.0;        // mean D_Q(t)_H
    double quality_score_l = 0.0;        // mean D_Q(l)_H
};

inline EvalReport evaluate_redrawer(const RedrawerModels& m, const std::vector<TranslationBatch>& batches, const MaskPair& masks, const Box& region,
                                    double threshold = fourier::kDefaultThreshold) {
    nn::NoGradGuard off;
    EvalReport e;
    int gains = 0;
    for (const auto& b : batches) {
        const int n = b.low.shape().n;
        const Triplet tr = redraw_triplet(m.generator, b);
        e.reconstruction += reconstruction_loss(tr, b.low, b.high, threshold).value().item() * n;
        const nn::Tensor cov = mask_tensor(masks.quality, n);
        const nn::Tensor st = nn::spatial_mean(class_maps(m.quality(tr.t, cov).scores, b.classes.high)).value();
        const nn::Tensor sl = nn::spatial_mean(class_maps(m.quality(nn::Var::constant(b.low), cov).scores, b.classes.high)).value();
        for (int i = 0; i < n; ++i) {
            const double ht = region_high_frequency(nn::tensor_image(tr.t.value(), i), region, threshold);
            const double hl = region_high_frequency(nn::tensor_image(b.low, i), region, threshold);
            gains += ht > hl;
            e.mean_hf_t += ht;
            e.mean_hf_l += hl;
            e.quality_score_t += st[i];
            e.quality_score_l += sl[i];
        }
        e.samples += n;
    }
    const double n = e.samples;
    e.reconstruction /= n;
    e.detail_gain_fraction = gains / n;
    e.mean_hf_t /= n;
    e.mean_hf_l /= n;
    e.quality_score_t /= n;
    e.quality_score_l /= n;
    return e;
}

}  // namespace redraw::translate
