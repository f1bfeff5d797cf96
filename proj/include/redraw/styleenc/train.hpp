#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "redraw/datasetgen/samplers.hpp"
#include "redraw/nn/adam.hpp"
#include "redraw/styleenc/encoder.hpp"
#include "redraw/styleenc/triplet.hpp"

namespace redraw::style {

struct EncoderTrainConfig {
    int steps = 2000;
    int batch = 8;
    double lr = 1e-4;
    int context_size = 4;
    std::uint64_t seed = 0;
};

struct EncoderTrainResult {
    StyleEncoder encoder;
    std::vector<double> losses;  // mean triplet loss of each step's batch
};

namespace detail {

inline std::vector<nn::Tensor> image_cache(const data::Corpus& corpus, int size) {
    std::vector<nn::Tensor> out;
    out.reserve(corpus.size());
    for (const auto& p : corpus.patches) {
        if (p.image.height() != size || p.image.width() != size)
            throw ValidationError("patch '" + p.id + "' is not " + std::to_string(size) + "x" + std::to_string(size));
        out.push_back(nn::image_tensor(p.image));
    }
    return out;
}

inline std::vector<nn::Tensor> lightness_cache(const data::Corpus& corpus) {
    std::vector<nn::Tensor> out;
    out.reserve(corpus.size());
    for (const auto& p : corpus.patches) out.push_back(lightness_tensor(std::span<const RasterImage>(&p.image, 1)));
    return out;
}

inline nn::Tensor gather(const std::vector<nn::Tensor>& cache, const std::vector<std::size_t>& idx) {
    const nn::Shape s = cache.at(idx.at(0)).shape();
    nn::Tensor out(nn::Shape{static_cast<int>(idx.size()), s.c, s.h, s.w});
    const std::size_t per = s.numel();
    for (std::size_t i = 0; i < idx.size(); ++i) std::copy_n(cache[idx[i]].data(), per, out.data() + i * per);
    return out;
}

// Rows start, start + stride, ... of a batch.
inline nn::Var strided(const nn::Var& v, int start, int stride) {
    std::vector<nn::Var> parts;
    for (int i = start; i < v.shape().n; i += stride) parts.push_back(nn::slice_batch(v, i, 1));
    return nn::concat_batch(parts);
}

}  // namespace detail

/// Triplet-loss training with balanced sampling; each triplet is normalised by a fresh
/// random context drawn from its production.
inline EncoderTrainResult train_style_encoder(const data::Corpus& corpus, const EncoderConfig& arch, const EncoderTrainConfig& cfg,
                                              const std::function<void(int, double)>& on_step = {}) {
    if (cfg.steps < 0 || cfg.batch < 1 || cfg.context_size < 1 || !(cfg.lr > 0.0))
        throw ValidationError("train_style_encoder: steps >= 0, batch >= 1, context >= 1 and lr > 0 required");
    data::TripletSampler sampler(corpus, cfg.seed);
    const auto images = detail::image_cache(corpus, arch.image_size);
    const auto light = detail::lightness_cache(corpus);

    EncoderTrainResult result{StyleEncoder(arch, cfg.seed), {}};
    StyleEncoder& enc = result.encoder;
    const auto params = enc.params().vars();
    nn::Adam opt(params, nn::AdamConfig{cfg.lr});

    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<std::size_t> portraits, context;
        std::vector<int> context_sizes, counts;
        for (const auto& t : sampler.next_batch(static_cast<std::size_t>(cfg.batch))) {
            portraits.insert(portraits.end(), {t.p1, t.p2, t.p3});
            const auto ctx = sampler.context(t.production, static_cast<std::size_t>(cfg.context_size));
            context.insert(context.end(), ctx.begin(), ctx.end());
            context_sizes.push_back(static_cast<int>(ctx.size()));
            counts.push_back(3);
        }
        const nn::Var emb = enc.forward(nn::Var::constant(detail::gather(images, portraits)),
                                        nn::Var::constant(detail::gather(light, context)), context_sizes, counts);
        const nn::Var loss =
            triplet_margin_loss(detail::strided(emb, 0, 3), detail::strided(emb, 1, 3), detail::strided(emb, 2, 3));
        opt.step(nn::grad(loss, params));
        result.losses.push_back(loss.value().item());
        if (on_step) on_step(step, result.losses.back());
    }
    return result;
}

/// Embeds every patch in corpus order. Each production is normalised by one seeded
/// context draw of `context_size` of its own patches (all of them when context_size <= 0).
inline std::vector<Embedding> embed_corpus(const StyleEncoder& enc, const data::Corpus& corpus, int context_size, std::uint64_t seed,
                                           std::size_t chunk = 64) {
    std::vector<Embedding> out(corpus.size());
    const data::CorpusIndex index(corpus);
    std::mt19937_64 rng(seed);
    for (const auto& prod : index.productions()) {
        const auto ctx_idx = context_size > 0 ? data::sample_without_replacement(prod.all, static_cast<std::size_t>(context_size), rng)
                                              : prod.all;
        std::vector<RasterImage> ctx;
        for (std::size_t i : ctx_idx) ctx.push_back(corpus.patches[i].image);
        for (std::size_t start = 0; start < prod.all.size(); start += chunk) {
            std::vector<RasterImage> batch;
            for (std::size_t k = start; k < std::min(prod.all.size(), start + chunk); ++k) batch.push_back(corpus.patches[prod.all[k]].image);
            const auto e = enc.encode(batch, ctx);
            for (std::size_t k = 0; k < e.size(); ++k) out[prod.all[start + k]] = e[k];
        }
    }
    return out;
}

struct EmbeddingRecord {
    std::string id;
    std::string production;
    std::string design;  // "-" when unknown
    Embedding vector;
};

inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw ValidationError("cannot format number");
    return std::string(buf, ptr);
}

inline double parse_double(const std::string& s, int line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) throw FormatError("bad number '" + s + "'", line);
    return v;
}

/// Tab-separated: id, production, design, then the embedding components.
inline void write_embeddings(const std::filesystem::path& path, const std::vector<EmbeddingRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "id\tproduction\tdesign";
    for (int k = 0; k < kEmbeddingDim; ++k) out << "\te" << k;
    out << '\n';
    for (const auto& r : records) {
        if (r.vector.size() != static_cast<std::size_t>(kEmbeddingDim)) throw ShapeError("embedding must have 32 components");
        out << r.id << '\t' << r.production << '\t' << (r.design.empty() ? "-" : r.design);
        for (double v : r.vector) out << '\t' << format_double(v);
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

inline std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<EmbeddingRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = data::detail::split(line, '\t');
        if (lineno == 1) {
            if (f.empty() || f[0] != "id") throw FormatError("missing embedding header", lineno);
            continue;
        }
        if (f.size() != 3 + static_cast<std::size_t>(kEmbeddingDim))
            throw FormatError("expected " + std::to_string(3 + kEmbeddingDim) + " fields, found " + std::to_string(f.size()), lineno);
        EmbeddingRecord r{f[0], f[1], f[2] == "-" ? std::string() : f[2], {}};
        for (int k = 0; k < kEmbeddingDim; ++k) r.vector.push_back(parse_double(f[3 + k], lineno));
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace redraw::style
