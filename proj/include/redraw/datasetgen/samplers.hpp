#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "redraw/datasetgen/corpus.hpp"

namespace redraw::data {

/// Patch indices grouped production -> design -> detail level, in sorted id order.
class CorpusIndex {
public:
    struct Design {
        std::string id;
        std::vector<std::size_t> low, high, all;
    };
    struct Production {
        std::string id;
        std::vector<Design> designs;
        std::vector<std::size_t> all;
    };

    explicit CorpusIndex(const Corpus& corpus) {
        std::map<std::string, std::map<std::string, Design>> grouped;
        std::map<std::string, std::string> owner;
        for (std::size_t i = 0; i < corpus.patches.size(); ++i) {
            const Patch& p = corpus.patches[i];
            auto [it, fresh] = owner.emplace(p.design, p.production);
            if (!fresh && it->second != p.production)
                throw DatasetError("design '" + p.design + "' appears in productions '" + it->second + "' and '" + p.production + "'");
            Design& d = grouped[p.production][p.design];
            d.id = p.design;
            d.all.push_back(i);
            if (p.detail == DetailLabel::low) d.low.push_back(i);
            if (p.detail == DetailLabel::high) d.high.push_back(i);
        }
        for (auto& [pid, designs] : grouped) {
            Production prod{pid, {}, {}};
            for (auto& [did, d] : designs) {
                prod.all.insert(prod.all.end(), d.all.begin(), d.all.end());
                prod.designs.push_back(std::move(d));
            }
            std::sort(prod.all.begin(), prod.all.end());
            productions_.push_back(std::move(prod));
        }
    }

    const std::vector<Production>& productions() const { return productions_; }

private:
    std::vector<Production> productions_;
};

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Indices of `k` distinct elements of `pool` (all of it when k >= pool size), in draw order.
inline std::vector<std::size_t> sample_without_replacement(const std::vector<std::size_t>& pool, std::size_t k, std::mt19937_64& rng) {
    std::vector<std::size_t> v = pool;
    const std::size_t take = std::min(k, v.size());
    for (std::size_t i = 0; i < take; ++i) std::swap(v[i], v[i + uniform_index(rng, v.size() - i)]);
    v.resize(take);
    return v;
}

struct Triplet {
    std::size_t p1, p2, p3;  // corpus indices; p1, p2 share a design, p3 is another design
    std::size_t production;  // index into CorpusIndex::productions()
};

/// Balanced triplet draws: production uniform, anchor design uniform within it, then two
/// distinct portraits of the anchor and one portrait of a different design of the same production.
class TripletSampler {
public:
    TripletSampler(const Corpus& corpus, std::uint64_t seed) : index_(corpus), rng_(seed) {
        if (index_.productions().empty()) throw DatasetError("triplet sampler: empty corpus");
        for (const auto& p : index_.productions()) {
            if (p.designs.size() < 2) throw DatasetError("triplet sampler: production '" + p.id + "' has fewer than 2 designs");
            for (const auto& d : p.designs)
                if (d.all.size() < 2) throw DatasetError("triplet sampler: design '" + d.id + "' has fewer than 2 portraits");
        }
    }

    Triplet next() {
        const auto& prods = index_.productions();
        const std::size_t pi = uniform_index(rng_, prods.size());
        const auto& prod = prods[pi];
        const std::size_t a = uniform_index(rng_, prod.designs.size());
        std::size_t n = uniform_index(rng_, prod.designs.size() - 1);
        if (n >= a) ++n;
        const auto& pool = prod.designs[a].all;
        const std::size_t i = uniform_index(rng_, pool.size());
        std::size_t j = uniform_index(rng_, pool.size() - 1);
        if (j >= i) ++j;
        const auto& neg = prod.designs[n].all;
        return {pool[i], pool[j], neg[uniform_index(rng_, neg.size())], pi};
    }

    std::vector<Triplet> next_batch(std::size_t batch) {
        std::vector<Triplet> out;
        out.reserve(batch);
        for (std::size_t k = 0; k < batch; ++k) out.push_back(next());
        return out;
    }

    /// Random portraits of one production for style normalisation.
    std::vector<std::size_t> context(std::size_t production, std::size_t k) {
        return sample_without_replacement(index_.productions().at(production).all, k, rng_);
    }

    const CorpusIndex& index() const { return index_; }

private:
    CorpusIndex index_;
    std::mt19937_64 rng_;
};

inline std::vector<Triplet> sample_triplet_batch(const Corpus& corpus, std::size_t batch, std::uint64_t seed) {
    return TripletSampler(corpus, seed).next_batch(batch);
}

struct TranslationDraw {
    std::size_t low;                     // corpus index of l
    std::size_t high;                    // corpus index of h
    std::vector<std::size_t> style_set;  // high-detail crops of the same design as h
    std::string design_low, design_high;
};

inline constexpr std::size_t kDefaultStyleSetSize = 3;

/// Balanced (l, h, style set) draws. Only designs with both detail levels take part and
/// only productions holding at least two such designs; L and H are distinct designs of
/// the chosen production.
class TranslationSampler {
public:
    TranslationSampler(const Corpus& corpus, std::uint64_t seed, std::size_t style_set_size = kDefaultStyleSetSize)
        : rng_(seed), k_(style_set_size) {
        if (k_ < 1) throw ValidationError("translation sampler: style set size must be positive");
        const CorpusIndex index(corpus);
        for (const auto& p : index.productions()) {
            Production prod;
            for (const auto& d : p.designs)
                if (!d.low.empty() && !d.high.empty()) prod.push_back(d);
            if (prod.size() >= 2) productions_.push_back(std::move(prod));
        }
        if (productions_.empty())
            throw DatasetError("translation sampler: need a production with at least 2 designs having both detail levels");
    }

    TranslationDraw next() {
        const auto& prod = productions_[uniform_index(rng_, productions_.size())];
        const std::size_t li = uniform_index(rng_, prod.size());
        std::size_t hi = uniform_index(rng_, prod.size() - 1);
        if (hi >= li) ++hi;
        const auto& L = prod[li];
        const auto& H = prod[hi];
        TranslationDraw t;
        t.low = L.low[uniform_index(rng_, L.low.size())];
        t.high = H.high[uniform_index(rng_, H.high.size())];
        t.style_set = sample_without_replacement(H.high, k_, rng_);
        t.design_low = L.id;
        t.design_high = H.id;
        return t;
    }

    std::vector<TranslationDraw> next_batch(std::size_t batch) {
        std::vector<TranslationDraw> out;
        out.reserve(batch);
        for (std::size_t k = 0; k < batch; ++k) out.push_back(next());
        return out;
    }

private:
    using Production = std::vector<CorpusIndex::Design>;
    std::vector<Production> productions_;
    std::mt19937_64 rng_;
    std::size_t k_;
};

inline std::vector<TranslationDraw> sample_translation_batch(const Corpus& corpus, std::size_t batch, std::uint64_t seed,
                                                             std::size_t style_set_size = kDefaultStyleSetSize) {
    return TranslationSampler(corpus, seed, style_set_size).next_batch(batch);
}

}  // namespace redraw::data
