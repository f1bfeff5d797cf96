#pragma once

#include <map>
#include <string>
#include <vector>

#include "redraw/error.hpp"
#include "redraw/styleenc/triplet.hpp"

namespace redraw::style {

/// Mean within-design pairwise squared distance (averaged over designs) divided by the
/// mean pairwise squared distance between design centroids. Lower means better separated.
template <typename Label>
double separation_ratio(const std::vector<std::vector<double>>& points, const std::vector<Label>& labels) {
    if (points.size() != labels.size()) throw ShapeError("separation_ratio: one label per point required");
    std::map<Label, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
    if (groups.size() < 2) throw DegenerateStatistics("separation_ratio: at least 2 designs required");
    const std::size_t dim = points.front().size();

    double intra = 0.0;
    std::vector<std::vector<double>> centroids;
    for (const auto& [label, idx] : groups) {
        if (idx.size() < 2) throw DegenerateStatistics("separation_ratio: every design needs at least 2 points");
        double s = 0.0;
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t b = a + 1; b < idx.size(); ++b) s += squared_distance(points[idx[a]], points[idx[b]]);
        intra += s / (0.5 * static_cast<double>(idx.size() * (idx.size() - 1)));
        std::vector<double> c(dim, 0.0);
        for (std::size_t i : idx)
            for (std::size_t k = 0; k < dim; ++k) c[k] += points[i][k] / static_cast<double>(idx.size());
        centroids.push_back(std::move(c));
    }
    intra /= static_cast<double>(groups.size());

    double inter = 0.0;
    const std::size_t g = centroids.size();
    for (std::size_t a = 0; a < g; ++a)
        for (std::size_t b = a + 1; b < g; ++b) inter += squared_distance(centroids[a], centroids[b]);
    inter /= 0.5 * static_cast<double>(g * (g - 1));
    if (!(inter > 0.0)) throw DegenerateStatistics("separation_ratio: design centroids coincide");
    return intra / inter;
}

/// Fraction of points whose cluster's majority ground-truth label matches their own.
template <typename Label>
double cluster_purity(const std::vector<int>& clusters, const std::vector<Label>& truth) {
    if (clusters.size() != truth.size() || clusters.empty()) throw ShapeError("purity: non-empty matching label lists required");
    std::map<int, std::map<Label, int>> table;
    for (std::size_t i = 0; i < clusters.size(); ++i) ++table[clusters[i]][truth[i]];
    int hits = 0;
    for (const auto& [c, counts] : table) {
        int best = 0;
        for (const auto& [l, n] : counts) best = std::max(best, n);
        hits += best;
    }
    return static_cast<double>(hits) / static_cast<double>(clusters.size());
}

}  // namespace redraw::style
