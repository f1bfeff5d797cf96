#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "redraw/error.hpp"
#include "redraw/styleenc/triplet.hpp"

namespace redraw::style {

/// One agglomeration step. Clusters are named by their smallest original index; a < b.
struct Merge {
    int a = 0;
    int b = 0;
    double height = 0.0;  // average Euclidean distance between the two clusters
    int size = 0;         // size of the merged cluster
    bool operator==(const Merge&) const = default;
};

inline std::vector<std::vector<double>> euclidean_distances(const std::vector<std::vector<double>>& points) {
    const std::size_t n = points.size();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = std::sqrt(squared_distance(points[i], points[j]));
    return d;
}

/// Average-linkage agglomerative clustering with Lance-Williams updates. Among equally
/// close pairs the one with the lexicographically smallest (a, b) merges first.
inline std::vector<Merge> upgma_merges(const std::vector<std::vector<double>>& points) {
    const int n = static_cast<int>(points.size());
    if (n == 0) throw ValidationError("upgma: at least one point required");
    for (const auto& p : points)
        if (p.size() != points[0].size()) throw ShapeError("upgma: points differ in dimension");
    auto d = euclidean_distances(points);
    std::vector<int> size(n, 1);
    std::vector<bool> alive(n, true);
    std::vector<Merge> merges;
    for (int step = 0; step + 1 < n; ++step) {
        int bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (int j = i + 1; j < n; ++j)
                if (alive[j] && d[i][j] < best) {
                    best = d[i][j];
                    bi = i;
                    bj = j;
                }
        }
        const double wi = size[bi], wj = size[bj];
        for (int k = 0; k < n; ++k)
            if (alive[k] && k != bi && k != bj) d[bi][k] = d[k][bi] = (wi * d[bi][k] + wj * d[bj][k]) / (wi + wj);
        alive[bj] = false;
        size[bi] += size[bj];
        merges.push_back({bi, bj, best, size[bi]});
    }
    return merges;
}

/// Labels after applying every merge at or below `cut_distance`; numbered 0, 1, ... by
/// first appearance in index order.
inline std::vector<int> cut_dendrogram(const std::vector<Merge>& merges, int n, double cut_distance) {
    if (cut_distance < 0.0) throw ValidationError("upgma: cut distance must be non-negative");
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const Merge& m : merges)
        if (m.height <= cut_distance) parent[find(m.b)] = find(m.a);
    std::vector<int> label(n, -1), root_label(n, -1);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        const int r = find(i);
        if (root_label[r] < 0) root_label[r] = next++;
        label[i] = root_label[r];
    }
    return label;
}

inline std::vector<int> upgma_cluster(const std::vector<std::vector<double>>& points, double cut_distance) {
    return cut_dendrogram(upgma_merges(points), static_cast<int>(points.size()), cut_distance);
}

/// Mean silhouette coefficient; singletons contribute 0. Needs 2 <= clusters <= n - 1.
inline double silhouette_score(const std::vector<std::vector<double>>& dist, const std::vector<int>& labels) {
    const int n = static_cast<int>(labels.size());
    const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    if (k < 2 || k > n - 1) throw ValidationError("silhouette: need between 2 and n-1 clusters");
    std::vector<int> count(k, 0);
    for (int l : labels) ++count[l];
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (count[labels[i]] == 1) continue;
        std::vector<double> sum(k, 0.0);
        for (int j = 0; j < n; ++j)
            if (j != i) sum[labels[j]] += dist[i][j];
        const double a = sum[labels[i]] / (count[labels[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c)
            if (c != labels[i]) b = std::min(b, sum[c] / count[c]);
        const double m = std::max(a, b);
        total += m > 0.0 ? (b - a) / m : 0.0;
    }
    return total / n;
}

struct ClusterResult {
    std::vector<int> labels;
    double cut_distance = 0.0;
    double silhouette = 0.0;  // 0 when a single cluster is returned
    std::vector<Merge> merges;
};

/// Cuts the dendrogram at the merge gap that maximises the silhouette. Candidate cuts
/// are midpoints between consecutive distinct merge heights; with fewer than three points
/// or no admissible gap everything lands in one cluster.
inline ClusterResult upgma_auto_cluster(const std::vector<std::vector<double>>& points) {
    ClusterResult r;
    r.merges = upgma_merges(points);
    const int n = static_cast<int>(points.size());
    const double top = r.merges.empty() ? 0.0 : r.merges.back().height;
    r.cut_distance = top;
    r.labels = cut_dendrogram(r.merges, n, top);
    if (n < 3) return r;

    const auto dist = euclidean_distances(points);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t m = r.merges.size() - 1; m-- > 0;) {
        const double lo = r.merges[m].height, hi = r.merges[m + 1].height;
        if (!(hi > lo)) continue;
        const double cut = 0.5 * (lo + hi);
        auto labels = cut_dendrogram(r.merges, n, cut);
        const int k = *std::max_element(labels.begin(), labels.end()) + 1;
        if (k < 2 || k > n - 1) continue;
        const double s = silhouette_score(dist, labels);
        if (s > best) {
            best = s;
            r.labels = std::move(labels);
            r.cut_distance = cut;
            r.silhouette = s;
        }
    }
    return r;
}

}  // namespace redraw::style
