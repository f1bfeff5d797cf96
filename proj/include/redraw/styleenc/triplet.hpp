#pragma once

#include <algorithm>
#include <span>

#include "redraw/nn/ops.hpp"

namespace redraw::style {

inline constexpr double kTripletMargin = 1.0;

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("squared_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

/// max{ |e1 - e2|^2 - |e1 - e3|^2 + margin, 0 }
inline double triplet_margin_loss(std::span<const double> e1, std::span<const double> e2, std::span<const double> e3,
                                  double margin = kTripletMargin) {
    return std::max(squared_distance(e1, e2) - squared_distance(e1, e3) + margin, 0.0);
}

/// Batch mean of the triplet loss over [B, D, 1, 1] anchor, positive and negative embeddings.
inline nn::Var triplet_margin_loss(const nn::Var& anchor, const nn::Var& positive, const nn::Var& negative,
                                   double margin = kTripletMargin) {
    const nn::Shape s = anchor.shape();
    const nn::Shape per_sample{s.n, 1, 1, 1};
    const nn::Var dp = nn::sub(anchor, positive), dn = nn::sub(anchor, negative);
    const nn::Var gap = nn::sub(nn::reduce_to(nn::mul(dp, dp), per_sample), nn::reduce_to(nn::mul(dn, dn), per_sample));
    return nn::mean(nn::relu(nn::add_scalar(gap, margin)));
}

}  // namespace redraw::style
