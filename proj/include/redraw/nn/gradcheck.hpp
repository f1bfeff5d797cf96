#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "redraw/nn/autograd.hpp"

namespace redraw::nn {

/// Compares reverse-mode gradients of `loss` against central differences, perturbing the
/// leaf values of `leaves` in place. Returns the max over checked coordinates of
/// |analytic - numeric| / max(1, |analytic|, |numeric|). When `max_coords` is non-zero a
/// seeded random subset of that many coordinates is checked.
inline double finite_diff_gradcheck(const std::function<Var()>& loss, const std::vector<Var>& leaves, double step = 1e-3,
                                    std::size_t max_coords = 0, std::uint64_t seed = 0) {
    std::vector<bool> was(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        was[i] = leaves[i].requires_grad();
        leaves[i].set_requires_grad(true);
    }
    const Var out = loss();
    if (!std::isfinite(out.value().item())) throw ValidationError("gradcheck: non-finite loss");
    const std::vector<Var> analytic = grad(out, leaves);

    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t i = 0; i < leaves.size(); ++i)
        for (std::size_t j = 0; j < leaves[i].value().size(); ++j) coords.emplace_back(i, j);
    if (max_coords > 0 && coords.size() > max_coords) {
        std::mt19937_64 rng(seed);
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(max_coords);
    }

    // Recording stays on so losses that call grad() internally evaluate correctly.
    auto eval = [&] {
        const double v = loss().value().item();
        if (!std::isfinite(v)) throw ValidationError("gradcheck: non-finite loss under perturbation");
        return v;
    };

    double worst = 0.0;
    for (auto [i, j] : coords) {
        Tensor& t = leaves[i].mutable_value();
        const double saved = t[j];
        t[j] = saved + step;
        const double up = eval();
        t[j] = saved - step;
        const double down = eval();
        t[j] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double a = analytic[i].value()[j];
        worst = std::max(worst, std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)}));
    }
    for (std::size_t i = 0; i < leaves.size(); ++i) leaves[i].set_requires_grad(was[i]);
    return worst;
}

/// Single-input form: checks d fn(x) / dx at `input`.
inline double finite_diff_gradcheck(const std::function<Var(const Var&)>& fn, const Tensor& input, double step = 1e-3) {
    const Var x = Var::leaf(input, true);
    return finite_diff_gradcheck([&] { return fn(x); }, {x}, step);
}

}  // namespace redraw::nn
