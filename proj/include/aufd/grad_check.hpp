#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "aufd/ops.hpp"
#include "aufd/rng.hpp"
#include "aufd/tensor.hpp"

namespace aufd {

namespace detail {

inline std::vector<Index> pick_coords(Index size, Index max_coords, std::uint64_t seed) {
    std::vector<Index> coords;
    if (max_coords <= 0 || max_coords >= size) {
        coords.resize(static_cast<std::size_t>(size));
        for (Index i = 0; i < size; ++i) coords[static_cast<std::size_t>(i)] = i;
        return coords;
    }
    Rng rng(mix_seed(seed, 0x6fd2));
    std::vector<Index> all(static_cast<std::size_t>(size));
    for (Index i = 0; i < size; ++i) all[static_cast<std::size_t>(i)] = i;
    rng.shuffle(all);
    all.resize(static_cast<std::size_t>(max_coords));
    return all;
}

template <typename S, typename F>
double fd_max_rel_error(F&& f, Tensor<S>& x, const ArrX<S>& analytic, double eps,
                        const std::vector<Index>& coords) {
    double worst = 0.0;
    NoGradGuard no_grad; // finite-difference probes need values only
    for (Index i : coords) {
        const S saved = x.value_mut()[i];
        x.value_mut()[i] = saved + S(eps);
        const double f_plus = static_cast<double>(f(x).scalar());
        x.value_mut()[i] = saved - S(eps);
        const double f_minus = static_cast<double>(f(x).scalar());
        x.value_mut()[i] = saved;
        const double cd = (f_plus - f_minus) / (2.0 * eps);
        const double a = static_cast<double>(analytic[i]);
        const double denom = std::max({std::abs(a), std::abs(cd), 1e-8});
        worst = std::max(worst, std::abs(a - cd) / denom);
    }
    return worst;
}

} // namespace detail

// Central-difference check of a scalar function's gradient at x. Returns the
// max over coordinates of |analytic - cd| / max(|analytic|, |cd|, 1e-8).
// max_coords == 0 checks every coordinate; otherwise a seeded sample.
template <typename S, typename F>
double grad_check(F&& f, Tensor<S>& x, double eps, Index max_coords = 0, std::uint64_t seed = 17) {
    if (!x.requires_grad()) throw ContractError("grad_check: input does not require grad");
    Tensor<S> loss = f(x);
    if (loss.size() != 1)
        throw ContractError("grad_check: f must produce a scalar, got " + shape_str(loss.shape()));
    backward(loss);
    const ArrX<S> analytic = x.grad();
    x.clear_grad();
    const auto coords = detail::pick_coords(x.size(), max_coords, seed);
    return detail::fd_max_rel_error(f, x, analytic, eps, coords);
}

// Same check against several parameter tensors at once: one backward pass
// supplies all analytic gradients, then each tensor is probed on a seeded
// coordinate sample. f takes no arguments and reads the tensors in place.
template <typename S, typename F>
double grad_check_params(F&& f, const std::vector<Tensor<S>*>& params, double eps,
                         Index coords_per_tensor = 0, std::uint64_t seed = 17) {
    Tensor<S> loss = f();
    if (loss.size() != 1)
        throw ContractError("grad_check_params: f must produce a scalar");
    backward(loss);
    std::vector<ArrX<S>> analytic;
    analytic.reserve(params.size());
    for (Tensor<S>* p : params) {
        analytic.push_back(p->has_grad() ? p->grad() : ArrX<S>::Zero(p->size()));
        p->clear_grad();
    }
    double worst = 0.0;
    auto probe = [&](Tensor<S>&) { return f(); };
    for (std::size_t t = 0; t < params.size(); ++t) {
        const auto coords =
            detail::pick_coords(params[t]->size(), coords_per_tensor, mix_seed(seed, t));
        worst = std::max(worst, detail::fd_max_rel_error(probe, *params[t], analytic[t], eps, coords));
    }
    return worst;
}

} // namespace aufd
