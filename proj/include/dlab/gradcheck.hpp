#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "dlab/model.hpp"
#include "dlab/rng.hpp"

namespace dlab {

// Loss builder: constructs the scalar loss graph from fresh parameter leaves.
// Must be deterministic (any internal randomness frozen by the caller).
template <typename T>
using LossFn = std::function<ad::Var<T>(const Network<T>&)>;

struct GradCheckOptions {
    std::size_t probe_count = 200;
    double step = 1e-4;
    std::uint64_t seed = 7;
};

// Compares analytic gradients against central finite differences on randomly
// probed parameter coordinates; returns the worst relative error.
inline double relative_error(double a, double b) {
    const double scale = std::max({1e-8, std::abs(a), std::abs(b)});
    return std::abs(a - b) / scale;
}

template <typename T>
double grad_check(const LossFn<T>& loss_fn, const ModelParams<T>& params,
                  GradCheckOptions opt = {}) {
    Network<T> net(params);
    auto loss = loss_fn(net);
    ad::backward(loss);
    auto analytic = collect_grads(net);

    auto eval = [&](const ModelParams<T>& p) -> double {
        Network<T> n(p, /*needs_grad=*/false);
        return static_cast<double>(loss_fn(n)->value[0]);
    };

    Rng rng(opt.seed);
    double worst = 0.0;
    ModelParams<T> probe = params;
    for (std::size_t k = 0; k < opt.probe_count; ++k) {
        const std::size_t t = rng.index(params.tensors.size());
        const std::size_t i = rng.index(params.tensors[t].tensor.numel());
        const T orig = probe.tensors[t].tensor[i];
        probe.tensors[t].tensor[i] = orig + static_cast<T>(opt.step);
        const double fp = eval(probe);
        probe.tensors[t].tensor[i] = orig - static_cast<T>(opt.step);
        const double fm = eval(probe);
        probe.tensors[t].tensor[i] = orig;
        const double fd = (fp - fm) / (2.0 * opt.step);
        worst = std::max(worst, relative_error(static_cast<double>(analytic[t][i]), fd));
    }
    return worst;
}

}  // namespace dlab
