#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dlab/model.hpp"
#include "dlab/tensor.hpp"

namespace dlab {

struct AdamHyper {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-6;
};

template <typename T>
struct AdamState {
    std::uint64_t step = 0;
    AdamHyper hyper;
    std::vector<Tensor<T>> m;  // aligned with ModelParams enumeration
    std::vector<Tensor<T>> v;
};

template <typename T>
AdamState<T> init_adam(const ModelParams<T>& params, AdamHyper hyper) {
    AdamState<T> st;
    st.hyper = hyper;
    for (const auto& nt : params.tensors) {
        st.m.push_back(Tensor<T>(nt.tensor.shape()));
        st.v.push_back(Tensor<T>(nt.tensor.shape()));
    }
    return st;
}

// One Adam update with decoupled weight decay: after the moment-based step,
// every parameter is shrunk by lr * weight_decay * p (AdamW form).
template <typename T>
void adam_step(AdamState<T>& st, ModelParams<T>& params,
               const std::vector<Tensor<T>>& grads) {
    if (grads.size() != params.tensors.size())
        throw std::invalid_argument("adam_step: gradient list misaligned with parameters");
    st.step += 1;
    const double b1 = st.hyper.beta1, b2 = st.hyper.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
    for (std::size_t t = 0; t < grads.size(); ++t) {
        auto& p = params.tensors[t].tensor;
        const auto& g = grads[t];
        if (!p.same_shape(g))
            throw std::invalid_argument("adam_step: gradient shape mismatch for " +
                                        params.tensors[t].name);
        for (std::size_t i = 0; i < g.numel(); ++i)
            if (!std::isfinite(static_cast<double>(g[i])))
                throw std::runtime_error("adam_step: non-finite gradient in " +
                                         params.tensors[t].name);
        auto& m = st.m[t];
        auto& v = st.v[t];
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double gi = static_cast<double>(g[i]);
            const double mi = b1 * static_cast<double>(m[i]) + (1.0 - b1) * gi;
            const double vi = b2 * static_cast<double>(v[i]) + (1.0 - b2) * gi * gi;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            double pi = static_cast<double>(p[i]);
            pi -= st.hyper.lr * mhat / (std::sqrt(vhat) + st.hyper.eps);
            pi -= st.hyper.lr * st.hyper.weight_decay * static_cast<double>(p[i]);
            p[i] = static_cast<T>(pi);
        }
    }
}

}  // namespace dlab
