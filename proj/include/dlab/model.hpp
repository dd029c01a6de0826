#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dlab/autodiff.hpp"
#include "dlab/rng.hpp"
#include "dlab/tensor.hpp"

namespace dlab {

// Dual-latent network: a shared convolutional encoder whose dense head splits
// into a medical latent and a sensitive-attribute latent, a mirrored decoder,
// and one linear classifier per latent. The baseline variant reuses the
// encoder and classifies the full (concatenated) latent with a single head.
struct ModelConfig {
    std::size_t image_size = 32;
    std::size_t channels = 3;
    std::size_t latent_dim = 32;   // d; the full latent is 2d
    std::size_t sa_classes = 2;
    bool baseline = false;
    std::uint64_t init_seed = 1;

    // encoder stage widths; decoder mirrors them
    std::array<std::size_t, 3> widths = {8, 16, 32};

    std::size_t spatial_after_encoder() const { return image_size / 8; }
    std::size_t flat_after_encoder() const {
        return widths[2] * spatial_after_encoder() * spatial_after_encoder();
    }
};

template <typename T>
struct NamedTensor {
    std::string name;
    Tensor<T> tensor;
};

// Parameter enumeration order is fixed by construction order below and is the
// alignment contract for optimizer state and checkpoints.
template <typename T>
struct ModelParams {
    ModelConfig config;
    std::vector<NamedTensor<T>> tensors;

    Tensor<T>& find(const std::string& name) {
        for (auto& nt : tensors)
            if (nt.name == name) return nt.tensor;
        throw std::invalid_argument("no parameter named " + name);
    }

    template <typename U>
    ModelParams<U> cast() const {
        ModelParams<U> out;
        out.config = config;
        for (const auto& nt : tensors)
            out.tensors.push_back({nt.name, nt.tensor.template cast<U>()});
        return out;
    }
};

namespace detail {

template <typename T>
void init_tensor(Tensor<T>& t, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
void push_conv(ModelParams<T>& p, const std::string& name, std::size_t out_c,
               std::size_t in_c, std::size_t k, Rng& rng) {
    Tensor<T> w({out_c, in_c, k, k});
    Tensor<T> b({out_c});
    init_tensor(w, in_c * k * k, rng);
    init_tensor(b, in_c * k * k, rng);
    p.tensors.push_back({name + ".w", std::move(w)});
    p.tensors.push_back({name + ".b", std::move(b)});
}

template <typename T>
void push_dense(ModelParams<T>& p, const std::string& name, std::size_t in,
                std::size_t out, Rng& rng) {
    Tensor<T> w({in, out});
    Tensor<T> b({out});
    init_tensor(w, in, rng);
    init_tensor(b, in, rng);
    p.tensors.push_back({name + ".w", std::move(w)});
    p.tensors.push_back({name + ".b", std::move(b)});
}

}  // namespace detail

template <typename T>
ModelParams<T> init_model(const ModelConfig& cfg) {
    if (cfg.image_size % 8 != 0)
        throw std::invalid_argument("image_size must be divisible by 8");
    ModelParams<T> p;
    p.config = cfg;
    Rng rng(cfg.init_seed);
    const auto [w1, w2, w3] = cfg.widths;
    detail::push_conv(p, "enc.conv1", w1, cfg.channels, 3, rng);
    detail::push_conv(p, "enc.conv2", w2, w1, 3, rng);
    detail::push_conv(p, "enc.conv3", w3, w2, 3, rng);
    detail::push_dense(p, "enc.fc", cfg.flat_after_encoder(), 2 * cfg.latent_dim, rng);
    if (cfg.baseline) {
        detail::push_dense(p, "cbase", 2 * cfg.latent_dim, 2, rng);
    } else {
        detail::push_dense(p, "dec.fc", 2 * cfg.latent_dim, cfg.flat_after_encoder(), rng);
        detail::push_conv(p, "dec.conv1", w2, w3, 3, rng);
        detail::push_conv(p, "dec.conv2", w1, w2, 3, rng);
        detail::push_conv(p, "dec.conv3", cfg.channels, w1, 3, rng);
        detail::push_dense(p, "cmed", cfg.latent_dim, 2, rng);
        detail::push_dense(p, "csens", cfg.latent_dim, cfg.sa_classes, rng);
    }
    return p;
}

// Graph leaves for one forward/backward pass, aligned with ModelParams.
template <typename T>
struct ParamVars {
    const ModelConfig* config = nullptr;
    std::vector<ad::Var<T>> vars;

    ad::Var<T> find(const std::string& name, const ModelParams<T>& p) const;
};

template <typename T>
ParamVars<T> make_vars(const ModelParams<T>& p, bool needs_grad = true) {
    ParamVars<T> pv;
    pv.config = &p.config;
    pv.vars.reserve(p.tensors.size());
    for (const auto& nt : p.tensors) pv.vars.push_back(ad::leaf(nt.tensor, needs_grad));
    return pv;
}

namespace detail {

template <typename T>
ad::Var<T> var_of(const ParamVars<T>& pv, const ModelParams<T>& p, const std::string& name) {
    for (std::size_t i = 0; i < p.tensors.size(); ++i)
        if (p.tensors[i].name == name) return pv.vars[i];
    throw std::invalid_argument("no parameter named " + name);
}

}  // namespace detail

// Typed latent halves; classify_med/classify_sensit accept only their own
// half, so routing the wrong latent is a compile error.
template <typename T>
struct MedLatent {
    ad::Var<T> v;
};
template <typename T>
struct SensLatent {
    ad::Var<T> v;
};

template <typename T>
struct LatentPair {
    MedLatent<T> med;
    SensLatent<T> sensit;
};

// Convenience handle bundling params and their graph leaves.
template <typename T>
struct Network {
    const ModelParams<T>* params;
    ParamVars<T> pv;

    explicit Network(const ModelParams<T>& p, bool needs_grad = true)
        : params(&p), pv(make_vars(p, needs_grad)) {}

    ad::Var<T> operator[](const std::string& name) const {
        return detail::var_of(pv, *params, name);
    }
    const ModelConfig& config() const { return params->config; }
};

template <typename T>
ad::Var<T> encode_full(const Network<T>& net, ad::Var<T> images) {
    using namespace ad;
    const auto& cfg = net.config();
    if (images->value.rank() != 4 || images->value.dim(1) != cfg.channels ||
        images->value.dim(2) != cfg.image_size || images->value.dim(3) != cfg.image_size)
        throw std::invalid_argument("encode: image batch shape " +
                                    shape_str(images->value.shape()) +
                                    " does not match model config");
    auto h = tanh_(conv2d(images, net["enc.conv1.w"], net["enc.conv1.b"], 2, 1));
    h = tanh_(conv2d(h, net["enc.conv2.w"], net["enc.conv2.b"], 2, 1));
    h = tanh_(conv2d(h, net["enc.conv3.w"], net["enc.conv3.b"], 2, 1));
    const std::size_t B = images->value.dim(0);
    h = reshape(h, {B, cfg.flat_after_encoder()});
    return add_rowvec(matmul(h, net["enc.fc.w"]), net["enc.fc.b"]);
}

template <typename T>
LatentPair<T> encode(const Network<T>& net, ad::Var<T> images) {
    auto z = encode_full(net, images);
    const std::size_t d = net.config().latent_dim;
    return {MedLatent<T>{ad::slice_cols(z, 0, d)}, SensLatent<T>{ad::slice_cols(z, d, 2 * d)}};
}

template <typename T>
ad::Var<T> decode(const Network<T>& net, const LatentPair<T>& z) {
    using namespace ad;
    const auto& cfg = net.config();
    if (z.med.v->value.dim(1) != cfg.latent_dim || z.sensit.v->value.dim(1) != cfg.latent_dim)
        throw std::invalid_argument("decode: latent dim mismatch");
    auto h = concat_cols(z.med.v, z.sensit.v);
    h = tanh_(add_rowvec(matmul(h, net["dec.fc.w"]), net["dec.fc.b"]));
    const std::size_t B = h->value.dim(0);
    const std::size_t s = cfg.spatial_after_encoder();
    h = reshape(h, {B, cfg.widths[2], s, s});
    h = tanh_(conv2d(upsample2(h), net["dec.conv1.w"], net["dec.conv1.b"], 1, 1));
    h = tanh_(conv2d(upsample2(h), net["dec.conv2.w"], net["dec.conv2.b"], 1, 1));
    return sigmoid(conv2d(upsample2(h), net["dec.conv3.w"], net["dec.conv3.b"], 1, 1));
}

template <typename T>
ad::Var<T> classify_med(const Network<T>& net, const MedLatent<T>& z) {
    return ad::softmax(ad::add_rowvec(ad::matmul(z.v, net["cmed.w"]), net["cmed.b"]));
}

template <typename T>
ad::Var<T> classify_sensit(const Network<T>& net, const SensLatent<T>& z) {
    return ad::softmax(ad::add_rowvec(ad::matmul(z.v, net["csens.w"]), net["csens.b"]));
}

// baseline head on the full latent
template <typename T>
ad::Var<T> classify_baseline(const Network<T>& net, ad::Var<T> z_full) {
    return ad::softmax(ad::add_rowvec(ad::matmul(z_full, net["cbase.w"]), net["cbase.b"]));
}

// Collects d(loss)/d(param) for every tensor, aligned with ModelParams order.
template <typename T>
std::vector<Tensor<T>> collect_grads(const Network<T>& net) {
    std::vector<Tensor<T>> out;
    out.reserve(net.pv.vars.size());
    for (const auto& v : net.pv.vars) {
        if (v->grad.numel() == 0) out.push_back(Tensor<T>(v->value.shape()));
        else out.push_back(v->grad);
    }
    return out;
}

}  // namespace dlab
