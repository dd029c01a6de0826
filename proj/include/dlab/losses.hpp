#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dlab/model.hpp"
#include "dlab/rng.hpp"

namespace dlab {

// Training objectives: focal loss, the dual-head classification loss, the
// SSIM+PSNR realism loss, the latent-perturbation disentanglement loss, and
// their weighted total. All return scalar graph nodes so every objective is
// differentiable end to end.

struct LossWeights {
    double lambda_med = 1.0;
    double lambda_sensit = 1.0;
    double lambda_r = 1.0;
    double lambda_d = 5.0;
    double alpha_psnr = 48.0;
    double focal_gamma = 2.0;
    std::vector<double> class_weights = {1.0, 1.0};

    // ablation switch for the self term of the disentanglement objective;
    // the literal formula (both terms) is the default
    bool disent_self_term = true;

    // treat the decoder inside the perturbation loop as a fixed renderer
    // (no gradient into its weights from this loss). Without this the
    // objective has a degenerate minimum — de-sensitize the decoder to its
    // latents — that gradient descent reaches long before the intended one,
    // because appearance fidelity is worth far less to the total loss than
    // the encoder's shortcut features are to classification. Detaching
    // leaves only the intended pressure: the encoder must stop routing the
    // perturbation-induced appearance changes into the other latent.
    bool disent_detach_decoder = false;
};

inline constexpr double kLogFloor = 1e-12;

enum class PerturbTarget { med, sensit };

struct PerturbationSpec {
    double noise_sigma = 0.5;
    PerturbTarget target = PerturbTarget::med;
};

namespace loss_detail {

// per-row weight of the true class and p_true extraction helpers
template <typename T>
Tensor<T> true_class_weights(const Tensor<T>& targets_onehot,
                             const std::vector<double>& class_weights) {
    const std::size_t B = targets_onehot.dim(0), K = targets_onehot.dim(1);
    if (class_weights.size() != K)
        throw std::invalid_argument("class weight count does not match class count");
    Tensor<T> w({B});
    for (std::size_t b = 0; b < B; ++b) {
        T s = 0;
        for (std::size_t k = 0; k < K; ++k)
            s += targets_onehot.at2(b, k) * static_cast<T>(class_weights[k]);
        w[b] = s;
    }
    return w;
}

}  // namespace loss_detail

// mean over batch of -w_t * (1-p_t)^gamma * log(p_t), log floored at 1e-12
template <typename T>
ad::Var<T> focal_loss(ad::Var<T> probs, const Tensor<T>& targets_onehot,
                      const std::vector<double>& class_weights, double gamma) {
    using namespace ad;
    if (!probs->value.same_shape(targets_onehot))
        throw std::invalid_argument("focal_loss: batch/class shape mismatch");
    auto p_t = sum_tail(mul_const(probs, targets_onehot));  // [B]
    auto log_p = log_(max_scalar(p_t, static_cast<T>(kLogFloor)));
    Var<T> modulated;
    if (gamma == 0.0) {
        modulated = log_p;
    } else {
        auto one_minus = max_scalar(affine(p_t, T(-1), T(1)), T(0));
        modulated = mul(pow_const(one_minus, static_cast<T>(gamma)), log_p);
    }
    auto weighted =
        mul_const(modulated, loss_detail::true_class_weights(targets_onehot, class_weights));
    return affine(mean_all(weighted), T(-1), T(0));
}

// Per-image mean local SSIM over valid sliding windows, averaged over
// channels; returns [B]. Uniform window, variance/covariance from box means.
template <typename T>
ad::Var<T> ssim(ad::Var<T> a, ad::Var<T> b, std::size_t window = 7, double c1 = 1e-4,
                double c2 = 9e-4) {
    using namespace ad;
    check_same_shape(a, b, "ssim");
    auto mu_a = box_mean(a, window);
    auto mu_b = box_mean(b, window);
    auto mu_aa = mul(mu_a, mu_a);
    auto mu_bb = mul(mu_b, mu_b);
    auto mu_ab = mul(mu_a, mu_b);
    auto var_a = sub(box_mean(mul(a, a), window), mu_aa);
    auto var_b = sub(box_mean(mul(b, b), window), mu_bb);
    auto cov = sub(box_mean(mul(a, b), window), mu_ab);
    auto num = mul(affine(mu_ab, T(2), static_cast<T>(c1)),
                   affine(cov, T(2), static_cast<T>(c2)));
    auto den = mul(affine(add(mu_aa, mu_bb), T(1), static_cast<T>(c1)),
                   affine(add(var_a, var_b), T(1), static_cast<T>(c2)));
    return mean_tail(div(num, den));  // [B]
}

// Per-image 10*log10(max_value^2 / MSE), capped at `cap` dB; returns [B].
// The cap is realized as an MSE floor so identical images give exactly `cap`
// with a well-defined (zero) gradient.
template <typename T>
ad::Var<T> psnr(ad::Var<T> a, ad::Var<T> b, double max_value = 1.0, double cap = 48.0) {
    using namespace ad;
    check_same_shape(a, b, "psnr");
    auto diff = sub(a, b);
    auto mse = mean_tail(mul(diff, diff));  // [B]
    const double mse_floor = max_value * max_value * std::pow(10.0, -cap / 10.0);
    auto floored = max_scalar(mse, static_cast<T>(mse_floor));
    // anchor the log at the floor so a floored MSE yields exactly `cap` in
    // every precision: psnr = k * (ln mse - ln floor) + cap
    const T log_floor = std::log(static_cast<T>(mse_floor));
    const double k = -10.0 / std::log(10.0);
    auto shifted = affine(log_(floored), T(1), -log_floor);
    return affine(shifted, static_cast<T>(k), static_cast<T>(cap));
}

// batch mean of (1 - SSIM) + (1 - PSNR/alpha)
template <typename T>
ad::Var<T> realism_loss(ad::Var<T> original, ad::Var<T> reconstruction,
                        const LossWeights& w) {
    using namespace ad;
    auto s = ssim(original, reconstruction);
    auto p = psnr(original, reconstruction, 1.0, w.alpha_psnr);
    auto term_s = affine(s, T(-1), T(1));
    auto term_p = affine(p, static_cast<T>(-1.0 / w.alpha_psnr), T(1));
    return mean_all(add(term_s, term_p));
}

// -lambda_med * sum_c y log p  -  lambda_sensit * sum_k y log p, batch-averaged
template <typename T>
ad::Var<T> classification_loss(ad::Var<T> p_med, const Tensor<T>& y_med,
                               ad::Var<T> p_sensit, const Tensor<T>& y_sensit,
                               const LossWeights& w) {
    using namespace ad;
    if (!p_med->value.same_shape(y_med) || !p_sensit->value.same_shape(y_sensit))
        throw std::invalid_argument("classification_loss: class count mismatch");
    auto ce = [](Var<T> p, const Tensor<T>& y) {
        auto log_p = log_(max_scalar(p, static_cast<T>(kLogFloor)));
        return mean_all(sum_tail(mul_const(log_p, y)));  // mean over batch of sum_c y log p
    };
    auto med_term = affine(ce(p_med, y_med), static_cast<T>(-w.lambda_med), T(0));
    auto sens_term = affine(ce(p_sensit, y_sensit), static_cast<T>(-w.lambda_sensit), T(0));
    return add(med_term, sens_term);
}

// Gaussian noise tensor for one latent half, frozen outside the graph.
template <typename T>
Tensor<T> latent_noise(std::size_t batch, std::size_t d, double sigma, Rng& rng) {
    Tensor<T> n({batch, d});
    for (std::size_t i = 0; i < n.numel(); ++i)
        n[i] = static_cast<T>(rng.normal(0.0, sigma));
    return n;
}

namespace loss_detail {

template <typename T>
void check_finite_stage(const ad::Var<T>& v, const char* stage) {
    for (std::size_t i = 0; i < v->value.numel(); ++i)
        if (!std::isfinite(static_cast<double>(v->value[i])))
            throw std::runtime_error(std::string("disentanglement_loss: non-finite value at ") +
                                     stage);
}

}  // namespace loss_detail

// Latent-perturbation independence objective. For each target latent: encode
// the original, add Gaussian noise to that latent only, decode the altered
// image, re-encode it, and penalize the squared change of both latents
// (coordinate sum, batch mean). The self term can be dropped via
// LossWeights::disent_self_term for ablation.
template <typename T>
ad::Var<T> disentanglement_loss(const Network<T>& net, ad::Var<T> images,
                                const std::vector<PerturbationSpec>& specs,
                                std::uint64_t rng_seed, const LossWeights& w = {},
                                const LatentPair<T>* precomputed = nullptr) {
    using namespace ad;
    if (specs.size() != 2 ||
        !((specs[0].target == PerturbTarget::med && specs[1].target == PerturbTarget::sensit) ||
          (specs[0].target == PerturbTarget::sensit && specs[1].target == PerturbTarget::med)))
        throw std::invalid_argument("disentanglement_loss: need exactly one spec per latent");
    for (const auto& s : specs)
        if (!(s.noise_sigma > 0.0) || !std::isfinite(s.noise_sigma))
            throw std::invalid_argument("disentanglement_loss: noise_sigma must be positive");

    const std::size_t B = images->value.dim(0);
    const std::size_t d = net.config().latent_dim;
    Rng rng(rng_seed);

    const Network<T> frozen(*net.params, /*needs_grad=*/false);
    const Network<T>& dec_net = w.disent_detach_decoder ? frozen : net;

    auto z = precomputed ? *precomputed : encode(net, images);
    Var<T> total;
    for (const auto& spec : specs) {
        auto noise = latent_noise<T>(B, d, spec.noise_sigma, rng);
        LatentPair<T> perturbed = z;
        if (spec.target == PerturbTarget::med)
            perturbed.med.v = add_const(z.med.v, noise);
        else
            perturbed.sensit.v = add_const(z.sensit.v, noise);
        loss_detail::check_finite_stage(perturbed.med.v, "noise");
        loss_detail::check_finite_stage(perturbed.sensit.v, "noise");

        auto altered = decode(dec_net, perturbed);
        loss_detail::check_finite_stage(altered, "decode");
        auto z2 = encode(net, altered);
        loss_detail::check_finite_stage(z2.med.v, "re-encode");
        loss_detail::check_finite_stage(z2.sensit.v, "re-encode");

        auto sq_change = [](Var<T> before, Var<T> after) {
            auto diff = sub(before, after);
            return sum_tail(mul(diff, diff));  // [B]
        };
        Var<T> contrib;
        const bool med_perturbed = spec.target == PerturbTarget::med;
        auto med_term = sq_change(z.med.v, z2.med.v);
        auto sens_term = sq_change(z.sensit.v, z2.sensit.v);
        if (w.disent_self_term) {
            contrib = add(med_term, sens_term);
        } else {
            contrib = med_perturbed ? sens_term : med_term;
        }
        auto mean_contrib = mean_all(contrib);
        total = total ? add(total, mean_contrib) : mean_contrib;
    }
    return total;
}

// L_classifier + lambda_r * L_realism + lambda_d * L_disent
template <typename T>
ad::Var<T> total_loss(ad::Var<T> classification, ad::Var<T> realism,
                      ad::Var<T> disentanglement, const LossWeights& w) {
    using namespace ad;
    return add(classification,
               add(affine(realism, static_cast<T>(w.lambda_r), T(0)),
                   affine(disentanglement, static_cast<T>(w.lambda_d), T(0))));
}

}  // namespace dlab
