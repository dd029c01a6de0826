#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dlab/losses.hpp"
#include "dlab/model.hpp"
#include "dlab/rng.hpp"

using namespace dlab;

namespace {

// random row-stochastic probability matrix
Tensor<double> random_probs(std::size_t B, std::size_t K, std::uint64_t seed) {
    Tensor<double> p({B, K});
    Rng rng(seed);
    for (std::size_t b = 0; b < B; ++b) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            p.at2(b, k) = rng.uniform(0.05, 1.0);
            s += p.at2(b, k);
        }
        for (std::size_t k = 0; k < K; ++k) p.at2(b, k) /= s;
    }
    return p;
}

Tensor<double> onehot(const std::vector<int>& labels, std::size_t K) {
    Tensor<double> y({labels.size(), K});
    for (std::size_t b = 0; b < labels.size(); ++b) y.at2(b, labels[b]) = 1.0;
    return y;
}

Tensor<double> const_image(std::size_t B, double v, std::size_t S = 8) {
    Tensor<double> t({B, 3, S, S});
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = v;
    return t;
}

double value(const ad::Var<double>& v) { return v->value[0]; }

ModelConfig tiny_config() {
    ModelConfig c;
    c.image_size = 8;
    c.latent_dim = 4;
    c.widths = {2, 3, 4};
    c.init_seed = 5;
    return c;
}

}  // namespace

TEST_CASE("focal loss") {
    SUBCASE("gamma=0 is exactly weighted cross-entropy") {
        const std::size_t B = 6, K = 2;
        auto probs = random_probs(B, K, 3);
        auto y = onehot({0, 1, 1, 0, 1, 0}, K);
        const std::vector<double> w = {0.61, 2.78};
        auto loss = focal_loss(ad::leaf(probs, false), y, w, 0.0);
        double expected = 0.0;
        const std::vector<int> labels = {0, 1, 1, 0, 1, 0};
        for (std::size_t b = 0; b < B; ++b)
            expected -= w[labels[b]] * std::log(probs.at2(b, labels[b]));
        expected /= static_cast<double>(B);
        CHECK(std::abs(value(loss) - expected) <= 1e-12);
    }
    SUBCASE("p_t = 0.5, gamma = 2, unit weight gives ln(2)/4") {
        Tensor<double> p({1, 2});
        p.at2(0, 0) = 0.5;
        p.at2(0, 1) = 0.5;
        auto loss = focal_loss(ad::leaf(p, false), onehot({1}, 2), {1.0, 1.0}, 2.0);
        CHECK(value(loss) == doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("zero probability is floored, not infinite") {
        Tensor<double> p({1, 2});
        p.at2(0, 0) = 1.0;
        p.at2(0, 1) = 0.0;
        auto loss = focal_loss(ad::leaf(p, false), onehot({1}, 2), {1.0, 1.0}, 0.0);
        CHECK(value(loss) == doctest::Approx(-std::log(kLogFloor)).epsilon(1e-12));
    }
    SUBCASE("easy examples are down-weighted relative to CE") {
        Tensor<double> p({1, 2});
        p.at2(0, 0) = 0.1;
        p.at2(0, 1) = 0.9;
        auto ce = focal_loss(ad::leaf(p, false), onehot({1}, 2), {1.0, 1.0}, 0.0);
        auto fl = focal_loss(ad::leaf(p, false), onehot({1}, 2), {1.0, 1.0}, 2.0);
        CHECK(value(fl) == doctest::Approx(0.01 * value(ce)).epsilon(1e-10));
    }
    SUBCASE("shape and weight-count mismatches are rejected") {
        auto p = random_probs(2, 2, 1);
        CHECK_THROWS_AS(focal_loss(ad::leaf(p, false), onehot({0, 1, 0}, 2), {1.0, 1.0}, 2.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(focal_loss(ad::leaf(p, false), onehot({0, 1}, 2), {1.0}, 2.0),
                        std::invalid_argument);
    }
}

TEST_CASE("SSIM") {
    SUBCASE("identical images give exactly 1") {
        auto a = const_image(2, 0.37);
        auto s = ssim(ad::leaf(a, false), ad::leaf(a, false));
        REQUIRE(s->value.numel() == 2);
        for (std::size_t b = 0; b < 2; ++b)
            CHECK(s->value[b] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("constant patches match the closed form") {
        const double x = 0.3, y = 0.8, c1 = 1e-4;
        auto s = ssim(ad::leaf(const_image(1, x), false),
                      ad::leaf(const_image(1, y), false));
        const double expected = (2.0 * x * y + c1) / (x * x + y * y + c1);
        CHECK(s->value[0] == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("PSNR with the alpha cap") {
    SUBCASE("uniform 0.1 offset gives exactly 20 dB") {
        auto a = const_image(1, 0.4);
        auto b = const_image(1, 0.5);
        auto p = psnr(ad::leaf(a, false), ad::leaf(b, false), 1.0, 48.0);
        CHECK(p->value[0] == doctest::Approx(20.0).epsilon(1e-9));
    }
    SUBCASE("identical images hit the cap exactly") {
        auto a = const_image(3, 0.6);
        auto p = psnr(ad::leaf(a, false), ad::leaf(a, false), 1.0, 48.0);
        for (std::size_t b = 0; b < 3; ++b)
            CHECK(p->value[b] == doctest::Approx(48.0).epsilon(1e-12));
    }
}

TEST_CASE("realism loss is zero on perfect reconstruction") {
    Tensor<double> img({2, 3, 8, 8});
    Rng rng(17);
    for (std::size_t i = 0; i < img.numel(); ++i) img[i] = rng.uniform(0.0, 1.0);
    LossWeights w;
    auto loss = realism_loss(ad::leaf(img, false), ad::leaf(img, false), w);
    CHECK(std::abs(value(loss)) <= 1e-9);
}

TEST_CASE("classification loss (Eq. 2)") {
    Tensor<double> p_med({2, 2}), p_sa({2, 2});
    for (std::size_t i = 0; i < 4; ++i) {
        p_med[i] = 0.5;
        p_sa[i] = 0.5;
    }
    auto y_dr = onehot({1, 0}, 2);
    auto y_sa = onehot({0, 1}, 2);

    SUBCASE("uniform heads give lambda-weighted ln(2) terms") {
        LossWeights w;
        w.lambda_med = 2.0;
        w.lambda_sensit = 0.5;
        auto loss = classification_loss(ad::leaf(p_med, false), y_dr,
                                        ad::leaf(p_sa, false), y_sa, w);
        CHECK(value(loss) ==
              doctest::Approx(2.5 * std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("loss is linear in each lambda") {
        LossWeights w1, w2;
        w2.lambda_med = 3.0;
        auto l1 = value(classification_loss(ad::leaf(p_med, false), y_dr,
                                            ad::leaf(p_sa, false), y_sa, w1));
        auto l2 = value(classification_loss(ad::leaf(p_med, false), y_dr,
                                            ad::leaf(p_sa, false), y_sa, w2));
        CHECK(l2 - l1 == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("total loss is affine in the lambda weights") {
    auto scalar = [](double v) {
        Tensor<double> t({1});
        t[0] = v;
        return ad::leaf(t, false);
    };
    const double c = 0.83, r = 0.41, d = 1.7;
    LossWeights w;
    w.lambda_r = 0.25;
    w.lambda_d = 5.0;
    CHECK(value(total_loss(scalar(c), scalar(r), scalar(d), w)) ==
          doctest::Approx(c + 0.25 * r + 5.0 * d).epsilon(1e-12));

    LossWeights w0;
    w0.lambda_r = 0.0;
    w0.lambda_d = 0.0;
    CHECK(value(total_loss(scalar(c), scalar(r), scalar(d), w0)) ==
          doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("disentanglement loss matches a scripted recomputation") {
    auto cfg = tiny_config();
    auto params = init_model<double>(cfg);
    Network<double> net(params, false);

    Tensor<double> images({2, 3, 8, 8});
    Rng img_rng(23);
    for (std::size_t i = 0; i < images.numel(); ++i) images[i] = img_rng.uniform(0.0, 1.0);
    auto imgs = ad::leaf(images, false);

    const std::uint64_t seed = 77;
    std::vector<PerturbationSpec> specs = {{0.4, PerturbTarget::med},
                                           {0.4, PerturbTarget::sensit}};

    // eager, graph-free recomputation following the written definition: encode,
    // add noise to one latent, decode, re-encode, accumulate squared changes
    auto scripted = [&](bool self_term) {
        const std::size_t B = 2, d = cfg.latent_dim;
        auto z = encode(net, imgs);
        Rng rng(seed);
        double total = 0.0;
        for (const auto& spec : specs) {
            auto noise = latent_noise<double>(B, d, spec.noise_sigma, rng);
            Tensor<double> pm = z.med.v->value;
            Tensor<double> ps = z.sensit.v->value;
            auto* target = spec.target == PerturbTarget::med ? &pm : &ps;
            for (std::size_t i = 0; i < target->numel(); ++i) (*target)[i] += noise[i];
            LatentPair<double> perturbed{MedLatent<double>{ad::leaf(pm, false)},
                                         SensLatent<double>{ad::leaf(ps, false)}};
            auto altered = decode(net, perturbed);
            auto z2 = encode(net, ad::leaf(altered->value, false));
            double med_sq = 0.0, sens_sq = 0.0;
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t j = 0; j < d; ++j) {
                    const double dm = z.med.v->value.at2(b, j) - z2.med.v->value.at2(b, j);
                    const double dsv =
                        z.sensit.v->value.at2(b, j) - z2.sensit.v->value.at2(b, j);
                    med_sq += dm * dm;
                    sens_sq += dsv * dsv;
                }
            const bool med_perturbed = spec.target == PerturbTarget::med;
            double contrib;
            if (self_term) contrib = med_sq + sens_sq;
            else contrib = med_perturbed ? sens_sq : med_sq;
            total += contrib / static_cast<double>(B);
        }
        return total;
    };

    SUBCASE("literal form (self + cross terms)") {
        LossWeights w;
        auto loss = disentanglement_loss(net, imgs, specs, seed, w);
        CHECK(value(loss) == doctest::Approx(scripted(true)).epsilon(1e-6));
    }
    SUBCASE("cross-only ablation") {
        LossWeights w;
        w.disent_self_term = false;
        auto loss = disentanglement_loss(net, imgs, specs, seed, w);
        CHECK(value(loss) == doctest::Approx(scripted(false)).epsilon(1e-6));
    }
    SUBCASE("precomputed latents give the same value") {
        LossWeights w;
        auto z = encode(net, imgs);
        auto a = disentanglement_loss(net, imgs, specs, seed, w);
        auto b = disentanglement_loss(net, imgs, specs, seed, w, &z);
        CHECK(value(a) == doctest::Approx(value(b)).epsilon(1e-12));
    }
    SUBCASE("spec validation") {
        LossWeights w;
        std::vector<PerturbationSpec> one = {{0.4, PerturbTarget::med}};
        CHECK_THROWS_AS(disentanglement_loss(net, imgs, one, seed, w),
                        std::invalid_argument);
        std::vector<PerturbationSpec> both_med = {{0.4, PerturbTarget::med},
                                                  {0.4, PerturbTarget::med}};
        CHECK_THROWS_AS(disentanglement_loss(net, imgs, both_med, seed, w),
                        std::invalid_argument);
        std::vector<PerturbationSpec> bad_sigma = {{0.0, PerturbTarget::med},
                                                   {0.4, PerturbTarget::sensit}};
        CHECK_THROWS_AS(disentanglement_loss(net, imgs, bad_sigma, seed, w),
                        std::invalid_argument);
    }
}
