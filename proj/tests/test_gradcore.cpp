#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dlab/adam.hpp"
#include "dlab/checkpoint.hpp"
#include "dlab/gradcheck.hpp"
#include "dlab/losses.hpp"
#include "dlab/model.hpp"
#include "dlab/rng.hpp"

using namespace dlab;

namespace {

ModelConfig tiny_config(bool baseline) {
    ModelConfig c;
    c.image_size = 8;
    c.channels = 3;
    c.latent_dim = 4;
    c.widths = {2, 3, 4};
    c.baseline = baseline;
    c.init_seed = 42;
    return c;
}

template <typename T>
Tensor<T> random_images(std::size_t batch, const ModelConfig& c, std::uint64_t seed) {
    Tensor<T> x({batch, c.channels, c.image_size, c.image_size});
    Rng rng(seed);
    for (std::size_t i = 0; i < x.numel(); ++i)
        x[i] = static_cast<T>(rng.uniform(0.05, 0.95));
    return x;
}

}  // namespace

TEST_CASE("parameter enumeration is fixed and deterministic") {
    auto p = init_model<float>(tiny_config(false));
    std::vector<std::string> names;
    for (const auto& nt : p.tensors) names.push_back(nt.name);
    const std::vector<std::string> expected = {
        "enc.conv1.w", "enc.conv1.b", "enc.conv2.w", "enc.conv2.b", "enc.conv3.w",
        "enc.conv3.b", "enc.fc.w",    "enc.fc.b",    "dec.fc.w",    "dec.fc.b",
        "dec.conv1.w", "dec.conv1.b", "dec.conv2.w", "dec.conv2.b", "dec.conv3.w",
        "dec.conv3.b", "cmed.w",      "cmed.b",      "csens.w",     "csens.b"};
    CHECK(names == expected);

    auto p2 = init_model<float>(tiny_config(false));
    for (std::size_t t = 0; t < p.tensors.size(); ++t)
        CHECK(p.tensors[t].tensor == p2.tensors[t].tensor);

    auto cfg3 = tiny_config(false);
    cfg3.init_seed = 43;
    auto p3 = init_model<float>(cfg3);
    CHECK_FALSE(p.tensors[0].tensor == p3.tensors[0].tensor);

    auto pb = init_model<float>(tiny_config(true));
    bool has_cbase = false, has_dec = false;
    for (const auto& nt : pb.tensors) {
        if (nt.name.rfind("cbase", 0) == 0) has_cbase = true;
        if (nt.name.rfind("dec.", 0) == 0) has_dec = true;
    }
    CHECK(has_cbase);
    CHECK_FALSE(has_dec);
}

TEST_CASE("forward shapes and latent routing") {
    auto cfg = tiny_config(false);
    auto p = init_model<float>(cfg);
    Network<float> net(p, false);
    auto imgs = ad::leaf(random_images<float>(2, cfg, 7));

    auto z_full = encode_full(net, imgs);
    REQUIRE(z_full->value.rank() == 2);
    CHECK(z_full->value.dim(0) == 2);
    CHECK(z_full->value.dim(1) == 2 * cfg.latent_dim);

    auto z = encode(net, imgs);
    CHECK(z.med.v->value.dim(1) == cfg.latent_dim);
    CHECK(z.sensit.v->value.dim(1) == cfg.latent_dim);
    // the typed halves are exactly the two halves of the full latent
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t j = 0; j < cfg.latent_dim; ++j) {
            CHECK(z.med.v->value.at2(b, j) == z_full->value.at2(b, j));
            CHECK(z.sensit.v->value.at2(b, j) ==
                  z_full->value.at2(b, j + cfg.latent_dim));
        }

    auto recon = decode(net, z);
    REQUIRE(recon->value.rank() == 4);
    CHECK(recon->value.dim(0) == 2);
    CHECK(recon->value.dim(1) == cfg.channels);
    CHECK(recon->value.dim(2) == cfg.image_size);
    CHECK(recon->value.dim(3) == cfg.image_size);
    for (std::size_t i = 0; i < recon->value.numel(); ++i) {
        CHECK(recon->value[i] > 0.0f);
        CHECK(recon->value[i] < 1.0f);
    }

    auto pm = classify_med(net, z.med);
    auto ps = classify_sensit(net, z.sensit);
    for (std::size_t b = 0; b < 2; ++b) {
        CHECK(pm->value.at2(b, 0) + pm->value.at2(b, 1) == doctest::Approx(1.0));
        CHECK(ps->value.at2(b, 0) + ps->value.at2(b, 1) == doctest::Approx(1.0));
    }

    SUBCASE("wrong image shape is rejected") {
        auto bad = ad::leaf(Tensor<float>({2, 3, 16, 16}));
        CHECK_THROWS_AS(encode_full(net, bad), std::invalid_argument);
    }
}

TEST_CASE("adam first step approximates -lr * sign(grad)") {
    ModelParams<float> p;
    p.tensors.push_back({"w", Tensor<float>({4})});
    for (std::size_t i = 0; i < 4; ++i) p.tensors[0].tensor[i] = 1.0f;

    AdamHyper h;
    h.lr = 0.1;
    h.weight_decay = 0.0;
    auto st = init_adam(p, h);

    Tensor<float> g({4});
    g[0] = 2.5f; g[1] = -0.3f; g[2] = 1e-3f; g[3] = -7.0f;
    adam_step(st, p, {g});
    CHECK(st.step == 1);
    for (std::size_t i = 0; i < 4; ++i) {
        const double sign = g[i] > 0 ? 1.0 : -1.0;
        CHECK(p.tensors[0].tensor[i] ==
              doctest::Approx(1.0 - h.lr * sign).epsilon(1e-4));
    }

    SUBCASE("decoupled weight decay shrinks the parameter") {
        ModelParams<float> q = p;
        auto h2 = h;
        h2.weight_decay = 0.5;
        auto st1 = init_adam(q, h);
        auto st2 = init_adam(q, h2);
        auto a = q, b = q;
        adam_step(st1, a, {g});
        adam_step(st2, b, {g});
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(b.tensors[0].tensor[i] ==
                  doctest::Approx(a.tensors[0].tensor[i] -
                                  h2.lr * h2.weight_decay * q.tensors[0].tensor[i])
                      .epsilon(1e-5));
    }

    SUBCASE("non-finite gradient aborts with the tensor name") {
        g[2] = std::numeric_limits<float>::quiet_NaN();
        CHECK_THROWS_WITH_AS(adam_step(st, p, {g}),
                             doctest::Contains("w"), std::runtime_error);
    }
}

TEST_CASE("checkpoint round-trip is bit-exact and training-equivalent") {
    auto cfg = tiny_config(false);
    auto p = init_model<float>(cfg);
    AdamHyper h;
    h.lr = 1e-3;
    auto st = init_adam(p, h);

    // a couple of steps so the moments are nontrivial
    auto fake_grads = [&](std::uint64_t seed) {
        std::vector<Tensor<float>> gs;
        Rng rng(seed);
        for (const auto& nt : p.tensors) {
            Tensor<float> g(nt.tensor.shape());
            for (std::size_t i = 0; i < g.numel(); ++i)
                g[i] = static_cast<float>(rng.normal(0.0, 0.1));
            gs.push_back(std::move(g));
        }
        return gs;
    };
    adam_step(st, p, fake_grads(1));
    adam_step(st, p, fake_grads(2));

    const auto path =
        (std::filesystem::temp_directory_path() / "dlab_gradcore.ckpt").string();
    save_checkpoint(path, p, &st);
    auto loaded = load_checkpoint(path);

    REQUIRE(loaded.params.tensors.size() == p.tensors.size());
    for (std::size_t t = 0; t < p.tensors.size(); ++t) {
        CHECK(loaded.params.tensors[t].name == p.tensors[t].name);
        CHECK(loaded.params.tensors[t].tensor == p.tensors[t].tensor);
    }
    REQUIRE(loaded.adam.has_value());
    CHECK(loaded.adam->step == st.step);
    for (std::size_t t = 0; t < st.m.size(); ++t) {
        CHECK(loaded.adam->m[t] == st.m[t]);
        CHECK(loaded.adam->v[t] == st.v[t]);
    }

    // identical subsequent steps from the restored state
    auto g3 = fake_grads(3);
    adam_step(st, p, g3);
    adam_step(*loaded.adam, loaded.params, g3);
    for (std::size_t t = 0; t < p.tensors.size(); ++t)
        CHECK(loaded.params.tensors[t].tensor == p.tensors[t].tensor);

    SUBCASE("corrupt magic is rejected") {
        std::ofstream os(path, std::ios::binary);
        os << "NOTACKPT garbage";
        os.close();
        CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
    }
}

TEST_CASE("analytic gradients match finite differences (float64)") {
    GradCheckOptions opt;
    opt.probe_count = 60;
    opt.step = 1e-5;

    SUBCASE("baseline focal objective") {
        auto cfg = tiny_config(true);
        auto params = init_model<double>(cfg);
        auto images = random_images<double>(2, cfg, 11);
        Tensor<double> y({2, 2});
        y.at2(0, 1) = 1.0;
        y.at2(1, 0) = 1.0;
        LossFn<double> fn = [&](const Network<double>& net) {
            auto probs = classify_baseline(net, encode_full(net, ad::leaf(images, false)));
            return focal_loss(probs, y, {0.7, 1.8}, 2.0);
        };
        CHECK(grad_check(fn, params, opt) < 1e-3);
    }

    SUBCASE("full disentangled objective (Eq. 4)") {
        auto cfg = tiny_config(false);
        auto params = init_model<double>(cfg);
        auto images = random_images<double>(2, cfg, 12);
        Tensor<double> y_dr({2, 2}), y_sa({2, 2});
        y_dr.at2(0, 1) = 1.0;
        y_dr.at2(1, 0) = 1.0;
        y_sa.at2(0, 0) = 1.0;
        y_sa.at2(1, 1) = 1.0;
        LossWeights w;
        LossFn<double> fn = [&](const Network<double>& net) {
            auto imgs = ad::leaf(images, false);
            auto z = encode(net, imgs);
            auto cls = classification_loss(classify_med(net, z.med), y_dr,
                                           classify_sensit(net, z.sensit), y_sa, w);
            auto real = realism_loss(imgs, decode(net, z), w);
            std::vector<PerturbationSpec> specs = {{0.3, PerturbTarget::med},
                                                   {0.3, PerturbTarget::sensit}};
            auto dis = disentanglement_loss(net, imgs, specs, 99, w, &z);
            return total_loss(cls, real, dis, w);
        };
        CHECK(grad_check(fn, params, opt) < 1e-3);
    }
}
