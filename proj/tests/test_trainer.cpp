#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dlab/synthgen.hpp"
#include "dlab/trainer.hpp"

using namespace dlab;
using namespace dlab::trainer;

namespace {

struct Fixture {
    synthgen::Dataset dataset;
    synthgen::SplitAssignment splits;
};

Fixture make_fixture(std::uint64_t seed = 2, std::size_t n_patients = 30) {
    synthgen::GeneratorConfig g;
    g.n_patients = n_patients;
    g.images_per_patient = 2;
    g.image_size = 16;
    g.dr_prevalence = 0.35;  // keep both classes in every tiny split
    g.seed = seed;
    Fixture f;
    f.dataset = synthgen::generate_dataset(g, 2);
    f.splits = synthgen::split_dataset(f.dataset, {0.6, 0.2, 0.2}, seed);
    synthgen::apply_split(f.dataset, f.splits);
    return f;
}

TrainConfig tiny_config(Mode mode) {
    TrainConfig c;
    c.mode = mode;
    c.target_sa = mode == Mode::disentangled ? "age" : "";
    c.epochs_max = 2;
    c.batch_size = 8;
    c.lr = 1e-3;
    c.latent_dim = 8;
    c.seed = 5;
    c.threads = 2;
    return c;
}

bool params_equal(const ModelParams<float>& a, const ModelParams<float>& b) {
    if (a.tensors.size() != b.tensors.size()) return false;
    for (std::size_t t = 0; t < a.tensors.size(); ++t)
        if (a.tensors[t].name != b.tensors[t].name ||
            !(a.tensors[t].tensor == b.tensors[t].tensor))
            return false;
    return true;
}

std::string temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("dlab_trainer_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

}  // namespace

TEST_CASE("class weights follow N/(K*N_c)") {
    synthgen::Dataset ds;
    synthgen::SplitAssignment sp;
    for (int i = 0; i < 100; ++i) {
        synthgen::Sample s;
        s.patient_id = "p" + std::to_string(i);
        s.image_id = s.patient_id + "_i0";
        s.dr_label = i < 18 ? 1 : 0;
        ds.samples.push_back(s);
        sp.train.push_back(s.patient_id);
    }
    auto w = compute_class_weights(ds, sp);
    REQUIRE(w.size() == 2);
    CHECK(w[0] == doctest::Approx(100.0 / 164.0).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(100.0 / 36.0).epsilon(1e-12));

    SUBCASE("missing class is an error") {
        for (auto& s : ds.samples) s.dr_label = 0;
        CHECK_THROWS_AS(compute_class_weights(ds, sp), std::invalid_argument);
    }
}

TEST_CASE("config validation") {
    auto c = tiny_config(Mode::disentangled);
    SUBCASE("defaults for batch and lr depend on the mode") {
        TrainConfig d;
        CHECK(d.effective_batch() == 4);
        CHECK(d.effective_lr() == doctest::Approx(1e-5));
        d.mode = Mode::disentangled;
        CHECK(d.effective_batch() == 32);
        CHECK(d.effective_lr() == doctest::Approx(5e-5));
    }
    SUBCASE("disentangled mode requires a valid target SA") {
        c.target_sa = "";
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
        c.target_sa = "shoe_size";
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
        c.target_sa = "insurance";
        CHECK_NOTHROW(c.validate());
    }
    SUBCASE("mode/entry-point mismatch is rejected") {
        auto f = make_fixture();
        CHECK_THROWS_AS(train_baseline(f.dataset, f.splits, c), std::invalid_argument);
        auto cb = tiny_config(Mode::baseline);
        CHECK_THROWS_AS(train_disentangled(f.dataset, f.splits, cb),
                        std::invalid_argument);
    }
}

TEST_CASE("baseline training runs, records history, and is deterministic") {
    auto f = make_fixture();
    auto cfg = tiny_config(Mode::baseline);
    cfg.epochs_max = 3;
    auto r1 = train_baseline(f.dataset, f.splits, cfg);

    REQUIRE_FALSE(r1.history.epochs.empty());
    CHECK(r1.history.epochs.size() <= 3);
    CHECK(r1.history.best_epoch <= r1.history.stopped_epoch);
    for (const auto& e : r1.history.epochs) {
        CHECK(std::isfinite(e.train_loss));
        CHECK(e.val_f1 >= 0.0);
        CHECK(e.val_auroc >= 0.0);
    }

    SUBCASE("rerun is bitwise identical") {
        auto r2 = train_baseline(f.dataset, f.splits, cfg);
        CHECK(params_equal(r1.params, r2.params));
        REQUIRE(r2.history.epochs.size() == r1.history.epochs.size());
        for (std::size_t i = 0; i < r1.history.epochs.size(); ++i)
            CHECK(r1.history.epochs[i].train_loss == r2.history.epochs[i].train_loss);
    }
    SUBCASE("worker count does not change the result") {
        auto cfg1 = cfg;
        cfg1.threads = 1;
        auto r2 = train_baseline(f.dataset, f.splits, cfg1);
        CHECK(params_equal(r1.params, r2.params));
    }
    SUBCASE("patience=0 stops after the first non-improving epoch") {
        auto cfg0 = cfg;
        cfg0.patience = 0;
        cfg0.epochs_max = 12;
        auto r = train_baseline(f.dataset, f.splits, cfg0);
        const auto& es = r.history.epochs;
        for (std::size_t i = 0; i + 1 < es.size(); ++i) CHECK(es[i].is_best);
        if (es.size() < cfg0.epochs_max) CHECK_FALSE(es.back().is_best);
    }
}

TEST_CASE("disentangled training and latent extraction") {
    auto f = make_fixture();
    auto cfg = tiny_config(Mode::disentangled);
    auto r = train_disentangled(f.dataset, f.splits, cfg);
    REQUIRE_FALSE(r.history.epochs.empty());
    CHECK_FALSE(r.params.config.baseline);

    auto full = extract_latents(r.params, f.dataset, "test", LatentView::full);
    auto med = extract_latents(r.params, f.dataset, "test", LatentView::med);
    auto sens = extract_latents(r.params, f.dataset, "test", LatentView::sensit);
    std::size_t n_test = 0;
    for (const auto& s : f.dataset.samples)
        if (s.split == "test") ++n_test;
    REQUIRE(full.size() == n_test);
    REQUIRE(med.size() == n_test);
    CHECK(full[0].size() == 2 * cfg.latent_dim);
    CHECK(med[0].size() == cfg.latent_dim);
    CHECK(sens[0].size() == cfg.latent_dim);
    for (std::size_t j = 0; j < cfg.latent_dim; ++j) {
        CHECK(full[0][j] == doctest::Approx(med[0][j]).epsilon(1e-12));
        CHECK(full[0][j + cfg.latent_dim] == doctest::Approx(sens[0][j]).epsilon(1e-12));
    }
}

TEST_CASE("snapshot resume reproduces the uninterrupted run") {
    auto f = make_fixture();
    auto cfg = tiny_config(Mode::baseline);
    cfg.epochs_max = 3;

    const auto full_dir = temp_dir("full");
    auto full = train_baseline(f.dataset, f.splits, cfg, full_dir);

    auto cfg_short = cfg;
    cfg_short.epochs_max = 1;
    const auto part_dir = temp_dir("part");
    train_baseline(f.dataset, f.splits, cfg_short, part_dir);

    auto snap = load_snapshot(part_dir);
    CHECK(snap.next_epoch == 1);
    auto resumed = train_baseline(f.dataset, f.splits, cfg, "", &snap);

    CHECK(params_equal(full.params, resumed.params));
    REQUIRE(resumed.history.epochs.size() == full.history.epochs.size());
    for (std::size_t i = 0; i < full.history.epochs.size(); ++i) {
        CHECK(full.history.epochs[i].train_loss == resumed.history.epochs[i].train_loss);
        CHECK(full.history.epochs[i].val_f1 == resumed.history.epochs[i].val_f1);
    }
    CHECK(full.history.best_epoch == resumed.history.best_epoch);

    SUBCASE("missing snapshot directory is an error") {
        CHECK_THROWS(load_snapshot(part_dir + "/missing"));
    }
}

TEST_CASE("prediction records and CSV round-trip") {
    auto f = make_fixture();
    auto cfg = tiny_config(Mode::baseline);
    cfg.epochs_max = 1;
    auto r = train_baseline(f.dataset, f.splits, cfg);
    auto preds = predict(r.params, f.dataset, "test");

    std::size_t n_test = 0;
    for (const auto& s : f.dataset.samples)
        if (s.split == "test") ++n_test;
    REQUIRE(preds.size() == n_test);
    for (const auto& p : preds) {
        CHECK(p.score >= 0.0);
        CHECK(p.score <= 1.0);
        CHECK(p.y_hat == (p.score > 0.5 ? 1 : 0));
    }

    const auto dir = temp_dir("preds");
    write_predictions_csv(preds, dir + "/predictions.csv");
    auto back = read_predictions_csv(dir + "/predictions.csv");
    REQUIRE(back.size() == preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        CHECK(back[i].image_id == preds[i].image_id);
        CHECK(back[i].patient_id == preds[i].patient_id);
        CHECK(back[i].y_true == preds[i].y_true);
        CHECK(back[i].y_hat == preds[i].y_hat);
        CHECK(back[i].sa == preds[i].sa);
        CHECK(back[i].score == doctest::Approx(preds[i].score).epsilon(1e-9));
    }

    SUBCASE("schema violations carry row context") {
        std::ofstream os(dir + "/bad.csv");
        os << "image_id,patient_id,y_true,score,y_hat,age,sex,education,insurance,obesity\n";
        os << "a_i0,a,1,0.7,1,0,1,0,1\n";  // 9 columns
        os.close();
        CHECK_THROWS_AS(read_predictions_csv(dir + "/bad.csv"), std::invalid_argument);

        std::ofstream os2(dir + "/bad2.csv");
        os2 << "image_id,patient_id,score\n";
        os2.close();
        CHECK_THROWS_AS(read_predictions_csv(dir + "/bad2.csv"), std::invalid_argument);

        std::ofstream os3(dir + "/bad3.csv");
        os3 << "image_id,patient_id,y_true,score,y_hat,age,sex,education,insurance,obesity\n";
        os3 << "a_i0,a,1,1.7,1,0,1,0,1,0\n";  // score out of range
        os3.close();
        CHECK_THROWS_AS(read_predictions_csv(dir + "/bad3.csv"), std::invalid_argument);
    }

    SUBCASE("history CSV is written with the documented header") {
        write_history_csv(r.history, dir + "/history.csv");
        std::ifstream is(dir + "/history.csv");
        std::string header;
        std::getline(is, header);
        CHECK(header == "epoch,train_loss,val_loss,val_f1,val_auroc,is_best");
    }
}
