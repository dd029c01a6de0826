#include "dlab/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "dlab/adam.hpp"
#include "dlab/checkpoint.hpp"
#include "dlab/rng.hpp"

namespace dlab::trainer {

void TrainConfig::validate() const {
    if (mode == Mode::disentangled) synthgen::sa_index(target_sa);
    if (epochs_max == 0) throw std::invalid_argument("epochs_max must be positive");
    if (latent_dim == 0) throw std::invalid_argument("latent_dim must be positive");
}

std::vector<double> compute_class_weights(const synthgen::Dataset& dataset,
                                          const synthgen::SplitAssignment& splits) {
    std::unordered_map<std::string, bool> in_train;
    for (const auto& p : splits.train) in_train[p] = true;
    double n0 = 0, n1 = 0;
    for (const auto& s : dataset.samples)
        if (in_train.count(s.patient_id)) (s.dr_label ? n1 : n0) += 1;
    if (n0 == 0 || n1 == 0)
        throw std::invalid_argument("class weights: a class is absent from the training split");
    const double n = n0 + n1;
    return {n / (2.0 * n0), n / (2.0 * n1)};
}

namespace {

using synthgen::Dataset;
using synthgen::Sample;

std::vector<std::size_t> split_indices(const Dataset& ds,
                                       const std::vector<std::string>& patients) {
    std::unordered_map<std::string, bool> in;
    for (const auto& p : patients) in[p] = true;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        if (in.count(ds.samples[i].patient_id)) out.push_back(i);
    return out;
}

Tensor<float> as_batch1(const Tensor<float>& img) {
    return img.reshaped({1, img.dim(0), img.dim(1), img.dim(2)});
}

Tensor<float> onehot2(int label) {
    Tensor<float> y({1, 2});
    y[label ? 1 : 0] = 1.0f;
    return y;
}

synthgen::AugmentParams sample_aug(const AugmentConfig& a, Rng& rng) {
    synthgen::AugmentParams p;
    p.hflip = rng.bernoulli(a.flip_prob);
    p.vflip = rng.bernoulli(a.flip_prob);
    p.quarter_turns = a.quarter_turns ? static_cast<int>(rng.index(4)) : 0;
    p.brightness_delta = rng.uniform(-a.brightness_max, a.brightness_max);
    p.contrast_scale = rng.uniform(1.0 - a.contrast_jitter, 1.0 + a.contrast_jitter);
    p.blur_sigma = rng.bernoulli(a.blur_prob) ? rng.uniform(a.blur_sigma_min, a.blur_sigma_max)
                                              : 0.0;
    return p;
}

// scores for a list of samples (no augmentation); batched forward, no grads
std::vector<double> forward_scores(const ModelParams<float>& params, const Dataset& ds,
                                   const std::vector<std::size_t>& idx) {
    std::vector<double> scores(idx.size());
    const std::size_t B = 32;
    const auto& cfg = params.config;
    for (std::size_t start = 0; start < idx.size(); start += B) {
        const std::size_t b = std::min(B, idx.size() - start);
        Tensor<float> batch({b, cfg.channels, cfg.image_size, cfg.image_size});
        for (std::size_t k = 0; k < b; ++k) {
            const auto& img = ds.samples[idx[start + k]].image;
            std::copy(img.data(), img.data() + img.numel(),
                      batch.data() + k * img.numel());
        }
        Network<float> net(params, /*needs_grad=*/false);
        auto imgs = ad::leaf(batch);
        ad::Var<float> probs;
        if (cfg.baseline) {
            probs = classify_baseline(net, encode_full(net, imgs));
        } else {
            probs = classify_med(net, encode(net, imgs).med);
        }
        for (std::size_t k = 0; k < b; ++k)
            scores[start + k] = static_cast<double>(probs->value.at2(k, 1));
    }
    return scores;
}

double f1_at_half(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::vector<int> hats(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) hats[i] = scores[i] > 0.5 ? 1 : 0;
    return fairaudit::f1(hats, labels);
}

double safe_auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    try {
        return fairaudit::auroc(scores, labels);
    } catch (const fairaudit::UndefinedMetricError&) {
        return 0.5;
    }
}

struct SampleTask {
    Tensor<float> image;   // augmented, [1,C,H,W]
    int y_dr = 0;
    int y_sa = 0;
    std::uint64_t noise_seed = 0;
};

struct SampleGrad {
    double loss = 0.0;
    std::vector<Tensor<float>> grads;
};

// per-sample loss graph; batch losses are plain means of these
SampleGrad run_sample(const ModelParams<float>& params, const TrainConfig& cfg,
                      const std::vector<double>& class_weights, double noise_sigma,
                      const SampleTask& task) {
    Network<float> net(params);
    auto imgs = ad::leaf(task.image);
    ad::Var<float> loss;
    if (cfg.mode == Mode::baseline) {
        auto probs = classify_baseline(net, encode_full(net, imgs));
        loss = focal_loss(probs, onehot2(task.y_dr), class_weights,
                          cfg.loss_weights.focal_gamma);
    } else {
        auto z = encode(net, imgs);
        auto cls = classification_loss(classify_med(net, z.med), onehot2(task.y_dr),
                                       classify_sensit(net, z.sensit), onehot2(task.y_sa),
                                       cfg.loss_weights);
        auto recon = decode(net, z);
        auto real = realism_loss(imgs, recon, cfg.loss_weights);
        std::vector<PerturbationSpec> specs = {{noise_sigma, PerturbTarget::med},
                                               {noise_sigma, PerturbTarget::sensit}};
        auto dis = disentanglement_loss(net, imgs, specs, task.noise_seed, cfg.loss_weights, &z);
        loss = total_loss(cls, real, dis, cfg.loss_weights);
    }
    ad::backward(loss);
    return {static_cast<double>(loss->value[0]), collect_grads(net)};
}

// mean latent L2 norm over a probe subset, for the adaptive noise sigma
double mean_latent_norm(const ModelParams<float>& params, const Dataset& ds,
                        const std::vector<std::size_t>& idx) {
    const std::size_t probe_n = std::min<std::size_t>(256, idx.size());
    std::vector<std::size_t> probe(idx.begin(), idx.begin() + probe_n);
    const auto& cfg = params.config;
    double total = 0.0;
    const std::size_t B = 32;
    for (std::size_t start = 0; start < probe_n; start += B) {
        const std::size_t b = std::min(B, probe_n - start);
        Tensor<float> batch({b, cfg.channels, cfg.image_size, cfg.image_size});
        for (std::size_t k = 0; k < b; ++k) {
            const auto& img = ds.samples[probe[start + k]].image;
            std::copy(img.data(), img.data() + img.numel(), batch.data() + k * img.numel());
        }
        Network<float> net(params, false);
        auto z = encode_full(net, ad::leaf(batch));
        for (std::size_t k = 0; k < b; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < z->value.dim(1); ++j) {
                const double v = z->value.at2(k, j);
                s += v * v;
            }
            total += std::sqrt(s);
        }
    }
    return total / static_cast<double>(probe_n);
}

TrainResult train_impl(const Dataset& dataset, const synthgen::SplitAssignment& splits,
                       const TrainConfig& config, const std::string& snapshot_dir,
                       const TrainerSnapshot* resume) {
    config.validate();
    const auto train_idx = split_indices(dataset, splits.train);
    const auto val_idx = split_indices(dataset, splits.val);
    if (train_idx.empty() || val_idx.empty())
        throw std::invalid_argument("train/val split is empty");

    const std::vector<double> class_weights =
        config.mode == Mode::baseline ? compute_class_weights(dataset, splits)
                                      : std::vector<double>{1.0, 1.0};
    const std::size_t sa_k =
        config.mode == Mode::disentangled ? synthgen::sa_index(config.target_sa) : 0;

    ModelConfig mc;
    mc.image_size = dataset.image_size;
    mc.channels = dataset.channels;
    mc.latent_dim = config.latent_dim;
    mc.baseline = config.mode == Mode::baseline;
    mc.init_seed = mix_seed(config.seed, 0xA);

    ModelParams<float> params;
    AdamState<float> adam;
    ModelParams<float> best_params;
    TrainHistory history;
    std::size_t start_epoch = 0;
    AdamHyper hyper;
    hyper.lr = config.effective_lr();
    hyper.weight_decay = config.weight_decay;
    std::vector<ModelParams<float>> tail;
    if (resume) {
        params = resume->params;
        adam = resume->adam;
        best_params = resume->best_params;
        history = resume->history;
        start_epoch = resume->next_epoch;
        tail = resume->tail;
    } else {
        params = init_model<float>(mc);
        adam = init_adam(params, hyper);
        best_params = params;
    }

    std::vector<int> val_labels;
    for (std::size_t i : val_idx) val_labels.push_back(dataset.samples[i].dr_label);

    const std::size_t B = config.effective_batch();
    const std::size_t workers = std::max<std::size_t>(1, config.threads);

    for (std::size_t epoch = start_epoch; epoch < config.epochs_max; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        double noise_sigma = 1.0;
        TrainConfig ecfg = config;
        if (config.mode == Mode::disentangled) {
            const double norm = mean_latent_norm(params, dataset, train_idx);
            noise_sigma = std::max(1e-3, config.noise_scale * norm /
                                             std::sqrt(2.0 * static_cast<double>(
                                                                 config.latent_dim)));
            if (config.lambda_d_warmup_epochs > 0) {
                const double ramp =
                    std::min(1.0, static_cast<double>(epoch) /
                                      static_cast<double>(config.lambda_d_warmup_epochs));
                ecfg.loss_weights.lambda_d = config.loss_weights.lambda_d * ramp;
                if (epoch >= config.lambda_d_warmup_epochs)
                    adam.hyper.lr = config.effective_lr() * config.lr_after_warmup;
            }
        }

        std::vector<std::size_t> order = train_idx;
        Rng shuffle_rng(mix_seed(config.seed, 0x100 + epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t batch_count = 0;
        for (std::size_t start = 0; start < order.size(); start += B) {
            const std::size_t b = std::min(B, order.size() - start);
            std::vector<SampleTask> tasks(b);
            for (std::size_t k = 0; k < b; ++k) {
                const std::size_t si = order[start + k];
                const Sample& s = dataset.samples[si];
                Tensor<float> img = s.image;
                if (config.augment.enabled) {
                    Rng arng(mix_seed(config.seed, 0x200 + epoch, si));
                    img = synthgen::augment(img, sample_aug(config.augment, arng));
                }
                tasks[k].image = as_batch1(img);
                tasks[k].y_dr = s.dr_label;
                tasks[k].y_sa = config.mode == Mode::disentangled ? s.sa[sa_k] : 0;
                tasks[k].noise_seed = mix_seed(config.seed, 0x300 + epoch, si);
            }

            // samples run in parallel; accumulation stays in sample order so
            // the result is independent of the worker count
            std::vector<SampleGrad> results(b);
            if (workers <= 1 || b == 1) {
                for (std::size_t k = 0; k < b; ++k)
                    results[k] = run_sample(params, ecfg, class_weights, noise_sigma,
                                            tasks[k]);
            } else {
                std::vector<std::thread> pool;
                const std::size_t w = std::min(workers, b);
                for (std::size_t t = 0; t < w; ++t)
                    pool.emplace_back([&, t] {
                        for (std::size_t k = t; k < b; k += w)
                            results[k] = run_sample(params, ecfg, class_weights,
                                                    noise_sigma, tasks[k]);
                    });
                for (auto& th : pool) th.join();
            }

            std::vector<Tensor<float>> grads;
            double batch_loss = 0.0;
            for (std::size_t k = 0; k < b; ++k) {
                batch_loss += results[k].loss;
                if (k == 0) {
                    grads = std::move(results[k].grads);
                } else {
                    for (std::size_t t = 0; t < grads.size(); ++t)
                        for (std::size_t i = 0; i < grads[t].numel(); ++i)
                            grads[t][i] += results[k].grads[t][i];
                }
            }
            const float inv = 1.0f / static_cast<float>(b);
            for (auto& g : grads)
                for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= inv;
            if (config.grad_clip > 0.0) {
                double sq = 0.0;
                for (const auto& g : grads)
                    for (std::size_t i = 0; i < g.numel(); ++i)
                        sq += static_cast<double>(g[i]) * static_cast<double>(g[i]);
                const double norm = std::sqrt(sq);
                if (norm > config.grad_clip) {
                    const float scale = static_cast<float>(config.grad_clip / norm);
                    for (auto& g : grads)
                        for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= scale;
                }
            }
            batch_loss /= static_cast<double>(b);
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("training aborted: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batch_count));
            loss_sum += batch_loss;
            ++batch_count;
            adam_step(adam, params, grads);
        }

        // validation metrics at threshold 0.5
        const auto val_scores = forward_scores(params, dataset, val_idx);
        const double vf1 = f1_at_half(val_scores, val_labels);
        const double vauroc = safe_auroc(val_scores, val_labels);
        double val_loss = 0.0;
        for (std::size_t i = 0; i < val_scores.size(); ++i) {
            const double p = val_labels[i] ? val_scores[i] : 1.0 - val_scores[i];
            val_loss -= std::log(std::max(p, kLogFloor));
        }
        val_loss /= static_cast<double>(val_scores.size());

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, batch_count));
        rec.val_loss = val_loss;
        rec.val_f1 = vf1;
        rec.val_auroc = vauroc;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                          .count();
        // epochs inside the lambda_d ramp optimize a different objective, so
        // they are not eligible as the best checkpoint — otherwise an
        // unregularized warmup epoch wins on val F1 and the returned model
        // never saw the full disentanglement pressure. Disentangled models
        // are also ranked by val AUROC rather than F1: the perturbation
        // penalty shifts the score calibration, and F1 at the fixed 0.5
        // threshold can go to zero for every eligible epoch, degenerating
        // the selection to "first epoch after the ramp".
        const bool eligible = config.mode != Mode::disentangled ||
                              epoch >= config.lambda_d_warmup_epochs;
        const double selection =
            config.mode == Mode::disentangled ? vauroc : vf1;
        if (eligible && selection > history.best_val_f1) {
            history.best_val_f1 = selection;
            history.best_epoch = epoch;
            best_params = params;
            rec.is_best = true;
        }
        history.epochs.push_back(rec);
        history.stopped_epoch = epoch;

        if (config.mode == Mode::disentangled && eligible) {
            tail.push_back(params);
            const std::size_t window = std::max<std::size_t>(1, config.avg_tail_epochs);
            if (tail.size() > window) tail.erase(tail.begin());
        }

        if (!snapshot_dir.empty()) {
            TrainerSnapshot snap{params, adam, best_params, history, epoch + 1, tail};
            save_snapshot(snap, snapshot_dir);
        }
        if (history.best_val_f1 >= 0.0 && epoch > history.best_epoch &&
            epoch - history.best_epoch > config.patience)
            break;
    }

    if (config.mode == Mode::disentangled && !tail.empty()) {
        ModelParams<float> avg = tail.back();
        for (std::size_t t = 0; t < avg.tensors.size(); ++t) {
            auto& dst = avg.tensors[t].tensor;
            for (std::size_t k = 0; k + 1 < tail.size(); ++k) {
                const auto& src = tail[k].tensors[t].tensor;
                for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
            }
            const float inv = 1.0f / static_cast<float>(tail.size());
            for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] *= inv;
        }
        return {avg, history};
    }
    return {best_params, history};
}

}  // namespace

TrainResult train_baseline(const Dataset& dataset, const synthgen::SplitAssignment& splits,
                           const TrainConfig& config, const std::string& snapshot_dir,
                           const TrainerSnapshot* resume) {
    if (config.mode != Mode::baseline)
        throw std::invalid_argument("train_baseline requires mode=baseline");
    return train_impl(dataset, splits, config, snapshot_dir, resume);
}

TrainResult train_disentangled(const Dataset& dataset,
                               const synthgen::SplitAssignment& splits,
                               const TrainConfig& config, const std::string& snapshot_dir,
                               const TrainerSnapshot* resume) {
    if (config.mode != Mode::disentangled)
        throw std::invalid_argument("train_disentangled requires mode=disentangled");
    return train_impl(dataset, splits, config, snapshot_dir, resume);
}

void save_snapshot(const TrainerSnapshot& snap, const std::string& dir) {
    std::filesystem::create_directories(dir);
    save_checkpoint(dir + "/last.ckpt", snap.params, &snap.adam);
    save_checkpoint(dir + "/best.ckpt", snap.best_params);
    nlohmann::json j;
    j["next_epoch"] = snap.next_epoch;
    j["best_epoch"] = snap.history.best_epoch;
    j["best_val_f1"] = snap.history.best_val_f1;
    j["stopped_epoch"] = snap.history.stopped_epoch;
    j["epochs"] = nlohmann::json::array();
    for (const auto& e : snap.history.epochs)
        j["epochs"].push_back({{"epoch", e.epoch},
                               {"train_loss", e.train_loss},
                               {"val_loss", e.val_loss},
                               {"val_f1", e.val_f1},
                               {"val_auroc", e.val_auroc},
                               {"is_best", e.is_best}});
    j["tail_size"] = snap.tail.size();
    for (std::size_t k = 0; k < snap.tail.size(); ++k)
        save_checkpoint(dir + "/tail_" + std::to_string(k) + ".ckpt", snap.tail[k]);
    std::ofstream os(dir + "/state.json");
    os << j.dump(2) << "\n";
}

TrainerSnapshot load_snapshot(const std::string& dir) {
    TrainerSnapshot snap;
    auto last = load_checkpoint(dir + "/last.ckpt");
    if (!last.adam) throw CheckpointError("snapshot missing optimizer state");
    snap.params = std::move(last.params);
    snap.adam = std::move(*last.adam);
    snap.best_params = load_checkpoint(dir + "/best.ckpt").params;
    std::ifstream is(dir + "/state.json");
    if (!is) throw CheckpointError("snapshot missing state.json");
    nlohmann::json j;
    is >> j;
    snap.next_epoch = j.at("next_epoch");
    snap.history.best_epoch = j.at("best_epoch");
    snap.history.best_val_f1 = j.at("best_val_f1");
    snap.history.stopped_epoch = j.at("stopped_epoch");
    for (const auto& e : j.at("epochs")) {
        EpochRecord r;
        r.epoch = e.at("epoch");
        r.train_loss = e.at("train_loss");
        r.val_loss = e.at("val_loss");
        r.val_f1 = e.at("val_f1");
        r.val_auroc = e.at("val_auroc");
        r.is_best = e.at("is_best");
        snap.history.epochs.push_back(r);
    }
    const std::size_t tail_size = j.value("tail_size", std::size_t{0});
    for (std::size_t k = 0; k < tail_size; ++k)
        snap.tail.push_back(load_checkpoint(dir + "/tail_" + std::to_string(k) + ".ckpt").params);
    return snap;
}

std::vector<fairaudit::PredictionRecord> predict(const ModelParams<float>& params,
                                                 const Dataset& dataset,
                                                 const std::string& split_tag) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i)
        if (split_tag.empty() || dataset.samples[i].split == split_tag) idx.push_back(i);
    const auto scores = forward_scores(params, dataset, idx);
    std::vector<fairaudit::PredictionRecord> out;
    out.reserve(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const Sample& s = dataset.samples[idx[k]];
        fairaudit::PredictionRecord r;
        r.score = scores[k];
        r.y_true = s.dr_label;
        r.y_hat = scores[k] > 0.5 ? 1 : 0;
        r.sa = s.sa;
        r.patient_id = s.patient_id;
        r.image_id = s.image_id;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<std::vector<double>> extract_latents(const ModelParams<float>& params,
                                                 const Dataset& dataset,
                                                 const std::string& split_tag,
                                                 LatentView view) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i)
        if (split_tag.empty() || dataset.samples[i].split == split_tag) idx.push_back(i);

    std::vector<std::vector<double>> out;
    out.reserve(idx.size());
    const auto& cfg = params.config;
    const std::size_t B = 32;
    for (std::size_t start = 0; start < idx.size(); start += B) {
        const std::size_t b = std::min(B, idx.size() - start);
        Tensor<float> batch({b, cfg.channels, cfg.image_size, cfg.image_size});
        for (std::size_t k = 0; k < b; ++k) {
            const auto& img = dataset.samples[idx[start + k]].image;
            std::copy(img.data(), img.data() + img.numel(), batch.data() + k * img.numel());
        }
        Network<float> net(params, false);
        auto z = encode_full(net, ad::leaf(batch));
        const std::size_t d = cfg.latent_dim;
        std::size_t from = 0, to = 2 * d;
        if (view == LatentView::med) to = d;
        if (view == LatentView::sensit) from = d;
        for (std::size_t k = 0; k < b; ++k) {
            std::vector<double> v;
            v.reserve(to - from);
            for (std::size_t j = from; j < to; ++j)
                v.push_back(static_cast<double>(z->value.at2(k, j)));
            out.push_back(std::move(v));
        }
    }
    return out;
}

void write_history_csv(const TrainHistory& history, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    // wall-clock timings are deliberately not part of this file so reruns with
    // identical inputs produce byte-identical outputs; see timings.json
    os << "epoch,train_loss,val_loss,val_f1,val_auroc,is_best\n";
    char buf[256];
    for (const auto& e : history.epochs) {
        std::snprintf(buf, sizeof(buf), "%zu,%.6g,%.6g,%.6g,%.6g,%d\n", e.epoch,
                      e.train_loss, e.val_loss, e.val_f1, e.val_auroc,
                      e.is_best ? 1 : 0);
        os << buf;
    }
}

void write_predictions_csv(const std::vector<fairaudit::PredictionRecord>& records,
                           const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "image_id,patient_id,y_true,score,y_hat,age,sex,education,insurance,obesity\n";
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%.9g", r.score);
        os << r.image_id << "," << r.patient_id << "," << r.y_true << "," << buf << ","
           << r.y_hat;
        for (int v : r.sa) os << "," << v;
        os << "\n";
    }
}

std::vector<fairaudit::PredictionRecord> read_predictions_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(is, line))
        throw std::invalid_argument(path + ": empty predictions file");
    const std::string expected =
        "image_id,patient_id,y_true,score,y_hat,age,sex,education,insurance,obesity";
    if (line != expected && line != expected + "\r")
        throw std::invalid_argument(path + ": unexpected header '" + line + "'");
    std::vector<fairaudit::PredictionRecord> out;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                cols.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur += c;
            }
        }
        cols.push_back(cur);
        if (cols.size() != 10)
            throw std::invalid_argument(path + " row " + std::to_string(row) +
                                     ": expected 10 columns, got " +
                                     std::to_string(cols.size()));
        fairaudit::PredictionRecord r;
        r.image_id = cols[0];
        r.patient_id = cols[1];
        try {
            r.y_true = std::stoi(cols[2]);
            r.score = std::stod(cols[3]);
            r.y_hat = std::stoi(cols[4]);
            for (int k = 0; k < 5; ++k) r.sa[k] = std::stoi(cols[5 + k]);
        } catch (const std::exception&) {
            throw std::invalid_argument(path + " row " + std::to_string(row) +
                                        ": non-numeric field");
        }
        if (r.score < 0.0 || r.score > 1.0)
            throw std::invalid_argument(path + " row " + std::to_string(row) +
                                        ": score outside [0,1]");
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace dlab::trainer
