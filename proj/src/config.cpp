#include "dlab/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

namespace dlab::config {

namespace {

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw ConfigError("expected boolean (0/1/true/false), got '" + v + "'");
}

double parse_double(const std::string& v) {
    std::size_t pos = 0;
    double d;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("expected number, got '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError("trailing characters in number '" + v + "'");
    return d;
}

std::uint64_t parse_u64(const std::string& v) {
    std::size_t pos = 0;
    unsigned long long u;
    try {
        u = std::stoull(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("expected unsigned integer, got '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError("trailing characters in integer '" + v + "'");
    return u;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig c;
    using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
    static const std::map<std::string, Setter> setters = {
        {"gen.n_patients", [](auto& c, auto& v) { c.gen.n_patients = parse_u64(v); }},
        {"gen.images_per_patient",
         [](auto& c, auto& v) { c.gen.images_per_patient = parse_u64(v); }},
        {"gen.image_size", [](auto& c, auto& v) { c.gen.image_size = parse_u64(v); }},
        {"gen.confound_rho", [](auto& c, auto& v) { c.gen.confound_rho = parse_double(v); }},
        {"gen.dr_prevalence", [](auto& c, auto& v) { c.gen.dr_prevalence = parse_double(v); }},
        {"gen.primary_sa", [](auto& c, auto& v) { c.gen.primary_sa = v; }},
        {"gen.sa_marginal.age",
         [](auto& c, auto& v) { c.gen.sa_marginals["age"] = parse_double(v); }},
        {"gen.sa_marginal.sex",
         [](auto& c, auto& v) { c.gen.sa_marginals["sex"] = parse_double(v); }},
        {"gen.sa_marginal.education",
         [](auto& c, auto& v) { c.gen.sa_marginals["education"] = parse_double(v); }},
        {"gen.sa_marginal.insurance",
         [](auto& c, auto& v) { c.gen.sa_marginals["insurance"] = parse_double(v); }},
        {"gen.sa_marginal.obesity",
         [](auto& c, auto& v) { c.gen.sa_marginals["obesity"] = parse_double(v); }},
        {"gen.lesion_intensity",
         [](auto& c, auto& v) { c.gen.lesion_intensity = parse_double(v); }},
        {"gen.sa_feature_strength",
         [](auto& c, auto& v) { c.gen.sa_feature_strength = parse_double(v); }},
        {"gen.seed", [](auto& c, auto& v) { c.gen.seed = parse_u64(v); }},
        {"split.train", [](auto& c, auto& v) { c.fractions[0] = parse_double(v); }},
        {"split.val", [](auto& c, auto& v) { c.fractions[1] = parse_double(v); }},
        {"split.test", [](auto& c, auto& v) { c.fractions[2] = parse_double(v); }},
        {"train.mode",
         [](auto& c, auto& v) {
             if (v == "baseline") c.train.mode = trainer::Mode::baseline;
             else if (v == "disentangled") c.train.mode = trainer::Mode::disentangled;
             else throw ConfigError("train.mode must be baseline or disentangled");
         }},
        {"train.target_sa", [](auto& c, auto& v) { c.train.target_sa = v; }},
        {"train.epochs_max", [](auto& c, auto& v) { c.train.epochs_max = parse_u64(v); }},
        {"train.patience", [](auto& c, auto& v) { c.train.patience = parse_u64(v); }},
        {"train.batch_size", [](auto& c, auto& v) { c.train.batch_size = parse_u64(v); }},
        {"train.lr", [](auto& c, auto& v) { c.train.lr = parse_double(v); }},
        {"train.weight_decay", [](auto& c, auto& v) { c.train.weight_decay = parse_double(v); }},
        {"train.latent_dim", [](auto& c, auto& v) { c.train.latent_dim = parse_u64(v); }},
        {"train.seed", [](auto& c, auto& v) { c.train.seed = parse_u64(v); }},
        {"loss.lambda_med",
         [](auto& c, auto& v) { c.train.loss_weights.lambda_med = parse_double(v); }},
        {"loss.lambda_sensit",
         [](auto& c, auto& v) { c.train.loss_weights.lambda_sensit = parse_double(v); }},
        {"loss.lambda_r",
         [](auto& c, auto& v) { c.train.loss_weights.lambda_r = parse_double(v); }},
        {"loss.lambda_d",
         [](auto& c, auto& v) { c.train.loss_weights.lambda_d = parse_double(v); }},
        {"loss.alpha_psnr",
         [](auto& c, auto& v) { c.train.loss_weights.alpha_psnr = parse_double(v); }},
        {"loss.focal_gamma",
         [](auto& c, auto& v) { c.train.loss_weights.focal_gamma = parse_double(v); }},
        {"train.avg_tail_epochs",
         [](auto& c, auto& v) { c.train.avg_tail_epochs = parse_u64(v); }},
        {"train.lr_after_warmup",
         [](auto& c, auto& v) { c.train.lr_after_warmup = parse_double(v); }},
        {"train.grad_clip",
         [](auto& c, auto& v) { c.train.grad_clip = parse_double(v); }},
        {"loss.noise_scale",
         [](auto& c, auto& v) { c.train.noise_scale = parse_double(v); }},
        {"loss.lambda_d_warmup_epochs",
         [](auto& c, auto& v) { c.train.lambda_d_warmup_epochs = parse_u64(v); }},
        {"loss.disent_self_term",
         [](auto& c, auto& v) { c.train.loss_weights.disent_self_term = parse_bool(v); }},
        {"loss.disent_detach_decoder",
         [](auto& c, auto& v) { c.train.loss_weights.disent_detach_decoder = parse_bool(v); }},
        {"aug.enabled", [](auto& c, auto& v) { c.train.augment.enabled = parse_bool(v); }},
        {"aug.flip_prob", [](auto& c, auto& v) { c.train.augment.flip_prob = parse_double(v); }},
        {"aug.quarter_turns",
         [](auto& c, auto& v) { c.train.augment.quarter_turns = parse_bool(v); }},
        {"aug.brightness_max",
         [](auto& c, auto& v) { c.train.augment.brightness_max = parse_double(v); }},
        {"aug.contrast_jitter",
         [](auto& c, auto& v) { c.train.augment.contrast_jitter = parse_double(v); }},
        {"aug.blur_prob", [](auto& c, auto& v) { c.train.augment.blur_prob = parse_double(v); }},
        {"aug.blur_sigma_min",
         [](auto& c, auto& v) { c.train.augment.blur_sigma_min = parse_double(v); }},
        {"aug.blur_sigma_max",
         [](auto& c, auto& v) { c.train.augment.blur_sigma_max = parse_double(v); }},
        {"audit.bootstrap", [](auto& c, auto& v) { c.audit.enabled = parse_bool(v); }},
        {"audit.bootstrap_resamples",
         [](auto& c, auto& v) { c.audit.resamples = parse_u64(v); }},
        {"audit.seed", [](auto& c, auto& v) { c.audit.seed = parse_u64(v); }},
    };

    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        const auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t");
        line = line.substr(b, e - b + 1);

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            const auto b2 = s.find_first_not_of(" \t");
            const auto e2 = s.find_last_not_of(" \t");
            s = b2 == std::string::npos ? "" : s.substr(b2, e2 - b2 + 1);
        };
        trim(key);
        trim(value);
        auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        try {
            it->second(c, value);
        } catch (const ConfigError& err) {
            throw ConfigError("line " + std::to_string(line_no) + " (" + key + "): " +
                              err.what());
        }
        c.raw[key] = value;
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace dlab::config
