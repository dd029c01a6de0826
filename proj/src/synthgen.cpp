#include "dlab/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "dlab/rng.hpp"

namespace dlab::synthgen {

std::size_t sa_index(const std::string& name) {
    for (std::size_t i = 0; i < kSaNames.size(); ++i)
        if (name == kSaNames[i]) return i;
    throw std::invalid_argument("unknown sensitive attribute: " + name);
}

void GeneratorConfig::validate() const {
    if (n_patients == 0 || images_per_patient == 0)
        throw std::invalid_argument("n_patients and images_per_patient must be positive");
    if (channels != 3) throw std::invalid_argument("generator supports 3-channel images");
    if (image_size < 8) throw std::invalid_argument("image_size too small");
    if (!(confound_rho >= -1.0 && confound_rho <= 1.0))
        throw std::invalid_argument("confound_rho must be in [-1,1]");
    if (!(dr_prevalence > 0.0 && dr_prevalence < 1.0))
        throw std::invalid_argument("dr_prevalence must be in (0,1)");
    sa_index(primary_sa);
    for (const char* name : kSaNames) {
        auto it = sa_marginals.find(name);
        if (it == sa_marginals.end())
            throw std::invalid_argument(std::string("missing sa marginal for ") + name);
        if (!(it->second > 0.0 && it->second < 1.0))
            throw std::invalid_argument(std::string("sa marginal for ") + name +
                                        " must be in (0,1)");
    }
    solve_joint(dr_prevalence, sa_marginals.at(primary_sa), confound_rho);
}

JointTable solve_joint(double p, double q, double rho) {
    const double p11 = p * q + rho * std::sqrt(p * (1.0 - p) * q * (1.0 - q));
    const double lo = std::max(0.0, p + q - 1.0);
    const double hi = std::min(p, q);
    const double eps = 1e-12;
    if (p11 < lo - eps || p11 > hi + eps) {
        const double denom = std::sqrt(p * (1.0 - p) * q * (1.0 - q));
        std::ostringstream msg;
        msg << "infeasible confound: rho=" << rho << " with dr_prevalence=" << p
            << " and sa marginal=" << q << " requires P(dr=1,sa=1)=" << p11
            << " outside the Frechet bounds [" << lo << "," << hi
            << "]; feasible rho range is [" << (lo - p * q) / denom << ","
            << (hi - p * q) / denom << "]";
        throw InfeasibleConfoundError(msg.str());
    }
    JointTable t;
    t.p11 = std::clamp(p11, lo, hi);
    t.p10 = p - t.p11;
    t.p01 = q - t.p11;
    t.p00 = 1.0 - t.p11 - t.p10 - t.p01;
    return t;
}

namespace {

struct PatientTraits {
    int dr = 0;
    std::array<int, 5> sa{};
    double base_r, base_g, base_b;
    double cx, cy, radius;
};

PatientTraits draw_patient(const GeneratorConfig& cfg, const JointTable& joint, Rng& rng) {
    PatientTraits t;
    const double u = rng.uniform();
    const std::size_t primary = sa_index(cfg.primary_sa);
    if (u < joint.p11) {
        t.dr = 1;
        t.sa[primary] = 1;
    } else if (u < joint.p11 + joint.p10) {
        t.dr = 1;
        t.sa[primary] = 0;
    } else if (u < joint.p11 + joint.p10 + joint.p01) {
        t.dr = 0;
        t.sa[primary] = 1;
    } else {
        t.dr = 0;
        t.sa[primary] = 0;
    }
    for (std::size_t k = 0; k < kSaNames.size(); ++k) {
        if (k == primary) continue;
        t.sa[k] = rng.bernoulli(cfg.sa_marginals.at(kSaNames[k])) ? 1 : 0;
    }
    const double s = static_cast<double>(cfg.image_size);
    // per-patient fundus pigmentation varies on the same order as the SA
    // imprints, so attribute signatures are detectable (pixel probe > 0.9 at
    // defaults) without being a saturated, noise-free channel
    t.base_r = 0.58 + rng.uniform(-0.12, 0.12);
    t.base_g = 0.26 + rng.uniform(-0.08, 0.08);
    t.base_b = 0.12 + rng.uniform(-0.06, 0.06);
    t.cx = 0.5 * s + rng.uniform(-0.03, 0.03) * s;
    t.cy = 0.5 * s + rng.uniform(-0.03, 0.03) * s;
    t.radius = 0.42 * s * (1.0 + rng.uniform(-0.05, 0.05));
    return t;
}

struct Blob {
    double x, y, sigma, amp;
    double cr, cg, cb;
};

// Renders one image. All randomness comes from `rng` (per-image seed), the
// patient-shared appearance from `t`.
Tensor<float> render_image(const GeneratorConfig& cfg, const PatientTraits& t, Rng& rng) {
    const std::size_t S = cfg.image_size;
    Tensor<float> img({cfg.channels, S, S});

    // vessel set: a few curved radial strokes
    struct Vessel {
        double angle, bend, len, thick;
    };
    std::vector<Vessel> vessels;
    const std::size_t n_vessels = 3 + rng.index(3);
    for (std::size_t v = 0; v < n_vessels; ++v)
        vessels.push_back({rng.uniform(0.0, 6.2831853), rng.uniform(-1.2, 1.2),
                           rng.uniform(0.55, 0.95), rng.uniform(0.6, 1.1)});

    // lesion blobs. Positives get clear bright/dark lesions with variable
    // amplitude; a minority of negatives get faint distractor blobs so the
    // lesion channel is informative but not perfectly separable.
    std::vector<Blob> blobs;
    if (t.dr == 1) {
        const std::size_t n = 3 + rng.index(4);
        for (std::size_t i = 0; i < n; ++i) {
            const double ang = rng.uniform(0.0, 6.2831853);
            const double rad = rng.uniform(0.15, 0.75) * t.radius;
            const bool bright = rng.bernoulli(0.6);
            Blob b;
            b.x = t.cx + rad * std::cos(ang);
            b.y = t.cy + rad * std::sin(ang);
            b.sigma = rng.uniform(0.7, 1.6) * static_cast<double>(S) / 32.0;
            b.amp = cfg.lesion_intensity * rng.uniform(0.35, 1.0);
            if (bright) {
                b.cr = 0.95; b.cg = 0.88; b.cb = 0.45;
            } else {
                b.cr = 0.22; b.cg = 0.04; b.cb = 0.04;
            }
            blobs.push_back(b);
        }
    } else if (rng.bernoulli(0.35)) {
        const std::size_t n = 1 + rng.index(2);
        for (std::size_t i = 0; i < n; ++i) {
            const double ang = rng.uniform(0.0, 6.2831853);
            const double rad = rng.uniform(0.15, 0.75) * t.radius;
            Blob b;
            b.x = t.cx + rad * std::cos(ang);
            b.y = t.cy + rad * std::sin(ang);
            b.sigma = rng.uniform(0.7, 1.4) * static_cast<double>(S) / 32.0;
            b.amp = cfg.lesion_intensity * rng.uniform(0.10, 0.38);
            const bool bright = rng.bernoulli(0.6);
            if (bright) {
                b.cr = 0.95; b.cg = 0.88; b.cb = 0.45;
            } else {
                b.cr = 0.22; b.cg = 0.04; b.cb = 0.04;
            }
            blobs.push_back(b);
        }
    }

    // signed SA signatures (positive group +, negative group -)
    const double fs = cfg.sa_feature_strength;
    auto signed_strength = [&](std::size_t k) {
        return (t.sa[k] ? 1.0 : -1.0) * 0.5 * fs;
    };
    const double tint = signed_strength(sa_index("age"));
    // the age tint shifts the pigmentation itself (pre-shading), so it rides
    // the same rendering path as the per-patient color jitter and a linear
    // probe cannot exploit shading structure to read it noise-free
    const double base_r = t.base_r + tint * 0.55;
    const double base_b = t.base_b - tint * 0.55;
    const double vignette = signed_strength(sa_index("sex"));
    const double gradient = signed_strength(sa_index("education"));
    const double texture = signed_strength(sa_index("insurance"));
    const double contrast = signed_strength(sa_index("obesity"));

    const double noise_sigma = 0.02;
    for (std::size_t y = 0; y < S; ++y) {
        for (std::size_t x = 0; x < S; ++x) {
            const double dx = (static_cast<double>(x) - t.cx);
            const double dy = (static_cast<double>(y) - t.cy);
            const double r = std::sqrt(dx * dx + dy * dy) / t.radius;
            // soft disc edge over ~1.5 px
            const double edge = std::clamp((1.0 - r) * t.radius / 1.5, 0.0, 1.0);
            const double shade = 1.0 - 0.35 * r * r;

            double cr = 0.03, cg = 0.03, cb = 0.03;
            if (edge > 0.0) {
                double fr = base_r * shade;
                double fg = t.base_g * shade;
                double fb = base_b * shade;

                // vessels darken towards pure red
                double vmask = 0.0;
                const double angle = std::atan2(dy, dx);
                for (const auto& v : vessels) {
                    double da = angle - v.angle - v.bend * r;
                    while (da > 3.14159265) da -= 6.2831853;
                    while (da < -3.14159265) da += 6.2831853;
                    const double across = std::abs(da) * std::max(r, 0.05) * t.radius;
                    if (r < v.len && r > 0.04)
                        vmask = std::max(vmask, std::exp(-across * across /
                                                         (2.0 * v.thick * v.thick * 0.35)));
                }
                fr -= 0.30 * vmask * fr;
                fg -= 0.55 * vmask * fg;
                fb -= 0.55 * vmask * fb;

                for (const auto& b : blobs) {
                    const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
                    const double a = b.amp * std::exp(-d2 / (2.0 * b.sigma * b.sigma));
                    fr += a * (b.cr - fr);
                    fg += a * (b.cg - fg);
                    fb += a * (b.cb - fb);
                }

                // remaining SA imprints: global, low-frequency, lesion-free
                const double vig = 1.0 - std::max(0.0, 0.18 + 0.9 * vignette) * r * r * r;
                fr *= vig;
                fg *= vig;
                fb *= vig;
                const double grad_term =
                    gradient * 0.8 * (static_cast<double>(x) / static_cast<double>(S) - 0.5);
                fr += grad_term;
                fg += grad_term;
                fb += grad_term;
                const double tex = texture * 0.35 *
                                   std::sin(6.2831853 * 3.0 *
                                            (static_cast<double>(x + y)) /
                                            (2.0 * static_cast<double>(S)));
                fr += tex;
                fg += tex;
                fb += tex;
                const double cgain = 1.0 + contrast * 0.9;
                fr = 0.35 + (fr - 0.35) * cgain;
                fg = 0.35 + (fg - 0.35) * cgain;
                fb = 0.35 + (fb - 0.35) * cgain;

                cr = 0.03 + edge * (fr - 0.03);
                cg = 0.03 + edge * (fg - 0.03);
                cb = 0.03 + edge * (fb - 0.03);
            }
            cr += rng.normal(0.0, noise_sigma);
            cg += rng.normal(0.0, noise_sigma);
            cb += rng.normal(0.0, noise_sigma);
            img[(0 * S + y) * S + x] = static_cast<float>(std::clamp(cr, 0.0, 1.0));
            img[(1 * S + y) * S + x] = static_cast<float>(std::clamp(cg, 0.0, 1.0));
            img[(2 * S + y) * S + x] = static_cast<float>(std::clamp(cb, 0.0, 1.0));
        }
    }
    return img;
}

std::string patient_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%05zu", i);
    return buf;
}

}  // namespace

Dataset generate_dataset(const GeneratorConfig& config, std::size_t threads) {
    config.validate();
    const JointTable joint =
        solve_joint(config.dr_prevalence, config.sa_marginals.at(config.primary_sa),
                    config.confound_rho);

    Dataset ds;
    ds.image_size = config.image_size;
    ds.channels = config.channels;
    ds.samples.resize(config.n_patients * config.images_per_patient);

    auto gen_patient = [&](std::size_t pi) {
        Rng prng(mix_seed(config.seed, pi));
        const PatientTraits traits = draw_patient(config, joint, prng);
        const std::string pid = patient_name(pi);
        for (std::size_t j = 0; j < config.images_per_patient; ++j) {
            Rng irng(mix_seed(config.seed, pi, j + 1));
            Sample& s = ds.samples[pi * config.images_per_patient + j];
            s.image = render_image(config, traits, irng);
            s.dr_label = traits.dr;
            s.sa = traits.sa;
            s.patient_id = pid;
            s.image_id = pid + "_i" + std::to_string(j);
        }
    };

    if (threads <= 1) {
        for (std::size_t pi = 0; pi < config.n_patients; ++pi) gen_patient(pi);
    } else {
        std::vector<std::thread> pool;
        const std::size_t n = config.n_patients;
        const std::size_t workers = std::min(threads, n);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t pi = w; pi < n; pi += workers) gen_patient(pi);
            });
        for (auto& th : pool) th.join();
    }
    return ds;
}

namespace {

struct PatientRow {
    std::string id;
    int dr;
};

std::vector<PatientRow> unique_patients(const Dataset& ds) {
    std::vector<PatientRow> out;
    std::unordered_set<std::string> seen;
    for (const auto& s : ds.samples)
        if (seen.insert(s.patient_id).second) out.push_back({s.patient_id, s.dr_label});
    return out;
}

// largest-remainder apportionment of n into the given fractions
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& f) {
    std::array<std::size_t, 3> out{};
    std::array<double, 3> rem{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double ideal = f[i] * static_cast<double>(n);
        out[i] = static_cast<std::size_t>(std::floor(ideal + 1e-9));
        rem[i] = ideal - static_cast<double>(out[i]);
        assigned += out[i];
    }
    while (assigned < n) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (rem[i] > rem[best] + 1e-12) best = i;
        out[best] += 1;
        rem[best] = -1.0;
        ++assigned;
    }
    return out;
}

}  // namespace

SplitAssignment split_dataset(const Dataset& dataset, const std::array<double, 3>& fractions,
                              std::uint64_t seed) {
    if (dataset.samples.empty()) throw SplitError("split: dataset is empty");
    const double fsum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(fsum - 1.0) > 1e-9) throw SplitError("split: fractions must sum to 1");

    auto patients = unique_patients(dataset);
    const std::size_t n = patients.size();
    const auto sizes = apportion(n, fractions);
    for (int i = 0; i < 3; ++i)
        if (sizes[i] == 0) throw SplitError("split: a split would be empty");

    std::vector<std::string> pos, neg;
    for (const auto& p : patients) (p.dr ? pos : neg).push_back(p.id);
    const std::size_t n_pos = pos.size();

    // positive quotas per split: floor of the proportional share, remaining
    // seats to the split with the largest relative deficit (keeps each
    // split's prevalence as close to the global one as the sizes allow)
    std::array<std::size_t, 3> pos_quota{};
    std::size_t given = 0;
    for (int i = 0; i < 3; ++i) {
        pos_quota[i] = static_cast<std::size_t>(
            std::floor(static_cast<double>(sizes[i]) * static_cast<double>(n_pos) /
                       static_cast<double>(n) + 1e-9));
        given += pos_quota[i];
    }
    while (given < n_pos) {
        int best = -1;
        double best_deficit = -1.0;
        for (int i = 0; i < 3; ++i) {
            if (pos_quota[i] >= sizes[i]) continue;
            const double ideal = static_cast<double>(sizes[i]) * static_cast<double>(n_pos) /
                                 static_cast<double>(n);
            const double deficit =
                (ideal - static_cast<double>(pos_quota[i])) / static_cast<double>(sizes[i]);
            if (deficit > best_deficit) {
                best_deficit = deficit;
                best = i;
            }
        }
        if (best < 0) throw SplitError("split: cannot place all DR-positive patients");
        pos_quota[best] += 1;
        ++given;
    }

    Rng rng_pos(mix_seed(seed, 1));
    Rng rng_neg(mix_seed(seed, 2));
    rng_pos.shuffle(pos);
    rng_neg.shuffle(neg);

    SplitAssignment out;
    std::array<std::vector<std::string>*, 3> dest = {&out.train, &out.val, &out.test};
    std::size_t pi = 0, ni = 0;
    for (int i = 0; i < 3; ++i) {
        for (std::size_t k = 0; k < pos_quota[i]; ++k) dest[i]->push_back(pos[pi++]);
        const std::size_t neg_quota = sizes[i] - pos_quota[i];
        for (std::size_t k = 0; k < neg_quota; ++k) {
            if (ni >= neg.size()) throw SplitError("split: negative quota exceeds pool");
            dest[i]->push_back(neg[ni++]);
        }
    }
    return out;
}

void apply_split(Dataset& dataset, const SplitAssignment& split) {
    std::unordered_map<std::string, const char*> tag;
    for (const auto& p : split.train) tag[p] = "train";
    for (const auto& p : split.val) tag[p] = "val";
    for (const auto& p : split.test) tag[p] = "test";
    for (auto& s : dataset.samples) {
        auto it = tag.find(s.patient_id);
        s.split = it == tag.end() ? "" : it->second;
    }
}

Tensor<float> augment(const Tensor<float>& image, const AugmentParams& p) {
    const std::size_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
    Tensor<float> out = image;

    auto rotate90 = [&](const Tensor<float>& in) {
        Tensor<float> r({C, W, H});
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x)
                    r[(c * W + (W - 1 - x)) * H + y] = in[(c * H + y) * W + x];
        return r;
    };
    for (int q = 0; q < ((p.quarter_turns % 4) + 4) % 4; ++q) out = rotate90(out);

    const std::size_t H2 = out.dim(1), W2 = out.dim(2);
    if (p.hflip) {
        Tensor<float> f = out;
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < H2; ++y)
                for (std::size_t x = 0; x < W2; ++x)
                    f[(c * H2 + y) * W2 + x] = out[(c * H2 + y) * W2 + (W2 - 1 - x)];
        out = std::move(f);
    }
    if (p.vflip) {
        Tensor<float> f = out;
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < H2; ++y)
                for (std::size_t x = 0; x < W2; ++x)
                    f[(c * H2 + y) * W2 + x] = out[(c * H2 + (H2 - 1 - y)) * W2 + x];
        out = std::move(f);
    }

    const bool color_change = p.brightness_delta != 0.0 || p.contrast_scale != 1.0;
    if (color_change) {
        for (std::size_t i = 0; i < out.numel(); ++i) {
            double v = (static_cast<double>(out[i]) - 0.5) * p.contrast_scale + 0.5 +
                       p.brightness_delta;
            out[i] = static_cast<float>(v);
        }
    }

    if (p.blur_sigma > 0.0) {
        const int radius = static_cast<int>(std::ceil(3.0 * p.blur_sigma));
        std::vector<double> kernel(2 * radius + 1);
        double ksum = 0.0;
        for (int k = -radius; k <= radius; ++k) {
            kernel[k + radius] = std::exp(-0.5 * k * k / (p.blur_sigma * p.blur_sigma));
            ksum += kernel[k + radius];
        }
        for (auto& k : kernel) k /= ksum;
        auto reflect = [](int i, int n) {
            while (i < 0 || i >= n) {
                if (i < 0) i = -i - 1;
                if (i >= n) i = 2 * n - 1 - i;
            }
            return i;
        };
        Tensor<float> tmp = out;
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < H2; ++y)
                for (std::size_t x = 0; x < W2; ++x) {
                    double s = 0.0;
                    for (int k = -radius; k <= radius; ++k)
                        s += kernel[k + radius] *
                             out[(c * H2 + y) * W2 + reflect(static_cast<int>(x) + k,
                                                             static_cast<int>(W2))];
                    tmp[(c * H2 + y) * W2 + x] = static_cast<float>(s);
                }
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < H2; ++y)
                for (std::size_t x = 0; x < W2; ++x) {
                    double s = 0.0;
                    for (int k = -radius; k <= radius; ++k)
                        s += kernel[k + radius] *
                             tmp[(c * H2 + reflect(static_cast<int>(y) + k,
                                                   static_cast<int>(H2))) * W2 + x];
                    out[(c * H2 + y) * W2 + x] = static_cast<float>(s);
                }
    }

    if (color_change || p.blur_sigma > 0.0)
        for (std::size_t i = 0; i < out.numel(); ++i)
            out[i] = std::clamp(out[i], 0.0f, 1.0f);
    return out;
}

void save_dataset(const Dataset& dataset, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const bool with_split =
        std::any_of(dataset.samples.begin(), dataset.samples.end(),
                    [](const Sample& s) { return !s.split.empty(); });

    std::ofstream meta(dir + "/meta.csv");
    if (!meta) throw DatasetIoError("cannot write " + dir + "/meta.csv");
    meta << "image_id,patient_id,dr,age,sex,education,insurance,obesity";
    if (with_split) meta << ",split";
    meta << "\n";
    for (const auto& s : dataset.samples) {
        meta << s.image_id << "," << s.patient_id << "," << s.dr_label;
        for (int v : s.sa) meta << "," << v;
        if (with_split) meta << "," << s.split;
        meta << "\n";
    }
    meta.close();

    std::ofstream bin(dir + "/images.bin", std::ios::binary);
    if (!bin) throw DatasetIoError("cannot write " + dir + "/images.bin");
    bin.write("SYNFUND1", 8);
    const std::uint32_t header[4] = {static_cast<std::uint32_t>(dataset.samples.size()),
                                     static_cast<std::uint32_t>(dataset.channels),
                                     static_cast<std::uint32_t>(dataset.image_size),
                                     static_cast<std::uint32_t>(dataset.image_size)};
    bin.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (const auto& s : dataset.samples)
        bin.write(reinterpret_cast<const char*>(s.image.data()),
                  static_cast<std::streamsize>(s.image.numel() * sizeof(float)));
    if (!bin) throw DatasetIoError("write failed for " + dir + "/images.bin");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

Dataset load_dataset(const std::string& dir) {
    std::ifstream meta(dir + "/meta.csv");
    if (!meta) throw DatasetIoError("cannot open " + dir + "/meta.csv");
    std::string line;
    if (!std::getline(meta, line)) throw MalformedHeaderError("meta.csv is empty");
    auto header = split_csv_line(line);
    const std::vector<std::string> expected = {"image_id", "patient_id", "dr",
                                               "age",      "sex",        "education",
                                               "insurance", "obesity"};
    bool with_split = false;
    if (header.size() == expected.size() + 1 && header.back() == "split")
        with_split = true;
    else if (header.size() != expected.size())
        throw MalformedHeaderError("meta.csv: unexpected column count");
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (header[i] != expected[i])
            throw MalformedHeaderError("meta.csv: unexpected column '" + header[i] + "'");

    Dataset ds;
    std::size_t row = 1;
    while (std::getline(meta, line)) {
        ++row;
        if (line.empty()) continue;
        auto cols = split_csv_line(line);
        if (cols.size() != expected.size() + (with_split ? 1 : 0))
            throw MalformedHeaderError("meta.csv row " + std::to_string(row) +
                                       ": wrong field count");
        Sample s;
        s.image_id = cols[0];
        s.patient_id = cols[1];
        s.dr_label = std::stoi(cols[2]);
        for (int k = 0; k < 5; ++k) s.sa[k] = std::stoi(cols[3 + k]);
        if (with_split) s.split = cols[8];
        ds.samples.push_back(std::move(s));
    }

    std::ifstream bin(dir + "/images.bin", std::ios::binary);
    if (!bin) throw DatasetIoError("cannot open " + dir + "/images.bin");
    char magic[8];
    if (!bin.read(magic, 8) || std::memcmp(magic, "SYNFUND1", 8) != 0)
        throw MalformedHeaderError("images.bin: bad magic");
    std::uint32_t header_words[4];
    if (!bin.read(reinterpret_cast<char*>(header_words), sizeof(header_words)))
        throw MalformedHeaderError("images.bin: truncated header");
    const std::size_t count = header_words[0];
    ds.channels = header_words[1];
    ds.image_size = header_words[2];
    if (header_words[3] != header_words[2])
        throw MalformedHeaderError("images.bin: non-square images unsupported");
    if (count != ds.samples.size())
        throw CountMismatchError("meta.csv has " + std::to_string(ds.samples.size()) +
                                 " rows but images.bin declares " + std::to_string(count) +
                                 " tensors");
    for (auto& s : ds.samples) {
        s.image = Tensor<float>({ds.channels, ds.image_size, ds.image_size});
        if (!bin.read(reinterpret_cast<char*>(s.image.data()),
                      static_cast<std::streamsize>(s.image.numel() * sizeof(float))))
            throw TruncatedTensorError("images.bin: tensor block truncated at " + s.image_id);
    }
    return ds;
}

double empirical_confound(const Dataset& dataset, const std::string& sa_name) {
    const std::size_t k = sa_index(sa_name);
    std::unordered_set<std::string> seen;
    double n = 0, sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (const auto& s : dataset.samples) {
        if (!seen.insert(s.patient_id).second) continue;
        const double x = s.sa[k], y = s.dr_label;
        n += 1;
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vy = syy / n - (sy / n) * (sy / n);
    if (vx <= 0 || vy <= 0) return 0.0;
    return cov / std::sqrt(vx * vy);
}

double patient_prevalence(const Dataset& dataset, const std::vector<std::string>& patient_ids) {
    std::unordered_map<std::string, int> dr;
    for (const auto& s : dataset.samples) dr[s.patient_id] = s.dr_label;
    if (patient_ids.empty()) return 0.0;
    double pos = 0;
    for (const auto& p : patient_ids) pos += dr.at(p);
    return pos / static_cast<double>(patient_ids.size());
}

}  // namespace dlab::synthgen
