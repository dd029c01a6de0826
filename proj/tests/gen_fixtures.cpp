// Regenerates tests/fixtures/: a frozen 200-record predictions file, a
// perfect-score variant, and golden audit CSVs computed here with brute-force
// oracles (pairwise AUROC, direct confusion counting, literal net-benefit
// arithmetic) rather than the library's audit implementations.
//
// Usage: gen_fixtures [fixtures_dir]

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dlab/fairaudit.hpp"
#include "dlab/report.hpp"
#include "dlab/rng.hpp"
#include "dlab/synthgen.hpp"
#include "dlab/trainer.hpp"

using dlab::Rng;
using dlab::fairaudit::BootstrapOptions;
using dlab::fairaudit::PredictionRecord;
using dlab::report::format6;

namespace {

double brute_auroc(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!y[i]) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j]) continue;
            pairs += 1.0;
            if (s[i] > s[j]) wins += 1.0;
            else if (s[i] == s[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

bool single_class(const std::vector<int>& y) {
    return std::all_of(y.begin(), y.end(), [&](int v) { return v == y[0]; });
}

struct OracleMetrics {
    std::size_t n = 0;
    std::optional<double> auroc, auroc_lo, auroc_hi, ba;
    double f1 = 0.0;
};

OracleMetrics oracle_metrics(const std::vector<PredictionRecord>& recs,
                             const BootstrapOptions& boot) {
    OracleMetrics m;
    m.n = recs.size();
    if (recs.empty()) return m;
    std::vector<double> s;
    std::vector<int> y, yh;
    for (const auto& r : recs) {
        s.push_back(r.score);
        y.push_back(r.y_true);
        yh.push_back(r.y_hat);
    }
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i]) (yh[i] ? tp : fn) += 1;
        else (yh[i] ? fp : tn) += 1;
    }
    m.f1 = (2 * tp + fp + fn) == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
    if (single_class(y)) return m;
    m.auroc = brute_auroc(s, y);
    m.ba = 0.5 * (tp / (tp + fn) + tn / (tn + fp));

    // patient-level bootstrap, same resampling schedule as the library:
    // patients in first-appearance order, sub-seed mix_seed(seed, b)
    std::vector<std::string> patients;
    std::map<std::string, std::vector<std::size_t>> by_patient;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        auto [it, fresh] = by_patient.try_emplace(recs[i].patient_id);
        if (fresh) patients.push_back(recs[i].patient_id);
        it->second.push_back(i);
    }
    std::vector<double> stats;
    for (std::size_t b = 0; b < boot.resamples; ++b) {
        Rng rng(dlab::mix_seed(boot.seed, b));
        std::vector<double> rs;
        std::vector<int> ry;
        for (std::size_t k = 0; k < patients.size(); ++k) {
            for (std::size_t i : by_patient[patients[rng.index(patients.size())]]) {
                rs.push_back(recs[i].score);
                ry.push_back(recs[i].y_true);
            }
        }
        if (!single_class(ry)) stats.push_back(brute_auroc(rs, ry));
    }
    if (stats.size() >= 10) {
        std::sort(stats.begin(), stats.end());
        auto pct = [&](double q) {
            const double pos = q * static_cast<double>(stats.size() - 1);
            const std::size_t lo = static_cast<std::size_t>(pos);
            const std::size_t hi = std::min(lo + 1, stats.size() - 1);
            const double w = pos - static_cast<double>(lo);
            return stats[lo] * (1.0 - w) + stats[hi] * w;
        };
        m.auroc_lo = pct(0.025);
        m.auroc_hi = pct(0.975);
    }
    return m;
}

std::string opt6(const std::optional<double>& v) {
    return v ? format6(*v) : "NA";
}

std::vector<PredictionRecord> make_fixture_records() {
    std::vector<PredictionRecord> out;
    Rng rng(123);
    for (int p = 0; p < 100; ++p) {
        const int y = rng.bernoulli(0.3) ? 1 : 0;
        std::array<int, 5> sa;
        for (int k = 0; k < 5; ++k) sa[k] = rng.bernoulli(0.5) ? 1 : 0;
        for (int j = 0; j < 2; ++j) {
            PredictionRecord r;
            r.patient_id = "fx" + std::to_string(p);
            r.image_id = r.patient_id + "_i" + std::to_string(j);
            r.y_true = y;
            // overlapping score distributions, quantized so ties occur
            const double raw = rng.normal(y ? 0.62 : 0.38, 0.18);
            r.score = std::round(std::clamp(raw, 0.0, 1.0) * 200.0) / 200.0;
            r.y_hat = r.score > 0.5 ? 1 : 0;
            r.sa = sa;
            out.push_back(r);
        }
    }
    // a few records with missing metadata for one SA
    out[10].sa[2] = -1;
    out[11].sa[2] = -1;
    out[57].sa[2] = -1;
    return out;
}

std::vector<PredictionRecord> make_perfect_records() {
    std::vector<PredictionRecord> out;
    Rng rng(321);
    for (int p = 0; p < 200; ++p) {
        PredictionRecord r;
        r.patient_id = "pf" + std::to_string(p);
        r.image_id = r.patient_id + "_i0";
        r.y_true = p < 50 ? 1 : 0;
        r.score = r.y_true ? 1.0 : 0.0;
        r.y_hat = r.y_true;
        for (int k = 0; k < 5; ++k) r.sa[k] = rng.bernoulli(0.5) ? 1 : 0;
        out.push_back(r);
    }
    return out;
}

void write_goldens(const std::vector<PredictionRecord>& records, const std::string& dir,
                   const BootstrapOptions& boot) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    // audit.csv
    {
        std::ofstream os(dir + "/audit.csv");
        os << "sa,group,n,excluded,auroc,auroc_lo,auroc_hi,balanced_accuracy,f1,disparity\n";
        auto row = [&](const std::string& sa, const std::string& group,
                       const OracleMetrics& m, std::size_t excluded,
                       const std::optional<double>& disparity) {
            os << sa << "," << group << "," << m.n << "," << excluded << ","
               << opt6(m.auroc) << "," << opt6(m.auroc_lo) << "," << opt6(m.auroc_hi)
               << "," << opt6(m.ba) << "," << format6(m.f1) << "," << opt6(disparity)
               << "\n";
        };
        row("overall", "all", oracle_metrics(records, boot), 0, std::nullopt);
        for (const char* sa : dlab::synthgen::kSaNames) {
            const std::size_t k = dlab::synthgen::sa_index(sa);
            std::vector<PredictionRecord> g[2];
            std::size_t excluded = 0;
            for (const auto& r : records) {
                if (r.sa[k] == 0) g[0].push_back(r);
                else if (r.sa[k] == 1) g[1].push_back(r);
                else ++excluded;
            }
            const OracleMetrics m0 = oracle_metrics(g[0], boot);
            const OracleMetrics m1 = oracle_metrics(g[1], boot);
            std::optional<double> disparity;
            if (m0.auroc && m1.auroc) disparity = std::abs(*m0.auroc - *m1.auroc);
            row(sa, "g0", m0, excluded, disparity);
            row(sa, "g1", m1, excluded, disparity);
        }
    }

    // dca_<sa>.csv and risk_<sa>_g<k>.csv, computed by direct counting
    for (const char* sa : dlab::synthgen::kSaNames) {
        const std::size_t k = dlab::synthgen::sa_index(sa);
        std::ofstream dca(dir + "/dca_" + sa + ".csv");
        dca << "threshold,group,net_benefit_model,net_benefit_treat_all,"
               "net_benefit_treat_none\n";
        for (int gi = 0; gi < 2; ++gi) {
            std::vector<PredictionRecord> sub;
            for (const auto& r : records)
                if (r.sa[k] == gi) sub.push_back(r);
            if (sub.empty()) continue;

            const double n = static_cast<double>(sub.size());
            double pos = 0;
            for (const auto& r : sub) pos += (r.y_true != 0);
            for (int t = 1; t <= 99; ++t) {
                const double thr = static_cast<double>(t) / 100.0;
                double tp = 0, fp = 0;
                for (const auto& r : sub) {
                    if (r.score > thr) (r.y_true ? tp : fp) += 1;
                }
                const double odds = thr / (1.0 - thr);
                const double nb = tp / n - fp / n * odds;
                const double nb_all = pos / n - (n - pos) / n * odds;
                dca << format6(thr) << ",g" << gi << "," << format6(nb) << ","
                    << format6(nb_all) << ",0\n";
            }

            std::ofstream risk(dir + "/risk_" + sa + "_g" + std::to_string(gi) + ".csv");
            risk << "bin_lo,bin_hi,count_negative,count_positive\n";
            const std::size_t bins = 20;
            std::vector<std::size_t> cn(bins, 0), cp(bins, 0);
            for (const auto& r : sub) {
                std::size_t b = static_cast<std::size_t>(r.score * bins);
                if (b >= bins) b = bins - 1;
                (r.y_true ? cp : cn)[b] += 1;
            }
            for (std::size_t b = 0; b < bins; ++b)
                risk << format6(static_cast<double>(b) / bins) << ","
                     << format6(static_cast<double>(b + 1) / bins) << "," << cn[b] << ","
                     << cp[b] << "\n";
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "tests/fixtures";
    std::filesystem::create_directories(dir);

    const auto records = make_fixture_records();
    dlab::trainer::write_predictions_csv(records, dir + "/predictions.csv");
    dlab::trainer::write_predictions_csv(make_perfect_records(),
                                         dir + "/predictions_perfect.csv");

    BootstrapOptions boot;  // library defaults: 1000 resamples, seed 11
    write_goldens(records, dir + "/golden", boot);
    std::cout << "fixtures written to " << dir << "\n";
    return 0;
}
