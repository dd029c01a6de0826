#include "dlab/fairaudit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "dlab/rng.hpp"
#include "dlab/synthgen.hpp"

namespace dlab::fairaudit {

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("auroc: size mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int l : labels) n_pos += (l != 0);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetricError("auroc undefined: only one class present");

    // average ranks with tie groups
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] != 0) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double u = rank_sum_pos -
                     static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

struct Confusion {
    double tp = 0, fp = 0, fn = 0, tn = 0;
};

Confusion confusion(const std::vector<int>& y_hat, const std::vector<int>& y_true) {
    if (y_hat.size() != y_true.size())
        throw std::invalid_argument("confusion: size mismatch");
    if (y_hat.empty()) throw UndefinedMetricError("empty input");
    Confusion c;
    for (std::size_t i = 0; i < y_hat.size(); ++i) {
        if (y_true[i]) (y_hat[i] ? c.tp : c.fn) += 1;
        else (y_hat[i] ? c.fp : c.tn) += 1;
    }
    return c;
}

}  // namespace

double balanced_accuracy(const std::vector<int>& y_hat, const std::vector<int>& y_true) {
    const Confusion c = confusion(y_hat, y_true);
    if (c.tp + c.fn == 0 || c.tn + c.fp == 0)
        throw UndefinedMetricError("balanced accuracy undefined: only one class present");
    return 0.5 * (c.tp / (c.tp + c.fn) + c.tn / (c.tn + c.fp));
}

double f1(const std::vector<int>& y_hat, const std::vector<int>& y_true) {
    const Confusion c = confusion(y_hat, y_true);
    const double denom = 2.0 * c.tp + c.fp + c.fn;
    return denom == 0.0 ? 0.0 : 2.0 * c.tp / denom;
}

namespace {

GroupMetrics group_metrics(const std::vector<PredictionRecord>& recs, BootstrapOptions boot) {
    GroupMetrics m;
    m.n = recs.size();
    if (recs.empty()) return m;
    std::vector<double> scores;
    std::vector<int> labels, hats;
    for (const auto& r : recs) {
        scores.push_back(r.score);
        labels.push_back(r.y_true);
        hats.push_back(r.y_hat);
    }
    m.f1 = f1(hats, labels);
    try {
        m.auroc = auroc(scores, labels);
        m.balanced_accuracy = balanced_accuracy(hats, labels);
    } catch (const UndefinedMetricError&) {
        return m;  // single-class group: AUROC/BA reported as N/A
    }

    if (boot.enabled && m.auroc) {
        // patient-level bootstrap percentile interval
        std::vector<std::string> patients;
        std::unordered_map<std::string, std::vector<std::size_t>> by_patient;
        for (std::size_t i = 0; i < recs.size(); ++i) {
            auto [it, fresh] = by_patient.try_emplace(recs[i].patient_id);
            if (fresh) patients.push_back(recs[i].patient_id);
            it->second.push_back(i);
        }
        std::vector<double> stats;
        stats.reserve(boot.resamples);
        for (std::size_t b = 0; b < boot.resamples; ++b) {
            Rng rng(mix_seed(boot.seed, b));
            std::vector<double> s;
            std::vector<int> l;
            for (std::size_t k = 0; k < patients.size(); ++k) {
                const auto& idx = by_patient[patients[rng.index(patients.size())]];
                for (std::size_t i : idx) {
                    s.push_back(recs[i].score);
                    l.push_back(recs[i].y_true);
                }
            }
            try {
                stats.push_back(auroc(s, l));
            } catch (const UndefinedMetricError&) {
                // resample collapsed to one class; skip it
            }
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
    }
    return m;
}

}  // namespace

SubgroupReport subgroup_report(const std::vector<PredictionRecord>& records,
                               const std::string& sa_name, BootstrapOptions boot) {
    const std::size_t k = synthgen::sa_index(sa_name);
    SubgroupReport rep;
    rep.sa_name = sa_name;
    std::vector<PredictionRecord> g0, g1;
    for (const auto& r : records) {
        if (r.sa[k] == 0) g0.push_back(r);
        else if (r.sa[k] == 1) g1.push_back(r);
        else ++rep.excluded;
    }
    rep.group[0] = group_metrics(g0, boot);
    rep.group[1] = group_metrics(g1, boot);
    if (rep.group[0].auroc && rep.group[1].auroc)
        rep.disparity = std::abs(*rep.group[0].auroc - *rep.group[1].auroc);
    return rep;
}

std::vector<double> default_dca_thresholds() {
    std::vector<double> t;
    for (int i = 1; i <= 99; ++i) t.push_back(static_cast<double>(i) / 100.0);
    return t;
}

DecisionCurve decision_curve(const std::vector<PredictionRecord>& records,
                             const std::vector<double>& thresholds) {
    DecisionCurve dc;
    const double n = static_cast<double>(records.size());
    double pos = 0, neg = 0;
    for (const auto& r : records) (r.y_true ? pos : neg) += 1;
    for (double t : thresholds) {
        if (!(t > 0.0 && t < 1.0))
            throw std::invalid_argument("decision_curve: threshold outside (0,1)");
        double tp = 0, fp = 0;
        for (const auto& r : records) {
            if (r.score > t) (r.y_true ? tp : fp) += 1;
        }
        const double odds = t / (1.0 - t);
        dc.thresholds.push_back(t);
        dc.net_benefit_model.push_back(n == 0 ? 0.0 : tp / n - fp / n * odds);
        dc.net_benefit_treat_all.push_back(n == 0 ? 0.0 : pos / n - neg / n * odds);
        dc.net_benefit_treat_none.push_back(0.0);
    }
    return dc;
}

RiskHistogram risk_distribution(const std::vector<PredictionRecord>& records,
                                std::size_t bins) {
    if (bins < 2) throw std::invalid_argument("risk_distribution: need at least 2 bins");
    RiskHistogram h;
    h.bins = bins;
    h.counts_negative.assign(bins, 0);
    h.counts_positive.assign(bins, 0);
    for (const auto& r : records) {
        std::size_t b = static_cast<std::size_t>(r.score * static_cast<double>(bins));
        if (b >= bins) b = bins - 1;  // score == 1 falls in the last (closed) bin
        (r.y_true ? h.counts_positive : h.counts_negative)[b] += 1;
    }
    return h;
}

double probe_leakage(const std::vector<std::vector<double>>& feature_vectors,
                     const std::vector<int>& sa_labels, std::uint64_t split_seed) {
    if (feature_vectors.size() != sa_labels.size())
        throw std::invalid_argument("probe_leakage: size mismatch");
    const std::size_t n = feature_vectors.size();
    std::size_t n_pos = 0;
    for (int l : sa_labels) n_pos += (l != 0);
    if (n_pos < 20 || n - n_pos < 20)
        throw UndefinedMetricError("probe_leakage: need at least 20 samples per class");
    const std::size_t dim = feature_vectors[0].size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(split_seed);
    rng.shuffle(order);
    const std::size_t n_train = (n * 7) / 10;

    // standardize on the training portion
    std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
    for (std::size_t i = 0; i < n_train; ++i)
        for (std::size_t d = 0; d < dim; ++d) mean[d] += feature_vectors[order[i]][d];
    for (auto& m : mean) m /= static_cast<double>(n_train);
    for (std::size_t i = 0; i < n_train; ++i)
        for (std::size_t d = 0; d < dim; ++d) {
            const double c = feature_vectors[order[i]][d] - mean[d];
            sd[d] += c * c;
        }
    for (auto& s : sd) s = std::max(1e-8, std::sqrt(s / static_cast<double>(n_train)));

    // full-batch logistic regression, fixed iteration budget
    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    const int iters = 400;
    const double lr = 0.5;
    std::vector<double> feat(dim);
    for (int it = 0; it < iters; ++it) {
        std::vector<double> gw(dim, 0.0);
        double gb = 0.0;
        for (std::size_t i = 0; i < n_train; ++i) {
            const auto& fv = feature_vectors[order[i]];
            double z = b;
            for (std::size_t d = 0; d < dim; ++d) {
                feat[d] = (fv[d] - mean[d]) / sd[d];
                z += w[d] * feat[d];
            }
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double err = p - (sa_labels[order[i]] ? 1.0 : 0.0);
            for (std::size_t d = 0; d < dim; ++d) gw[d] += err * feat[d];
            gb += err;
        }
        const double inv = 1.0 / static_cast<double>(n_train);
        for (std::size_t d = 0; d < dim; ++d) w[d] -= lr * (gw[d] * inv + 1e-4 * w[d]);
        b -= lr * gb * inv;
    }

    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = n_train; i < n; ++i) {
        const auto& fv = feature_vectors[order[i]];
        double z = b;
        for (std::size_t d = 0; d < dim; ++d) z += w[d] * (fv[d] - mean[d]) / sd[d];
        scores.push_back(z);
        labels.push_back(sa_labels[order[i]]);
    }
    return auroc(scores, labels);
}

AuditReport build_report(const std::vector<PredictionRecord>& records, BootstrapOptions boot) {
    AuditReport rep;
    rep.overall = group_metrics(records, boot);
    double pos = 0;
    for (const auto& r : records) pos += (r.y_true != 0);
    rep.prevalence = records.empty() ? 0.0 : pos / static_cast<double>(records.size());
    const auto thresholds = default_dca_thresholds();
    for (const char* sa : synthgen::kSaNames) {
        rep.per_sa.push_back(subgroup_report(records, sa, boot));
        const std::size_t k = synthgen::sa_index(sa);
        for (int g = 0; g < 2; ++g) {
            std::vector<PredictionRecord> sub;
            for (const auto& r : records)
                if (r.sa[k] == g) sub.push_back(r);
            const std::string key = std::string(sa) + "_g" + std::to_string(g);
            if (!sub.empty()) {
                rep.dca[key] = decision_curve(sub, thresholds);
                rep.risk[key] = risk_distribution(sub);
            }
        }
    }
    return rep;
}

ReportDelta compare_reports(const AuditReport& baseline, const AuditReport& disentangled) {
    if (baseline.per_sa.size() != disentangled.per_sa.size())
        throw std::invalid_argument("compare_reports: SA sets differ");
    ReportDelta d;
    auto opt_delta = [](const std::optional<double>& a, const std::optional<double>& b) {
        return (a && b) ? *b - *a : 0.0;
    };
    d.overall_auroc = opt_delta(baseline.overall.auroc, disentangled.overall.auroc);
    d.overall_ba =
        opt_delta(baseline.overall.balanced_accuracy, disentangled.overall.balanced_accuracy);
    d.overall_f1 = disentangled.overall.f1 - baseline.overall.f1;
    for (std::size_t i = 0; i < baseline.per_sa.size(); ++i) {
        const auto& a = baseline.per_sa[i];
        const auto& b = disentangled.per_sa[i];
        if (a.sa_name != b.sa_name)
            throw std::invalid_argument("compare_reports: subgroup definitions mismatch");
        for (int g = 0; g < 2; ++g)
            d.auroc_per_sa_group[a.sa_name + "_g" + std::to_string(g)] =
                opt_delta(a.group[g].auroc, b.group[g].auroc);
        d.disparity_per_sa[a.sa_name] = opt_delta(a.disparity, b.disparity);
    }
    return d;
}

}  // namespace dlab::fairaudit
