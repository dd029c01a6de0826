#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dlab::fairaudit {

struct PredictionRecord {
    double score = 0.0;  // P(referable)
    int y_true = 0;
    int y_hat = 0;
    std::array<int, 5> sa = {0, 0, 0, 0, 0};        // -1 marks missing metadata
    std::string patient_id;
    std::string image_id;
};

struct UndefinedMetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mann-Whitney AUROC with ties counted 0.5; throws UndefinedMetricError when
// either class is absent.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

double balanced_accuracy(const std::vector<int>& y_hat, const std::vector<int>& y_true);
double f1(const std::vector<int>& y_hat, const std::vector<int>& y_true);

struct GroupMetrics {
    std::size_t n = 0;
    std::optional<double> auroc;  // nullopt when the group has a single class
    std::optional<double> auroc_lo, auroc_hi;  // bootstrap percentile interval
    std::optional<double> balanced_accuracy;
    double f1 = 0.0;
};

struct SubgroupReport {
    std::string sa_name;
    GroupMetrics group[2];
    std::optional<double> disparity;  // |AUROC_g0 - AUROC_g1|
    std::size_t excluded = 0;         // records with missing SA metadata
};

struct BootstrapOptions {
    std::size_t resamples = 1000;
    std::uint64_t seed = 11;
    bool enabled = true;
};

SubgroupReport subgroup_report(const std::vector<PredictionRecord>& records,
                               const std::string& sa_name, BootstrapOptions boot = {});

struct DecisionCurve {
    std::vector<double> thresholds;
    std::vector<double> net_benefit_model;
    std::vector<double> net_benefit_treat_all;
    std::vector<double> net_benefit_treat_none;  // identically zero
};

// NB(t) = TP/N - FP/N * t/(1-t), classifying positive at score > t
DecisionCurve decision_curve(const std::vector<PredictionRecord>& records,
                             const std::vector<double>& thresholds);

std::vector<double> default_dca_thresholds();  // 0.01 .. 0.99, step 0.01

struct RiskHistogram {
    std::size_t bins = 20;
    std::vector<std::size_t> counts_negative;  // y_true = 0
    std::vector<std::size_t> counts_positive;  // y_true = 1
};

// uniform bins over [0,1], right-open except the last
RiskHistogram risk_distribution(const std::vector<PredictionRecord>& records,
                                std::size_t bins = 20);

// Linear leakage probe: logistic regression on 70% of the vectors, AUROC on
// the held-out 30%. Deterministic given the seed.
double probe_leakage(const std::vector<std::vector<double>>& feature_vectors,
                     const std::vector<int>& sa_labels, std::uint64_t split_seed);

struct AuditReport {
    GroupMetrics overall;
    std::vector<SubgroupReport> per_sa;  // fixed five-SA order
    std::map<std::string, DecisionCurve> dca;                 // per SA per group: "<sa>_g<k>"
    std::map<std::string, RiskHistogram> risk;                // same keys
    double prevalence = 0.0;
};

AuditReport build_report(const std::vector<PredictionRecord>& records,
                         BootstrapOptions boot = {});

struct ReportDelta {
    double overall_auroc = 0.0;
    double overall_ba = 0.0;
    double overall_f1 = 0.0;
    std::map<std::string, double> auroc_per_sa_group;  // "<sa>_g<k>"
    std::map<std::string, double> disparity_per_sa;
};

// elementwise (disentangled - baseline); antisymmetric by construction
ReportDelta compare_reports(const AuditReport& baseline, const AuditReport& disentangled);

}  // namespace dlab::fairaudit
