#include "dlab/report.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "dlab/svg.hpp"
#include "dlab/synthgen.hpp"

namespace dlab::report {

std::string format6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

namespace {

using fairaudit::AuditReport;
using fairaudit::GroupMetrics;
using nlohmann::json;

std::string opt6(const std::optional<double>& v) { return v ? format6(*v) : "NA"; }

void write_audit_csv(const AuditReport& rep, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "sa,group,n,excluded,auroc,auroc_lo,auroc_hi,balanced_accuracy,f1,disparity\n";
    auto row = [&](const std::string& sa, const std::string& group, const GroupMetrics& m,
                   std::size_t excluded, const std::optional<double>& disparity) {
        os << sa << "," << group << "," << m.n << "," << excluded << "," << opt6(m.auroc)
           << "," << opt6(m.auroc_lo) << "," << opt6(m.auroc_hi) << ","
           << opt6(m.balanced_accuracy) << "," << format6(m.f1) << "," << opt6(disparity)
           << "\n";
    };
    row("overall", "all", rep.overall, 0, std::nullopt);
    for (const auto& sr : rep.per_sa)
        for (int g = 0; g < 2; ++g)
            row(sr.sa_name, "g" + std::to_string(g), sr.group[g], sr.excluded, sr.disparity);
}

json metrics_json(const GroupMetrics& m) {
    json j;
    j["n"] = m.n;
    j["f1"] = m.f1;
    if (m.auroc) j["auroc"] = *m.auroc;
    if (m.auroc_lo) j["auroc_lo"] = *m.auroc_lo;
    if (m.auroc_hi) j["auroc_hi"] = *m.auroc_hi;
    if (m.balanced_accuracy) j["balanced_accuracy"] = *m.balanced_accuracy;
    return j;
}

GroupMetrics metrics_from_json(const json& j) {
    GroupMetrics m;
    m.n = j.at("n");
    m.f1 = j.at("f1");
    if (j.contains("auroc")) m.auroc = j["auroc"].get<double>();
    if (j.contains("auroc_lo")) m.auroc_lo = j["auroc_lo"].get<double>();
    if (j.contains("auroc_hi")) m.auroc_hi = j["auroc_hi"].get<double>();
    if (j.contains("balanced_accuracy"))
        m.balanced_accuracy = j["balanced_accuracy"].get<double>();
    return m;
}

void write_report_json(const AuditReport& rep, const std::string& path) {
    json j;
    j["overall"] = metrics_json(rep.overall);
    j["prevalence"] = rep.prevalence;
    j["per_sa"] = json::array();
    for (const auto& sr : rep.per_sa) {
        json s;
        s["sa"] = sr.sa_name;
        s["excluded"] = sr.excluded;
        s["g0"] = metrics_json(sr.group[0]);
        s["g1"] = metrics_json(sr.group[1]);
        if (sr.disparity) s["disparity"] = *sr.disparity;
        j["per_sa"].push_back(s);
    }
    json dca = json::object();
    for (const auto& [key, curve] : rep.dca)
        dca[key] = {{"thresholds", curve.thresholds},
                    {"model", curve.net_benefit_model},
                    {"treat_all", curve.net_benefit_treat_all}};
    j["dca"] = dca;
    json risk = json::object();
    for (const auto& [key, h] : rep.risk)
        risk[key] = {{"bins", h.bins},
                     {"negative", h.counts_negative},
                     {"positive", h.counts_positive}};
    j["risk"] = risk;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << j.dump(1) << "\n";
}

}  // namespace

fairaudit::AuditReport load_report_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open audit report: " + path);
    json j;
    is >> j;
    AuditReport rep;
    rep.overall = metrics_from_json(j.at("overall"));
    rep.prevalence = j.at("prevalence");
    for (const auto& s : j.at("per_sa")) {
        fairaudit::SubgroupReport sr;
        sr.sa_name = s.at("sa");
        sr.excluded = s.at("excluded");
        sr.group[0] = metrics_from_json(s.at("g0"));
        sr.group[1] = metrics_from_json(s.at("g1"));
        if (s.contains("disparity")) sr.disparity = s["disparity"].get<double>();
        rep.per_sa.push_back(sr);
    }
    for (const auto& [key, c] : j.at("dca").items()) {
        fairaudit::DecisionCurve dc;
        dc.thresholds = c.at("thresholds").get<std::vector<double>>();
        dc.net_benefit_model = c.at("model").get<std::vector<double>>();
        dc.net_benefit_treat_all = c.at("treat_all").get<std::vector<double>>();
        dc.net_benefit_treat_none.assign(dc.thresholds.size(), 0.0);
        rep.dca[key] = std::move(dc);
    }
    for (const auto& [key, h] : j.at("risk").items()) {
        fairaudit::RiskHistogram rh;
        rh.bins = h.at("bins");
        rh.counts_negative = h.at("negative").get<std::vector<std::size_t>>();
        rh.counts_positive = h.at("positive").get<std::vector<std::size_t>>();
        rep.risk[key] = std::move(rh);
    }
    return rep;
}

void write_audit_outputs(const fairaudit::AuditReport& rep, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    write_audit_csv(rep, out_dir + "/audit.csv");
    write_report_json(rep, out_dir + "/report.json");

    for (const auto& sr : rep.per_sa) {
        const std::string& sa = sr.sa_name;

        // dca_<sa>.csv, long format
        {
            std::ofstream os(out_dir + "/dca_" + sa + ".csv");
            os << "threshold,group,net_benefit_model,net_benefit_treat_all,"
                  "net_benefit_treat_none\n";
            for (int g = 0; g < 2; ++g) {
                const std::string key = sa + "_g" + std::to_string(g);
                auto it = rep.dca.find(key);
                if (it == rep.dca.end()) continue;
                const auto& dc = it->second;
                for (std::size_t i = 0; i < dc.thresholds.size(); ++i)
                    os << format6(dc.thresholds[i]) << ",g" << g << ","
                       << format6(dc.net_benefit_model[i]) << ","
                       << format6(dc.net_benefit_treat_all[i]) << ",0\n";
            }
        }

        std::vector<svg::Series> series;
        const std::array<const char*, 2> model_colors = {"#4477aa", "#ee6677"};
        const std::array<const char*, 2> all_colors = {"#88aadd", "#f2a0aa"};
        bool any_curve = false;
        for (int g = 0; g < 2; ++g) {
            const std::string key = sa + "_g" + std::to_string(g);
            auto it = rep.dca.find(key);
            if (it == rep.dca.end()) continue;
            any_curve = true;
            series.push_back({"model g" + std::to_string(g), model_colors[g],
                              it->second.thresholds, it->second.net_benefit_model});
            series.push_back({"treat-all g" + std::to_string(g), all_colors[g],
                              it->second.thresholds, it->second.net_benefit_treat_all});
        }
        if (any_curve) {
            series.push_back({"treat-none", "#999999", {0.01, 0.99}, {0.0, 0.0}});
            svg::write_line_chart(out_dir + "/dca_" + sa + ".svg",
                                  "Decision curve analysis: " + sa, series,
                                  "threshold", "net benefit");
        }

        // risk_<sa>_<group>.csv and combined risk_<sa>.svg
        std::vector<svg::HistogramPanel> panels;
        for (int g = 0; g < 2; ++g) {
            const std::string key = sa + "_g" + std::to_string(g);
            auto it = rep.risk.find(key);
            if (it == rep.risk.end()) continue;
            const auto& h = it->second;
            std::ofstream os(out_dir + "/risk_" + sa + "_g" + std::to_string(g) + ".csv");
            os << "bin_lo,bin_hi,count_negative,count_positive\n";
            for (std::size_t b = 0; b < h.bins; ++b)
                os << format6(static_cast<double>(b) / static_cast<double>(h.bins)) << ","
                   << format6(static_cast<double>(b + 1) / static_cast<double>(h.bins)) << ","
                   << h.counts_negative[b] << "," << h.counts_positive[b] << "\n";
            panels.push_back({"g" + std::to_string(g) + " negatives", model_colors[g],
                              h.counts_negative});
            panels.push_back({"g" + std::to_string(g) + " positives", all_colors[g],
                              h.counts_positive});
        }
        if (!panels.empty())
            svg::write_histogram(out_dir + "/risk_" + sa + ".svg",
                                 "Risk distribution: " + sa, panels);
    }

    // AUROC bar pairs across all SAs
    std::vector<svg::BarPair> bars;
    for (const auto& sr : rep.per_sa) {
        svg::BarPair b;
        b.label = sr.sa_name;
        if (sr.group[0].auroc && sr.group[1].auroc) {
            b.left = *sr.group[0].auroc;
            b.right = *sr.group[1].auroc;
        } else {
            b.valid = false;
        }
        bars.push_back(b);
    }
    svg::write_bar_pairs(out_dir + "/auroc_disparity.svg", "Subgroup AUROC per SA", bars,
                         "group 0", "group 1");
}

void write_compare_outputs(const fairaudit::AuditReport& baseline,
                           const fairaudit::AuditReport& disentangled,
                           const fairaudit::ReportDelta& delta, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream os(out_dir + "/compare.csv");
        if (!os) throw std::runtime_error("cannot write compare.csv");
        os << "metric,baseline,disentangled,delta\n";
        auto opt = [](const std::optional<double>& v) { return opt6(v); };
        os << "overall_auroc," << opt(baseline.overall.auroc) << ","
           << opt(disentangled.overall.auroc) << "," << format6(delta.overall_auroc) << "\n";
        os << "overall_balanced_accuracy," << opt(baseline.overall.balanced_accuracy) << ","
           << opt(disentangled.overall.balanced_accuracy) << "," << format6(delta.overall_ba)
           << "\n";
        os << "overall_f1," << format6(baseline.overall.f1) << ","
           << format6(disentangled.overall.f1) << "," << format6(delta.overall_f1) << "\n";
        for (std::size_t i = 0; i < baseline.per_sa.size(); ++i) {
            const auto& a = baseline.per_sa[i];
            const auto& b = disentangled.per_sa[i];
            for (int g = 0; g < 2; ++g) {
                const std::string key = a.sa_name + "_g" + std::to_string(g);
                os << "auroc_" << key << "," << opt(a.group[g].auroc) << ","
                   << opt(b.group[g].auroc) << ","
                   << format6(delta.auroc_per_sa_group.at(key)) << "\n";
            }
            os << "disparity_" << a.sa_name << "," << opt(a.disparity) << ","
               << opt(b.disparity) << "," << format6(delta.disparity_per_sa.at(a.sa_name))
               << "\n";
        }
    }
    {
        std::ofstream os(out_dir + "/summary.txt");
        if (!os) throw std::runtime_error("cannot write summary.txt");
        auto pct = [](const std::optional<double>& v) {
            return v ? format6(*v * 100.0) + "%" : std::string("N/A");
        };
        os << "Baseline vs disentangled model comparison\n";
        os << "=========================================\n";
        os << "Overall DR AUROC moved from " << pct(baseline.overall.auroc) << " to "
           << pct(disentangled.overall.auroc) << " ("
           << (delta.overall_auroc >= 0 ? "+" : "") << format6(delta.overall_auroc * 100.0)
           << " points).\n";
        for (std::size_t i = 0; i < baseline.per_sa.size(); ++i) {
            const auto& a = baseline.per_sa[i];
            const auto& b = disentangled.per_sa[i];
            os << "- " << a.sa_name << ": AUROC disparity " << pct(a.disparity) << " -> "
               << pct(b.disparity);
            if (a.disparity && b.disparity) {
                const double d = delta.disparity_per_sa.at(a.sa_name);
                os << (d < 0 ? " (reduced)" : d > 0 ? " (increased)" : " (unchanged)");
            }
            os << "\n";
        }
    }
}

}  // namespace dlab::report
