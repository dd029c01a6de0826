#pragma once

#include <string>

#include "dlab/fairaudit.hpp"

namespace dlab::report {

// Writes audit.csv, dca_<sa>.csv, risk_<sa>_<group>.csv, report.json and the
// three SVG plot families into out_dir. Numbers use 6 significant digits.
void write_audit_outputs(const fairaudit::AuditReport& rep, const std::string& out_dir);

fairaudit::AuditReport load_report_json(const std::string& path);

// compare.csv + a short plain-text summary of the deltas
void write_compare_outputs(const fairaudit::AuditReport& baseline,
                           const fairaudit::AuditReport& disentangled,
                           const fairaudit::ReportDelta& delta, const std::string& out_dir);

std::string format6(double v);  // 6 significant digits

}  // namespace dlab::report
