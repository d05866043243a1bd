#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gazelens/eval.hpp"

namespace gazelens {

enum class Level { Sentence, Subject };
std::string_view to_string(Level l) noexcept;

/// File stem for a run, e.g. "lstm_pca" or "baseline".
std::string report_stem(const CvOptions& options);

/// Full report as JSON. `timestamp` fills "generated_at", the only field that
/// differs between identical runs.
std::string report_to_json(const CvReport& report, std::string_view timestamp = "");

/// `fold,subject_id,sentence_id,score,label`
std::string scores_csv(const CvReport& report, Level level);
/// `fold,fpr,tpr,threshold`
std::string roc_csv(const CvReport& report, Level level);

struct ReportRow {
  std::string level;      // "sentence" | "subject"
  std::string threshold;  // "fixed" | "tuned"
  double threshold_value = 0.5;
  MetricSummary auc, accuracy, recall, precision, f1;
};

struct ParsedReport {
  std::string source;
  std::string model;
  std::string repr;
  std::vector<ReportRow> rows;
  std::map<std::string, std::vector<std::vector<RocPoint>>> roc;  // level -> one polyline per fold
};

/// Throws gazelens::Error("cli", ...) on malformed input.
ParsedReport parse_report(std::string_view json_text, std::string source = "");

std::string format_table(std::span<const ParsedReport> reports);
std::string format_table_csv(std::span<const ParsedReport> reports);
/// `model,repr,level,fold,fpr,tpr,threshold`
std::string format_roc_csv(std::span<const ParsedReport> reports);

}  // namespace gazelens
