#include "gazelens/report.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "gazelens/error.hpp"
#include "gazelens/text_io.hpp"

namespace gazelens {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw Error("cli", msg); }

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json summary_json(const MetricSummary& s) { return {{"mean", s.mean}, {"se", s.std_error}, {"n", s.n}}; }

json level_json(const LevelMetrics& m) {
  return {{"threshold", m.threshold},         {"auc", summary_json(m.auc)},
          {"accuracy", summary_json(m.accuracy)}, {"recall", summary_json(m.recall)},
          {"precision", summary_json(m.precision)}, {"f1", summary_json(m.f1)}};
}

json threshold_json(const ThresholdMetrics& m) {
  return {{"tp", m.tp},
          {"fp", m.fp},
          {"tn", m.tn},
          {"fn", m.fn},
          {"accuracy", m.accuracy},
          {"recall", opt(m.recall)},
          {"precision", opt(m.precision)},
          {"f1", opt(m.f1)}};
}

json roc_json(const RocCurve& r) {
  json pts = json::array();
  for (const auto& p : r.points)
    pts.push_back({p.fpr, p.tpr, std::isinf(p.threshold) ? json(nullptr) : json(p.threshold)});
  return pts;
}

json scores_json(std::span<const ScoreRow> rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back({r.subject_id, r.sentence_id, r.score, r.label});
  return out;
}

json hyper_json(const HyperSample& h) {
  json j{{"model", to_string(h.kind)}};
  if (h.kind == ClassifierKind::Lstm) j["hidden_size"] = h.lstm.hidden_size;
  if (h.kind == ClassifierKind::Cnn) {
    j["c1_channels"] = h.cnn.c1_channels;
    j["c1_kernel"] = h.cnn.c1_kernel;
    j["c1_pool"] = nn::to_string(h.cnn.c1_pool);
    j["c2_channels"] = h.cnn.c2_channels;
    j["c2_kernel"] = h.cnn.c2_kernel;
    j["c2_pool"] = nn::to_string(h.cnn.c2_pool);
    j["l1_size"] = h.cnn.l1_size;
    j["dropout"] = h.cnn.dropout;
  }
  j["batch_size"] = h.batch_size;
  j["learning_rate"] = h.learning_rate;
  j["threshold"] = h.threshold;
  return j;
}

json svm_json(const SvmChoice& c) {
  return {{"C", c.C}, {"n_features", c.n_features}, {"selected", c.selected}, {"validation_auc", c.validation_auc}};
}

MetricSummary parse_summary(const json& j) {
  MetricSummary s;
  s.mean = j.at("mean").get<double>();
  s.std_error = j.at("se").get<double>();
  s.n = j.at("n").get<std::size_t>();
  return s;
}

std::string pm(const MetricSummary& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << s.mean << " ± " << s.std_error;
  return os.str();
}

}  // namespace

std::string_view to_string(Level l) noexcept { return l == Level::Sentence ? "sentence" : "subject"; }

std::string report_stem(const CvOptions& o) {
  if (o.model == ClassifierKind::Baseline) return "baseline";
  return std::string(to_string(o.model)) + "_" + std::string(to_string(o.repr));
}

std::string report_to_json(const CvReport& r, std::string_view timestamp) {
  const auto& o = r.options;
  json j;
  j["generated_at"] = std::string(timestamp);
  j["model"] = to_string(o.model);
  j["repr"] = to_string(o.repr);
  j["folds"] = o.folds;
  j["seed"] = o.seed;
  json settings;
  if (o.model == ClassifierKind::Baseline) {
    settings["scope"] = to_string(o.scope);
    settings["c_grid"] = o.svm_c_grid;
    settings["tolerance"] = o.svm.tolerance;
    settings["max_epochs"] = o.svm.max_epochs;
  } else {
    settings["budget"] = o.model == ClassifierKind::Lstm ? o.lstm_budget : o.cnn_budget;
    settings["lr_sampling"] = to_string(o.lr_sampling);
    settings["threshold_policy"] = to_string(o.threshold_policy);
    settings["max_epochs"] = o.max_epochs;
    settings["patience"] = o.patience;
    settings["inner_max_epochs"] = o.inner_max_epochs ? o.inner_max_epochs : o.max_epochs;
    settings["inner_patience"] = o.inner_patience ? o.inner_patience : o.patience;
    settings["meandiff_epochs"] = o.repr_options.meandiff.epochs;
    settings["meandiff_learning_rate"] = o.repr_options.meandiff.learning_rate;
    settings["normalize_stimulus"] = o.repr_options.normalize_stimulus;
  }
  j["settings"] = settings;
  json assignment = json::object();
  for (const auto& [s, f] : r.assignment.fold_of) assignment[s] = f;
  j["assignment"] = assignment;

  json metrics = json::object();
  if (r.sentence) metrics["sentence"] = level_json(*r.sentence);
  if (r.subject) metrics["subject"] = level_json(*r.subject);
  if (r.sentence_tuned) metrics["sentence_tuned"] = level_json(*r.sentence_tuned);
  if (r.subject_tuned) metrics["subject_tuned"] = level_json(*r.subject_tuned);
  j["metrics"] = metrics;

  json folds = json::array();
  for (const auto& fr : r.fold_results) {
    json f;
    f["fold"] = fr.fold;
    if (fr.chosen) {
      f["chosen"] = hyper_json(*fr.chosen);
      f["candidate_validation_auc"] = fr.candidate_auc;
      f["earlystop_fold"] = fr.earlystop_fold;
      f["best_epoch"] = fr.best_epoch;
    }
    if (fr.svm_subject) f["svm_subject"] = svm_json(*fr.svm_subject);
    if (fr.svm_sentence) f["svm_sentence"] = svm_json(*fr.svm_sentence);
    f["model_fingerprint"] = hex(fr.model_fingerprint);
    f["artifact_fingerprint"] = hex(fr.artifact_fingerprint);
    auto level = [](const RocCurve& roc, const ThresholdMetrics& fixed, const ThresholdMetrics& tuned,
                    std::span<const ScoreRow> rows) {
      return json{{"auc", roc.auc},
                  {"fixed", threshold_json(fixed)},
                  {"tuned", threshold_json(tuned)},
                  {"roc", roc_json(roc)},
                  {"scores", scores_json(rows)}};
    };
    if (fr.has_sentence) f["sentence"] = level(fr.sentence_roc, fr.sentence_fixed, fr.sentence_tuned, fr.sentence_scores);
    if (fr.has_subject) f["subject"] = level(fr.subject_roc, fr.subject_fixed, fr.subject_tuned, fr.subject_scores);
    f["warnings"] = fr.warnings;
    folds.push_back(std::move(f));
  }
  j["fold_results"] = std::move(folds);
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

std::string scores_csv(const CvReport& r, Level level) {
  std::string out = "fold,subject_id,sentence_id,score,label\n";
  for (const auto& fr : r.fold_results) {
    const auto& rows = level == Level::Sentence ? fr.sentence_scores : fr.subject_scores;
    for (const auto& row : rows)
      out += std::to_string(row.fold) + "," + row.subject_id + "," + row.sentence_id + "," +
             text::format_exact(row.score) + "," + std::to_string(row.label) + "\n";
  }
  return out;
}

std::string roc_csv(const CvReport& r, Level level) {
  std::string out = "fold,fpr,tpr,threshold\n";
  for (const auto& fr : r.fold_results) {
    if (level == Level::Sentence ? !fr.has_sentence : !fr.has_subject) continue;
    const auto& roc = level == Level::Sentence ? fr.sentence_roc : fr.subject_roc;
    for (const auto& p : roc.points)
      out += std::to_string(fr.fold) + "," + text::format_exact(p.fpr) + "," + text::format_exact(p.tpr) + "," +
             (std::isinf(p.threshold) ? std::string("inf") : text::format_exact(p.threshold)) + "\n";
  }
  return out;
}

ParsedReport parse_report(std::string_view text, std::string source) {
  ParsedReport p;
  p.source = std::move(source);
  const std::string where = p.source.empty() ? "report" : p.source;
  try {
    const json j = json::parse(text);
    p.model = j.at("model").get<std::string>();
    p.repr = j.at("repr").get<std::string>();
    for (const auto& [key, m] : j.at("metrics").items()) {
      ReportRow row;
      const auto cut = key.find('_');
      row.level = key.substr(0, cut);
      row.threshold = cut == std::string::npos ? "fixed" : "tuned";
      row.threshold_value = m.at("threshold").get<double>();
      row.auc = parse_summary(m.at("auc"));
      row.accuracy = parse_summary(m.at("accuracy"));
      row.recall = parse_summary(m.at("recall"));
      row.precision = parse_summary(m.at("precision"));
      row.f1 = parse_summary(m.at("f1"));
      p.rows.push_back(row);
    }
    for (const auto& f : j.at("fold_results")) {
      for (const char* level : {"sentence", "subject"}) {
        if (!f.contains(level)) continue;
        std::vector<RocPoint> line;
        for (const auto& pt : f.at(level).at("roc")) {
          if (!pt.is_array() || pt.size() != 3) fail(where + ": ROC point must be [fpr, tpr, threshold]");
          line.push_back({pt[0].get<double>(), pt[1].get<double>(),
                          pt[2].is_null() ? std::numeric_limits<double>::infinity() : pt[2].get<double>()});
        }
        p.roc[level].push_back(std::move(line));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(where + ": malformed report: " + e.what());
  }
  if (p.rows.empty()) fail(where + ": report has no metrics");
  return p;
}

std::string format_table(std::span<const ParsedReport> reports) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "model" << std::setw(10) << "repr" << std::setw(10) << "level" << std::setw(12)
     << "threshold" << std::setw(14) << "AUC" << std::setw(14) << "accuracy" << std::setw(14) << "recall"
     << std::setw(14) << "precision" << "F1\n";
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      std::ostringstream th;
      th << row.threshold << "(" << std::setprecision(3) << row.threshold_value << ")";
      os << std::setw(10) << r.model << std::setw(10) << r.repr << std::setw(10) << row.level << std::setw(12)
         << th.str() << std::setw(14) << pm(row.auc) << std::setw(14) << pm(row.accuracy) << std::setw(14)
         << pm(row.recall) << std::setw(14) << pm(row.precision) << pm(row.f1) << "\n";
    }
    os << "\n";
  }
  return os.str();
}

std::string format_table_csv(std::span<const ParsedReport> reports) {
  std::string out =
      "model,repr,level,threshold,threshold_value,auc,auc_se,accuracy,accuracy_se,recall,recall_se,precision,"
      "precision_se,f1,f1_se\n";
  for (const auto& r : reports)
    for (const auto& row : r.rows) {
      out += r.model + "," + r.repr + "," + row.level + "," + row.threshold + "," +
             text::format_exact(row.threshold_value);
      for (const auto* s : {&row.auc, &row.accuracy, &row.recall, &row.precision, &row.f1})
        out += "," + text::format_exact(s->mean) + "," + text::format_exact(s->std_error);
      out += "\n";
    }
  return out;
}

std::string format_roc_csv(std::span<const ParsedReport> reports) {
  std::string out = "model,repr,level,fold,fpr,tpr,threshold\n";
  for (const auto& r : reports)
    for (const auto& [level, lines] : r.roc)
      for (std::size_t f = 0; f < lines.size(); ++f)
        for (const auto& p : lines[f])
          out += r.model + "," + r.repr + "," + level + "," + std::to_string(f) + "," + text::format_exact(p.fpr) +
                 "," + text::format_exact(p.tpr) + "," +
                 (std::isinf(p.threshold) ? std::string("inf") : text::format_exact(p.threshold)) + "\n";
  return out;
}

}  // namespace gazelens
