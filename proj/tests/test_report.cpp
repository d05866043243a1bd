#include <doctest.h>

#include <json.hpp>

#include "gazelens/error.hpp"
#include "gazelens/report.hpp"
#include "gazelens/synthetic.hpp"
#include "helpers.hpp"

using namespace gazelens;

namespace {

const CvReport& baseline_report() {
  static const CvReport r = [] {
    CvOptions o;
    o.model = ClassifierKind::Baseline;
    o.folds = 3;
    o.seed = 2;
    o.svm_c_grid = {1.0};
    return nested_cv(generate_synthetic(testutil::small_spec(8)), o);
  }();
  return r;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("stems") {
    CvOptions o;
    o.model = ClassifierKind::Baseline;
    CHECK(report_stem(o) == "baseline");
    o.model = ClassifierKind::Cnn;
    o.repr = ReprKind::EmbedMeanDiff;
    CHECK(report_stem(o) == "cnn_meandiff");
    o.model = ClassifierKind::Lstm;
    o.repr = ReprKind::None;
    CHECK(report_stem(o) == "lstm_none");
  }

  TEST_CASE("JSON carries metrics and per-fold results") {
    const auto j = nlohmann::json::parse(report_to_json(baseline_report(), "2026-01-01T00:00:00Z"));
    CHECK(j["generated_at"] == "2026-01-01T00:00:00Z");
    CHECK(j["model"] == "baseline");
    CHECK(j["fold_results"].size() == 3);
    const double auc = j["metrics"]["subject"]["auc"]["mean"];
    CHECK(auc == doctest::Approx(baseline_report().subject->auc.mean));
    CHECK(j["fold_results"][0]["subject"]["scores"].size() == baseline_report().fold_results[0].subject_scores.size());
  }

  TEST_CASE("only the timestamp differs between serialisations") {
    const auto a = report_to_json(baseline_report(), "a");
    const auto b = report_to_json(baseline_report(), "b");
    auto ja = nlohmann::json::parse(a), jb = nlohmann::json::parse(b);
    CHECK(ja != jb);
    ja.erase("generated_at");
    jb.erase("generated_at");
    CHECK(ja == jb);
  }

  TEST_CASE("CSV outputs") {
    const auto s = scores_csv(baseline_report(), Level::Subject);
    CHECK(s.rfind("fold,subject_id,sentence_id,score,label\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : s) lines += c == '\n';
    CHECK(lines == 1 + 12);
    const auto roc = roc_csv(baseline_report(), Level::Sentence);
    CHECK(roc.rfind("fold,fpr,tpr,threshold\n", 0) == 0);
    CHECK(roc.find(",inf\n") != std::string::npos);
  }

  TEST_CASE("parse_report round trip and table formats") {
    const auto text = report_to_json(baseline_report(), "t");
    const auto p = parse_report(text, "x.json");
    CHECK(p.model == "baseline");
    CHECK(p.repr == "none");
    CHECK_FALSE(p.rows.empty());
    CHECK(p.roc.at("subject").size() == 3);
    const std::vector<ParsedReport> ps{p};
    const auto table = format_table(ps);
    CHECK(table.find("baseline") != std::string::npos);
    const auto csv = format_table_csv(ps);
    CHECK(csv.find("baseline") != std::string::npos);
    const auto rc = format_roc_csv(ps);
    CHECK(rc.rfind("model,repr,level,fold,fpr,tpr,threshold\n", 0) == 0);
  }

  TEST_CASE("malformed reports are rejected") {
    CHECK_THROWS_AS(parse_report("not json"), Error);
    CHECK_THROWS_AS(parse_report("{\"model\": 3}"), Error);
    CHECK_THROWS_AS(parse_report("[]"), Error);
  }
}
