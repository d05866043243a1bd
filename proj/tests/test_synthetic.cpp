#include <doctest.h>

#include <cmath>
#include <map>

#include "gazelens/error.hpp"
#include "gazelens/synthetic.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace gazelens;

TEST_SUITE("synthetic") {
  TEST_CASE("default spec matches the reference corpus shape") {
    const Dataset d = generate_synthetic(SyntheticSpec{});
    CHECK(d.subjects.size() == 62);
    int dys = 0;
    for (const auto& s : d.subjects) dys += s.label;
    CHECK(dys == 33);
    CHECK(d.sentences.size() == 60);
    std::map<std::string, int> per;
    for (const auto& t : d.trials) ++per[t.subject_id];
    for (const auto& [s, n] : per) {
      CHECK(n >= 24);
      CHECK(n <= 59);
    }
    for (const auto& s : d.sentences) {
      CHECK(s.word_count() >= 7);
      CHECK(s.word_count() <= 13);
    }
    CHECK_NOTHROW(d.validate());
  }

  TEST_CASE("pure function of the spec") {
    const auto a = generate_synthetic(testutil::small_spec(3));
    const auto b = generate_synthetic(testutil::small_spec(3));
    CHECK(format_dataset_csv(a) == format_dataset_csv(b));
    const auto c = generate_synthetic(testutil::small_spec(4));
    CHECK(format_dataset_csv(a) != format_dataset_csv(c));
  }

  TEST_CASE("skipped words appear as all-zero vectors") {
    auto spec = testutil::small_spec();
    spec.skip_probability = 0.3;
    const auto d = generate_synthetic(spec);
    std::size_t skipped = 0, total = 0;
    for (const auto& t : d.trials)
      for (const auto& w : t.measures) {
        skipped += w.is_skipped();
        ++total;
      }
    const double rate = static_cast<double>(skipped) / static_cast<double>(total);
    CHECK(rate > 0.2);
    CHECK(rate < 0.4);
  }

  TEST_CASE("total gaze effect size is recovered (Welch)") {
    const Dataset d = generate_synthetic(SyntheticSpec{});
    const auto labels = d.label_map();
    // per-subject means of total_gaze_dur, standardised by the control spread
    std::map<std::string, std::pair<double, int>> acc;
    std::vector<double> control_words;
    for (const auto& t : d.trials)
      for (const auto& w : t.measures) {
        if (w.is_skipped()) continue;
        auto& a = acc[t.subject_id];
        a.first += w[Measure::TotalGazeDur];
        ++a.second;
        if (labels.at(t.subject_id) == 0) control_words.push_back(w[Measure::TotalGazeDur]);
      }
    double mu = 0, ss = 0;
    for (double x : control_words) mu += x;
    mu /= static_cast<double>(control_words.size());
    for (double x : control_words) ss += (x - mu) * (x - mu);
    const double sd = std::sqrt(ss / static_cast<double>(control_words.size()));
    std::vector<double> dys, ctl;
    for (const auto& [s, a] : acc) (labels.at(s) ? dys : ctl).push_back(a.first / a.second / sd);
    const double md = [&] {
      double a = 0, b = 0;
      for (double x : dys) a += x;
      for (double x : ctl) b += x;
      return a / static_cast<double>(dys.size()) - b / static_cast<double>(ctl.size());
    }();
    CHECK(md == doctest::Approx(0.8).epsilon(0.15 / 0.8));
    CHECK(oracle::welch_t(dys, ctl) > 2.0);
  }

  TEST_CASE("spec validation") {
    auto s = testutil::small_spec();
    s.n_dyslexic = s.n_subjects + 1;
    CHECK_THROWS_AS(s.validate(), Error);
    s = testutil::small_spec();
    s.max_retained = s.n_sentences + 1;
    CHECK_THROWS_AS(s.validate(), Error);
    s = testutil::small_spec();
    s.measures[1].effect_size = std::nan("");
    CHECK_THROWS_AS(s.validate(), Error);
  }
}
