#include <doctest.h>

#include <fstream>

#include "gazelens/config.hpp"
#include "gazelens/error.hpp"
#include "gazelens/seed.hpp"

using namespace gazelens;

TEST_SUITE("config") {
  TEST_CASE("defaults") {
    const auto c = parse_run_config("[paths]\ndataset = d.csv\n", "/base");
    CHECK(c.dataset == std::filesystem::path("/base/d.csv"));
    CHECK(c.output_dir == std::filesystem::path("/base/out"));
    CHECK(c.cv.model == ClassifierKind::Lstm);
    CHECK(c.cv.repr == ReprKind::None);
    CHECK(c.cv.folds == 10);
    CHECK(c.cv.lstm_budget == 50);
    CHECK(c.cv.cnn_budget == 100);
    CHECK(c.cv.threshold_policy == ThresholdPolicy::Tuned);
    CHECK(c.cv.max_epochs == 200);
    CHECK(c.cv.patience == 10);
  }

  TEST_CASE("all sections parse") {
    const auto c = parse_run_config(R"(
[paths]
dataset = /abs/d.csv
embeddings = e.csv
output = results

[run]
seed = 42
model = cnn
repr = pca
folds = 5
cnn_budget = 7
jobs = 3
lr_sampling = log_uniform
threshold_policy = fixed

[train]
max_epochs = 30
patience = 4
inner_max_epochs = 6
meandiff_epochs = 11

[svm]
c_grid = 0.5, 2
tolerance = 1e-4

[synth]
n_subjects = 20
n_dyslexic = 9
total_gaze_dur.effect = 1.5
)",
                                    "/base");
    CHECK(c.dataset == std::filesystem::path("/abs/d.csv"));
    CHECK(c.embeddings == std::filesystem::path("/base/e.csv"));
    CHECK(c.seed == 42);
    CHECK(c.cv.model == ClassifierKind::Cnn);
    CHECK(c.cv.repr == ReprKind::EmbedPca);
    CHECK(c.cv.folds == 5);
    CHECK(c.cv.cnn_budget == 7);
    CHECK(c.cv.jobs == 3);
    CHECK(c.cv.lr_sampling == LrSampling::LogUniform);
    CHECK(c.cv.threshold_policy == ThresholdPolicy::Fixed);
    CHECK(c.cv.max_epochs == 30);
    CHECK(c.cv.inner_max_epochs == 6);
    CHECK(c.cv.repr_options.meandiff.epochs == 11);
    CHECK(c.cv.svm_c_grid == std::vector<double>{0.5, 2.0});
    CHECK(c.cv.svm.tolerance == 1e-4);
    CHECK(c.synth.n_subjects == 20);
    CHECK(c.synth.measures[static_cast<std::size_t>(Measure::TotalGazeDur)].effect_size == 1.5);
  }

  TEST_CASE("unknown keys, sections and bad values are errors") {
    CHECK_THROWS_AS(parse_run_config("[run]\nsede = 1\n"), Error);
    CHECK_THROWS_AS(parse_run_config("[runs]\nseed = 1\n"), Error);
    CHECK_THROWS_AS(parse_run_config("[run]\nmodel = rnn\n"), Error);
    CHECK_THROWS_AS(parse_run_config("[run]\nfolds = ten\n"), Error);
    CHECK_THROWS_AS(parse_run_config("[run]\nrepr = word2vec\n"), Error);
    CHECK_THROWS_AS(parse_run_config("[synth]\nno_such.mean = 1\n"), Error);
  }

  TEST_CASE("seeds derive from the master seed unless set") {
    auto c = parse_run_config("[run]\nseed = 9\n");
    c.finalize_seeds();
    CHECK(c.cv.seed == 9);
    CHECK(c.synth.seed == derive_seed(9, "synth"));
    auto e = parse_run_config("[run]\nseed = 9\n[synth]\nseed = 4\n");
    e.finalize_seeds();
    CHECK(e.synth.seed == 4);
  }

  TEST_CASE("seed override") {
    auto c = parse_run_config("[run]\nseed = 9\n");
    apply_seed_override(c, "123");
    c.finalize_seeds();
    CHECK(c.cv.seed == 123);
    CHECK_THROWS_AS(apply_seed_override(c, "abc"), Error);
  }

  TEST_CASE("validation names missing sidecars and zero budgets") {
    const auto dir = std::filesystem::temp_directory_path() / "gazelens_config_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "d.csv") << "x";
    auto c = parse_run_config("[paths]\ndataset = d.csv\n[run]\nrepr = meandiff\n", dir);
    CHECK_THROWS_AS(c.validate_for_cv(), Error);
    std::ofstream(dir / "e.csv") << "x";
    c.embeddings = dir / "e.csv";
    CHECK_NOTHROW(c.validate_for_cv());
    c.cv.lstm_budget = 0;
    CHECK_THROWS_AS(c.validate_for_cv(), Error);
    auto m = parse_run_config("[paths]\ndataset = d.csv\n[run]\nrepr = manual\n", dir);
    CHECK_THROWS_AS(m.validate_for_cv(), Error);
    auto missing = parse_run_config("[paths]\ndataset = nope.csv\n", dir);
    CHECK_THROWS_AS(missing.validate_for_cv(), Error);
    std::filesystem::remove_all(dir);
  }
}
