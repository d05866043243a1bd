#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gazelens/commands.hpp"
#include "gazelens/error.hpp"

using namespace gazelens;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("gazelens_cmd_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kSmall = R"([paths]
dataset = data/dataset.csv
manifest = data/manifest.csv
embeddings = data/embeddings.csv
linguistic = data/linguistic.csv
output = data

[run]
seed = 3
embedding_width = 32
folds = 3
model = baseline

[svm]
c_grid = 1

[synth]
n_subjects = 12
n_dyslexic = 6
n_sentences = 6
min_retained = 4
max_retained = 6
)";

RunConfig small_config(const fs::path& dir) {
  std::ofstream(dir / "run.ini") << kSmall;
  return load_run_config(dir / "run.ini");
}

}  // namespace

TEST_SUITE("commands") {
  TEST_CASE("synth writes the dataset and sidecars") {
    const auto dir = scratch("synth");
    const auto c = small_config(dir);
    const auto out = cmd_synth(c);
    CHECK(fs::exists(out.dataset));
    CHECK(fs::exists(out.manifest));
    CHECK(fs::exists(out.embeddings));
    CHECK(fs::exists(out.linguistic));
    const auto before = slurp(out.dataset);
    cmd_synth(c);
    CHECK(slurp(out.dataset) == before);
    StimulusSources src;
    auto cm = c;
    cm.cv.repr = ReprKind::EmbedPca;
    const auto d = load_run_dataset(cm, &src);
    CHECK(d.subjects.size() == 12);
    REQUIRE(src.embeddings);
    CHECK(src.embeddings->width() == 32);
    fs::remove_all(dir);
  }

  TEST_CASE("cv writes reports and report reads them back") {
    const auto dir = scratch("cv");
    auto c = small_config(dir);
    cmd_synth(c);
    const auto out = cmd_cv(c);
    CHECK(out.json.filename() == "baseline.json");
    CHECK(fs::exists(out.sentence_scores));
    CHECK(fs::exists(out.subject_roc));
    const std::vector<fs::path> files{out.json};
    const auto table = cmd_report(files, dir / "roc.csv", dir / "table.csv");
    CHECK(table.find("baseline") != std::string::npos);
    CHECK(fs::exists(dir / "roc.csv"));
    CHECK(fs::exists(dir / "table.csv"));
    CHECK_THROWS_AS(cmd_report(std::vector<fs::path>{dir / "missing.json"}), Error);
    fs::remove_all(dir);
  }

  TEST_CASE("cv fails cleanly without a dataset") {
    const auto dir = scratch("nodata");
    auto c = small_config(dir);
    CHECK_THROWS_AS(cmd_cv(c), Error);
    fs::remove_all(dir);
  }
}
