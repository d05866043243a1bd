#include "gazelens/commands.hpp"

#include <chrono>
#include <ctime>
#include <vector>

#include "gazelens/error.hpp"
#include "gazelens/seed.hpp"
#include "gazelens/stimulus.hpp"
#include "gazelens/text_io.hpp"

namespace gazelens {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("cli", msg); }

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) fail("cannot create output directory " + dir.string());
}

}  // namespace

std::string current_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

SynthOutputs cmd_synth(const RunConfig& config) {
  config.synth.validate();
  const Dataset d = generate_synthetic(config.synth);
  ensure_dir(config.output_dir);
  SynthOutputs out;
  out.dataset = config.output_dir / "dataset.csv";
  out.manifest = config.output_dir / "manifest.csv";
  write_dataset(d, out.dataset);
  write_manifest(d.sentences, out.manifest);
  if (config.synth_embeddings) {
    out.embeddings = config.output_dir / "embeddings.csv";
    const auto table = synthetic_embeddings(d.sentences, derive_seed(config.synth.seed, "synth.embeddings"),
                                            config.embedding_width);
    text::write_file_atomic(out.embeddings, format_embedding_csv(table));
  }
  if (config.synth_linguistic) {
    out.linguistic = config.output_dir / "linguistic.csv";
    const auto table = synthetic_linguistic(d.sentences, derive_seed(config.synth.seed, "synth.linguistic"));
    text::write_file_atomic(out.linguistic, format_linguistic_csv(table));
  }
  return out;
}

Dataset load_run_dataset(const RunConfig& config, StimulusSources* sources) {
  config.validate_for_cv();
  Dataset d = load_dataset(config.dataset, config.manifest.empty() ? std::nullopt
                                                                   : std::optional<std::filesystem::path>(config.manifest));
  if (sources) {
    const ReprKind r = config.cv.repr;
    if (r == ReprKind::EmbedPca || r == ReprKind::EmbedMeanDiff)
      sources->embeddings = std::make_shared<const EmbeddingTable>(
          load_embedding_table(config.embeddings, d.sentences, config.embedding_width));
    if (r == ReprKind::Manual)
      sources->linguistic = std::make_shared<const LinguisticTable>(load_linguistic_table(config.linguistic, d.sentences));
  }
  return d;
}

CvOutputs cmd_cv(const RunConfig& config, const std::function<void(const std::string&)>& progress) {
  CvOptions o = config.cv;
  o.seed = config.seed;
  o.progress = progress;
  const Dataset d = load_run_dataset(config, &o.sources);
  ensure_dir(config.output_dir);

  CvOutputs out;
  out.report = nested_cv(d, o);
  const std::string stem = report_stem(o);
  out.json = config.output_dir / (stem + ".json");
  text::write_file_atomic(out.json, report_to_json(out.report, current_timestamp()));
  if (out.report.sentence) {
    out.sentence_scores = config.output_dir / (stem + "_scores_sentence.csv");
    out.sentence_roc = config.output_dir / (stem + "_roc_sentence.csv");
    text::write_file_atomic(out.sentence_scores, scores_csv(out.report, Level::Sentence));
    text::write_file_atomic(out.sentence_roc, roc_csv(out.report, Level::Sentence));
  }
  if (out.report.subject) {
    out.subject_scores = config.output_dir / (stem + "_scores_subject.csv");
    out.subject_roc = config.output_dir / (stem + "_roc_subject.csv");
    text::write_file_atomic(out.subject_scores, scores_csv(out.report, Level::Subject));
    text::write_file_atomic(out.subject_roc, roc_csv(out.report, Level::Subject));
  }
  return out;
}

std::string cmd_report(std::span<const std::filesystem::path> reports, const std::optional<std::filesystem::path>& roc,
                       const std::optional<std::filesystem::path>& table_csv) {
  if (reports.empty()) fail("report needs at least one report file");
  std::vector<ParsedReport> parsed;
  for (const auto& p : reports) {
    std::string text;
    try {
      text = text::read_file(p);
    } catch (const std::exception& e) {
      fail("cannot read report " + p.string() + ": " + e.what());
    }
    parsed.push_back(parse_report(text, p.string()));
  }
  if (roc) text::write_file_atomic(*roc, format_roc_csv(parsed));
  if (table_csv) text::write_file_atomic(*table_csv, format_table_csv(parsed));
  return format_table(parsed);
}

}  // namespace gazelens
