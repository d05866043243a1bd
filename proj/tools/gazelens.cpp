#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gazelens/commands.hpp"
#include "gazelens/error.hpp"

namespace {

using gazelens::Error;

template <class E, class F>
void override_enum(const std::string& value, E& out, F from_string, const char* what) {
  if (value.empty()) return;
  auto e = from_string(value);
  if (!e) throw Error("cli", std::string("unknown ") + what + " '" + value + "'");
  out = *e;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gazelens: dyslexia screening from eye-tracking reading measures"};
  app.require_subcommand(1);

  std::string config_path;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset and sidecars");
  synth->add_option("--config", config_path, "INI run configuration")->required()->check(CLI::ExistingFile);

  std::string model, repr, scope;
  std::size_t jobs = 0;
  bool quiet = false;
  auto* cv = app.add_subcommand("cv", "nested cross-validation");
  cv->add_option("--config", config_path, "INI run configuration")->required()->check(CLI::ExistingFile);
  cv->add_option("--model", model, "baseline | lstm | cnn")->check(CLI::IsMember({"baseline", "lstm", "cnn"}));
  cv->add_option("--repr", repr, "none | pca | meandiff | manual")
      ->check(CLI::IsMember({"none", "pca", "meandiff", "manual"}));
  cv->add_option("--scope", scope, "baseline scope: subject | sentence | both")
      ->check(CLI::IsMember({"subject", "sentence", "both"}));
  cv->add_option("--jobs", jobs, "parallel jobs")->check(CLI::PositiveNumber);
  cv->add_flag("--quiet", quiet, "no progress output");

  std::vector<std::string> report_files;
  std::string roc_out, table_out;
  auto* report = app.add_subcommand("report", "comparison table and ROC plot data");
  report->add_option("reports", report_files, "report JSON files")->required()->check(CLI::ExistingFile);
  report->add_option("--roc-csv", roc_out, "write per-fold ROC polylines");
  report->add_option("--table-csv", table_out, "write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.get_exit_code();
  }

  try {
    if (*synth) {
      const auto cfg = gazelens::load_run_config(config_path);
      const auto out = gazelens::cmd_synth(cfg);
      std::cout << "wrote " << out.dataset.string() << "\n";
      std::cout << "wrote " << out.manifest.string() << "\n";
      if (!out.embeddings.empty()) std::cout << "wrote " << out.embeddings.string() << "\n";
      if (!out.linguistic.empty()) std::cout << "wrote " << out.linguistic.string() << "\n";
    } else if (*cv) {
      auto cfg = gazelens::load_run_config(config_path);
      override_enum(model, cfg.cv.model, gazelens::classifier_from_string, "model");
      override_enum(repr, cfg.cv.repr, gazelens::repr_from_string, "repr");
      override_enum(scope, cfg.cv.scope, gazelens::scope_from_string, "scope");
      if (jobs > 0) cfg.cv.jobs = jobs;
      std::function<void(const std::string&)> progress;
      if (!quiet) progress = [](const std::string& msg) { std::cerr << msg << "\n"; };
      const auto out = gazelens::cmd_cv(cfg, progress);
      std::cout << "wrote " << out.json.string() << "\n";
      std::vector<std::filesystem::path> paths{out.json};
      std::cout << gazelens::cmd_report(paths);
      for (const auto& w : out.report.warnings) std::cerr << "warning: " << w << "\n";
    } else if (*report) {
      std::vector<std::filesystem::path> paths(report_files.begin(), report_files.end());
      std::optional<std::filesystem::path> roc, table;
      if (!roc_out.empty()) roc = roc_out;
      if (!table_out.empty()) table = table_out;
      std::cout << gazelens::cmd_report(paths, roc, table);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
