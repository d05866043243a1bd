#include "gazelens/config.hpp"

#include <cstdlib>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gazelens/error.hpp"
#include "gazelens/seed.hpp"
#include "gazelens/text_io.hpp"

namespace gazelens {
namespace {

namespace pt = boost::property_tree;

[[noreturn]] void fail(const std::string& msg) { throw Error("cli", msg); }

double to_double(std::string_view v) {
  double d = 0.0;
  if (!text::parse_double(v, d)) throw std::invalid_argument("expected a number");
  return d;
}

long long to_int(std::string_view v) {
  long long n = 0;
  if (!text::parse_int(v, n)) throw std::invalid_argument("expected an integer");
  return n;
}

class Section {
 public:
  Section(const pt::ptree& root, std::string name) : name_(std::move(name)) {
    if (auto child = root.get_child_optional(name_)) tree_ = *child;
  }
  ~Section() = default;

  std::optional<std::string> get(const std::string& key) {
    seen_.insert(key);
    auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (v) return std::string(text::trim(*v));
    return std::nullopt;
  }

  template <class T>
  void read(const std::string& key, T& out) {
    auto v = get(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        out = *v;
      } else if constexpr (std::is_same_v<T, bool>) {
        if (*v == "true" || *v == "1" || *v == "yes") out = true;
        else if (*v == "false" || *v == "0" || *v == "no") out = false;
        else throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_floating_point_v<T>) {
        out = to_double(*v);
      } else {
        const long long n = to_int(*v);
        if (n < 0) throw std::invalid_argument("expected a non-negative integer");
        out = static_cast<T>(n);
      }
    } catch (const std::exception& e) {
      fail("[" + name_ + "] " + key + " = '" + *v + "': " + e.what());
    }
  }

  void reject_unknown() const {
    for (const auto& [key, _] : tree_)
      if (!seen_.count(key)) fail("[" + name_ + "] unknown key '" + key + "'");
  }

  const std::string& name() const { return name_; }

 private:
  std::string name_;
  pt::ptree tree_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <class E, class F>
void read_enum(Section& s, const std::string& key, E& out, F from_string) {
  if (auto v = s.get(key)) {
    auto e = from_string(*v);
    if (!e) fail("[" + s.name() + "] " + key + ": unknown value '" + *v + "'");
    out = *e;
  }
}

std::uint64_t parse_seed(std::string_view v) {
  const long long n = to_int(v);
  if (n < 0) throw std::invalid_argument("seed must be non-negative");
  return static_cast<std::uint64_t>(n);
}

}  // namespace

void RunConfig::finalize_seeds() {
  cv.seed = seed;
  if (!synth_seed_explicit) synth.seed = derive_seed(seed, "synth");
}

void RunConfig::validate_for_cv() const {
  if (dataset.empty()) fail("[paths] dataset is required for cv");
  if (!std::filesystem::exists(dataset)) fail("dataset not found: " + dataset.string());
  if (!manifest.empty() && !std::filesystem::exists(manifest)) fail("manifest not found: " + manifest.string());
  if ((cv.repr == ReprKind::EmbedPca || cv.repr == ReprKind::EmbedMeanDiff) &&
      (embeddings.empty() || !std::filesystem::exists(embeddings)))
    fail("repr " + std::string(to_string(cv.repr)) + " needs an existing [paths] embeddings file");
  if (cv.repr == ReprKind::Manual && (linguistic.empty() || !std::filesystem::exists(linguistic)))
    fail("repr manual needs an existing [paths] linguistic file");
  if (cv.lstm_budget == 0 || cv.cnn_budget == 0) fail("budgets must be positive");
  if (cv.folds < 2) fail("folds must be at least 2");
  if (cv.max_epochs == 0) fail("max_epochs must be positive");
}

RunConfig parse_run_config(std::string_view ini_text, const std::filesystem::path& base_dir) {
  pt::ptree root;
  try {
    std::istringstream in{std::string(ini_text)};
    pt::ini_parser::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    fail("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  const std::set<std::string> known{"paths", "run", "train", "svm", "synth"};
  for (const auto& [name, _] : root)
    if (!known.count(name)) fail("unknown config section [" + name + "]");

  RunConfig c;
  {
    Section s(root, "paths");
    if (auto p = s.get("dataset")) c.dataset = resolve(base_dir, *p);
    if (auto p = s.get("manifest")) c.manifest = resolve(base_dir, *p);
    if (auto p = s.get("embeddings")) c.embeddings = resolve(base_dir, *p);
    if (auto p = s.get("linguistic")) c.linguistic = resolve(base_dir, *p);
    if (auto p = s.get("output")) c.output_dir = resolve(base_dir, *p);
    else c.output_dir = resolve(base_dir, "out");
    s.reject_unknown();
  }
  {
    Section s(root, "run");
    if (auto v = s.get("seed")) {
      try {
        c.seed = parse_seed(*v);
      } catch (const std::exception& e) {
        fail("[run] seed = '" + *v + "': " + e.what());
      }
    }
    read_enum(s, "model", c.cv.model, classifier_from_string);
    read_enum(s, "repr", c.cv.repr, repr_from_string);
    read_enum(s, "scope", c.cv.scope, scope_from_string);
    read_enum(s, "lr_sampling", c.cv.lr_sampling, lr_sampling_from_string);
    read_enum(s, "threshold_policy", c.cv.threshold_policy, [](std::string_view v) -> std::optional<ThresholdPolicy> {
      if (v == "tuned") return ThresholdPolicy::Tuned;
      if (v == "fixed") return ThresholdPolicy::Fixed;
      return std::nullopt;
    });
    s.read("folds", c.cv.folds);
    s.read("lstm_budget", c.cv.lstm_budget);
    s.read("cnn_budget", c.cv.cnn_budget);
    s.read("jobs", c.cv.jobs);
    s.read("embedding_width", c.embedding_width);
    if (c.embedding_width == 0) fail("[run] embedding_width must be positive");
    s.reject_unknown();
  }
  {
    Section s(root, "train");
    s.read("max_epochs", c.cv.max_epochs);
    s.read("patience", c.cv.patience);
    s.read("inner_max_epochs", c.cv.inner_max_epochs);
    s.read("inner_patience", c.cv.inner_patience);
    s.read("meandiff_epochs", c.cv.repr_options.meandiff.epochs);
    s.read("meandiff_learning_rate", c.cv.repr_options.meandiff.learning_rate);
    s.read("normalize_stimulus", c.cv.repr_options.normalize_stimulus);
    s.reject_unknown();
  }
  {
    Section s(root, "svm");
    if (auto v = s.get("c_grid")) {
      c.cv.svm_c_grid.clear();
      try {
        for (const auto& cell : text::split_csv(*v)) c.cv.svm_c_grid.push_back(to_double(text::trim(cell)));
      } catch (const std::exception& e) {
        fail("[svm] c_grid = '" + *v + "': " + e.what());
      }
      for (double x : c.cv.svm_c_grid)
        if (!(x > 0.0)) fail("[svm] c_grid values must be positive");
    }
    s.read("tolerance", c.cv.svm.tolerance);
    s.read("max_epochs", c.cv.svm.max_epochs);
    s.reject_unknown();
  }
  {
    Section s(root, "synth");
    auto& sp = c.synth;
    s.read("n_subjects", sp.n_subjects);
    s.read("n_dyslexic", sp.n_dyslexic);
    s.read("n_sentences", sp.n_sentences);
    s.read("min_words", sp.min_words);
    s.read("max_words", sp.max_words);
    s.read("min_retained", sp.min_retained);
    s.read("max_retained", sp.max_retained);
    s.read("subject_effect_share", sp.subject_effect_share);
    s.read("skip_probability", sp.skip_probability);
    s.read("char_width_px", sp.char_width_px);
    s.read("line_left_px", sp.line_left_px);
    if (auto v = s.get("seed")) {
      try {
        sp.seed = parse_seed(*v);
      } catch (const std::exception& e) {
        fail("[synth] seed = '" + *v + "': " + e.what());
      }
      c.synth_seed_explicit = true;
    }
    s.read("embeddings", c.synth_embeddings);
    s.read("linguistic", c.synth_linguistic);
    const auto names = measure_names();
    for (std::size_t m = 0; m < kNumMeasures; ++m) {
      const std::string n(names[m]);
      s.read(n + ".mean", sp.measures[m].control_mean);
      s.read(n + ".std", sp.measures[m].control_std);
      s.read(n + ".effect", sp.measures[m].effect_size);
    }
    s.reject_unknown();
    try {
      sp.validate();
    } catch (const Error& e) {
      fail(std::string("[synth] ") + e.what());
    }
  }
  c.finalize_seeds();
  return c;
}

void apply_seed_override(RunConfig& config, std::string_view value) {
  try {
    config.seed = parse_seed(text::trim(value));
  } catch (const std::exception& e) {
    fail("GAZELENS_SEED='" + std::string(value) + "': " + e.what());
  }
  config.finalize_seeds();
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = text::read_file(path);
  } catch (const std::exception& e) {
    fail("cannot read config " + path.string() + ": " + e.what());
  }
  RunConfig c = parse_run_config(text, path.parent_path());
  if (const char* env = std::getenv("GAZELENS_SEED"); env && *env) apply_seed_override(c, env);
  return c;
}

}  // namespace gazelens
