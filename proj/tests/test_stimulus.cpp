#include <doctest.h>

#include <cmath>
#include <random>

#include "gazelens/error.hpp"
#include "gazelens/stimulus.hpp"
#include "gazelens/synthetic.hpp"
#include "gazelens/train.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace gazelens;

namespace {

std::vector<const Trial*> pointers(const Dataset& d) {
  std::vector<const Trial*> out;
  for (const auto& t : d.trials) out.push_back(&t);
  return out;
}

EmbeddingTable random_table(std::size_t n, std::size_t width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  EmbeddingTable t(width);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(width));
    for (auto& x : v) x = nd(rng);
    t.insert({"s", i}, v);
  }
  return t;
}

std::vector<WordPosition> all_positions(const EmbeddingTable& t) {
  std::vector<WordPosition> p;
  for (const auto& [k, _] : t.entries()) p.push_back(k);
  return p;
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_SUITE("stimulus") {
  TEST_CASE("embedding sidecar parsing") {
    const auto manifest = parse_manifest("sentence_id,word_index,char_count\n7,0,1\n7,1,2\n");
    const std::string ok = "sentence_id,word_index,e1,e2,e3\n7,0,1,2,3\n7,1,4,5,6\n";
    const auto t = parse_embedding_table(ok, manifest, 3);
    CHECK(t.size() == 2);
    CHECK(t.at("7", 1)(2) == 6.0);

    auto message = [&](const std::string& text) {
      try {
        parse_embedding_table(text, manifest, 3);
      } catch (const Error& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(contains(message("sentence_id,word_index,e1,e2,e3\n7,0,1,2,3\n"), "sentence 7 word 1"));
    CHECK(contains(message("sentence_id,word_index,e1,e2,e3\n7,0,1,2\n7,1,4,5,6\n"), "expected 3 embedding values, got 2"));
    CHECK(contains(message("sentence_id,word_index,e1,e2,e3\n7,0,1,x,3\n7,1,4,5,6\n"), "non-numeric"));
    // round trip
    CHECK(parse_embedding_table(format_embedding_csv(t), manifest, 3).at("7", 0) == t.at("7", 0));
  }

  TEST_CASE("pca: rank-one data") {
    EmbeddingTable t(6);
    Eigen::VectorXd dir(6);
    dir << 1, 2, 0, -1, 0.5, 3;
    dir.normalize();
    for (std::size_t i = 0; i < 30; ++i) t.insert({"s", i}, 2.0 * dir * (static_cast<double>(i) - 7.0));
    const auto pos = all_positions(t);
    const PcaModel m = fit_pca(t, pos, 5);
    CHECK(std::abs(std::abs(m.components.col(0).dot(dir)) - 1.0) < 1e-10);
    for (int k = 1; k < 5; ++k) CHECK(std::abs(m.eigenvalues(k)) < 1e-9);
    // sign rule: largest-magnitude coordinate positive
    Eigen::Index arg;
    m.components.col(0).cwiseAbs().maxCoeff(&arg);
    CHECK(m.components(arg, 0) > 0);
  }

  TEST_CASE("pca matches a Jacobi eigendecomposition of the covariance") {
    const auto t = random_table(40, 12, 3);
    const auto pos = all_positions(t);
    const PcaModel m = fit_pca(t, pos, 5);
    std::vector<Eigen::VectorXd> rows;
    for (const auto& [k, v] : t.entries()) rows.push_back(v);
    const auto [values, vectors] = oracle::jacobi_eigen(oracle::covariance(rows));
    for (int k = 0; k < 5; ++k) {
      CHECK(m.eigenvalues(k) == doctest::Approx(values(k)).epsilon(1e-9));
      const double agree = std::abs(m.components.col(k).dot(vectors.col(k)));
      CHECK(agree == doctest::Approx(1.0).epsilon(1e-9));
      if (k > 0) CHECK(m.eigenvalues(k) <= m.eigenvalues(k - 1));
    }
    // orthonormal columns
    const Eigen::MatrixXd gram = m.components.transpose() * m.components;
    CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("pca: projections") {
    const auto t = random_table(50, 10, 8);
    const auto pos = all_positions(t);
    const PcaModel m = fit_pca(t, pos, 4);
    CHECK(project_pca(m, m.means).norm() < 1e-12);
    const Eigen::VectorXd e1 = project_pca(m, m.means + m.components.col(0));
    CHECK(std::abs(e1(0) - 1.0) < 1e-9);
    CHECK(e1.tail(3).norm() < 1e-9);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    Eigen::VectorXd v(10);
    for (auto& x : v) x = nd(rng);
    CHECK(project_pca(m, v).squaredNorm() <= (v - m.means).squaredNorm() + 1e-9);
    // per-component variance of training projections equals the eigenvalue
    for (int k = 0; k < 4; ++k) {
      double sum = 0, sq = 0;
      for (const auto& [p, x] : t.entries()) {
        const double c = project_pca(m, x)(k);
        sum += c;
        sq += c * c;
      }
      const double n = static_cast<double>(t.size());
      CHECK(std::abs(sq / n - (sum / n) * (sum / n) - m.eigenvalues(k)) < 1e-6);
    }
    CHECK_THROWS_AS(project_pca(m, Eigen::VectorXd::Zero(9)), Error);
  }

  TEST_CASE("pca needs more vectors than components") {
    const auto t = random_table(20, 30, 2);
    const auto pos = all_positions(t);
    CHECK_THROWS_AS(fit_pca(t, pos, 20), Error);
    CHECK_NOTHROW(fit_pca(t, pos, 19));
  }

  TEST_CASE("mean-difference targets equal brute-force group means") {
    const Dataset d = generate_synthetic(testutil::small_spec(21));
    const auto trials = pointers(d);
    const auto targets = meandiff_targets(trials, d.label_map());
    const auto brute = oracle::group_mean_differences(d);
    REQUIRE(targets.size() == brute.size());
    double worst = 0.0;
    for (const auto& t : targets) {
      const auto& b = brute.at({t.position.sentence_id, t.position.word_index});
      for (std::size_t m = 0; m < kNumMeasures; ++m)
        worst = std::max(worst, std::abs(t.delta(static_cast<Eigen::Index>(m)) - b[m]));
    }
    CHECK(worst < 1e-12);
  }

  TEST_CASE("mean-difference encoder: zero targets give near-zero output") {
    // every subject reads the same sentence identically -> equal group means
    std::string csv = testutil::kHeader;
    for (int s = 0; s < 4; ++s)
      for (int w = 0; w < 3; ++w)
        csv += testutil::row("p" + std::to_string(s), s % 2, "1", w, testutil::fixated(100.0 + w));
    const Dataset d = parse_dataset(csv, std::nullopt);
    const auto trials = pointers(d);
    auto emb = synthetic_embeddings(d.sentences, 4, 16);
    nn::RegressionConfig rc;
    rc.seed = 3;
    const auto enc = fit_meandiff_encoder(emb, trials, d.label_map(), rc);
    CHECK(enc.network.parameter_count() == 16 * 20 + 20 + 20 * 12 + 12);
    for (const auto& [p, v] : emb.entries()) {
      const Eigen::VectorXd z = (v - enc.input_norm.mean).cwiseQuotient(enc.input_norm.std);
      CHECK(nn::ffn_forward(enc.network, z).output.norm() < 0.05);
      CHECK(encode_meandiff(enc, v).size() == 20);
    }
  }

  TEST_CASE("mean-difference encoder fits a single-point target") {
    std::string csv = testutil::kHeader;
    auto hi = testutil::fixated();
    hi[Measure::FixXScreen] += 1.0;
    csv += testutil::row("a", 1, "1", 0, hi);
    csv += testutil::row("b", 0, "1", 0);
    const Dataset d = parse_dataset(csv, std::nullopt);
    const auto trials = pointers(d);
    EmbeddingTable emb(8);
    emb.insert({"1", 0}, Eigen::VectorXd::LinSpaced(8, -1, 1));
    nn::RegressionConfig rc;
    rc.epochs = 2000;
    rc.learning_rate = 1e-2;
    const auto enc = fit_meandiff_encoder(emb, trials, d.label_map(), rc);
    const Eigen::VectorXd z = (emb.at("1", 0) - enc.input_norm.mean).cwiseQuotient(enc.input_norm.std);
    Eigen::VectorXd target = Eigen::VectorXd::Zero(12);
    target(0) = 1.0;
    const Eigen::VectorXd out = nn::ffn_forward(enc.network, z).output;
    CHECK((out - target).cwiseAbs().maxCoeff() < 0.1);
    CHECK((out - target).squaredNorm() / 12.0 < 1e-2);
  }

  TEST_CASE("mean-difference encoder needs both classes") {
    const Dataset d = generate_synthetic(testutil::small_spec());
    std::vector<const Trial*> controls;
    const auto labels = d.label_map();
    for (const auto& t : d.trials)
      if (labels.at(t.subject_id) == 0) controls.push_back(&t);
    const auto emb = synthetic_embeddings(d.sentences, 2, 16);
    CHECK_THROWS_AS(fit_meandiff_encoder(emb, controls, labels, {}), Error);
  }

  TEST_CASE("encode_meandiff matches a hand-computed forward pass") {
    MeanDiffEncoder enc;
    enc.network = nn::init_params(nn::FfnConfig{3, 3, 12}, 9);
    enc.input_norm = {Eigen::Vector3d(0.5, -1, 2), Eigen::Vector3d(1, 2, 4)};
    const Eigen::Vector3d v(1, 1, 1);
    const auto& W = enc.network[nn::ffn_slot::kW1];
    const auto& b = enc.network[nn::ffn_slot::kB1];
    const double z[3] = {(1 - 0.5) / 1, (1 + 1) / 2.0, (1 - 2) / 4.0};
    const Eigen::VectorXd h = encode_meandiff(enc, v);
    for (int i = 0; i < 3; ++i) {
      double a = b(i, 0);
      for (int j = 0; j < 3; ++j) a += W(i, j) * z[j];
      CHECK(h(i) == doctest::Approx(std::tanh(a)).epsilon(1e-12));
    }
    enc.network.set_zero();
    CHECK(encode_meandiff(enc, v).norm() == 0.0);
    CHECK_THROWS_AS(encode_meandiff(enc, Eigen::VectorXd::Zero(4)), Error);
  }

  TEST_CASE("manual features: one-hot and OOV") {
    LinguisticTable t;
    t.insert({"1", 0}, {0.0, "NOUN", "nsubj", 1, 10, 100});
    t.insert({"1", 1}, {2.5, "VERB", "ROOT", 0, 50, 20});
    t.insert({"1", 2}, {1.5, "NOUN", "dobj", -1, 0, 5});
    const std::vector<WordPosition> pos{{"1", 0}, {"1", 1}, {"1", 2}};
    const auto enc = fit_manual_features(t, pos);
    CHECK(enc.width() == 4 + 2 + 1 + 3 + 1);
    const auto v = encode_manual_features(enc, t.at("1", 1));
    CHECK(v.segment(4, 3).sum() == 1.0);
    CHECK(v(4 + 1) == 1.0);  // VERB
    const auto oov = encode_manual_features(enc, {1.0, "ADJ", "amod", 2, 1, 1});
    CHECK(oov(4 + 2) == 1.0);
    CHECK(oov.segment(4, 2).sum() == 0.0);
    CHECK(oov(enc.width() - 1) == 1.0);
    // numeric block is z-scored over the training positions
    double sum = 0;
    for (const auto& p : pos) sum += encode_manual_features(enc, t.at(p))(0);
    CHECK(std::abs(sum) < 1e-12);
    CHECK_THROWS_AS(t.insert({"1", 3}, {-1.0, "X", "dep", 1, 0, 0}), Error);
    CHECK_THROWS_AS(t.insert({"1", 4}, {1.0, "X", "ROOT", 2, 0, 0}), Error);
  }

  TEST_CASE("enriched widths per representation") {
    const Dataset d = generate_synthetic(testutil::small_spec(5));
    const auto trials = pointers(d);
    const auto labels = d.label_map();
    StimulusSources src;
    src.embeddings = std::make_shared<EmbeddingTable>(synthetic_embeddings(d.sentences, 1));
    src.linguistic = std::make_shared<LinguisticTable>(synthetic_linguistic(d.sentences, 1));
    const NormStats norm = fit_normalizer(trials);
    ReprFitOptions opt;
    opt.meandiff.epochs = 5;
    const std::pair<ReprKind, std::size_t> cases[] = {
        {ReprKind::None, 12}, {ReprKind::EmbedPca, 32}, {ReprKind::EmbedMeanDiff, 32}};
    for (auto [kind, width] : cases) {
      const auto repr = fit_stimulus_repr(kind, src, trials, labels, norm, opt);
      CHECK(repr.enriched_width() == width);
      for (const auto& s : build_enriched_sequences(trials, labels, repr, norm)) CHECK(s.values.cols() == width);
    }
    const auto manual = fit_stimulus_repr(ReprKind::Manual, src, trials, labels, norm, opt);
    CHECK(manual.enriched_width() == 12 + manual.manual_encoder()->width());
    const auto seqs = build_enriched_sequences(trials, labels, manual, norm);
    CHECK(seqs.size() == d.trials.size());
    // measure block equals the normalized trial
    const Eigen::MatrixXd z = apply_normalizer(norm, trial_matrix(d.trials[0]));
    CHECK((seqs[0].values.leftCols(12) - z).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("fitted artifacts ignore data outside the training trials") {
    Dataset d = generate_synthetic(testutil::small_spec(6));
    const auto labels = d.label_map();
    StimulusSources src;
    src.embeddings = std::make_shared<EmbeddingTable>(synthetic_embeddings(d.sentences, 1));
    src.linguistic = std::make_shared<LinguisticTable>(synthetic_linguistic(d.sentences, 1));
    ReprFitOptions opt;
    opt.meandiff.epochs = 3;
    auto fit_all = [&](const Dataset& ds) {
      std::vector<const Trial*> train;
      for (const auto& t : ds.trials)
        if (t.subject_id != "sub01" && t.subject_id != "sub02") train.push_back(&t);
      const NormStats norm = fit_normalizer(train);
      std::vector<std::uint64_t> fp;
      for (auto kind : {ReprKind::EmbedPca, ReprKind::EmbedMeanDiff, ReprKind::Manual})
        fp.push_back(fit_stimulus_repr(kind, src, train, labels, norm, opt).fingerprint());
      return fp;
    };
    const auto before = fit_all(d);
    for (auto& t : d.trials)
      if (t.subject_id == "sub01" || t.subject_id == "sub02")
        for (auto& w : t.measures) w[Measure::TotalGazeDur] *= 3.0;
    CHECK(fit_all(d) == before);
  }
}
