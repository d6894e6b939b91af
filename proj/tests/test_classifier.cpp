#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "migraflow/mlp.hpp"
#include "migraflow/synth.hpp"
#include "migraflow/tfidf.hpp"
#include "migraflow/util.hpp"

using namespace migraflow;
using testutil::TempDir;

namespace {

// Central finite differences over every parameter of a model; the
// independent oracle for the analytic backprop gradients.
double fd_loss(MlpModel& m, const Eigen::MatrixXd& x, const std::vector<int>& labels,
               double* param, double delta) {
  const double saved = *param;
  *param = saved + delta;
  const double loss = loss_and_gradients(m, x, labels, nullptr, nullptr);
  *param = saved;
  return loss;
}

double max_gradient_relative_error(MlpModel& m, const Eigen::MatrixXd& x,
                                   const std::vector<int>& labels) {
  std::vector<Eigen::MatrixXd> grad_w;
  std::vector<Eigen::VectorXd> grad_b;
  loss_and_gradients(m, x, labels, &grad_w, &grad_b);
  const double h = 1e-6;
  double worst = 0;
  auto probe = [&](double* param, double analytic) {
    const double up = fd_loss(m, x, labels, param, h);
    const double down = fd_loss(m, x, labels, param, -h);
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  };
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < m.weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < m.weights[l].cols(); ++j)
        probe(&m.weights[l](i, j), grad_w[l](i, j));
    for (Eigen::Index i = 0; i < m.biases[l].size(); ++i)
      probe(&m.biases[l][i], grad_b[l][i]);
  }
  return worst;
}

LabeledSet two_blob_set(int per_class, std::uint64_t seed) {
  // linearly separable two-class clouds in 4 dimensions
  Rng rng(seed);
  LabeledSet data;
  data.features.resize(4, 2 * per_class);
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i % 2;
    for (int d = 0; d < 4; ++d)
      data.features(d, i) = (label ? 1.0 : -1.0) * (d + 1) * 0.5 + rng.normal(0, 0.1);
    data.labels.push_back(label);
  }
  return data;
}

}  // namespace

TEST_CASE("build_vocab: single-word corpus") {
  const auto vocab = build_vocab({"cuernavaca", "cuernavaca", "cuernavaca"});
  REQUIRE(vocab.size() == 1);
  CHECK(vocab.terms[0] == "cuernavaca");
  CHECK(vocab.idf[0] > 0);  // smoothed idf keeps universal terms representable
}

TEST_CASE("build_vocab: discriminative tokens outrank universal ones") {
  const auto vocab = build_vocab({"alpha common", "beta common"}, 2);
  REQUIRE(vocab.size() == 2);
  CHECK(vocab.index.count("alpha"));
  CHECK(vocab.index.count("beta"));
  CHECK(!vocab.index.count("common"));
}

TEST_CASE("build_vocab caps the vocabulary at max_terms") {
  std::vector<std::string> docs;
  for (int i = 0; i < 5000; ++i) docs.push_back("tok" + std::to_string(i));
  const auto vocab = build_vocab(docs, 3000);
  CHECK(vocab.size() == 3000);
}

TEST_CASE("build_vocab rejects an empty training set") {
  CHECK_THROWS_AS(build_vocab({}), Error);
}

TEST_CASE("featurize: nonnegative, normalized, zero iff no vocabulary term") {
  const auto vocab = build_vocab({"toluca instituto", "merida universidad"});
  const auto x = featurize("toluca toluca universidad", vocab);
  CHECK(x.minCoeff() >= 0.0);
  CHECK(x.norm() == doctest::Approx(1.0).epsilon(1e-12));
  const auto zero = featurize("nothing matches here", vocab);
  CHECK(zero.norm() == 0.0);
  const auto empty = featurize("", vocab);
  CHECK(empty.norm() == 0.0);
}

TEST_CASE("feature_text merges city, institution and address") {
  auto rec = testutil::make_record("R1", "A", 2000);
  rec.city = "Mérida";
  rec.institution = "Univ. Autónoma de Yucatán";
  rec.street_address = "Calle 60";
  rec.postcode = "97000";  // not part of the feature text
  CHECK(feature_text(rec) == "merida universidad autonoma de yucatan calle 60");
}

TEST_CASE("gradients match central finite differences on a small net") {
  // ~10-weight toy net: 2 -> 2 -> 2
  MlpModel m = make_model(2, {2}, 2, 0.25, 11);
  Eigen::MatrixXd x(2, 3);
  x << 0.3, -1.2, 0.8, 1.1, 0.4, -0.6;
  const std::vector<int> labels = {0, 1, 0};
  CHECK(max_gradient_relative_error(m, x, labels) < 1e-4);
}

TEST_CASE("gradients also match on a deeper rectangular net") {
  MlpModel m = make_model(5, {7, 4}, 3, 0.0, 23);
  Rng rng(5);
  Eigen::MatrixXd x(5, 6);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) labels.push_back(static_cast<int>(rng.uniform_int(0, 2)));
  CHECK(max_gradient_relative_error(m, x, labels) < 1e-4);
}

TEST_CASE("train reaches a separable two-class set") {
  const auto data = two_blob_set(40, 17);
  TrainConfig cfg;
  cfg.hidden_sizes = {8};
  cfg.dropout = 0.0;
  cfg.epochs = 60;
  cfg.learning_rate = 0.5;
  cfg.seed = 2;
  const auto model = train(data, cfg, Vocabulary{}, 2);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < data.features.cols(); ++i)
    if (predict(model, data.features.col(i)).label == data.labels[static_cast<std::size_t>(i)])
      ++correct;
  CHECK(static_cast<double>(correct) / static_cast<double>(data.features.cols()) >= 0.99);
}

TEST_CASE("training is deterministic under a fixed seed") {
  const auto data = two_blob_set(20, 3);
  TrainConfig cfg;
  cfg.hidden_sizes = {6};
  cfg.epochs = 5;
  cfg.seed = 42;
  SUBCASE("without dropout") { cfg.dropout = 0.0; }
  SUBCASE("with dropout") { cfg.dropout = 0.25; }
  const auto m1 = train(data, cfg, Vocabulary{}, 2);
  const auto m2 = train(data, cfg, Vocabulary{}, 2);
  for (std::size_t l = 0; l < m1.weights.size(); ++l) {
    CHECK(m1.weights[l] == m2.weights[l]);
    CHECK(m1.biases[l] == m2.biases[l]);
  }
}

TEST_CASE("train aborts with diagnostics when the loss diverges") {
  const auto data = two_blob_set(20, 6);
  TrainConfig cfg;
  cfg.hidden_sizes = {4};
  cfg.dropout = 0.0;
  cfg.learning_rate = 1e18;  // guaranteed blow-up
  cfg.epochs = 50;
  CHECK_THROWS_WITH_AS(train(data, cfg, Vocabulary{}, 2), doctest::Contains("non-finite"), Error);
}

TEST_CASE("train validates its config and inputs") {
  const auto data = two_blob_set(4, 1);
  TrainConfig cfg;
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(train(data, cfg, Vocabulary{}, 2), Error);
  cfg.dropout = 0.25;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(data, cfg, Vocabulary{}, 2), Error);
  cfg.epochs = 1;
  LabeledSet one_class = data;
  for (auto& l : one_class.labels) l = 0;
  CHECK_THROWS_AS(train(one_class, cfg, Vocabulary{}, 2), Error);
}

TEST_CASE("predict: zero weights give uniform confidence 1/32") {
  MlpModel m = make_model(8, {4}, kNumStates, 0.0, 1);
  for (auto& w : m.weights) w.setZero();
  for (auto& b : m.biases) b.setZero();
  const auto pred = predict(m, Eigen::VectorXd::Random(8));
  CHECK(pred.confidence == doctest::Approx(1.0 / 32).epsilon(1e-12));
}

TEST_CASE("predict: softmax normalization over 1000 random models") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    MlpModel m = make_model(3, {}, 5, 0.0, rng.next_u64());
    Eigen::VectorXd x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.normal(0, 3);
    const auto p = forward_probabilities(m, x);
    CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    CHECK(p.minCoeff() >= 0.0);
  }
}

TEST_CASE("predict: adding a constant to output biases changes nothing") {
  MlpModel m = make_model(4, {5}, 6, 0.0, 77);
  Eigen::VectorXd x = Eigen::VectorXd::Random(4);
  const auto before = predict(m, x);
  m.biases.back().array() += 3.7;  // softmax shift invariance
  const auto after = predict(m, x);
  CHECK(before.label == after.label);
  CHECK(before.confidence == doctest::Approx(after.confidence).epsilon(1e-9));
}

TEST_CASE("predict rejects dimension mismatches") {
  const MlpModel m = make_model(4, {3}, 2, 0.0, 1);
  CHECK_THROWS_AS(predict(m, Eigen::VectorXd::Zero(5)), Error);
}

TEST_CASE("a trained model memorizes a tiny clean set") {
  const std::vector<std::string> docs = {"cuernavaca morelos", "merida yucatan",
                                         "toluca estado", "monterrey leon"};
  const std::vector<int> labels = {0, 1, 2, 3};
  const auto vocab = build_vocab(docs, 100);
  LabeledSet data;
  data.features.resize(vocab.size(), 4);
  data.labels = labels;
  for (int i = 0; i < 4; ++i)
    data.features.col(i) = featurize(docs[static_cast<std::size_t>(i)], vocab);
  TrainConfig cfg;
  cfg.hidden_sizes = {16};
  cfg.dropout = 0.0;
  cfg.epochs = 100;
  cfg.learning_rate = 1.0;
  const auto model = train(data, cfg, vocab, 4);
  for (int i = 0; i < 4; ++i)
    CHECK(predict(model, data.features.col(i)).label == labels[static_cast<std::size_t>(i)]);
}

TEST_CASE("cross_validate: k=2 on 2 records gives two folds of size one") {
  LabeledSet data;
  data.features.resize(2, 2);
  data.features << 1, -1, 1, -1;
  data.labels = {0, 1};
  TrainConfig cfg;
  cfg.hidden_sizes = {2};
  cfg.epochs = 2;
  const auto cv = cross_validate(data, 2, cfg, Vocabulary{}, 2);
  CHECK(cv.fold_accuracy.size() == 2);
  CHECK(!cv.warnings.empty());  // classes smaller than k are pooled
}

TEST_CASE("cross_validate: learnable set reaches a high median") {
  const auto data = two_blob_set(50, 8);
  TrainConfig cfg;
  cfg.hidden_sizes = {8};
  cfg.dropout = 0.0;
  cfg.epochs = 40;
  cfg.learning_rate = 0.5;
  const auto cv = cross_validate(data, 5, cfg, Vocabulary{}, 2);
  CHECK(cv.fold_accuracy.size() == 5);
  CHECK(cv.median_accuracy >= 0.95);
}

TEST_CASE("cross_validate: shuffled labels score near chance") {
  auto data = two_blob_set(60, 12);
  Rng rng(100);
  rng.shuffle(data.labels);
  TrainConfig cfg;
  cfg.hidden_sizes = {8};
  cfg.dropout = 0.0;
  cfg.epochs = 15;
  const auto cv = cross_validate(data, 5, cfg, Vocabulary{}, 2);
  // chance level is 0.5 for two balanced classes
  CHECK(cv.median_accuracy > 0.25);
  CHECK(cv.median_accuracy < 0.75);
}

TEST_CASE("apply_with_threshold: fraction 0 assigns everything") {
  const MlpModel m = make_model(3, {}, 4, 0.0, 5);
  std::vector<std::pair<std::string, Eigen::VectorXd>> unresolved;
  for (int i = 0; i < 20; ++i)
    unresolved.emplace_back("R" + std::to_string(i), Eigen::VectorXd::Random(3));
  const auto out = apply_with_threshold(m, unresolved, 0.0, 1000);
  CHECK(out.discarded.empty());
  CHECK(out.assigned.size() == 20);
}

TEST_CASE("apply_with_threshold: discards exactly the lowest-confidence tail") {
  const MlpModel m = make_model(3, {4}, 4, 0.0, 5);
  Rng rng(606);
  std::vector<std::pair<std::string, Eigen::VectorXd>> unresolved;
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x(3);
    for (int d = 0; d < 3; ++d) x[d] = rng.normal();
    unresolved.emplace_back("R" + std::to_string(1000 + i), x);
  }
  const std::size_t total_corpus = 1000;  // cap = 10
  const auto out = apply_with_threshold(m, unresolved, 0.01, total_corpus);
  CHECK(out.discarded.size() == 10);
  CHECK(out.assigned.size() == 190);
  double worst_kept = 2.0;
  for (const auto& [id, pred] : out.assigned) worst_kept = std::min(worst_kept, pred.confidence);
  double best_discarded = -1.0;
  for (const auto& id : out.discarded) {
    for (const auto& [uid, x] : unresolved)
      if (uid == id) best_discarded = std::max(best_discarded, predict(m, x).confidence);
  }
  CHECK(best_discarded <= worst_kept);
}

TEST_CASE("apply_with_threshold: never discards more than the corpus cap") {
  const MlpModel m = make_model(2, {}, 3, 0.0, 2);
  std::vector<std::pair<std::string, Eigen::VectorXd>> unresolved;
  for (int i = 0; i < 5; ++i)
    unresolved.emplace_back("R" + std::to_string(i), Eigen::VectorXd::Random(2));
  const auto out = apply_with_threshold(m, unresolved, 0.5, 4);  // cap = 2
  CHECK(out.discarded.size() == 2);
  CHECK(out.assigned.size() == 3);
}

TEST_CASE("model serialization round-trips bit-exactly") {
  const std::vector<std::string> docs = {"cuernavaca morelos", "merida yucatan"};
  const auto vocab = build_vocab(docs, 10);
  LabeledSet data;
  data.features.resize(vocab.size(), 2);
  data.labels = {0, 1};
  for (int i = 0; i < 2; ++i)
    data.features.col(i) = featurize(docs[static_cast<std::size_t>(i)], vocab);
  TrainConfig cfg;
  cfg.hidden_sizes = {4};
  cfg.epochs = 3;
  const auto model = train(data, cfg, vocab, 2);

  TempDir dir("model_io");
  save_model(model, dir.file("m.bin"));
  const auto loaded = load_model(dir.file("m.bin"));
  REQUIRE(loaded.weights.size() == model.weights.size());
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    CHECK(loaded.weights[l] == model.weights[l]);
    CHECK(loaded.biases[l] == model.biases[l]);
  }
  CHECK(loaded.vocab.terms == model.vocab.terms);
  for (int i = 0; i < 2; ++i) {
    const auto a = predict(model, data.features.col(i));
    const auto b = predict(loaded, data.features.col(i));
    CHECK(a.label == b.label);
    CHECK(a.confidence == b.confidence);
  }
  CHECK_THROWS_AS(load_model(dir.file("missing.bin")), Error);
}
