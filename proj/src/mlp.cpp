#include "migraflow/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "migraflow/util.hpp"

namespace migraflow {

namespace {

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const Eigen::VectorXd shifted = z.col(c).array() - z.col(c).maxCoeff();
    const Eigen::VectorXd e = shifted.array().exp();
    out.col(c) = e / e.sum();
  }
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Forward pass keeping pre-activations; optional dropout masks are applied
// to hidden activations (masks already carry the 1/(1-p) inverted scale).
struct ForwardPass {
  std::vector<Eigen::MatrixXd> activations;  // activations[0] = input
  Eigen::MatrixXd probabilities;
};

ForwardPass forward(const MlpModel& m, const Eigen::MatrixXd& inputs,
                    const std::vector<Eigen::MatrixXd>* dropout_masks) {
  ForwardPass fp;
  fp.activations.reserve(m.weights.size());
  fp.activations.push_back(inputs);
  for (std::size_t l = 0; l + 1 < m.weights.size(); ++l) {
    Eigen::MatrixXd h = relu((m.weights[l] * fp.activations.back()).colwise() + m.biases[l]);
    if (dropout_masks) h = h.cwiseProduct((*dropout_masks)[l]);
    fp.activations.push_back(std::move(h));
  }
  const Eigen::MatrixXd logits =
      (m.weights.back() * fp.activations.back()).colwise() + m.biases.back();
  fp.probabilities = softmax_columns(logits);
  return fp;
}

double batch_loss_and_grads(const MlpModel& m, const Eigen::MatrixXd& inputs,
                            const std::vector<int>& labels,
                            const std::vector<Eigen::MatrixXd>* dropout_masks,
                            std::vector<Eigen::MatrixXd>* grad_w,
                            std::vector<Eigen::VectorXd>* grad_b) {
  const auto n = inputs.cols();
  if (n == 0) throw Error("MLP_EMPTY_BATCH", "empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw Error("MLP_BAD_LABELS", "label count does not match batch");

  const ForwardPass fp = forward(m, inputs, dropout_masks);
  double loss = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    const int y = labels[static_cast<std::size_t>(c)];
    if (y < 0 || y >= fp.probabilities.rows())
      throw Error("MLP_BAD_LABELS", "label out of range");
    loss -= std::log(std::max(fp.probabilities(y, c), 1e-300));
  }
  loss /= static_cast<double>(n);

  if (grad_w) {
    grad_w->assign(m.weights.size(), Eigen::MatrixXd());
    grad_b->assign(m.biases.size(), Eigen::VectorXd());
    // Softmax + cross-entropy: delta at the output is (p - onehot)/n.
    Eigen::MatrixXd delta = fp.probabilities;
    for (Eigen::Index c = 0; c < n; ++c) delta(labels[static_cast<std::size_t>(c)], c) -= 1.0;
    delta /= static_cast<double>(n);

    for (std::size_t l = m.weights.size(); l-- > 0;) {
      (*grad_w)[l] = delta * fp.activations[l].transpose();
      (*grad_b)[l] = delta.rowwise().sum();
      if (l == 0) break;
      Eigen::MatrixXd back = m.weights[l].transpose() * delta;
      // Through dropout, then through the ReLU gate.
      if (dropout_masks) back = back.cwiseProduct((*dropout_masks)[l - 1]);
      delta = back.cwiseProduct(
          (fp.activations[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

}  // namespace

void TrainConfig::validate() const {
  if (dropout < 0.0 || dropout >= 1.0) throw Error("MLP_BAD_CONFIG", "dropout must be in [0,1)");
  if (epochs < 1) throw Error("MLP_BAD_CONFIG", "epochs must be >= 1");
  if (!(learning_rate > 0)) throw Error("MLP_BAD_CONFIG", "learning rate must be positive");
  if (batch_size < 1) throw Error("MLP_BAD_CONFIG", "batch size must be >= 1");
  for (int h : hidden_sizes)
    if (h < 1) throw Error("MLP_BAD_CONFIG", "hidden sizes must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0) throw Error("MLP_BAD_CONFIG", "momentum must be in [0,1)");
}

Eigen::MatrixXd forward_probabilities(const MlpModel& m, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != m.input_size())
    throw Error("MLP_DIMENSION", "input dimension does not match model");
  return forward(m, inputs, nullptr).probabilities;
}

double loss_and_gradients(const MlpModel& m, const Eigen::MatrixXd& inputs,
                          const std::vector<int>& labels,
                          std::vector<Eigen::MatrixXd>* grad_weights,
                          std::vector<Eigen::VectorXd>* grad_biases) {
  if (inputs.rows() != m.input_size())
    throw Error("MLP_DIMENSION", "input dimension does not match model");
  if ((grad_weights == nullptr) != (grad_biases == nullptr))
    throw Error("MLP_BAD_CALL", "gradient outputs must be requested together");
  return batch_loss_and_grads(m, inputs, labels, nullptr, grad_weights, grad_biases);
}

MlpModel make_model(int input_size, const std::vector<int>& hidden_sizes, int output_size,
                    double dropout, std::uint64_t seed) {
  if (input_size < 1 || output_size < 1)
    throw Error("MLP_BAD_CONFIG", "model needs positive input and output sizes");
  MlpModel m;
  m.dropout = dropout;
  Rng rng(seed ^ 0x6d6c70696e6974ull);
  std::vector<int> sizes;
  sizes.push_back(input_size);
  for (int h : hidden_sizes) sizes.push_back(h);
  sizes.push_back(output_size);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int rows = sizes[l + 1];
    const int cols = sizes[l];
    Eigen::MatrixXd w(rows, cols);
    const double scale = std::sqrt(2.0 / static_cast<double>(cols));  // He init
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.normal(0.0, scale);
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(rows));
  }
  return m;
}

MlpModel train(const LabeledSet& data, const TrainConfig& cfg, const Vocabulary& vocab,
               int output_size) {
  cfg.validate();
  const auto n = data.features.cols();
  if (n == 0) throw Error("MLP_NO_DATA", "training set is empty");
  if (static_cast<Eigen::Index>(data.labels.size()) != n)
    throw Error("MLP_BAD_LABELS", "label count does not match features");
  {
    std::vector<int> distinct = data.labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) throw Error("MLP_NO_DATA", "need at least two classes");
  }

  MlpModel m = make_model(static_cast<int>(data.features.rows()), cfg.hidden_sizes, output_size,
                          cfg.dropout, cfg.seed);
  m.vocab = vocab;
  Rng rng(cfg.seed ^ 0x6d6c70747261696eull);

  std::vector<Eigen::MatrixXd> velocity_w;
  std::vector<Eigen::VectorXd> velocity_b;
  if (cfg.momentum > 0) {
    for (const auto& w : m.weights) velocity_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : m.biases) velocity_b.push_back(Eigen::VectorXd::Zero(b.size()));
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Eigen::MatrixXd batch(data.features.rows(), count);
      std::vector<int> labels(static_cast<std::size_t>(count));
      for (Eigen::Index i = 0; i < count; ++i) {
        batch.col(i) = data.features.col(order[static_cast<std::size_t>(start + i)]);
        labels[static_cast<std::size_t>(i)] =
            data.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])];
      }

      std::vector<Eigen::MatrixXd> masks;
      std::vector<Eigen::MatrixXd>* masks_ptr = nullptr;
      if (cfg.dropout > 0) {
        const double keep = 1.0 - cfg.dropout;
        for (std::size_t l = 0; l + 1 < m.weights.size(); ++l) {
          Eigen::MatrixXd mask(m.weights[l].rows(), count);
          for (Eigen::Index r = 0; r < mask.rows(); ++r)
            for (Eigen::Index c = 0; c < mask.cols(); ++c)
              mask(r, c) = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
          masks.push_back(std::move(mask));
        }
        masks_ptr = &masks;
      }

      std::vector<Eigen::MatrixXd> grad_w;
      std::vector<Eigen::VectorXd> grad_b;
      const double loss = batch_loss_and_grads(m, batch, labels, masks_ptr, &grad_w, &grad_b);
      if (!std::isfinite(loss))
        throw Error("MLP_DIVERGED", "non-finite loss at epoch " + std::to_string(epoch) +
                                        ", batch offset " + std::to_string(start) +
                                        "; lower the learning rate");
      for (std::size_t l = 0; l < m.weights.size(); ++l) {
        if (cfg.momentum > 0) {
          velocity_w[l] = cfg.momentum * velocity_w[l] - cfg.learning_rate * grad_w[l];
          velocity_b[l] = cfg.momentum * velocity_b[l] - cfg.learning_rate * grad_b[l];
          m.weights[l] += velocity_w[l];
          m.biases[l] += velocity_b[l];
        } else {
          m.weights[l] -= cfg.learning_rate * grad_w[l];
          m.biases[l] -= cfg.learning_rate * grad_b[l];
        }
      }
    }
  }
  return m;
}

Prediction predict(const MlpModel& m, const Eigen::VectorXd& input) {
  if (input.size() != m.input_size())
    throw Error("MLP_DIMENSION", "input dimension does not match model");
  const Eigen::MatrixXd p = forward(m, input, nullptr).probabilities;
  Eigen::Index best = 0;
  const double confidence = p.col(0).maxCoeff(&best);
  return {static_cast<int>(best), confidence};
}

CrossValidation cross_validate(const LabeledSet& data, int k, const TrainConfig& cfg,
                               const Vocabulary& vocab, int output_size) {
  if (k < 2) throw Error("CV_BAD_K", "cross validation needs k >= 2");
  const auto n = data.features.cols();
  if (n < k) throw Error("CV_TOO_SMALL", "fewer samples than folds");

  // Stratified fold assignment; small classes are pooled round-robin.
  std::map<int, std::vector<Eigen::Index>> by_class;
  for (Eigen::Index i = 0; i < n; ++i) by_class[data.labels[static_cast<std::size_t>(i)]].push_back(i);

  CrossValidation cv;
  Rng rng(cfg.seed ^ 0x637666f6c6473ull);
  std::vector<int> fold_of(static_cast<std::size_t>(n), 0);
  int pooled_cursor = 0;
  for (auto& [label, members] : by_class) {
    rng.shuffle(members);
    if (members.size() < static_cast<std::size_t>(k)) {
      cv.warnings.push_back("class " + std::to_string(label) + " has fewer than k members; pooled");
      for (const auto idx : members) fold_of[static_cast<std::size_t>(idx)] = pooled_cursor++ % k;
      continue;
    }
    for (std::size_t i = 0; i < members.size(); ++i)
      fold_of[static_cast<std::size_t>(members[i])] = static_cast<int>(i % static_cast<std::size_t>(k));
  }

  for (int fold = 0; fold < k; ++fold) {
    std::vector<Eigen::Index> train_idx, test_idx;
    for (Eigen::Index i = 0; i < n; ++i)
      (fold_of[static_cast<std::size_t>(i)] == fold ? test_idx : train_idx).push_back(i);
    if (train_idx.empty() || test_idx.empty()) {
      cv.fold_accuracy.push_back(0.0);
      continue;
    }
    LabeledSet fold_data;
    fold_data.features.resize(data.features.rows(), static_cast<Eigen::Index>(train_idx.size()));
    fold_data.labels.resize(train_idx.size());
    for (std::size_t i = 0; i < train_idx.size(); ++i) {
      fold_data.features.col(static_cast<Eigen::Index>(i)) = data.features.col(train_idx[i]);
      fold_data.labels[i] = data.labels[static_cast<std::size_t>(train_idx[i])];
    }
    {
      std::vector<int> distinct = fold_data.labels;
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      if (distinct.size() < 2) {
        cv.warnings.push_back("fold " + std::to_string(fold) +
                              " has a single-class training side; scored 0");
        cv.fold_accuracy.push_back(0.0);
        continue;
      }
    }
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = cfg.seed + static_cast<std::uint64_t>(fold) + 1;
    const MlpModel m = train(fold_data, fold_cfg, vocab, output_size);

    std::size_t correct = 0;
    for (const auto idx : test_idx) {
      const auto pred = predict(m, data.features.col(idx));
      if (pred.label == data.labels[static_cast<std::size_t>(idx)]) ++correct;
    }
    cv.fold_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(test_idx.size()));
  }
  cv.median_accuracy = median_of(cv.fold_accuracy);
  return cv;
}

ThresholdedAssignments apply_with_threshold(
    const MlpModel& m, const std::vector<std::pair<std::string, Eigen::VectorXd>>& unresolved,
    double discard_fraction, std::size_t total_corpus_records) {
  if (discard_fraction < 0.0 || discard_fraction >= 1.0)
    throw Error("MLP_BAD_CONFIG", "discard fraction must be in [0,1)");

  struct Row {
    std::string id;
    Prediction pred;
  };
  std::vector<Row> rows;
  rows.reserve(unresolved.size());
  for (const auto& [id, x] : unresolved) rows.push_back({id, predict(m, x)});

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.pred.confidence != b.pred.confidence) return a.pred.confidence < b.pred.confidence;
    return a.id < b.id;
  });

  const auto cap = static_cast<std::size_t>(discard_fraction *
                                            static_cast<double>(total_corpus_records));
  const std::size_t n_discard = std::min(cap, rows.size());

  ThresholdedAssignments out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i < n_discard)
      out.discarded.push_back(rows[i].id);
    else
      out.assigned.emplace(rows[i].id, rows[i].pred);
  }
  std::sort(out.discarded.begin(), out.discarded.end());
  return out;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(out, bits);
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > data.size()) throw Error("MODEL_CORRUPT", "model file truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }
  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s = data.substr(pos, len);
    pos += len;
    return s;
  }
};

constexpr char kMagic[4] = {'M', 'F', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_model(const MlpModel& m, const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_f64(out, m.dropout);
  put_u32(out, static_cast<std::uint32_t>(m.weights.size()));
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const auto& w = m.weights[l];
    put_u32(out, static_cast<std::uint32_t>(w.rows()));
    put_u32(out, static_cast<std::uint32_t>(w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) put_f64(out, w(r, c));
    for (Eigen::Index r = 0; r < m.biases[l].size(); ++r) put_f64(out, m.biases[l][r]);
  }
  put_u32(out, static_cast<std::uint32_t>(m.vocab.terms.size()));
  for (std::size_t i = 0; i < m.vocab.terms.size(); ++i) {
    put_u32(out, static_cast<std::uint32_t>(m.vocab.terms[i].size()));
    out += m.vocab.terms[i];
    put_f64(out, m.vocab.idf[static_cast<Eigen::Index>(i)]);
  }
  write_file(path, out);
}

MlpModel load_model(const std::string& path) {
  const std::string data = read_file(path);
  Reader r{data};
  r.need(4);
  if (std::memcmp(data.data(), kMagic, 4) != 0)
    throw Error("MODEL_CORRUPT", "bad model magic: " + path);
  r.pos = 4;
  if (r.u32() != kVersion) throw Error("MODEL_CORRUPT", "unsupported model version");
  MlpModel m;
  m.dropout = r.f64();
  const std::uint32_t layers = r.u32();
  for (std::uint32_t l = 0; l < layers; ++l) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = r.f64();
    Eigen::VectorXd b(rows);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = r.f64();
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  const std::uint32_t terms = r.u32();
  m.vocab.idf.resize(terms);
  for (std::uint32_t i = 0; i < terms; ++i) {
    m.vocab.terms.push_back(r.str());
    m.vocab.idf[static_cast<Eigen::Index>(i)] = r.f64();
    m.vocab.index[m.vocab.terms.back()] = static_cast<int>(i);
  }
  return m;
}

}  // namespace migraflow
