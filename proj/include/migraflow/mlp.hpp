#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "migraflow/state.hpp"
#include "migraflow/tfidf.hpp"

namespace migraflow {

struct TrainConfig {
  std::vector<int> hidden_sizes = {256, 64};
  double dropout = 0.25;      // hidden activations, training only (inverted)
  double learning_rate = 0.5;
  double momentum = 0.0;
  int epochs = 40;
  int batch_size = 32;
  std::uint64_t seed = 1;

  void validate() const;
};

// Dense feedforward net: ReLU hidden layers, softmax over the 32 states.
struct MlpModel {
  std::vector<Eigen::MatrixXd> weights;  // layer l maps in -> out, (out x in)
  std::vector<Eigen::VectorXd> biases;
  double dropout = 0.25;  // recorded training-time rate; inference ignores it
  Vocabulary vocab;

  int input_size() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
  int output_size() const { return weights.empty() ? 0 : static_cast<int>(weights.back().rows()); }
};

struct LabeledSet {
  Eigen::MatrixXd features;  // d x n, one column per sample
  std::vector<int> labels;   // class index per column
};

// Softmax probabilities for a batch of columns, numerically stable.
Eigen::MatrixXd forward_probabilities(const MlpModel& m, const Eigen::MatrixXd& inputs);

// Mean cross-entropy over the batch; fills analytic gradients when the out
// parameters are non-null. Dropout is off here, which is what the central
// finite-difference check in the tests assumes.
double loss_and_gradients(const MlpModel& m, const Eigen::MatrixXd& inputs,
                          const std::vector<int>& labels,
                          std::vector<Eigen::MatrixXd>* grad_weights,
                          std::vector<Eigen::VectorXd>* grad_biases);

MlpModel make_model(int input_size, const std::vector<int>& hidden_sizes, int output_size,
                    double dropout, std::uint64_t seed);

// Mini-batch gradient descent on cross-entropy; deterministic given the
// seed. Throws MLP_DIVERGED with diagnostics if the loss goes non-finite.
MlpModel train(const LabeledSet& data, const TrainConfig& cfg, const Vocabulary& vocab,
               int output_size = kNumStates);

struct Prediction {
  int label = 0;
  double confidence = 0.0;  // softmax activation of the winning class
};

Prediction predict(const MlpModel& m, const Eigen::VectorXd& input);

struct CrossValidation {
  std::vector<double> fold_accuracy;
  double median_accuracy = 0.0;
  std::vector<std::string> warnings;  // classes too small to stratify
};

// Stratified k-fold; classes with fewer than k members are pooled across
// folds round-robin with a warning.
CrossValidation cross_validate(const LabeledSet& data, int k, const TrainConfig& cfg,
                               const Vocabulary& vocab, int output_size = kNumStates);

struct ThresholdedAssignments {
  // record_id -> (state label, confidence), for records that survive
  std::map<std::string, Prediction> assigned;
  std::vector<std::string> discarded;  // lowest-confidence record ids
};

// Predicts every unresolved record, then discards the lowest-confidence
// floor(discard_fraction * total_corpus_records) of them (never more).
// Confidence ties break by record id so the cut is reproducible.
ThresholdedAssignments apply_with_threshold(
    const MlpModel& m, const std::vector<std::pair<std::string, Eigen::VectorXd>>& unresolved,
    double discard_fraction, std::size_t total_corpus_records);

// Versioned little-endian binary, vocabulary inline.
void save_model(const MlpModel& m, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace migraflow
