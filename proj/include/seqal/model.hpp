#pragma once

// Sequence labeler: windowed token embeddings feed one tanh hidden layer,
// whose output produces CRF emission scores. The hidden layer is also the
// representation used for sentence embeddings and MC dropout.

#include "seqal/corpus.hpp"
#include "seqal/crf.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace seqal {

class Vocabulary {
 public:
  static constexpr int kUnknown = 0;
  static constexpr int kPad = 1;

  Vocabulary();
  // Sorted, de-duplicated tokens of the given blocks.
  static Vocabulary from_blocks(std::span<const SentenceBlock> blocks);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int index_of(std::string_view token) const;
  std::size_t size() const noexcept { return words_.size(); }
  // Includes the two reserved entries at indices 0 and 1.
  const std::vector<std::string>& words() const noexcept { return words_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

struct FeatureConfig {
  int embed_dim = 32;
  int hidden_dim = 64;
  double dropout_rate = 0.1;
  int window = 1;
  std::uint64_t seed = 0;

  void validate() const;
  int input_dim() const noexcept { return (2 * window + 1) * embed_dim; }
  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

// Named view of one parameter array, row-major.
struct ParamBlock {
  std::string_view name;
  std::span<double> values;
  Eigen::Index rows;
  Eigen::Index cols;
};

struct ModelParams {
  Matrix token_embeddings;  // vocab x embed_dim
  Matrix hidden_weights;    // hidden x input_dim
  Vector hidden_bias;       // hidden
  Vector span_weights;      // hidden in the role task, empty otherwise
  Matrix emission_weights;  // hidden x labels
  Vector emission_bias;     // labels
  Transitions crf;          // labels x labels, plus start/end

  // Same shapes, all zero.
  ModelParams zeros_like() const;
  std::vector<ParamBlock> blocks();
  bool all_finite() const;

  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

struct Model {
  TaskKind task = TaskKind::ProductExtraction;
  FeatureConfig features;
  Vocabulary vocab;
  ModelParams params;

  std::size_t num_labels() const noexcept { return static_cast<std::size_t>(params.emission_bias.size()); }
  friend bool operator==(const Model&, const Model&) = default;
};

// Seeded random encoder weights, zero CRF transitions.
Model init_model(TaskKind task, Vocabulary vocab, const FeatureConfig& features);

// Forward activations for one (sentence, column) pair.
struct Activations {
  std::vector<int> token_ids;  // vocabulary index per token
  std::vector<double> in_span; // conditioning-product indicator per token
  Matrix input;                // L x input_dim
  Matrix activation;           // L x hidden, tanh output before dropout
  Matrix dropout_scale;        // L x hidden, empty when dropout is off
  Matrix hidden;               // L x hidden, after dropout
  Matrix emissions;            // L x labels
};

// column selects the conditioning product in the role task; it must index
// a label column (or be -1 to featurize without conditioning). A mask seed
// switches on inverted dropout on the hidden layer.
Activations forward(const Model& model, const SentenceBlock& block, int column,
                    std::optional<std::uint64_t> mask_seed = std::nullopt);

// Per-token hidden-layer feature vectors (L x hidden).
Matrix featurize(const Model& model, const SentenceBlock& block, int column,
                 std::optional<std::uint64_t> mask_seed = std::nullopt);

Matrix emission_scores(const Model& model, const SentenceBlock& block, int column,
                       std::optional<std::uint64_t> mask_seed = std::nullopt);

struct LabeledExample {
  const SentenceBlock* block = nullptr;
  int column = 0;
  std::optional<std::uint64_t> mask_seed;
};

struct LossAndGradient {
  double loss = 0.0;
  ModelParams gradient;
};

// Summed negative log-likelihood of the gold columns and its exact gradient.
LossAndGradient nll_and_gradient(std::span<const LabeledExample> batch, const Model& model);

// One (block, column) example per label column, in block order.
std::vector<LabeledExample> examples_of(std::span<const SentenceBlock> blocks);

struct TrainConfig {
  int epochs_per_round = 2;
  int batch_size = 16;
  double lr_crf = 5e-3;
  double lr_features = 1e-2;
  std::uint64_t seed = 0;

  static TrainConfig for_task(TaskKind task);
  void validate() const;
};

// Seeded-shuffle minibatch SGD. CRF transition/start/end scores move at
// lr_crf, every other array at lr_features. Each step applies the batch's
// summed gradient. Dropout is active during training.
// Mean per-example loss of each epoch is appended to epoch_losses if given.
Model train(const Model& model, std::span<const SentenceBlock> labeled, const TrainConfig& config,
            std::vector<double>* epoch_losses = nullptr);

enum class ProbMode { EmissionSoftmax, CrfMarginal };

std::string_view to_string(ProbMode mode) noexcept;
ProbMode parse_prob_mode(std::string_view name);

ProbTensor predict_probs(const Model& model, const SentenceBlock& block, int column,
                         ProbMode mode = ProbMode::EmissionSoftmax);

// T stochastic passes; pass t uses mask seed base_seed + t.
std::vector<ProbTensor> mc_passes(const Model& model, const SentenceBlock& block, int column,
                                  int passes, std::uint64_t base_seed,
                                  ProbMode mode = ProbMode::EmissionSoftmax);

// Mean of the hidden-layer activations over tokens, dropout off.
Vector sentence_embedding(const Model& model, const SentenceBlock& block);

// Best label sequence for one column.
std::vector<TagIndex> decode(const Model& model, const SentenceBlock& block, int column);

// Text container of named arrays with shape headers. Values are written in
// shortest round-trip form, so load(save(m)) == m exactly.
std::string serialize_model(const Model& model);
Model deserialize_model(std::string_view text);
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace seqal
