#pragma once

// Acquisition strategies. Uncertainty strategies turn per-token label
// distributions into one score per sentence (higher = acquired first);
// diversity strategies pick sentences directly from embeddings.

#include "seqal/corpus.hpp"
#include "seqal/crf.hpp"
#include "seqal/model.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seqal {

enum class StrategyKind {
  Random,
  LeastConfidence,
  ModifiedLeastConfidence,
  Margin,
  Entropy,
  BaldBatch,
  CoreSet,
  ClusterPlus,
};

std::string_view to_string(StrategyKind kind) noexcept;
// Throws ConfigInvalid listing the valid names.
StrategyKind parse_strategy(std::string_view name);
const std::vector<std::string>& strategy_names();

struct StrategyParams {
  int mc_passes = 10;
  double entropy_epsilon = 1e-12;
};

struct ScoredSentence {
  SentenceId id = 0;
  double score = 0.0;
};

struct EmbeddingMatrix {
  Matrix rows;
  std::vector<SentenceId> ids;

  std::size_t size() const noexcept { return ids.size(); }
};

// --- token/sentence uncertainty -------------------------------------------

// Mean over valid tokens of 1 - max_k p.
double score_least_confidence(const ProbTensor& probs);

// round(sqrt(L / 2)) clamped to [1, L].
std::size_t mlc_token_count(std::size_t valid_tokens) noexcept;

// Mean of 1 - max_k p over the N least confident valid tokens.
double score_mlc(const ProbTensor& probs);

// Mean over valid tokens of P(top1) - P(top2). Smaller = more uncertain.
double score_margin(const ProbTensor& probs);

// -sum p log p over entries with p > epsilon.
double token_entropy(const Matrix& probs, Eigen::Index row, double epsilon);

// Mean token entropy over valid tokens.
double score_entropy(const ProbTensor& probs, double epsilon = 1e-12);

// Mean over valid tokens of H(mean of passes) - mean over passes of H(pass).
double score_bald(std::span<const ProbTensor> passes, double epsilon = 1e-12);

// --- selectors ----------------------------------------------------------------

// Descending score, ties to the lower id; first n.
std::vector<SentenceId> rank_and_take(std::vector<ScoredSentence> scores, std::size_t n);

// Uniform sample without replacement.
std::vector<SentenceId> select_random(std::span<const SentenceId> pool, std::size_t n,
                                      std::uint64_t seed);

// 1 - cos(a, b); 1 when either vector is zero.
double cosine_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

// Greedy k-center under cosine distance. With an empty labeled set the first
// pick is uniform under seed; afterwards each step takes the pool row whose
// minimum distance to labeled + picked is largest (ties to the lower id).
std::vector<SentenceId> select_coreset(const EmbeddingMatrix& labeled, const EmbeddingMatrix& pool,
                                       std::size_t n, std::uint64_t seed);

// clamp(round(sqrt(U / 2)), 5, n), further capped at U.
std::size_t cluster_count(std::size_t pool_size, std::size_t n) noexcept;

struct KMeansResult {
  Matrix centers;
  std::vector<int> assignment;
  int iterations = 0;
};

// k-means++ seeding followed by Lloyd iterations until assignments are
// stable or max_iterations is reached.
KMeansResult kmeans_plus_plus(const Matrix& points, std::size_t k, std::uint64_t seed,
                              int max_iterations = 100);

struct ClusterSelection {
  std::vector<SentenceId> ids;
  std::vector<int> assignment;  // cluster per pool row
  std::size_t k = 0;
};

// Clusters unit-normalized embeddings, then draws round-robin over the
// non-empty clusters (seeded visiting order, one uniform unpicked member per
// visit) until n ids are collected.
ClusterSelection select_cluster_plus(const EmbeddingMatrix& pool, std::size_t n, std::uint64_t seed);

// --- model-driven acquisition ------------------------------------------------

EmbeddingMatrix embed_blocks(const Model& model, std::span<const SentenceBlock* const> blocks);

struct AcquisitionOptions {
  StrategyParams params;
  ProbMode prob_mode = ProbMode::EmissionSoftmax;
  // Mixed with the sentence id to seed each sentence's MC dropout passes.
  std::uint64_t mc_seed = 0;
};

// Sentence score for an uncertainty strategy, oriented so that higher is
// acquired first. Multi-column role blocks average their column scores.
// ModifiedLeastConfidence uses plain least confidence in the product task.
double acquisition_score(StrategyKind kind, const Model& model, const SentenceBlock& block,
                         const AcquisitionOptions& options);

bool is_uncertainty_strategy(StrategyKind kind) noexcept;

struct Selection {
  std::vector<SentenceId> ids;
  std::map<SentenceId, double> scores;  // uncertainty strategies only
  std::map<SentenceId, int> clusters;   // ClusterPlus only, every pool row
};

// Runs one strategy over a pool. `labeled` feeds Core-set distances.
// Throws BudgetExceedsPool when n > pool size.
Selection run_strategy(StrategyKind kind, const Model& model,
                       std::span<const SentenceBlock* const> pool,
                       std::span<const SentenceBlock* const> labeled, std::size_t n,
                       std::uint64_t seed, const AcquisitionOptions& options);

}  // namespace seqal
