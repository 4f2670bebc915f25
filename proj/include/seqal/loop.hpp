#pragma once

// Pool-based active learning simulation: every round snapshots the current
// model, acquires a batch from the unlabeled pool, retrains warm-started on
// the whole labeled set, and evaluates on the fixed validation and test
// splits.

#include "seqal/corpus.hpp"
#include "seqal/eval.hpp"
#include "seqal/model.hpp"
#include "seqal/stratified.hpp"
#include "seqal/strategies.hpp"

#include <cstdint>
#include <set>
#include <vector>

namespace seqal {

struct ExperimentConfig {
  TaskKind task = TaskKind::ProductExtraction;
  StrategyKind strategy = StrategyKind::Random;
  int rounds = 10;
  double budget_fraction = 0.10;
  FeatureConfig features;
  TrainConfig train;
  StrategyParams strategy_params;
  std::uint64_t master_seed = 0;
  ProbMode prob_mode = ProbMode::EmissionSoftmax;
  bool emit_embeddings = false;
  bool stratified = true;

  static ExperimentConfig for_task(TaskKind task);
  // Throws ConfigInvalid.
  void validate(std::size_t pool_size) const;
};

// max(1, round_half_up(fraction * pool_size)).
std::size_t round_budget(std::size_t pool_size, double fraction) noexcept;

// Per-round budgets; the last round takes whatever is left if the fixed
// budget would overrun the pool. Throws ConfigInvalid if the pool runs dry
// before the last round.
std::vector<std::size_t> plan_budgets(std::size_t pool_size, double fraction, int rounds);

// Seed conventions, all derived from the master seed:
//   model init         derive_seed(master, 0, Init)
//   round r selection  derive_seed(master, r, Select)
//   round r training   derive_seed(master, r, Train)
//   round r MC dropout derive_seed(master, r, McDropout)
FeatureConfig seeded_features(const ExperimentConfig& config);
TrainConfig seeded_train(const ExperimentConfig& config, int round);

struct RoundRecord {
  int round = 0;
  std::vector<SentenceId> selected;
  std::size_t n_labeled = 0;
  Metrics test;
  double val_f1 = 0.0;
  double wall_seconds = 0.0;
  std::string checkpoint;
};

struct RoundState {
  int round = 0;
  const Model* selection_model = nullptr;  // snapshot used to acquire
  const Model* trained_model = nullptr;
  const StratifiedSelection* selection = nullptr;
  const std::set<SentenceId>* labeled_before = nullptr;
  RoundRecord* record = nullptr;
};

// Hooks for persisting run artifacts. Called synchronously by the loop.
class RoundObserver {
 public:
  virtual ~RoundObserver() = default;
  virtual void on_start(const Model& /*initial*/) {}
  virtual void on_round(const RoundState& /*state*/) {}
};

// The model every experiment starts from: vocabulary of the train split,
// seeded weights.
Model initial_model(const Corpus& corpus, const ExperimentConfig& config);

std::vector<RoundRecord> run_experiment(const Corpus& corpus, const ExperimentConfig& config,
                                        RoundObserver* observer = nullptr);

struct PassiveResult {
  Metrics test;
  double val_f1 = 0.0;
  Model model;
};

// Trains on the full train split for `rounds` warm-started rounds, using the
// same seed stream as run_experiment.
PassiveResult run_passive(const Corpus& corpus, const ExperimentConfig& config);

}  // namespace seqal
