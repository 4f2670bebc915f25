#include "seqal/loop.hpp"

#include "seqal/error.hpp"
#include "seqal/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace seqal {

ExperimentConfig ExperimentConfig::for_task(TaskKind task) {
  ExperimentConfig c;
  c.task = task;
  c.train = TrainConfig::for_task(task);
  return c;
}

std::size_t round_budget(std::size_t pool_size, double fraction) noexcept {
  const auto b = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pool_size) + 0.5));
  return std::max<std::size_t>(1, b);
}

std::vector<std::size_t> plan_budgets(std::size_t pool_size, double fraction, int rounds) {
  if (rounds < 1) throw Error(ErrorKind::ConfigInvalid, "rounds must be >= 1");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::ConfigInvalid, "budget_fraction must lie in (0, 1]");
  }
  const std::size_t budget = round_budget(pool_size, fraction);
  std::vector<std::size_t> out;
  std::size_t used = 0;
  for (int r = 1; r <= rounds; ++r) {
    if (used >= pool_size) {
      throw Error(ErrorKind::ConfigInvalid, "pool of " + std::to_string(pool_size) +
                                                " sentences is exhausted before round " +
                                                std::to_string(r));
    }
    const std::size_t b = std::min(budget, pool_size - used);
    out.push_back(b);
    used += b;
  }
  return out;
}

void ExperimentConfig::validate(std::size_t pool_size) const {
  features.validate();
  train.validate();
  if (strategy == StrategyKind::BaldBatch && strategy_params.mc_passes < 2) {
    throw Error(ErrorKind::ConfigInvalid, "mc_passes must be >= 2 for bald");
  }
  if (!(strategy_params.entropy_epsilon >= 0.0)) {
    throw Error(ErrorKind::ConfigInvalid, "entropy_epsilon must be >= 0");
  }
  plan_budgets(pool_size, budget_fraction, rounds);
}

FeatureConfig seeded_features(const ExperimentConfig& config) {
  FeatureConfig f = config.features;
  f.seed = derive_seed(config.master_seed, 0, SeedPurpose::Init);
  return f;
}

TrainConfig seeded_train(const ExperimentConfig& config, int round) {
  TrainConfig t = config.train;
  t.seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(round), SeedPurpose::Train);
  return t;
}

Model initial_model(const Corpus& corpus, const ExperimentConfig& config) {
  return init_model(config.task, Vocabulary::from_blocks(corpus.train), seeded_features(config));
}

namespace {

std::vector<const SentenceBlock*> sorted_by_id(const std::vector<SentenceBlock>& blocks) {
  std::vector<const SentenceBlock*> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back(&b);
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  return out;
}

std::vector<SentenceBlock> copy_blocks(const std::vector<const SentenceBlock*>& ptrs) {
  std::vector<SentenceBlock> out;
  out.reserve(ptrs.size());
  for (const auto* p : ptrs) out.push_back(*p);
  return out;
}

void check_corpus(const Corpus& corpus, const ExperimentConfig& config) {
  if (corpus.scheme.task() != config.task) {
    throw Error(ErrorKind::ConfigInvalid, "corpus task does not match config task");
  }
  if (corpus.train.empty() || corpus.test.empty()) {
    throw Error(ErrorKind::ConfigInvalid, "corpus needs non-empty train and test splits");
  }
}

}  // namespace

std::vector<RoundRecord> run_experiment(const Corpus& corpus, const ExperimentConfig& config,
                                        RoundObserver* observer) {
  check_corpus(corpus, config);
  config.validate(corpus.train.size());
  const auto budgets = plan_budgets(corpus.train.size(), config.budget_fraction, config.rounds);
  const auto train_split = sorted_by_id(corpus.train);

  Model model = initial_model(corpus, config);
  if (observer) observer->on_start(model);

  std::set<SentenceId> labeled;
  std::vector<RoundRecord> records;
  for (int r = 1; r <= config.rounds; ++r) {
    const auto started = std::chrono::steady_clock::now();
    std::vector<const SentenceBlock*> pool;
    std::vector<const SentenceBlock*> labeled_blocks;
    for (const auto* b : train_split) (labeled.count(b->id) ? labeled_blocks : pool).push_back(b);

    AcquisitionOptions options;
    options.params = config.strategy_params;
    options.prob_mode = config.prob_mode;
    options.mc_seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(r), SeedPurpose::McDropout);
    const StratifiedSelection selection = stratified_select(
        config.strategy, model, pool, labeled_blocks, budgets[static_cast<std::size_t>(r - 1)],
        derive_seed(config.master_seed, static_cast<std::uint64_t>(r), SeedPurpose::Select), options,
        config.stratified);

    const std::set<SentenceId> labeled_before = labeled;
    for (const auto& e : selection.entries) labeled.insert(e.id);

    // Rebuilt from scratch each round, in id order.
    std::vector<const SentenceBlock*> training_ptrs;
    for (const auto* b : train_split) {
      if (labeled.count(b->id)) training_ptrs.push_back(b);
    }
    const auto training_set = copy_blocks(training_ptrs);
    Model trained = train(model, training_set, seeded_train(config, r));

    RoundRecord record;
    record.round = r;
    record.selected = selection.ids();
    record.n_labeled = labeled.size();
    record.test = evaluate(trained, corpus.test);
    record.val_f1 = corpus.val.empty() ? 0.0 : evaluate(trained, corpus.val).f1;
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    if (observer) {
      RoundState state{r, &model, &trained, &selection, &labeled_before, &record};
      observer->on_round(state);
    }
    records.push_back(std::move(record));
    model = std::move(trained);
  }
  return records;
}

PassiveResult run_passive(const Corpus& corpus, const ExperimentConfig& config) {
  check_corpus(corpus, config);
  config.validate(corpus.train.size());
  const auto training_set = copy_blocks(sorted_by_id(corpus.train));
  Model model = initial_model(corpus, config);
  for (int r = 1; r <= config.rounds; ++r) model = train(model, training_set, seeded_train(config, r));

  PassiveResult out;
  out.test = evaluate(model, corpus.test);
  out.val_f1 = corpus.val.empty() ? 0.0 : evaluate(model, corpus.val).f1;
  out.model = std::move(model);
  return out;
}

}  // namespace seqal
