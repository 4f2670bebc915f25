#include "seqal/stratified.hpp"

#include "seqal/error.hpp"
#include "seqal/rng.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace seqal {

int group_key(const SentenceBlock& block, TaskKind task) noexcept {
  if (task == TaskKind::ProductExtraction) return entity_presence(block) ? 1 : 0;
  return distinct_role_count(block);
}

std::map<int, std::size_t> allocate_quotas(const GroupSizes& sizes, std::size_t n) {
  std::size_t total = 0;
  for (const auto& [key, size] : sizes) total += size;
  if (n > total) {
    throw Error(ErrorKind::BudgetExceedsPool,
                "budget " + std::to_string(n) + " exceeds pool of " + std::to_string(total));
  }
  std::map<int, std::size_t> quotas;
  if (total == 0) {
    for (const auto& [key, size] : sizes) quotas[key] = 0;
    return quotas;
  }

  // Exact integer arithmetic: n * size = quota * total + remainder.
  struct Share {
    int key;
    std::size_t remainder;
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (const auto& [key, size] : sizes) {
    quotas[key] = n * size / total;
    assigned += quotas[key];
    shares.push_back({key, n * size % total});
  }
  std::stable_sort(shares.begin(), shares.end(),
                   [](const Share& a, const Share& b) { return a.remainder > b.remainder; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++quotas[shares[i].key];

  std::size_t non_empty = 0;
  for (const auto& [key, size] : sizes) non_empty += size > 0;
  if (n >= non_empty) {
    for (const auto& [key, size] : sizes) {
      if (size == 0 || quotas[key] > 0) continue;
      auto donor = quotas.begin();
      for (auto it = quotas.begin(); it != quotas.end(); ++it) {
        if (it->second > donor->second) donor = it;
      }
      --donor->second;
      quotas[key] = 1;
    }
  }
  return quotas;
}

std::vector<SentenceId> StratifiedSelection::ids() const {
  std::vector<SentenceId> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.id);
  return out;
}

StratifiedSelection stratified_select(StrategyKind kind, const Model& model,
                                      std::span<const SentenceBlock* const> pool,
                                      std::span<const SentenceBlock* const> labeled,
                                      std::size_t budget, std::uint64_t seed,
                                      const AcquisitionOptions& options, bool stratify) {
  if (budget > pool.size()) {
    throw Error(ErrorKind::BudgetExceedsPool,
                "budget " + std::to_string(budget) + " exceeds pool of " + std::to_string(pool.size()));
  }
  std::map<int, std::vector<const SentenceBlock*>> groups;
  std::unordered_map<SentenceId, int> key_of;
  for (const auto* b : pool) {
    const int key = group_key(*b, model.task);
    key_of[b->id] = key;
    groups[stratify ? key : 0].push_back(b);
  }
  GroupSizes sizes;
  for (const auto& [key, members] : groups) sizes[key] = members.size();

  StratifiedSelection out;
  out.quotas = allocate_quotas(sizes, budget);

  std::vector<const SentenceBlock*> seen(labeled.begin(), labeled.end());
  std::unordered_map<SentenceId, const SentenceBlock*> by_id;
  for (const auto* b : pool) by_id[b->id] = b;

  for (const auto& [key, members] : groups) {
    const std::size_t quota = out.quotas[key];
    if (quota == 0) continue;
    AcquisitionOptions opts = options;
    const std::uint64_t group_seed = hash_combine(seed, static_cast<std::uint64_t>(key));
    const Selection sel = run_strategy(kind, model, members, seen, quota, group_seed, opts);
    for (const auto& [id, cluster] : sel.clusters) out.clusters[id] = key * 1000 + cluster;
    for (const auto& [id, score] : sel.scores) out.scores[id] = score;
    for (SentenceId id : sel.ids) {
      SelectionEntry entry{id, key_of.at(id), std::nullopt, std::nullopt};
      if (auto it = sel.scores.find(id); it != sel.scores.end()) entry.score = it->second;
      if (auto it = sel.clusters.find(id); it != sel.clusters.end()) entry.cluster = key * 1000 + it->second;
      out.entries.push_back(entry);
      seen.push_back(by_id.at(id));
    }
  }
  return out;
}

}  // namespace seqal
