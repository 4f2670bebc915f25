#pragma once

#include "seqal/corpus.hpp"
#include "seqal/model.hpp"
#include "seqal/strategies.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace seqal {

using GroupSizes = std::map<int, std::size_t>;

// Product task: 1 if the sentence has any entity token, else 0.
// Role task: number of distinct roles across its columns.
// Keys come from gold labels; the simulation reads them for the unlabeled
// pool too.
int group_key(const SentenceBlock& block, TaskKind task) noexcept;

// Largest-remainder apportionment of n by group size (remainder ties to the
// lower key). If some non-empty group ends at 0 while n covers every
// non-empty group, each such group is raised to 1 and the currently largest
// quota (lowest key on ties) pays for it.
std::map<int, std::size_t> allocate_quotas(const GroupSizes& sizes, std::size_t n);

struct SelectionEntry {
  SentenceId id = 0;
  int group = 0;
  std::optional<double> score;
  std::optional<int> cluster;
};

struct StratifiedSelection {
  std::vector<SelectionEntry> entries;
  std::map<int, std::size_t> quotas;
  // Cluster label of every pool sentence, ClusterPlus only. Labels are
  // group * 1000 + cluster so they stay distinct across groups.
  std::map<SentenceId, int> clusters;
  std::map<SentenceId, double> scores;

  std::vector<SentenceId> ids() const;
};

// Runs the strategy inside each group with that group's quota, groups in key
// order. Core-set distances see the labeled set plus the picks of earlier
// groups. With stratify = false the whole pool is one group.
StratifiedSelection stratified_select(StrategyKind kind, const Model& model,
                                      std::span<const SentenceBlock* const> pool,
                                      std::span<const SentenceBlock* const> labeled,
                                      std::size_t budget, std::uint64_t seed,
                                      const AcquisitionOptions& options, bool stratify = true);

}  // namespace seqal
