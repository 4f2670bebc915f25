#pragma once

#include "seqal/corpus.hpp"

#include <span>
#include <string>
#include <vector>

namespace seqal {

struct Model;

struct EntitySpan {
  SentenceId sentence = 0;
  int column = 0;
  int type = 0;  // entity type index in the label scheme
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive

  friend auto operator<=>(const EntitySpan&, const EntitySpan&) = default;
};

// Maximal B-X (I-X)* runs become spans of type X. A stray I-X, which
// predictions can contain, opens a new span of type X.
std::vector<EntitySpan> extract_entities(std::span<const TagIndex> tags, SentenceId sentence = 0,
                                         int column = 0);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double token_accuracy = 0.0;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

// Exact-match micro precision/recall/F1. Conventions: P = 0 without
// predictions, R = 0 without gold, F1 = 0 when P + R = 0.
Metrics prf1(std::span<const EntitySpan> gold, std::span<const EntitySpan> predicted);

// Viterbi-decodes every (sentence, column) and scores it against gold.
// In the role task only role spans are scored; the conditioning product is
// an input, not a prediction.
Metrics evaluate(const Model& model, std::span<const SentenceBlock> blocks);

}  // namespace seqal
