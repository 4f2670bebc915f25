#include "seqal/eval.hpp"

#include "seqal/model.hpp"

#include <algorithm>
#include <set>

namespace seqal {

std::vector<EntitySpan> extract_entities(std::span<const TagIndex> tags, SentenceId sentence,
                                         int column) {
  std::vector<EntitySpan> spans;
  std::size_t i = 0;
  while (i < tags.size()) {
    const TagIndex t = tags[i];
    if (t == 0) {
      ++i;
      continue;
    }
    const int type = LabelScheme::type_of(t);
    std::size_t j = i;
    while (j + 1 < tags.size() && LabelScheme::is_inside(tags[j + 1]) &&
           LabelScheme::type_of(tags[j + 1]) == type) {
      ++j;
    }
    spans.push_back({sentence, column, type, i, j});
    i = j + 1;
  }
  return spans;
}

Metrics prf1(std::span<const EntitySpan> gold, std::span<const EntitySpan> predicted) {
  const std::set<EntitySpan> g(gold.begin(), gold.end());
  const std::set<EntitySpan> p(predicted.begin(), predicted.end());
  std::size_t tp = 0;
  for (const auto& s : p) tp += g.count(s);

  Metrics m;
  m.precision = p.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(p.size());
  m.recall = g.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(g.size());
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

Metrics evaluate(const Model& model, std::span<const SentenceBlock> blocks) {
  std::vector<EntitySpan> gold;
  std::vector<EntitySpan> predicted;
  std::size_t tokens = 0;
  std::size_t correct = 0;
  for (const auto& block : blocks) {
    for (std::size_t c = 0; c < block.label_columns.size(); ++c) {
      const int column = static_cast<int>(c);
      const auto& truth = block.label_columns[c];
      const auto guess = decode(model, block, column);
      for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == guess[i];
      tokens += truth.size();
      auto g = extract_entities(truth, block.id, column);
      auto p = extract_entities(guess, block.id, column);
      gold.insert(gold.end(), g.begin(), g.end());
      predicted.insert(predicted.end(), p.begin(), p.end());
    }
  }
  Metrics m = prf1(gold, predicted);
  m.token_accuracy = tokens == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(tokens);
  return m;
}

}  // namespace seqal
