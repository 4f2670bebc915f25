#include "seqal/eval.hpp"
#include "seqal/model.hpp"
#include "seqal/rng.hpp"

#include <doctest.h>

#include <algorithm>

using namespace seqal;

namespace {

EntitySpan span(SentenceId s, std::size_t a, std::size_t b, int type = 0) {
  return EntitySpan{s, 0, type, a, b};
}

}  // namespace

TEST_CASE("span extraction") {
  const std::vector<TagIndex> prod{0, 1, 2, 0};
  const auto spans = extract_entities(prod, 4);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == span(4, 1, 2));

  const auto scheme = LabelScheme::role();
  const TagIndex ba = *scheme.index_of("B-Solvent");
  const TagIndex ia = *scheme.index_of("I-Solvent");
  const TagIndex bt = *scheme.index_of("B-Temp");
  CHECK(extract_entities(std::vector<TagIndex>{ba, ba}).size() == 2);
  const auto stray = extract_entities(std::vector<TagIndex>{ia, 0});
  REQUIRE(stray.size() == 1);
  CHECK(stray[0].start == 0);
  CHECK(stray[0].end == 0);
  CHECK(stray[0].type == LabelScheme::type_of(ia));
  // A type change closes the running span.
  const auto mixed = extract_entities(std::vector<TagIndex>{ba, ia, *scheme.index_of("I-Temp"), bt});
  CHECK(mixed.size() == 3);
}

TEST_CASE("precision, recall, f1") {
  const std::vector<EntitySpan> a{span(0, 0, 0), span(0, 2, 3)};
  auto m = prf1(a, a);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);

  m = prf1(a, {});
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);

  const std::vector<EntitySpan> gold{span(0, 0, 0), span(1, 0, 0)};
  const std::vector<EntitySpan> pred{span(1, 0, 0), span(2, 0, 0)};
  m = prf1(gold, pred);
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 0.5);
  CHECK(m.f1 == 0.5);

  m = prf1({}, pred);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
}

TEST_CASE("f1 lies between precision and recall") {
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<EntitySpan> gold, pred;
    for (int i = 0; i < 10; ++i) {
      if (rng.uniform() < 0.5) gold.push_back(span(i, 0, 0));
      if (rng.uniform() < 0.5) pred.push_back(span(i, 0, 0));
    }
    const auto m = prf1(gold, pred);
    if (m.precision + m.recall > 0) {
      CHECK(m.f1 >= std::min(m.precision, m.recall) - 1e-15);
      CHECK(m.f1 <= std::max(m.precision, m.recall) + 1e-15);
    }
  }
}

TEST_CASE("evaluate is order invariant") {
  SynthSpec spec;
  spec.task = TaskKind::RoleLabeling;
  spec.n_train = 30;
  spec.n_val = 1;
  spec.n_test = 1;
  spec.entity_rate = 0.8;
  spec.seed = 2;
  Corpus c = generate_synthetic(spec);
  FeatureConfig fc;
  fc.embed_dim = 6;
  fc.hidden_dim = 6;
  Model m = init_model(TaskKind::RoleLabeling, Vocabulary::from_blocks(c.train), fc);
  TrainConfig tc = TrainConfig::for_task(TaskKind::RoleLabeling);
  tc.epochs_per_round = 5;
  tc.lr_features = 5e-2;
  m = train(m, c.train, tc);
  const Metrics forward = evaluate(m, c.train);
  std::vector<SentenceBlock> reversed(c.train.rbegin(), c.train.rend());
  CHECK(evaluate(m, reversed) == forward);
  CHECK(forward.token_accuracy > 0.0);
}
