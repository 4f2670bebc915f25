#include "seqal/error.hpp"
#include "seqal/eval.hpp"
#include "seqal/model.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>

using namespace seqal;

namespace {

FeatureConfig small_features(std::uint64_t seed, double dropout = 0.2) {
  FeatureConfig fc;
  fc.embed_dim = 4;
  fc.hidden_dim = 5;
  fc.dropout_rate = dropout;
  fc.window = 1;
  fc.seed = seed;
  return fc;
}

Corpus tiny_corpus(TaskKind task, std::uint64_t seed, std::size_t n = 40) {
  SynthSpec spec;
  spec.task = task;
  spec.n_train = n;
  spec.n_val = 10;
  spec.n_test = 10;
  spec.vocab_size = 40;
  spec.min_length = 1;
  spec.max_length = 3;
  spec.max_roles = 2;
  spec.entity_rate = 0.6;
  spec.seed = seed;
  return generate_synthetic(spec);
}

Model model_for(const Corpus& c, const FeatureConfig& fc) {
  return init_model(c.scheme.task(), Vocabulary::from_blocks(c.train), fc);
}

// Gives the CRF arrays nonzero values so their gradients are exercised.
void perturb_crf(Model& m, std::uint64_t seed) {
  Rng rng(seed);
  for (Eigen::Index i = 0; i < m.params.crf.pair.size(); ++i) m.params.crf.pair.data()[i] = rng.uniform(-0.5, 0.5);
  for (Eigen::Index i = 0; i < m.params.crf.start.size(); ++i) m.params.crf.start(i) = rng.uniform(-0.5, 0.5);
  for (Eigen::Index i = 0; i < m.params.crf.end.size(); ++i) m.params.crf.end(i) = rng.uniform(-0.5, 0.5);
  for (Eigen::Index i = 0; i < m.params.emission_bias.size(); ++i) m.params.emission_bias(i) = rng.uniform(-0.5, 0.5);
}

}  // namespace

TEST_CASE("vocabulary") {
  const auto v = Vocabulary::from_tokens({"b", "a", "b"});
  CHECK(v.words() == std::vector<std::string>{"<unk>", "<pad>", "a", "b"});
  CHECK(v.index_of("a") == 2);
  CHECK(v.index_of("zzz") == Vocabulary::kUnknown);
}

TEST_CASE("gradient matches finite differences") {
  for (auto task : {TaskKind::ProductExtraction, TaskKind::RoleLabeling}) {
    const Corpus c = tiny_corpus(task, 4);
    Model m = model_for(c, small_features(1));
    perturb_crf(m, 2);
    std::vector<LabeledExample> batch;
    for (std::size_t i = 0; i < 2; ++i) {
      const auto& b = c.train[i];
      for (std::size_t col = 0; col < b.label_columns.size(); ++col) {
        batch.push_back({&b, static_cast<int>(col), 77 + i});
      }
    }
    const auto lg = nll_and_gradient(batch, m);
    CHECK(lg.loss == doctest::Approx(oracle::batch_loss(m, batch)).epsilon(1e-12));
    for (const auto& check : oracle::gradient_check(m, batch, lg.gradient)) {
      INFO(check.name);
      CHECK(check.relative_error < 1e-3);
    }
  }
}

TEST_CASE("loss is additive and non-negative") {
  const Corpus c = tiny_corpus(TaskKind::ProductExtraction, 8);
  const Model m = model_for(c, small_features(3));
  const LabeledExample one{&c.train[0], 0, std::nullopt};
  const LabeledExample two{&c.train[1], 0, std::nullopt};
  const std::vector<LabeledExample> single{one, two};
  const std::vector<LabeledExample> doubled{one, one, two};
  const double a = nll_and_gradient(std::vector<LabeledExample>{one}, m).loss;
  CHECK(a >= 0.0);
  CHECK(nll_and_gradient(doubled, m).loss == doctest::Approx(nll_and_gradient(single, m).loss + a));
}

TEST_CASE("dropout behaviour") {
  const Corpus c = tiny_corpus(TaskKind::ProductExtraction, 5);
  const auto& b = c.train[0];
  const Model off = model_for(c, small_features(1, 0.0));
  CHECK(featurize(off, b, 0, 123) == featurize(off, b, 0));

  const Model on = model_for(c, small_features(1, 0.5));
  CHECK(featurize(on, b, 0, 9) == featurize(on, b, 0, 9));

  const auto same = mc_passes(off, b, 0, 4, 100);
  for (const auto& p : same) CHECK(p.probs == same[0].probs);

  SentenceBlock longer;
  for (int i = 0; i < 6; ++i) longer.tokens.push_back(c.train[1].tokens[0]);
  longer.label_columns.assign(1, std::vector<TagIndex>(6, 0));
  const auto passes = mc_passes(on, longer, 0, 10, 100);
  bool any_difference = false;
  for (const auto& p : passes) any_difference |= (p.probs - passes[0].probs).cwiseAbs().maxCoeff() > 0.0;
  CHECK(any_difference);
  CHECK(mc_passes(on, longer, 0, 10, 100)[3].probs == passes[3].probs);
  CHECK_THROWS_AS(mc_passes(on, longer, 0, 1, 100), Error);
}

TEST_CASE("identical windows give identical features") {
  const Model m = init_model(TaskKind::ProductExtraction, Vocabulary::from_tokens({"a", "b", "c"}), small_features(2, 0.0));
  SentenceBlock b;
  b.tokens = {"a", "b", "a", "b", "a", "c"};
  b.label_columns.assign(1, std::vector<TagIndex>(6, 0));
  const Matrix f = featurize(m, b, 0);
  // Positions 1 and 3 both see (a, b, a).
  CHECK(f.row(1) == f.row(3));
  CHECK(f.row(1) != f.row(5));
}

TEST_CASE("probabilities") {
  const Corpus c = tiny_corpus(TaskKind::ProductExtraction, 6);
  Model m = model_for(c, small_features(4, 0.0));
  const auto& b = c.train[2];
  const auto soft = predict_probs(m, b, 0, ProbMode::EmissionSoftmax);
  const auto crf = predict_probs(m, b, 0, ProbMode::CrfMarginal);
  CHECK((soft.probs - crf.probs).cwiseAbs().maxCoeff() < 1e-9);
  for (Eigen::Index t = 0; t < soft.length(); ++t) CHECK(std::abs(soft.probs.row(t).sum() - 1.0) < 1e-9);

  m.params.emission_weights.setZero();
  m.params.emission_bias.setZero();
  const auto uniform = predict_probs(m, b, 0);
  CHECK((uniform.probs.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
  CHECK(parse_prob_mode("crf_marginal") == ProbMode::CrfMarginal);
}

TEST_CASE("sentence embeddings") {
  FeatureConfig fc = small_features(3, 0.3);
  fc.window = 0;
  const Model m = init_model(TaskKind::ProductExtraction, Vocabulary::from_tokens({"a", "b", "c"}), fc);
  SentenceBlock one;
  one.tokens = {"b"};
  one.label_columns.assign(1, {0});
  CHECK((sentence_embedding(m, one) - featurize(m, one, 0).row(0).transpose()).norm() == 0.0);

  SentenceBlock x, y;
  x.tokens = {"a", "b", "c"};
  y.tokens = {"c", "a", "b"};
  x.label_columns.assign(1, {0, 0, 0});
  y.label_columns = x.label_columns;
  CHECK((sentence_embedding(m, x) - sentence_embedding(m, y)).norm() < 1e-15);
  CHECK(sentence_embedding(m, x) == sentence_embedding(m, x));
}

TEST_CASE("training") {
  const Corpus c = tiny_corpus(TaskKind::ProductExtraction, 12, 50);
  const Model m = model_for(c, small_features(5, 0.0));
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.epochs_per_round = 3;
  cfg.lr_crf = 0.0;
  cfg.lr_features = 0.0;
  CHECK(train(m, c.train, cfg) == m);

  cfg.lr_crf = 5e-3;
  cfg.lr_features = 1e-2;
  std::vector<double> losses;
  const Model a = train(m, c.train, cfg, &losses);
  CHECK(a == train(m, c.train, cfg));
  REQUIRE(losses.size() == 3);
  CHECK(losses[1] < losses[0]);
  CHECK(losses[2] < losses[1]);
  CHECK_FALSE(a == m);
  CHECK_THROWS_AS(train(m, std::span<const SentenceBlock>{}, cfg), Error);
}

TEST_CASE("viterbi path scores at least the gold path") {
  const Corpus c = tiny_corpus(TaskKind::RoleLabeling, 13);
  Model m = model_for(c, small_features(6, 0.0));
  perturb_crf(m, 8);
  for (const auto& b : c.train) {
    for (std::size_t col = 0; col < b.label_columns.size(); ++col) {
      const Matrix e = emission_scores(m, b, static_cast<int>(col));
      const auto best = decode(m, b, static_cast<int>(col));
      CHECK(path_score(e, m.params.crf, best) >= path_score(e, m.params.crf, b.label_columns[col]) - 1e-12);
    }
  }
}

TEST_CASE("role conditioning changes the features") {
  const Corpus c = tiny_corpus(TaskKind::RoleLabeling, 14);
  const Model m = model_for(c, small_features(7, 0.0));
  const auto& b = c.train[0];
  REQUIRE(!b.product_spans.empty());
  const auto span = b.product_spans[0];
  const Matrix conditioned = featurize(m, b, 0);
  const Matrix plain = featurize(m, b, -1);
  CHECK(conditioned.row(static_cast<Eigen::Index>(span.start)) != plain.row(static_cast<Eigen::Index>(span.start)));
  CHECK_THROWS_AS(featurize(m, b, 99), Error);
}

TEST_CASE("checkpoint round-trip") {
  const Corpus c = tiny_corpus(TaskKind::RoleLabeling, 15);
  Model m = model_for(c, small_features(8));
  TrainConfig cfg = TrainConfig::for_task(TaskKind::RoleLabeling);
  cfg.seed = 3;
  m = train(m, c.train, cfg);
  const auto text = serialize_model(m);
  const Model back = deserialize_model(text);
  CHECK(back == m);
  CHECK(serialize_model(back) == text);

  const auto path = std::filesystem::temp_directory_path() / "seqal_model_test.ckpt";
  save_model(m, path.string());
  CHECK(load_model(path.string()) == m);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model(path.string()), Error);
  CHECK_THROWS_AS(deserialize_model("seqal-checkpoint 1\ntask product\n"), Error);
}
