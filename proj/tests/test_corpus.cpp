#include "seqal/corpus.hpp"
#include "seqal/error.hpp"
#include "seqal/eval.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>

using namespace seqal;

namespace {

ErrorKind kind_of_parse(std::string_view text, const LabelScheme& scheme, std::size_t* line = nullptr) {
  try {
    parse_conll(text, scheme);
  } catch (const ParseError& e) {
    if (line) *line = e.line();
    return e.kind();
  }
  FAIL("expected a parse error");
  return ErrorKind::Io;
}

SynthSpec role_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.task = TaskKind::RoleLabeling;
  spec.n_train = 60;
  spec.n_val = 10;
  spec.n_test = 10;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("label schemes") {
  const auto p = LabelScheme::product();
  CHECK(p.labels() == std::vector<std::string>{"O", "B-Prod", "I-Prod"});
  CHECK(p.max_length() == 256);
  const auto r = LabelScheme::role();
  CHECK(r.size() == 17);
  CHECK(r.max_length() == 512);
  CHECK(r.index_of("B-Solvent").has_value());
  CHECK_FALSE(r.index_of("B-Prod").has_value());
  CHECK(LabelScheme::type_of(*r.index_of("I-Temp")) == LabelScheme::type_of(*r.index_of("B-Temp")));
  CHECK(parse_task_kind("role") == TaskKind::RoleLabeling);
  CHECK_THROWS_AS(parse_task_kind("chemistry"), Error);
}

TEST_CASE("minimal product document") {
  const auto blocks = parse_conll("The\tO\nester\tB-Prod\n\n", LabelScheme::product());
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].tokens == std::vector<std::string>{"The", "ester"});
  CHECK(blocks[0].label_columns[0] == std::vector<TagIndex>{0, 1});
  CHECK(blocks[0].product_spans.empty());
}

TEST_CASE("parse errors carry kind and line") {
  std::size_t line = 0;
  CHECK(kind_of_parse("x\tI-Prod\n\n", LabelScheme::product(), &line) == ErrorKind::BioViolation);
  CHECK(line == 1);
  CHECK(kind_of_parse("a\tO\nb\tB-Foo\n", LabelScheme::product(), &line) == ErrorKind::InvalidTag);
  CHECK(line == 2);
  CHECK(kind_of_parse("a\tO\textra\n", LabelScheme::product(), &line) == ErrorKind::MalformedLine);
  // Role file: two product runs but only one role column.
  CHECK(kind_of_parse("a\tB-Prod\tO\nb\tO\tO\nc\tB-Prod\tO\n", LabelScheme::role()) == ErrorKind::MalformedLine);
}

TEST_CASE("role columns pair with product runs in order") {
  const std::string doc =
      "ester\tB-Prod\tO\tB-Reactants\n"
      "in\tO\tO\tO\n"
      "THF\tO\tB-Solvent\tB-Solvent\n"
      "acid\tB-Prod\tB-Reactants\tO\n"
      "\n";
  const auto blocks = parse_conll(doc, LabelScheme::role());
  REQUIRE(blocks.size() == 1);
  const auto& b = blocks[0];
  REQUIRE(b.product_spans.size() == 2);
  CHECK(b.product_spans[0] == TokenSpan{0, 0});
  CHECK(b.product_spans[1] == TokenSpan{3, 3});
  CHECK(b.label_columns.size() == 2);
  CHECK(distinct_role_count(b) == 2);
  CHECK(parse_conll(serialize_conll(blocks, LabelScheme::role()), LabelScheme::role()) == blocks);
}

TEST_CASE("group keys") {
  const auto scheme = LabelScheme::role();
  SentenceBlock b;
  b.tokens = {"a", "b", "c", "d"};
  b.product_spans = {{3, 3}};
  b.label_columns = {{*scheme.index_of("B-Solvent"), *scheme.index_of("I-Solvent"), *scheme.index_of("B-Temp"), 0}};
  CHECK(distinct_role_count(b) == 2);
  CHECK(entity_presence(b));
  b.label_columns = {{0, 0, 0, 0}};
  CHECK(distinct_role_count(b) == 0);

  SentenceBlock p;
  p.tokens = {"x", "y"};
  p.label_columns = {{0, 0}};
  CHECK_FALSE(entity_presence(p));
}

TEST_CASE("long sentences are truncated with a warning") {
  std::string doc;
  for (int i = 0; i < 300; ++i) doc += "w\tO\n";
  std::vector<std::string> warnings;
  ParseOptions opts;
  opts.warnings = &warnings;
  const auto blocks = parse_conll(doc, LabelScheme::product(), opts);
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].length() == 256);
  CHECK(warnings.size() == 1);
}

TEST_CASE("parse and serialize round-trip generated blocks") {
  for (auto task : {TaskKind::ProductExtraction, TaskKind::RoleLabeling}) {
    SynthSpec spec = role_spec(3);
    spec.task = task;
    spec.n_train = 100;
    const Corpus c = generate_synthetic(spec);
    const auto text = serialize_conll(c.train, c.scheme);
    const auto back = parse_conll(text, c.scheme);
    CHECK(back == c.train);
    CHECK(serialize_conll(back, c.scheme) == text);
  }
}

TEST_CASE("file round-trip and ids") {
  const Corpus c = generate_synthetic(role_spec(9));
  const auto path = std::filesystem::temp_directory_path() / "seqal_corpus_roundtrip.conll";
  write_conll_file(path.string(), c.val, c.scheme);
  ParseOptions opts;
  opts.first_id = c.val.front().id;
  CHECK(read_conll_file(path.string(), c.scheme, opts) == c.val);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_conll_file("/nonexistent/file.conll", c.scheme), Error);
}

TEST_CASE("synthetic corpora") {
  SynthSpec spec;
  spec.entity_rate = 0.0;
  for (const auto& b : generate_synthetic(spec).train) CHECK_FALSE(entity_presence(b));

  spec.entity_rate = 1.0;
  spec.n_train = 50;
  const Corpus all = generate_synthetic(spec);
  for (const auto& b : all.train) CHECK(entity_presence(b));

  spec.entity_rate = 0.3;
  spec.seed = 5;
  const Corpus a = generate_synthetic(spec);
  const Corpus b = generate_synthetic(spec);
  CHECK(serialize_conll(a.train, a.scheme) == serialize_conll(b.train, b.scheme));
  CHECK(corpus_fingerprint(a) == corpus_fingerprint(b));
  spec.seed = 6;
  CHECK(corpus_fingerprint(generate_synthetic(spec)) != corpus_fingerprint(a));

  std::size_t with_entity = 0;
  for (const auto& blk : a.train) with_entity += entity_presence(blk) ? 1 : 0;
  CHECK(with_entity == planted_entity_count(a.train.size(), 0.3));

  // Ids are sequential across splits.
  SentenceId expect = 0;
  for (const auto* split : {&a.train, &a.val, &a.test}) {
    for (const auto& blk : *split) CHECK(blk.id == expect++);
  }
}

TEST_CASE("every generated block is BIO valid") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (auto task : {TaskKind::ProductExtraction, TaskKind::RoleLabeling}) {
      SynthSpec spec = role_spec(seed);
      spec.task = task;
      const Corpus c = generate_synthetic(spec);
      for (const auto* split : {&c.train, &c.val, &c.test}) {
        for (const auto& b : *split) {
          CHECK_NOTHROW(validate_block(b, c.scheme));
          for (const auto& col : b.label_columns) CHECK(is_bio_valid(col));
          if (task == TaskKind::RoleLabeling) CHECK(b.product_spans.size() == b.label_columns.size());
        }
      }
    }
  }
}

TEST_CASE("gold spans reproduce the planted product mentions") {
  // Each product mention is planted right after a cue word, and cue words
  // occur nowhere else; so the span ledger is recoverable from the tokens.
  SynthSpec spec;
  spec.seed = 21;
  const Corpus c = generate_synthetic(spec);
  for (const auto& b : c.train) {
    std::set<std::size_t> starts;
    for (std::size_t i = 0; i + 1 < b.length(); ++i) {
      if (b.tokens[i].rfind("cue", 0) == 0) starts.insert(i + 1);
    }
    const auto spans = extract_entities(b.label_columns[0], b.id, 0);
    std::set<std::size_t> span_starts;
    for (const auto& s : spans) {
      span_starts.insert(s.start);
      for (std::size_t t = s.start; t <= s.end; ++t) CHECK(b.tokens[t].rfind("chem", 0) == 0);
    }
    CHECK(span_starts == starts);
  }
}

TEST_CASE("spec validation") {
  SynthSpec spec;
  spec.entity_rate = 2.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = SynthSpec{};
  spec.vocab_size = 5;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = SynthSpec{};
  spec.min_length = 10;
  spec.max_length = 5;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = SynthSpec{};
  spec.max_length = 300;
  CHECK_THROWS_AS(spec.validate(), Error);
}
