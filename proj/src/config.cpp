#include "seqal/config.hpp"

#include "seqal/error.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace seqal {

namespace fs = std::filesystem;

namespace {

void reject_unknown(const Json& json, const std::set<std::string>& known, ErrorKind kind,
                    const std::string& where) {
  if (!json.is_object()) throw Error(kind, where + " must be a JSON object");
  for (const auto& [key, value] : json.items()) {
    if (!known.count(key)) throw Error(kind, "unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read_field(const Json& json, const char* key, T& out, ErrorKind kind) {
  if (!json.contains(key)) return;
  try {
    out = json.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(kind, std::string("field '") + key + "': " + e.what());
  }
}

void read_range(const Json& json, const char* key, std::size_t& lo, std::size_t& hi, ErrorKind kind) {
  if (!json.contains(key)) return;
  const auto& v = json.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_unsigned() || !v[1].is_number_unsigned()) {
    throw Error(kind, std::string("field '") + key + "' must be [min, max] of non-negative integers");
  }
  lo = v[0].get<std::size_t>();
  hi = v[1].get<std::size_t>();
}

std::string read_string(const Json& json, const char* key, const std::string& fallback, ErrorKind kind) {
  std::string out = fallback;
  read_field(json, key, out, kind);
  return out;
}

}  // namespace

SynthSpec synth_spec_from_json(const Json& json) {
  constexpr auto kind = ErrorKind::InvalidSpec;
  reject_unknown(json,
                 {"task", "n_train", "n_val", "n_test", "vocab_size", "length_range", "entity_rate",
                  "roles_per_block_range", "products_per_block_range", "seed"},
                 kind, "synthetic spec");
  SynthSpec spec;
  try {
    spec.task = parse_task_kind(read_string(json, "task", "product", kind));
  } catch (const Error& e) {
    throw Error(kind, e.what());
  }
  read_field(json, "n_train", spec.n_train, kind);
  read_field(json, "n_val", spec.n_val, kind);
  read_field(json, "n_test", spec.n_test, kind);
  read_field(json, "vocab_size", spec.vocab_size, kind);
  read_range(json, "length_range", spec.min_length, spec.max_length, kind);
  read_field(json, "entity_rate", spec.entity_rate, kind);
  read_range(json, "roles_per_block_range", spec.min_roles, spec.max_roles, kind);
  read_range(json, "products_per_block_range", spec.min_products, spec.max_products, kind);
  read_field(json, "seed", spec.seed, kind);
  spec.validate();
  return spec;
}

Json to_json(const SynthSpec& spec) {
  return Json{
      {"task", std::string(to_string(spec.task))},
      {"n_train", spec.n_train},
      {"n_val", spec.n_val},
      {"n_test", spec.n_test},
      {"vocab_size", spec.vocab_size},
      {"length_range", {spec.min_length, spec.max_length}},
      {"entity_rate", spec.entity_rate},
      {"roles_per_block_range", {spec.min_roles, spec.max_roles}},
      {"products_per_block_range", {spec.min_products, spec.max_products}},
      {"seed", spec.seed},
  };
}

RunConfig run_config_from_json(const Json& json, const fs::path& base_dir) {
  constexpr auto kind = ErrorKind::ConfigInvalid;
  reject_unknown(json,
                 {"task", "strategy", "rounds", "budget_fraction", "master_seed", "prob_mode",
                  "emit_embeddings", "stratified", "mc_passes", "entropy_epsilon", "features", "train",
                  "corpus"},
                 kind, "experiment config");
  RunConfig rc;
  auto& c = rc.experiment;
  c = ExperimentConfig::for_task(parse_task_kind(read_string(json, "task", "product", kind)));
  c.strategy = parse_strategy(read_string(json, "strategy", "random", kind));
  c.prob_mode = parse_prob_mode(read_string(json, "prob_mode", "emission_softmax", kind));
  read_field(json, "rounds", c.rounds, kind);
  read_field(json, "budget_fraction", c.budget_fraction, kind);
  read_field(json, "master_seed", c.master_seed, kind);
  read_field(json, "emit_embeddings", c.emit_embeddings, kind);
  read_field(json, "stratified", c.stratified, kind);
  read_field(json, "mc_passes", c.strategy_params.mc_passes, kind);
  read_field(json, "entropy_epsilon", c.strategy_params.entropy_epsilon, kind);

  if (json.contains("features")) {
    const auto& f = json.at("features");
    reject_unknown(f, {"embed_dim", "hidden_dim", "dropout_rate", "window"}, kind, "features");
    read_field(f, "embed_dim", c.features.embed_dim, kind);
    read_field(f, "hidden_dim", c.features.hidden_dim, kind);
    read_field(f, "dropout_rate", c.features.dropout_rate, kind);
    read_field(f, "window", c.features.window, kind);
  }
  if (json.contains("train")) {
    const auto& t = json.at("train");
    reject_unknown(t, {"epochs_per_round", "batch_size", "lr_crf", "lr_features"}, kind, "train");
    read_field(t, "epochs_per_round", c.train.epochs_per_round, kind);
    read_field(t, "batch_size", c.train.batch_size, kind);
    read_field(t, "lr_crf", c.train.lr_crf, kind);
    read_field(t, "lr_features", c.train.lr_features, kind);
  }
  if (c.rounds < 1) throw Error(kind, "rounds must be >= 1");
  if (!(c.budget_fraction > 0.0 && c.budget_fraction <= 1.0)) {
    throw Error(kind, "budget_fraction must lie in (0, 1]");
  }
  c.features.validate();
  c.train.validate();
  if (c.strategy == StrategyKind::BaldBatch && c.strategy_params.mc_passes < 2) {
    throw Error(kind, "mc_passes must be >= 2 for bald");
  }

  if (!json.contains("corpus")) throw Error(kind, "missing 'corpus'");
  const auto& corpus = json.at("corpus");
  if (corpus.is_object() && corpus.contains("synthetic")) {
    reject_unknown(corpus, {"synthetic"}, kind, "corpus");
    try {
      rc.corpus.synthetic = synth_spec_from_json(corpus.at("synthetic"));
    } catch (const Error& e) {
      throw Error(kind, e.what());
    }
    if (rc.corpus.synthetic->task != c.task) throw Error(kind, "synthetic corpus task differs from config task");
  } else {
    reject_unknown(corpus, {"train", "val", "test"}, kind, "corpus");
    for (const char* split : {"train", "val", "test"}) {
      if (!corpus.contains(split) || !corpus.at(split).is_string()) {
        throw Error(kind, std::string("corpus.") + split + " must be a file path");
      }
    }
    auto resolve = [&](const char* split) {
      fs::path p = corpus.at(split).get<std::string>();
      return p.is_absolute() ? p : fs::absolute(base_dir / p).lexically_normal();
    };
    rc.corpus.train = resolve("train");
    rc.corpus.val = resolve("val");
    rc.corpus.test = resolve("test");
  }
  return rc;
}

Json to_json(const RunConfig& rc) {
  const auto& c = rc.experiment;
  Json corpus;
  if (rc.corpus.synthetic) {
    corpus = Json{{"synthetic", to_json(*rc.corpus.synthetic)}};
  } else {
    corpus = Json{{"train", rc.corpus.train.string()},
                  {"val", rc.corpus.val.string()},
                  {"test", rc.corpus.test.string()}};
  }
  return Json{
      {"task", std::string(to_string(c.task))},
      {"strategy", std::string(to_string(c.strategy))},
      {"rounds", c.rounds},
      {"budget_fraction", c.budget_fraction},
      {"master_seed", c.master_seed},
      {"prob_mode", std::string(to_string(c.prob_mode))},
      {"emit_embeddings", c.emit_embeddings},
      {"stratified", c.stratified},
      {"mc_passes", c.strategy_params.mc_passes},
      {"entropy_epsilon", c.strategy_params.entropy_epsilon},
      {"features",
       {{"embed_dim", c.features.embed_dim},
        {"hidden_dim", c.features.hidden_dim},
        {"dropout_rate", c.features.dropout_rate},
        {"window", c.features.window}}},
      {"train",
       {{"epochs_per_round", c.train.epochs_per_round},
        {"batch_size", c.train.batch_size},
        {"lr_crf", c.train.lr_crf},
        {"lr_features", c.train.lr_features}}},
      {"corpus", corpus},
  };
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

Json read_json_file(const fs::path& path, ErrorKind kind) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    throw Error(kind, e.what());
  }
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(kind, path.string() + ": " + e.what());
  }
}

Corpus load_corpus(const CorpusSource& source, TaskKind task, std::vector<std::string>* warnings) {
  if (source.synthetic) return generate_synthetic(*source.synthetic);
  Corpus corpus;
  corpus.scheme = LabelScheme::for_task(task);
  ParseOptions opts;
  opts.warnings = warnings;
  corpus.train = read_conll_file(source.train.string(), corpus.scheme, opts);
  opts.first_id = static_cast<SentenceId>(corpus.train.size());
  corpus.val = read_conll_file(source.val.string(), corpus.scheme, opts);
  opts.first_id += static_cast<SentenceId>(corpus.val.size());
  corpus.test = read_conll_file(source.test.string(), corpus.scheme, opts);
  return corpus;
}

}  // namespace seqal
