#pragma once

// JSON bindings for synthetic corpus specs and experiment configs.

#include "seqal/corpus.hpp"
#include "seqal/error.hpp"
#include "seqal/loop.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace seqal {

using Json = nlohmann::json;

// Either a synthetic spec or three CoNLL files.
struct CorpusSource {
  std::optional<SynthSpec> synthetic;
  std::filesystem::path train;
  std::filesystem::path val;
  std::filesystem::path test;
};

struct RunConfig {
  ExperimentConfig experiment;
  CorpusSource corpus;
};

// Throws InvalidSpec on unknown keys, bad types or out-of-range values.
SynthSpec synth_spec_from_json(const Json& json);
Json to_json(const SynthSpec& spec);

// Throws ConfigInvalid. Relative corpus paths resolve against base_dir.
RunConfig run_config_from_json(const Json& json, const std::filesystem::path& base_dir);
Json to_json(const RunConfig& config);

// Reads a JSON file; parse failures are reported with `kind`.
Json read_json_file(const std::filesystem::path& path, ErrorKind kind);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

Corpus load_corpus(const CorpusSource& source, TaskKind task,
                   std::vector<std::string>* warnings = nullptr);

}  // namespace seqal
