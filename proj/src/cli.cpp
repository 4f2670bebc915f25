#include "seqal/cli.hpp"

#include "seqal/config.hpp"
#include "seqal/error.hpp"
#include "seqal/format.hpp"
#include "seqal/loop.hpp"
#include "seqal/report.hpp"
#include "seqal/run_directory.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>

namespace seqal {

namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec:
    case ErrorKind::ConfigInvalid:
    case ErrorKind::BudgetExceedsPool:
    case ErrorKind::InvalidT:
      return kExitConfig;
    case ErrorKind::MissingArtifact:
      return kExitMissing;
    default:
      return kExitRuntime;
  }
}

// Config plus corpus; anything wrong with either is a config error.
struct LoadedRun {
  RunConfig config;
  Corpus corpus;
};

LoadedRun load_run(const fs::path& config_path, std::ostream& err) {
  if (!fs::exists(config_path)) throw Error(ErrorKind::ConfigInvalid, "no such config file: " + config_path.string());
  const Json json = read_json_file(config_path, ErrorKind::ConfigInvalid);
  LoadedRun run{run_config_from_json(json, fs::absolute(config_path).parent_path()), {}};
  std::vector<std::string> warnings;
  try {
    run.corpus = load_corpus(run.config.corpus, run.config.experiment.task, &warnings);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigInvalid, std::string("corpus: ") + e.what());
  }
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  if (run.corpus.train.empty()) throw Error(ErrorKind::ConfigInvalid, "train split is empty");
  return run;
}

void cmd_generate(const fs::path& spec_path, const fs::path& out_dir, std::ostream& out) {
  const SynthSpec spec = synth_spec_from_json(read_json_file(spec_path, ErrorKind::InvalidSpec));
  const Corpus corpus = generate_synthetic(spec);
  fs::create_directories(out_dir);
  write_conll_file((out_dir / "train.conll").string(), corpus.train, corpus.scheme);
  write_conll_file((out_dir / "val.conll").string(), corpus.val, corpus.scheme);
  write_conll_file((out_dir / "test.conll").string(), corpus.test, corpus.scheme);
  write_text_file(out_dir / "spec.json", to_json(spec).dump(2) + "\n");
  out << "wrote " << corpus.train.size() << '/' << corpus.val.size() << '/' << corpus.test.size()
      << " sentences to " << out_dir.string() << '\n';
}

// Run directory that also reports progress.
class ConsoleRunDirectory : public RunDirectory {
 public:
  ConsoleRunDirectory(fs::path root, RunConfig config, const Corpus& corpus, bool verbose, std::ostream& out)
      : RunDirectory(std::move(root), std::move(config), corpus, verbose), out_(out) {}

  void on_round(const RoundState& state) override {
    RunDirectory::on_round(state);
    const auto& r = *state.record;
    out_ << "round " << r.round << ": labeled " << r.n_labeled << ", test f1 " << format_double(r.test.f1)
         << ", val f1 " << format_double(r.val_f1) << '\n';
  }

 private:
  std::ostream& out_;
};

void cmd_run(const fs::path& config_path, const fs::path& out_dir, bool verbose, std::ostream& out,
             std::ostream& err) {
  const LoadedRun run = load_run(config_path, err);
  run.config.experiment.validate(run.corpus.train.size());
  ConsoleRunDirectory dir(out_dir, run.config, run.corpus, verbose, out);
  run_experiment(run.corpus, run.config.experiment, &dir);
  dir.finish();
  out << "run written to " << out_dir.string() << '\n';
}

void cmd_baseline(const fs::path& config_path, const fs::path& out_dir, std::ostream& out,
                  std::ostream& err) {
  const LoadedRun run = load_run(config_path, err);
  run.config.experiment.validate(run.corpus.train.size());
  fs::create_directories(out_dir);
  RunLock lock(out_dir / "run.lock");
  write_text_file(out_dir / "config.json", to_json(run.config).dump(2) + "\n");

  const PassiveResult passive = run_passive(run.corpus, run.config.experiment);
  save_model(passive.model, (out_dir / "baseline.ckpt").string());
  const Json metrics{
      {"precision", passive.test.precision},
      {"recall", passive.test.recall},
      {"f1", passive.test.f1},
      {"token_accuracy", passive.test.token_accuracy},
      {"val_f1", passive.val_f1},
      {"n_labeled", run.corpus.train.size()},
  };
  write_text_file(out_dir / "baseline.json", metrics.dump(2) + "\n");
  write_text_file(out_dir / "baseline.csv",
                  emit_curves({}, "passive", run.corpus.train.size(), PassiveRow{passive.test, passive.val_f1}));
  out << "passive test f1 " << format_double(passive.test.f1) << ", val f1 " << format_double(passive.val_f1)
      << '\n';
}

void cmd_report(const fs::path& run_dir, std::ostream& out) {
  if (!fs::is_directory(run_dir)) throw Error(ErrorKind::MissingArtifact, "no run directory " + run_dir.string());
  RunLock lock(run_dir / "run.lock");
  regenerate_report(run_dir);
  out << "regenerated " << (run_dir / "rounds.csv").string() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active learning simulation for sequence labeling"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("--verbose", verbose, "Dump per-sentence acquisition scores");

  std::string spec_path, config_path, out_dir, run_dir;
  auto* generate = app.add_subcommand("generate", "Write a synthetic corpus");
  generate->add_option("--spec", spec_path, "Synthetic spec JSON")->required();
  generate->add_option("--out", out_dir, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Run an active learning experiment");
  run->add_option("--config", config_path, "Experiment config JSON")->required();
  run->add_option("--out", out_dir, "Run directory")->required();
  run->add_flag("--verbose", verbose, "Dump per-sentence acquisition scores");

  auto* baseline = app.add_subcommand("baseline", "Train on the full train split");
  baseline->add_option("--config", config_path, "Experiment config JSON")->required();
  baseline->add_option("--out", out_dir, "Output directory")->required();

  auto* report = app.add_subcommand("report", "Regenerate curves and snapshots of a run");
  report->add_option("--run", run_dir, "Run directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "ConfigInvalid: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*generate) {
      cmd_generate(spec_path, out_dir, out);
    } else if (*run) {
      cmd_run(config_path, out_dir, verbose, out, err);
    } else if (*baseline) {
      cmd_baseline(config_path, out_dir, out, err);
    } else if (*report) {
      cmd_report(run_dir, out);
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const Json::exception& e) {
    err << "ConfigInvalid: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "Io: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace seqal
