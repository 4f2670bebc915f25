#include "seqal/run_directory.hpp"

#include "seqal/error.hpp"
#include "seqal/format.hpp"
#include "seqal/report.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <ctime>
#include <iomanip>
#include <sstream>

namespace seqal {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

std::string round_file(const char* stem, int round, const char* ext) {
  return std::string(stem) + std::to_string(round) + ext;
}

}  // namespace

RunLock::RunLock(fs::path path) : path_(std::move(path)) {
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) {
    throw Error(ErrorKind::Io, "cannot acquire " + path_.string() + ": " +
                                   (errno == EEXIST ? "another writer holds the run directory"
                                                    : std::strerror(errno)));
  }
  std::fclose(f);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

fs::path RunDirectory::checkpoint_path(const fs::path& root, int round) {
  return root / "checkpoints" / round_file("round_", round, ".ckpt");
}

fs::path RunDirectory::selection_path(const fs::path& root, int round) {
  return root / "selections" / round_file("round_", round, ".json");
}

fs::path RunDirectory::clusters_path(const fs::path& root, int round) {
  return root / "selections" / round_file("round_", round, "_clusters.json");
}

fs::path RunDirectory::snapshot_path(const fs::path& root, int round) {
  return root / "embeddings" / round_file("round_", round, ".csv");
}

namespace {

fs::path prepare_root(const fs::path& root) {
  fs::create_directories(root);
  return root / "run.lock";
}

}  // namespace

RunDirectory::RunDirectory(fs::path root, RunConfig config, const Corpus& corpus, bool verbose)
    : root_(std::move(root)),
      config_(std::move(config)),
      corpus_(corpus),
      verbose_(verbose),
      lock_(prepare_root(root_)),
      started_at_(utc_now()) {
  for (const char* sub : {"selections", "checkpoints"}) fs::create_directories(root_ / sub);
  if (config_.experiment.emit_embeddings) fs::create_directories(root_ / "embeddings");
  if (verbose_) fs::create_directories(root_ / "scores");
  write_text_file(root_ / "config.json", to_json(config_).dump(2) + "\n");
  write_manifest(false);
}

void RunDirectory::write_manifest(bool finished) {
  Json wall = Json::array();
  for (const auto& r : records_) wall.push_back(r.wall_seconds);
  Json manifest{
      {"artifact_version", kArtifactVersion},
      {"corpus_fingerprint", hex64(corpus_fingerprint(corpus_))},
      {"config", to_json(config_)},
      {"started_at", started_at_},
      {"finished_at", finished ? Json(utc_now()) : Json(nullptr)},
      {"rounds_completed", records_.size()},
      {"checkpoints", checkpoints_},
      {"round_wall_seconds", wall},
  };
  write_text_file(root_ / "manifest.json", manifest.dump(2) + "\n");
}

void RunDirectory::on_start(const Model& initial) {
  const auto path = checkpoint_path(root_, 0);
  save_model(initial, path.string());
  checkpoints_.push_back(fs::relative(path, root_).string());
  write_manifest(false);
}

std::string selection_snapshot_csv(const Model& model, const Corpus& corpus, int round,
                                   const std::set<SentenceId>& labeled_before,
                                   const std::set<SentenceId>& selected,
                                   const std::map<SentenceId, int>& clusters) {
  std::vector<const SentenceBlock*> blocks;
  for (const auto& b : corpus.train) blocks.push_back(&b);
  std::sort(blocks.begin(), blocks.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  const EmbeddingMatrix emb = embed_blocks(model, blocks);
  return emit_selection_snapshot(build_selection_snapshot(round, emb, labeled_before, selected, clusters));
}

void RunDirectory::on_round(const RoundState& state) {
  const int r = state.round;
  const auto& sel = *state.selection;

  Json entries = Json::array();
  for (const auto& e : sel.entries) {
    Json j{{"id", e.id}, {"group", e.group}};
    if (e.score) j["strategy_score"] = *e.score;
    if (e.cluster) j["cluster"] = *e.cluster;
    entries.push_back(std::move(j));
  }
  write_text_file(selection_path(root_, r), entries.dump(2) + "\n");
  if (!sel.clusters.empty()) {
    Json pairs = Json::array();
    for (const auto& [id, c] : sel.clusters) pairs.push_back({id, c});
    write_text_file(clusters_path(root_, r), pairs.dump() + "\n");
  }
  if (verbose_ && !sel.scores.empty()) {
    std::ostringstream csv;
    csv << "id,score\n";
    for (const auto& [id, s] : sel.scores) csv << id << ',' << format_double(s) << '\n';
    write_text_file(root_ / "scores" / round_file("round_", r, ".csv"), csv.str());
  }
  if (config_.experiment.emit_embeddings) {
    const auto ids = sel.ids();
    write_text_file(snapshot_path(root_, r),
                    selection_snapshot_csv(*state.selection_model, corpus_, r, *state.labeled_before,
                                           std::set<SentenceId>(ids.begin(), ids.end()), sel.clusters));
  }

  // Checkpoint last: it marks the round complete for report regeneration.
  const auto ckpt = checkpoint_path(root_, r);
  save_model(*state.trained_model, ckpt.string());
  state.record->checkpoint = fs::relative(ckpt, root_).string();
  checkpoints_.push_back(state.record->checkpoint);
  records_.push_back(*state.record);

  write_text_file(root_ / "rounds.csv",
                  emit_curves(records_, to_string(config_.experiment.strategy), corpus_.train.size()));
  write_manifest(false);
}

void RunDirectory::finish() { write_manifest(true); }

void regenerate_report(const fs::path& root) {
  const auto config_file = root / "config.json";
  if (!fs::exists(config_file)) {
    throw Error(ErrorKind::MissingArtifact, "no config.json in " + root.string());
  }
  const RunConfig rc = run_config_from_json(read_json_file(config_file, ErrorKind::MissingArtifact), root);
  Corpus corpus;
  try {
    corpus = load_corpus(rc.corpus, rc.experiment.task);
  } catch (const Error& e) {
    throw Error(ErrorKind::MissingArtifact, std::string("cannot reload corpus: ") + e.what());
  }

  std::vector<RoundRecord> records;
  std::set<SentenceId> labeled;
  for (int r = 1;; ++r) {
    const auto sel_file = RunDirectory::selection_path(root, r);
    const auto ckpt_file = RunDirectory::checkpoint_path(root, r);
    if (!fs::exists(sel_file) || !fs::exists(ckpt_file)) break;

    const Json entries = read_json_file(sel_file, ErrorKind::MissingArtifact);
    std::set<SentenceId> selected;
    RoundRecord record;
    record.round = r;
    for (const auto& e : entries) {
      const auto id = e.at("id").get<SentenceId>();
      selected.insert(id);
      record.selected.push_back(id);
    }

    if (rc.experiment.emit_embeddings) {
      std::map<SentenceId, int> clusters;
      const auto cl_file = RunDirectory::clusters_path(root, r);
      if (fs::exists(cl_file)) {
        for (const auto& pair : read_json_file(cl_file, ErrorKind::MissingArtifact)) {
          clusters[pair.at(0).get<SentenceId>()] = pair.at(1).get<int>();
        }
      }
      const Model selector = load_model(RunDirectory::checkpoint_path(root, r - 1).string());
      fs::create_directories(root / "embeddings");
      write_text_file(RunDirectory::snapshot_path(root, r),
                      selection_snapshot_csv(selector, corpus, r, labeled, selected, clusters));
    }

    labeled.insert(selected.begin(), selected.end());
    const Model model = load_model(ckpt_file.string());
    record.n_labeled = labeled.size();
    record.test = evaluate(model, corpus.test);
    record.val_f1 = corpus.val.empty() ? 0.0 : evaluate(model, corpus.val).f1;
    records.push_back(std::move(record));
  }
  if (records.empty()) {
    throw Error(ErrorKind::MissingArtifact, "no completed rounds found in " + root.string());
  }
  write_text_file(root / "rounds.csv",
                  emit_curves(records, to_string(rc.experiment.strategy), corpus.train.size()));
}

}  // namespace seqal
