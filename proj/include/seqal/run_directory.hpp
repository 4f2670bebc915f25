#pragma once

// On-disk layout of one experiment run:
//
//   config.json                  echo of the run config
//   manifest.json                corpus fingerprint, version, timestamps, checkpoints
//   rounds.csv                   learning curve, rewritten after every round
//   selections/round_<r>.json    [{id, group, strategy_score?, cluster?}, ...]
//   selections/round_<r>_clusters.json   [[id, cluster], ...]  (cluster_plus)
//   checkpoints/round_<r>.ckpt   round 0 is the initial model
//   embeddings/round_<r>.csv     projection snapshot   (emit_embeddings)
//   scores/round_<r>.csv         id,score              (verbose, uncertainty)
//   run.lock                     held while a writer is active

#include "seqal/config.hpp"
#include "seqal/loop.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace seqal {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Exclusive lock file; throws Io if another writer holds it.
class RunLock {
 public:
  explicit RunLock(std::filesystem::path path);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

class RunDirectory : public RoundObserver {
 public:
  RunDirectory(std::filesystem::path root, RunConfig config, const Corpus& corpus, bool verbose);

  void on_start(const Model& initial) override;
  void on_round(const RoundState& state) override;
  // Stamps the end time into the manifest.
  void finish();

  static std::filesystem::path checkpoint_path(const std::filesystem::path& root, int round);
  static std::filesystem::path selection_path(const std::filesystem::path& root, int round);
  static std::filesystem::path clusters_path(const std::filesystem::path& root, int round);
  static std::filesystem::path snapshot_path(const std::filesystem::path& root, int round);

 private:
  void write_manifest(bool finished);

  std::filesystem::path root_;
  RunConfig config_;
  const Corpus& corpus_;
  bool verbose_;
  RunLock lock_;
  std::string started_at_;
  std::vector<RoundRecord> records_;
  std::vector<std::string> checkpoints_;
};

// Projection snapshot of the whole train split under `model`, the model
// that made the round's selection.
std::string selection_snapshot_csv(const Model& model, const Corpus& corpus, int round,
                                   const std::set<SentenceId>& labeled_before,
                                   const std::set<SentenceId>& selected,
                                   const std::map<SentenceId, int>& clusters);

// Rebuilds rounds.csv and the projection snapshots from checkpoints and
// selection logs, without training. Throws MissingArtifact.
void regenerate_report(const std::filesystem::path& root);

}  // namespace seqal
