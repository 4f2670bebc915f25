#pragma once

#include "seqal/crf.hpp"
#include "seqal/eval.hpp"
#include "seqal/strategies.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace seqal {

struct RoundRecord;

struct Projection {
  Matrix coords;  // rows x 2
  Matrix axes;    // 2 x dim, unit principal axes
  bool degenerate = false;
};

// Top-2 principal-component coordinates of mean-centered rows. Axes come
// from power iteration with deflation on the covariance (cap 1000 steps,
// tolerance 1e-10); each axis is signed so its largest-magnitude loading is
// positive. All-identical rows give zeros and degenerate = true.
Projection project_2d(const Matrix& rows);

struct CurveRow {
  std::string strategy;
  std::string round;  // round number, or "passive"
  std::size_t n_labeled = 0;
  double fraction_labeled = 0.0;
  Metrics test;
  double val_f1 = 0.0;
};

inline constexpr std::string_view kCurvesHeader =
    "strategy,round,n_labeled,fraction_labeled,precision,recall,f1,token_accuracy,val_f1";

struct PassiveRow {
  Metrics test;
  double val_f1 = 0.0;
};

// One row per record, plus a trailing passive row when given.
std::string emit_curves(const std::vector<RoundRecord>& records, std::string_view strategy,
                        std::size_t pool_size, const std::optional<PassiveRow>& passive = std::nullopt);

std::vector<CurveRow> parse_curves(std::string_view csv);

enum class PointStatus { Labeled, Selected, Pool };
std::string_view to_string(PointStatus status) noexcept;

struct SnapshotRow {
  SentenceId id = 0;
  double x = 0.0;
  double y = 0.0;
  PointStatus status = PointStatus::Pool;
  std::optional<int> cluster;
};

struct ProjectionSnapshot {
  int round = 0;
  std::vector<SnapshotRow> rows;
};

// Statuses: `labeled` = labeled before this round, `selected` = picked this
// round, everything else is pool. Rows follow embeddings.ids.
ProjectionSnapshot build_selection_snapshot(int round, const EmbeddingMatrix& embeddings,
                                            const std::set<SentenceId>& labeled_before,
                                            const std::set<SentenceId>& selected,
                                            const std::map<SentenceId, int>& clusters);

// CSV with header id,x,y,status,cluster. Throws MissingEmbeddings when empty.
std::string emit_selection_snapshot(const ProjectionSnapshot& snapshot);

}  // namespace seqal
