#include "seqal/report.hpp"

#include "seqal/error.hpp"
#include "seqal/format.hpp"
#include "seqal/loop.hpp"
#include "seqal/rng.hpp"

#include <cmath>
#include <sstream>

namespace seqal {

namespace {

constexpr int kMaxIterations = 1000;
constexpr double kTolerance = 1e-10;

Vector start_vector(Eigen::Index dim, std::uint64_t salt) {
  Rng rng(0x5eed'0000 + salt);
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = rng.normal();
  return v.normalized();
}

// Removes the component along `basis` (unit or empty).
void orthogonalize(Vector& v, const Vector* basis) {
  if (basis) v -= v.dot(*basis) * *basis;
}

Vector power_iteration(const Matrix& cov, const Vector* orthogonal_to, std::uint64_t salt) {
  Vector v = start_vector(cov.rows(), salt);
  orthogonalize(v, orthogonal_to);
  if (v.norm() == 0.0) v = Vector::Unit(cov.rows(), 0);
  v.normalize();
  const Vector fallback = v;

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    Vector w = cov * v;
    orthogonalize(w, orthogonal_to);
    const double norm = w.norm();
    // Null space reached (rank-deficient data): any orthogonal unit vector
    // is an eigenvector.
    if (norm <= 1e-300) return fallback;
    w /= norm;
    const double change = (w - v).norm();
    v = std::move(w);
    if (change < kTolerance) break;
  }
  return v;
}

void fix_sign(Vector& axis) {
  Eigen::Index arg = 0;
  for (Eigen::Index i = 1; i < axis.size(); ++i) {
    if (std::abs(axis(i)) > std::abs(axis(arg))) arg = i;
  }
  if (axis(arg) < 0.0) axis = -axis;
}

}  // namespace

Projection project_2d(const Matrix& rows) {
  if (rows.rows() < 2) throw Error(ErrorKind::DegenerateInput, "projection needs at least 2 rows");
  Projection out;
  const Eigen::Index n = rows.rows();
  const Eigen::Index dim = rows.cols();
  out.coords = Matrix::Zero(n, 2);
  out.axes = Matrix::Zero(2, dim);

  bool identical = true;
  for (Eigen::Index i = 1; i < n && identical; ++i) identical = rows.row(i) == rows.row(0);
  if (identical || dim == 0) {
    out.degenerate = true;
    return out;
  }

  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Matrix centered = rows.rowwise() - mean;
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(n);

  Vector first = power_iteration(cov, nullptr, 1);
  const double lambda = first.dot(cov * first);
  Matrix deflated = cov - lambda * first * first.transpose();
  Vector second = dim > 1 ? power_iteration(deflated, &first, 2) : Vector::Zero(dim);
  fix_sign(first);
  if (dim > 1) fix_sign(second);

  out.axes.row(0) = first.transpose();
  out.axes.row(1) = second.transpose();
  out.coords.col(0) = centered * first;
  out.coords.col(1) = centered * second;
  return out;
}

// ---------------------------------------------------------------------------
// Curves

std::string emit_curves(const std::vector<RoundRecord>& records, std::string_view strategy,
                        std::size_t pool_size, const std::optional<PassiveRow>& passive) {
  std::ostringstream out;
  out << kCurvesHeader << '\n';
  auto row = [&](std::string_view round, std::size_t n_labeled, const Metrics& m, double val_f1) {
    const double fraction =
        pool_size == 0 ? 0.0 : static_cast<double>(n_labeled) / static_cast<double>(pool_size);
    out << strategy << ',' << round << ',' << n_labeled << ',' << format_double(fraction) << ','
        << format_double(m.precision) << ',' << format_double(m.recall) << ','
        << format_double(m.f1) << ',' << format_double(m.token_accuracy) << ','
        << format_double(val_f1) << '\n';
  };
  for (const auto& r : records) row(std::to_string(r.round), r.n_labeled, r.test, r.val_f1);
  if (passive) row("passive", pool_size, passive->test, passive->val_f1);
  return out.str();
}

std::vector<CurveRow> parse_curves(std::string_view csv) {
  std::vector<CurveRow> rows;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != kCurvesHeader) throw ParseError(ErrorKind::MalformedLine, 1, "unexpected curves header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw ParseError(ErrorKind::MalformedLine, line_no, "expected 9 fields");
    CurveRow r;
    r.strategy = f[0];
    r.round = f[1];
    r.n_labeled = static_cast<std::size_t>(parse_double(f[2]));
    r.fraction_labeled = parse_double(f[3]);
    r.test.precision = parse_double(f[4]);
    r.test.recall = parse_double(f[5]);
    r.test.f1 = parse_double(f[6]);
    r.test.token_accuracy = parse_double(f[7]);
    r.val_f1 = parse_double(f[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Selection snapshots

std::string_view to_string(PointStatus status) noexcept {
  switch (status) {
    case PointStatus::Labeled: return "labeled";
    case PointStatus::Selected: return "selected";
    case PointStatus::Pool: return "pool";
  }
  return "pool";
}

ProjectionSnapshot build_selection_snapshot(int round, const EmbeddingMatrix& embeddings,
                                            const std::set<SentenceId>& labeled_before,
                                            const std::set<SentenceId>& selected,
                                            const std::map<SentenceId, int>& clusters) {
  if (embeddings.size() == 0) throw Error(ErrorKind::MissingEmbeddings, "no embeddings for snapshot");
  const Projection proj = project_2d(embeddings.rows);
  ProjectionSnapshot snap;
  snap.round = round;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    SnapshotRow row;
    row.id = embeddings.ids[i];
    row.x = proj.coords(static_cast<Eigen::Index>(i), 0);
    row.y = proj.coords(static_cast<Eigen::Index>(i), 1);
    if (labeled_before.count(row.id)) {
      row.status = PointStatus::Labeled;
    } else if (selected.count(row.id)) {
      row.status = PointStatus::Selected;
    }
    if (auto it = clusters.find(row.id); it != clusters.end()) row.cluster = it->second;
    snap.rows.push_back(row);
  }
  return snap;
}

std::string emit_selection_snapshot(const ProjectionSnapshot& snapshot) {
  if (snapshot.rows.empty()) throw Error(ErrorKind::MissingEmbeddings, "empty snapshot");
  std::ostringstream out;
  out << "id,x,y,status,cluster\n";
  for (const auto& r : snapshot.rows) {
    out << r.id << ',' << format_double(r.x) << ',' << format_double(r.y) << ',' << to_string(r.status)
        << ',';
    if (r.cluster) out << *r.cluster;
    out << '\n';
  }
  return out.str();
}

}  // namespace seqal
