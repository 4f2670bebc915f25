#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of these call into the code they check.

#include "seqal/corpus.hpp"
#include "seqal/crf.hpp"
#include "seqal/model.hpp"
#include "seqal/rng.hpp"
#include "seqal/strategies.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

using seqal::Matrix;
using seqal::Vector;

// ---------------------------------------------------------------------------
// CRF by path enumeration

inline double score_of(const Matrix& e, const seqal::Transitions& tr, const std::vector<int>& path) {
  double s = tr.start(path[0]) + tr.end(path.back());
  for (std::size_t t = 0; t < path.size(); ++t) s += e(static_cast<Eigen::Index>(t), path[t]);
  for (std::size_t t = 1; t < path.size(); ++t) s += tr.pair(path[t - 1], path[t]);
  return s;
}

// Calls f(path) for every one of K^L label paths, in lexicographic order.
template <class F>
void for_each_path(Eigen::Index len, Eigen::Index k, F&& f) {
  std::vector<int> path(static_cast<std::size_t>(len), 0);
  while (true) {
    f(path);
    Eigen::Index pos = len - 1;
    while (pos >= 0 && path[static_cast<std::size_t>(pos)] == k - 1) {
      path[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) return;
    ++path[static_cast<std::size_t>(pos)];
  }
}

struct Enumerated {
  double log_partition = 0.0;
  Matrix marginals;
  Matrix pair_marginals;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<int> best_path;  // lexicographically first maximizer
};

inline Enumerated enumerate(const Matrix& e, const seqal::Transitions& tr) {
  const Eigen::Index len = e.rows();
  const Eigen::Index k = e.cols();
  std::vector<double> scores;
  for_each_path(len, k, [&](const std::vector<int>& p) { scores.push_back(score_of(e, tr, p)); });
  const double top = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - top);
  Enumerated out;
  out.log_partition = top + std::log(z);
  out.marginals = Matrix::Zero(len, k);
  out.pair_marginals = Matrix::Zero(k, k);
  std::size_t i = 0;
  for_each_path(len, k, [&](const std::vector<int>& p) {
    const double s = scores[i++];
    const double w = std::exp(s - out.log_partition);
    for (Eigen::Index t = 0; t < len; ++t) out.marginals(t, p[static_cast<std::size_t>(t)]) += w;
    for (Eigen::Index t = 1; t < len; ++t) out.pair_marginals(p[static_cast<std::size_t>(t - 1)], p[static_cast<std::size_t>(t)]) += w;
    if (s > out.best_score) {
      out.best_score = s;
      out.best_path = p;
    }
  });
  return out;
}

inline Matrix random_matrix(seqal::Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

inline seqal::Transitions random_transitions(seqal::Rng& rng, Eigen::Index k, double scale) {
  seqal::Transitions tr;
  tr.pair = random_matrix(rng, k, k, scale);
  tr.start = random_matrix(rng, k, 1, scale).col(0);
  tr.end = random_matrix(rng, k, 1, scale).col(0);
  return tr;
}

// ---------------------------------------------------------------------------
// Central finite differences of the summed batch NLL, one block at a time.
// The partition comes from forward_backward (checked against enumeration
// separately) so that 17-label role instances stay cheap.

inline double batch_loss(const seqal::Model& m, std::span<const seqal::LabeledExample> batch) {
  double loss = 0.0;
  for (const auto& ex : batch) {
    const Matrix e = seqal::emission_scores(m, *ex.block, ex.column, ex.mask_seed);
    const auto& gold = ex.block->label_columns.at(static_cast<std::size_t>(ex.column));
    loss += seqal::forward_backward(e, m.params.crf).log_partition -
            score_of(e, m.params.crf, std::vector<int>(gold.begin(), gold.end()));
  }
  return loss;
}

struct BlockCheck {
  std::string name;
  double relative_error = 0.0;
};

// Relative error ||fd - g|| / max(||fd|| + ||g||, 1e-12) per parameter block.
inline std::vector<BlockCheck> gradient_check(const seqal::Model& model,
                                              std::span<const seqal::LabeledExample> batch,
                                              const seqal::ModelParams& analytic, double step = 1e-4) {
  seqal::Model probe = model;
  auto params = probe.params.blocks();
  auto grads = const_cast<seqal::ModelParams&>(analytic).blocks();
  std::vector<BlockCheck> out;
  for (std::size_t b = 0; b < params.size(); ++b) {
    double diff2 = 0.0, fd2 = 0.0, an2 = 0.0;
    for (std::size_t i = 0; i < params[b].values.size(); ++i) {
      const double saved = params[b].values[i];
      params[b].values[i] = saved + step;
      const double up = batch_loss(probe, batch);
      params[b].values[i] = saved - step;
      const double down = batch_loss(probe, batch);
      params[b].values[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      const double an = grads[b].values[i];
      diff2 += (fd - an) * (fd - an);
      fd2 += fd * fd;
      an2 += an * an;
    }
    const double denom = std::max(std::sqrt(fd2) + std::sqrt(an2), 1e-12);
    out.push_back({std::string(params[b].name), std::sqrt(diff2) / denom});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Greedy k-center, recomputing every distance from scratch at every step.

inline double cosine(const Vector& a, const Vector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    dot += a(i) * b(i);
    na += a(i) * a(i);
    nb += b(i) * b(i);
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

// first_pick is the seeded initial choice when the labeled set is empty.
inline std::vector<seqal::SentenceId> greedy_coreset(const std::vector<Vector>& labeled,
                                                     const std::vector<std::pair<seqal::SentenceId, Vector>>& pool,
                                                     std::size_t n, std::uint64_t seed) {
  auto sorted = pool;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Vector> centers = labeled;
  std::vector<bool> used(sorted.size(), false);
  std::vector<seqal::SentenceId> out;
  if (centers.empty() && n > 0) {
    seqal::Rng rng(seed);
    const auto first = static_cast<std::size_t>(rng.below(sorted.size()));
    used[first] = true;
    out.push_back(sorted[first].first);
    centers.push_back(sorted[first].second);
  }
  while (out.size() < n) {
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (used[i]) continue;
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) nearest = std::min(nearest, cosine(sorted[i].second, c));
      if (nearest > best) {
        best = nearest;
        arg = i;
      }
    }
    used[arg] = true;
    out.push_back(sorted[arg].first);
    centers.push_back(sorted[arg].second);
  }
  return out;
}

inline std::size_t k_rule(std::size_t u, std::size_t n) {
  return std::min({std::max<std::size_t>(static_cast<std::size_t>(std::llround(std::sqrt(u / 2.0))), 5), n, u});
}

// ---------------------------------------------------------------------------
// PCA coordinates by classical scaling of the squared distance matrix. The
// top-2 eigenpairs of -1/2 J D J give the principal coordinates, up to sign.

inline Matrix mds_coordinates(const Matrix& rows) {
  const Eigen::Index n = rows.rows();
  Matrix d2(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) d2(i, j) = (rows.row(i) - rows.row(j)).squaredNorm();
  }
  const Matrix j = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  const Matrix b = -0.5 * j * d2 * j;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  Matrix out(n, 2);
  for (int c = 0; c < 2; ++c) {
    const Eigen::Index idx = n - 1 - c;
    const double lambda = std::max(0.0, eig.eigenvalues()(idx));
    out.col(c) = eig.eigenvectors().col(idx) * std::sqrt(lambda);
  }
  return out;
}

// Largest |a_i - s * b_i| over both columns, with the best sign per column.
inline double max_coord_gap_up_to_sign(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double plus = (a.col(c) - b.col(c)).cwiseAbs().maxCoeff();
    const double minus = (a.col(c) + b.col(c)).cwiseAbs().maxCoeff();
    worst = std::max(worst, std::min(plus, minus));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Small hand-made inputs

inline seqal::ProbTensor probs_of(std::vector<std::vector<double>> rows) {
  seqal::ProbTensor p;
  p.probs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t k = 0; k < rows[t].size(); ++k) p.probs(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = rows[t][k];
  }
  p.valid_mask.assign(rows.size(), true);
  return p;
}

// A row with the given max probability spread evenly over the rest.
inline std::vector<double> row_with_max(double top, std::size_t k) {
  std::vector<double> r(k, (1.0 - top) / static_cast<double>(k - 1));
  r[0] = top;
  return r;
}

}  // namespace oracle
