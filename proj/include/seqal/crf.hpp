#pragma once

// Exact inference for a linear-chain CRF. All dynamic programs run in
// log-space over an L x K emission matrix and K x K transition scores.

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace seqal {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Score of label j following label i is pair(i, j); start/end score the
// first and last label of a path.
struct Transitions {
  Matrix pair;
  Vector start;
  Vector end;

  static Transitions zeros(Eigen::Index num_labels);
  Eigen::Index num_labels() const noexcept { return pair.rows(); }
};

// Per-token label distributions. valid_mask is false for padding or special
// positions, which scoring skips.
struct ProbTensor {
  Matrix probs;
  std::vector<bool> valid_mask;

  Eigen::Index length() const noexcept { return probs.rows(); }
  Eigen::Index num_labels() const noexcept { return probs.cols(); }
  std::size_t valid_count() const noexcept;
};

struct ForwardBackward {
  double log_partition = 0.0;
  ProbTensor marginals;
  // Sum over positions of pairwise posteriors P(y_t = i, y_{t+1} = j).
  Matrix pair_marginals;
};

double log_sum_exp(std::span<const double> values) noexcept;

// Throws NonFiniteScore on NaN/inf inputs or an empty sentence.
ForwardBackward forward_backward(const Matrix& emissions, const Transitions& transitions);

// Highest scoring path; ties go to the lower label index.
std::vector<int> viterbi(const Matrix& emissions, const Transitions& transitions);

double path_score(const Matrix& emissions, const Transitions& transitions,
                  std::span<const int> path);

// Row-wise softmax.
ProbTensor softmax_rows(const Matrix& scores);

}  // namespace seqal
