#include "seqal/crf.hpp"

#include "seqal/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace seqal {

Transitions Transitions::zeros(Eigen::Index num_labels) {
  return {Matrix::Zero(num_labels, num_labels), Vector::Zero(num_labels), Vector::Zero(num_labels)};
}

std::size_t ProbTensor::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid_mask.begin(), valid_mask.end(), true));
}

double log_sum_exp(std::span<const double> values) noexcept {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

namespace {

void check_inputs(const Matrix& emissions, const Transitions& tr) {
  const auto k = emissions.cols();
  if (emissions.rows() < 1 || k < 1) throw Error(ErrorKind::NonFiniteScore, "empty emission matrix");
  if (tr.pair.rows() != k || tr.pair.cols() != k || tr.start.size() != k || tr.end.size() != k) {
    throw Error(ErrorKind::ShapeMismatch, "transition shape does not match label count");
  }
  if (!emissions.allFinite() || !tr.pair.allFinite() || !tr.start.allFinite() ||
      !tr.end.allFinite()) {
    throw Error(ErrorKind::NonFiniteScore, "non-finite emission or transition score");
  }
}

}  // namespace

ForwardBackward forward_backward(const Matrix& emissions, const Transitions& tr) {
  check_inputs(emissions, tr);
  const auto len = emissions.rows();
  const auto k = emissions.cols();

  Matrix alpha(len, k);
  Matrix beta(len, k);
  std::vector<double> buf(static_cast<std::size_t>(k));

  for (Eigen::Index j = 0; j < k; ++j) alpha(0, j) = tr.start(j) + emissions(0, j);
  for (Eigen::Index t = 1; t < len; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      for (Eigen::Index i = 0; i < k; ++i) buf[i] = alpha(t - 1, i) + tr.pair(i, j);
      alpha(t, j) = log_sum_exp(buf) + emissions(t, j);
    }
  }

  for (Eigen::Index j = 0; j < k; ++j) beta(len - 1, j) = tr.end(j);
  for (Eigen::Index t = len - 2; t >= 0; --t) {
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) buf[j] = tr.pair(i, j) + emissions(t + 1, j) + beta(t + 1, j);
      beta(t, i) = log_sum_exp(buf);
    }
  }

  for (Eigen::Index j = 0; j < k; ++j) buf[j] = alpha(len - 1, j) + tr.end(j);
  ForwardBackward out;
  out.log_partition = log_sum_exp(buf);
  if (!std::isfinite(out.log_partition)) {
    throw Error(ErrorKind::NonFiniteScore, "log partition overflowed");
  }

  out.marginals.probs.resize(len, k);
  out.marginals.valid_mask.assign(static_cast<std::size_t>(len), true);
  for (Eigen::Index t = 0; t < len; ++t) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double p = std::exp(alpha(t, j) + beta(t, j) - out.log_partition);
      out.marginals.probs(t, j) = p;
      row += p;
    }
    // Renormalize away accumulated rounding so rows sum to 1.
    out.marginals.probs.row(t) /= row;
  }

  out.pair_marginals = Matrix::Zero(k, k);
  for (Eigen::Index t = 0; t + 1 < len; ++t) {
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        out.pair_marginals(i, j) += std::exp(alpha(t, i) + tr.pair(i, j) + emissions(t + 1, j) +
                                             beta(t + 1, j) - out.log_partition);
      }
    }
  }
  return out;
}

std::vector<int> viterbi(const Matrix& emissions, const Transitions& tr) {
  check_inputs(emissions, tr);
  const auto len = emissions.rows();
  const auto k = emissions.cols();

  Matrix score(len, k);
  Eigen::MatrixXi back(len, k);
  for (Eigen::Index j = 0; j < k; ++j) score(0, j) = tr.start(j) + emissions(0, j);
  for (Eigen::Index t = 1; t < len; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (Eigen::Index i = 0; i < k; ++i) {
        const double s = score(t - 1, i) + tr.pair(i, j);
        if (s > best) {
          best = s;
          arg = static_cast<int>(i);
        }
      }
      score(t, j) = best + emissions(t, j);
      back(t, j) = arg;
    }
  }

  double best = -std::numeric_limits<double>::infinity();
  int last = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double s = score(len - 1, j) + tr.end(j);
    if (s > best) {
      best = s;
      last = static_cast<int>(j);
    }
  }
  std::vector<int> path(static_cast<std::size_t>(len));
  path[len - 1] = last;
  for (Eigen::Index t = len - 1; t > 0; --t) path[t - 1] = back(t, path[t]);
  return path;
}

double path_score(const Matrix& emissions, const Transitions& tr, std::span<const int> path) {
  if (path.size() != static_cast<std::size_t>(emissions.rows()) || path.empty()) {
    throw Error(ErrorKind::ShapeMismatch, "path length does not match emissions");
  }
  double s = tr.start(path.front()) + tr.end(path.back());
  for (std::size_t t = 0; t < path.size(); ++t) {
    s += emissions(static_cast<Eigen::Index>(t), path[t]);
    if (t > 0) s += tr.pair(path[t - 1], path[t]);
  }
  return s;
}

ProbTensor softmax_rows(const Matrix& scores) {
  ProbTensor out;
  out.probs.resize(scores.rows(), scores.cols());
  out.valid_mask.assign(static_cast<std::size_t>(scores.rows()), true);
  for (Eigen::Index t = 0; t < scores.rows(); ++t) {
    const double hi = scores.row(t).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      out.probs(t, j) = std::exp(scores(t, j) - hi);
      sum += out.probs(t, j);
    }
    out.probs.row(t) /= sum;
  }
  return out;
}

}  // namespace seqal
