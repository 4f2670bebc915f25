#include "seqal/crf.hpp"
#include "seqal/error.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace seqal;

TEST_CASE("uniform potentials") {
  const Matrix e = Matrix::Zero(2, 2);
  const auto fb = forward_backward(e, Transitions::zeros(2));
  CHECK(fb.log_partition == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(fb.marginals.probs.data()[i] == doctest::Approx(0.5));
  CHECK(viterbi(e, Transitions::zeros(2)) == std::vector<int>{0, 0});
}

TEST_CASE("viterbi follows one-hot emissions") {
  Matrix e = Matrix::Zero(2, 3);
  e(0, 0) = 1.0;
  e(1, 1) = 1.0;
  CHECK(viterbi(e, Transitions::zeros(3)) == std::vector<int>{0, 1});
  CHECK(viterbi(Matrix::Constant(4, 3, 0.7), Transitions::zeros(3)) == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("forward-backward and viterbi agree with path enumeration") {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index len = 1 + static_cast<Eigen::Index>(rng.below(6));
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(4));
    const Matrix e = oracle::random_matrix(rng, len, k, 3.0);
    const Transitions tr = oracle::random_transitions(rng, k, 2.0);
    const auto ref = oracle::enumerate(e, tr);
    const auto fb = forward_backward(e, tr);
    CHECK(std::abs(fb.log_partition - ref.log_partition) < 1e-8);
    CHECK((fb.marginals.probs - ref.marginals).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((fb.pair_marginals - ref.pair_marginals).cwiseAbs().maxCoeff() < 1e-8);
    for (Eigen::Index t = 0; t < len; ++t) CHECK(std::abs(fb.marginals.probs.row(t).sum() - 1.0) < 1e-9);

    const auto path = viterbi(e, tr);
    CHECK(oracle::score_of(e, tr, path) == ref.best_score);
    CHECK(path_score(e, tr, path) == doctest::Approx(ref.best_score).epsilon(1e-13));
    CHECK(fb.log_partition >= ref.best_score - 1e-12);
  }
}

TEST_CASE("expected label counts equal marginal sums") {
  Rng rng(3);
  const Matrix e = oracle::random_matrix(rng, 5, 3, 1.0);
  const Transitions tr = oracle::random_transitions(rng, 3, 1.0);
  const auto fb = forward_backward(e, tr);
  // Sum over pairs of P(i, j) recovers the unary marginals of positions 0..L-2.
  const Vector from_pairs = fb.pair_marginals.rowwise().sum();
  const Vector unary = fb.marginals.probs.topRows(4).colwise().sum().transpose();
  CHECK((from_pairs - unary).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("numerical range") {
  Matrix e = Matrix::Zero(3, 2);
  e(1, 1) = 800.0;
  const auto fb = forward_backward(e, Transitions::zeros(2));
  CHECK(std::isfinite(fb.log_partition));
  CHECK(fb.marginals.probs(1, 1) == doctest::Approx(1.0));

  e(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(forward_backward(e, Transitions::zeros(2)), Error);
  CHECK_THROWS_AS(forward_backward(Matrix(0, 2), Transitions::zeros(2)), Error);
  CHECK_THROWS_AS(forward_backward(Matrix::Zero(2, 3), Transitions::zeros(2)), Error);
}

TEST_CASE("softmax rows") {
  Matrix s(2, 3);
  s << 0, 0, 0, 1, 2, 3;
  const auto p = softmax_rows(s);
  CHECK(p.probs(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(p.probs.row(1).sum() == doctest::Approx(1.0));
  CHECK(p.valid_count() == 2);
  const double values[] = {1000.0, 1000.0};
  CHECK(log_sum_exp(values) == doctest::Approx(1000.0 + std::log(2.0)));
}
