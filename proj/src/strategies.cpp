#include "seqal/strategies.hpp"

#include "seqal/error.hpp"
#include "seqal/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace seqal {

namespace {

const std::vector<std::pair<StrategyKind, std::string>>& strategy_table() {
  static const std::vector<std::pair<StrategyKind, std::string>> table = {
      {StrategyKind::Random, "random"},
      {StrategyKind::LeastConfidence, "lc"},
      {StrategyKind::ModifiedLeastConfidence, "mlc"},
      {StrategyKind::Margin, "margin"},
      {StrategyKind::Entropy, "entropy"},
      {StrategyKind::BaldBatch, "bald"},
      {StrategyKind::CoreSet, "coreset"},
      {StrategyKind::ClusterPlus, "cluster_plus"},
  };
  return table;
}

void require_valid_tokens(const ProbTensor& probs) {
  if (probs.valid_count() == 0) throw Error(ErrorKind::NoValidTokens, "sentence has no valid tokens");
}

template <class F>
double mean_over_valid(const ProbTensor& probs, F&& per_token) {
  require_valid_tokens(probs);
  double sum = 0.0;
  std::size_t n = 0;
  for (Eigen::Index t = 0; t < probs.length(); ++t) {
    if (!probs.valid_mask[static_cast<std::size_t>(t)]) continue;
    sum += per_token(t);
    ++n;
  }
  return sum / static_cast<double>(n);
}

void check_budget(std::size_t n, std::size_t pool) {
  if (n > pool) {
    throw Error(ErrorKind::BudgetExceedsPool,
                "budget " + std::to_string(n) + " exceeds pool of " + std::to_string(pool));
  }
}

}  // namespace

std::string_view to_string(StrategyKind kind) noexcept {
  for (const auto& [k, name] : strategy_table()) {
    if (k == kind) return name;
  }
  return "unknown";
}

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : strategy_table()) out.push_back(entry.second);
    return out;
  }();
  return names;
}

StrategyKind parse_strategy(std::string_view name) {
  for (const auto& [k, n] : strategy_table()) {
    if (n == name) return k;
  }
  std::string valid;
  for (const auto& n : strategy_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw Error(ErrorKind::ConfigInvalid,
              "unknown strategy '" + std::string(name) + "' (valid: " + valid + ")");
}

// ---------------------------------------------------------------------------
// Uncertainty scores

double score_least_confidence(const ProbTensor& probs) {
  return mean_over_valid(probs, [&](Eigen::Index t) { return 1.0 - probs.probs.row(t).maxCoeff(); });
}

std::size_t mlc_token_count(std::size_t valid_tokens) noexcept {
  if (valid_tokens == 0) return 0;
  const double root = std::sqrt(static_cast<double>(valid_tokens) / 2.0);
  const auto n = static_cast<std::size_t>(std::floor(root + 0.5));
  return std::clamp<std::size_t>(n, 1, valid_tokens);
}

double score_mlc(const ProbTensor& probs) {
  require_valid_tokens(probs);
  std::vector<double> confidence;
  for (Eigen::Index t = 0; t < probs.length(); ++t) {
    if (probs.valid_mask[static_cast<std::size_t>(t)]) confidence.push_back(probs.probs.row(t).maxCoeff());
  }
  const std::size_t n = mlc_token_count(confidence.size());
  std::partial_sort(confidence.begin(), confidence.begin() + static_cast<std::ptrdiff_t>(n), confidence.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += 1.0 - confidence[i];
  return sum / static_cast<double>(n);
}

double score_margin(const ProbTensor& probs) {
  return mean_over_valid(probs, [&](Eigen::Index t) {
    double first = 0.0;
    double second = 0.0;
    for (Eigen::Index k = 0; k < probs.num_labels(); ++k) {
      const double p = probs.probs(t, k);
      if (p > first) {
        second = first;
        first = p;
      } else if (p > second) {
        second = p;
      }
    }
    return first - second;
  });
}

double token_entropy(const Matrix& probs, Eigen::Index row, double epsilon) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < probs.cols(); ++k) {
    const double p = probs(row, k);
    if (p > epsilon) h -= p * std::log(p);
  }
  return h;
}

double score_entropy(const ProbTensor& probs, double epsilon) {
  return mean_over_valid(probs, [&](Eigen::Index t) { return token_entropy(probs.probs, t, epsilon); });
}

double score_bald(std::span<const ProbTensor> passes, double epsilon) {
  if (passes.size() < 2) throw Error(ErrorKind::InvalidT, "BALD needs at least 2 passes");
  const auto& first = passes.front();
  for (const auto& p : passes) {
    if (p.probs.rows() != first.probs.rows() || p.probs.cols() != first.probs.cols() ||
        p.valid_mask != first.valid_mask) {
      throw Error(ErrorKind::ShapeMismatch, "MC passes disagree in shape");
    }
  }
  Matrix mean = Matrix::Zero(first.probs.rows(), first.probs.cols());
  for (const auto& p : passes) mean += p.probs;
  mean /= static_cast<double>(passes.size());

  return mean_over_valid(first, [&](Eigen::Index t) {
    double expected = 0.0;
    for (const auto& p : passes) expected += token_entropy(p.probs, t, epsilon);
    expected /= static_cast<double>(passes.size());
    return token_entropy(mean, t, epsilon) - expected;
  });
}

// ---------------------------------------------------------------------------
// Selectors

std::vector<SentenceId> rank_and_take(std::vector<ScoredSentence> scores, std::size_t n) {
  check_budget(n, scores.size());
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) {
      throw Error(ErrorKind::NonFiniteScore, "sentence " + std::to_string(s.id) + " has a non-finite score");
    }
  }
  std::sort(scores.begin(), scores.end(), [](const ScoredSentence& a, const ScoredSentence& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  std::vector<SentenceId> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(scores[i].id);
  return out;
}

std::vector<SentenceId> select_random(std::span<const SentenceId> pool, std::size_t n,
                                      std::uint64_t seed) {
  check_budget(n, pool.size());
  std::vector<SentenceId> ids(pool.begin(), pool.end());
  Rng rng(seed);
  // Partial Fisher-Yates: the first n slots end up a uniform sample.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(ids.size() - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(n);
  return ids;
}

double cosine_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - a.dot(b) / (na * nb);
}

std::vector<SentenceId> select_coreset(const EmbeddingMatrix& labeled, const EmbeddingMatrix& pool,
                                       std::size_t n, std::uint64_t seed) {
  check_budget(n, pool.size());
  if (n == 0) return {};

  // Visit pool rows in id order so strict '>' resolves ties to the lower id.
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pool.ids[a] < pool.ids[b]; });

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> min_dist(pool.size(), inf);
  std::vector<bool> taken(pool.size(), false);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (Eigen::Index l = 0; l < labeled.rows.rows(); ++l) {
      min_dist[i] = std::min(min_dist[i], cosine_distance(pool.rows.row(static_cast<Eigen::Index>(i)).transpose(),
                                                          labeled.rows.row(l).transpose()));
    }
  }

  std::vector<SentenceId> out;
  auto take = [&](std::size_t row) {
    taken[row] = true;
    out.push_back(pool.ids[row]);
    const auto picked = pool.rows.row(static_cast<Eigen::Index>(row)).transpose().eval();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!taken[i]) {
        min_dist[i] = std::min(min_dist[i], cosine_distance(pool.rows.row(static_cast<Eigen::Index>(i)).transpose(), picked));
      }
    }
  };

  if (labeled.size() == 0) {
    Rng rng(seed);
    take(order[rng.below(order.size())]);
  }
  while (out.size() < n) {
    std::size_t best = pool.size();
    double best_dist = -inf;
    for (std::size_t row : order) {
      if (taken[row]) continue;
      if (min_dist[row] > best_dist) {
        best_dist = min_dist[row];
        best = row;
      }
    }
    take(best);
  }
  return out;
}

std::size_t cluster_count(std::size_t pool_size, std::size_t n) noexcept {
  const double root = std::sqrt(static_cast<double>(pool_size) / 2.0);
  std::size_t k = static_cast<std::size_t>(std::floor(root + 0.5));
  k = std::max<std::size_t>(k, 5);
  k = std::min(k, n);
  return std::min(k, pool_size);
}

KMeansResult kmeans_plus_plus(const Matrix& points, std::size_t k, std::uint64_t seed,
                              int max_iterations) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0 || k > n) throw Error(ErrorKind::BudgetExceedsPool, "k must lie in [1, number of points]");
  Rng rng(seed);
  KMeansResult out;
  out.centers.resize(static_cast<Eigen::Index>(k), points.cols());

  // Seeding: D^2 sampling.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.below(n);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t pick = first;
    if (c > 0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
      if (total > 0.0) {
        double r = rng.uniform() * total;
        pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (chosen[i] || d2[i] == 0.0) continue;
          pick = i;
          r -= d2[i];
          if (r < 0.0) break;
        }
      } else {
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < n; ++i) {
          if (!chosen[i]) rest.push_back(i);
        }
        pick = rest[rng.below(rest.size())];
      }
    }
    chosen[pick] = true;
    out.centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(pick))).squaredNorm());
    }
  }

  // Lloyd iterations.
  out.assignment.assign(n, -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = (points.row(static_cast<Eigen::Index>(i)) - out.centers.row(static_cast<Eigen::Index>(c))).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (out.assignment[i] != best) {
        out.assignment[i] = best;
        changed = true;
      }
    }
    out.iterations = iter + 1;
    if (!changed) break;
    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(out.assignment[i]) += points.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(out.assignment[i])];
    }
    for (std::size_t c = 0; c < k; ++c) {
      // Empty clusters keep their previous center.
      if (counts[c] > 0) out.centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
    }
  }
  return out;
}

ClusterSelection select_cluster_plus(const EmbeddingMatrix& pool, std::size_t n, std::uint64_t seed) {
  check_budget(n, pool.size());
  ClusterSelection out;
  if (n == 0) return out;
  out.k = cluster_count(pool.size(), n);

  Matrix unit = pool.rows;
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    const double norm = unit.row(i).norm();
    if (norm > 0.0) unit.row(i) /= norm;
  }
  const KMeansResult km = kmeans_plus_plus(unit, out.k, hash_combine(seed, 1));
  out.assignment = km.assignment;

  std::vector<std::vector<std::size_t>> members(out.k);
  for (std::size_t i = 0; i < pool.size(); ++i) members[static_cast<std::size_t>(km.assignment[i])].push_back(i);
  std::vector<std::size_t> visit;
  for (std::size_t c = 0; c < out.k; ++c) {
    if (!members[c].empty()) visit.push_back(c);
  }
  Rng rng(hash_combine(seed, 2));
  for (std::size_t i = visit.size(); i > 1; --i) std::swap(visit[i - 1], visit[rng.below(i)]);

  while (out.ids.size() < n) {
    for (std::size_t c : visit) {
      auto& m = members[c];
      if (m.empty()) continue;
      const std::size_t j = rng.below(m.size());
      out.ids.push_back(pool.ids[m[j]]);
      m.erase(m.begin() + static_cast<std::ptrdiff_t>(j));
      if (out.ids.size() == n) break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model-driven acquisition

EmbeddingMatrix embed_blocks(const Model& model, std::span<const SentenceBlock* const> blocks) {
  EmbeddingMatrix out;
  out.rows.resize(static_cast<Eigen::Index>(blocks.size()), model.features.hidden_dim);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out.rows.row(static_cast<Eigen::Index>(i)) = sentence_embedding(model, *blocks[i]).transpose();
    out.ids.push_back(blocks[i]->id);
  }
  return out;
}

bool is_uncertainty_strategy(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::LeastConfidence:
    case StrategyKind::ModifiedLeastConfidence:
    case StrategyKind::Margin:
    case StrategyKind::Entropy:
    case StrategyKind::BaldBatch:
      return true;
    default:
      return false;
  }
}

double acquisition_score(StrategyKind kind, const Model& model, const SentenceBlock& block,
                         const AcquisitionOptions& options) {
  if (!is_uncertainty_strategy(kind)) {
    throw Error(ErrorKind::ConfigInvalid, std::string(to_string(kind)) + " is not an uncertainty strategy");
  }
  const double eps = options.params.entropy_epsilon;
  const std::size_t columns = block.label_columns.size();
  double total = 0.0;
  for (std::size_t c = 0; c < columns; ++c) {
    const int column = static_cast<int>(c);
    if (kind == StrategyKind::BaldBatch) {
      const auto seed = hash_combine(options.mc_seed, static_cast<std::uint64_t>(block.id) * 64 + c);
      const auto passes = mc_passes(model, block, column, options.params.mc_passes, seed, options.prob_mode);
      total += score_bald(passes, eps);
      continue;
    }
    const ProbTensor probs = predict_probs(model, block, column, options.prob_mode);
    switch (kind) {
      case StrategyKind::LeastConfidence:
        total += score_least_confidence(probs);
        break;
      case StrategyKind::ModifiedLeastConfidence:
        total += model.task == TaskKind::RoleLabeling ? score_mlc(probs) : score_least_confidence(probs);
        break;
      case StrategyKind::Margin:
        total -= score_margin(probs);
        break;
      case StrategyKind::Entropy:
        total += score_entropy(probs, eps);
        break;
      default:
        break;
    }
  }
  return total / static_cast<double>(columns);
}

Selection run_strategy(StrategyKind kind, const Model& model,
                       std::span<const SentenceBlock* const> pool,
                       std::span<const SentenceBlock* const> labeled, std::size_t n,
                       std::uint64_t seed, const AcquisitionOptions& options) {
  check_budget(n, pool.size());
  Selection out;
  switch (kind) {
    case StrategyKind::Random: {
      std::vector<SentenceId> ids;
      for (const auto* b : pool) ids.push_back(b->id);
      out.ids = select_random(ids, n, seed);
      break;
    }
    case StrategyKind::CoreSet: {
      out.ids = select_coreset(embed_blocks(model, labeled), embed_blocks(model, pool), n, seed);
      break;
    }
    case StrategyKind::ClusterPlus: {
      const EmbeddingMatrix emb = embed_blocks(model, pool);
      ClusterSelection cs = select_cluster_plus(emb, n, seed);
      out.ids = std::move(cs.ids);
      for (std::size_t i = 0; i < cs.assignment.size(); ++i) out.clusters[emb.ids[i]] = cs.assignment[i];
      break;
    }
    default: {
      std::vector<ScoredSentence> scores;
      scores.reserve(pool.size());
      for (const auto* b : pool) {
        const double s = acquisition_score(kind, model, *b, options);
        scores.push_back({b->id, s});
        out.scores[b->id] = s;
      }
      out.ids = rank_and_take(std::move(scores), n);
      break;
    }
  }
  return out;
}

}  // namespace seqal
