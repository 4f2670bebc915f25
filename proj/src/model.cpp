#include "seqal/model.hpp"

#include "seqal/error.hpp"
#include "seqal/format.hpp"
#include "seqal/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace seqal {

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() : words_{"<unk>", "<pad>"} {
  index_["<unk>"] = kUnknown;
  index_["<pad>"] = kPad;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  Vocabulary v;
  for (auto& t : tokens) {
    if (v.index_.count(t)) continue;
    v.index_[t] = static_cast<int>(v.words_.size());
    v.words_.push_back(std::move(t));
  }
  return v;
}

Vocabulary Vocabulary::from_blocks(std::span<const SentenceBlock> blocks) {
  std::vector<std::string> tokens;
  for (const auto& b : blocks) tokens.insert(tokens.end(), b.tokens.begin(), b.tokens.end());
  return from_tokens(std::move(tokens));
}

int Vocabulary::index_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknown : it->second;
}

// ---------------------------------------------------------------------------
// Configuration

void FeatureConfig::validate() const {
  if (embed_dim < 1 || hidden_dim < 1) throw Error(ErrorKind::ConfigInvalid, "feature dims must be >= 1");
  if (window < 0) throw Error(ErrorKind::ConfigInvalid, "window must be >= 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorKind::ConfigInvalid, "dropout_rate must lie in [0, 1)");
  }
}

TrainConfig TrainConfig::for_task(TaskKind task) {
  TrainConfig c;
  c.batch_size = task == TaskKind::ProductExtraction ? 16 : 6;
  return c;
}

void TrainConfig::validate() const {
  if (epochs_per_round < 1 || batch_size < 1) {
    throw Error(ErrorKind::ConfigInvalid, "epochs_per_round and batch_size must be >= 1");
  }
  if (!(lr_crf >= 0.0) || !(lr_features >= 0.0)) {
    throw Error(ErrorKind::ConfigInvalid, "learning rates must be >= 0");
  }
}

std::string_view to_string(ProbMode mode) noexcept {
  return mode == ProbMode::EmissionSoftmax ? "emission_softmax" : "crf_marginal";
}

ProbMode parse_prob_mode(std::string_view name) {
  if (name == "emission_softmax") return ProbMode::EmissionSoftmax;
  if (name == "crf_marginal") return ProbMode::CrfMarginal;
  throw Error(ErrorKind::ConfigInvalid,
              "unknown prob_mode '" + std::string(name) + "' (valid: emission_softmax, crf_marginal)");
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

template <class M>
std::span<double> values_of(M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

std::vector<ParamBlock> ModelParams::blocks() {
  return {
      {"token_embeddings", values_of(token_embeddings), token_embeddings.rows(), token_embeddings.cols()},
      {"hidden_weights", values_of(hidden_weights), hidden_weights.rows(), hidden_weights.cols()},
      {"hidden_bias", values_of(hidden_bias), hidden_bias.size(), 1},
      {"span_weights", values_of(span_weights), span_weights.size(), 1},
      {"emission_weights", values_of(emission_weights), emission_weights.rows(), emission_weights.cols()},
      {"emission_bias", values_of(emission_bias), emission_bias.size(), 1},
      {"transitions", values_of(crf.pair), crf.pair.rows(), crf.pair.cols()},
      {"start_transitions", values_of(crf.start), crf.start.size(), 1},
      {"end_transitions", values_of(crf.end), crf.end.size(), 1},
  };
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z;
  z.token_embeddings = Matrix::Zero(token_embeddings.rows(), token_embeddings.cols());
  z.hidden_weights = Matrix::Zero(hidden_weights.rows(), hidden_weights.cols());
  z.hidden_bias = Vector::Zero(hidden_bias.size());
  z.span_weights = Vector::Zero(span_weights.size());
  z.emission_weights = Matrix::Zero(emission_weights.rows(), emission_weights.cols());
  z.emission_bias = Vector::Zero(emission_bias.size());
  z.crf = Transitions::zeros(crf.pair.rows());
  return z;
}

bool ModelParams::all_finite() const {
  return token_embeddings.allFinite() && hidden_weights.allFinite() && hidden_bias.allFinite() &&
         span_weights.allFinite() && emission_weights.allFinite() && emission_bias.allFinite() &&
         crf.pair.allFinite() && crf.start.allFinite() && crf.end.allFinite();
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  auto& ma = const_cast<ModelParams&>(a);
  auto& mb = const_cast<ModelParams&>(b);
  const auto ba = ma.blocks();
  const auto bb = mb.blocks();
  for (std::size_t i = 0; i < ba.size(); ++i) {
    if (ba[i].rows != bb[i].rows || ba[i].cols != bb[i].cols) return false;
    if (!std::equal(ba[i].values.begin(), ba[i].values.end(), bb[i].values.begin())) return false;
  }
  return true;
}

Model init_model(TaskKind task, Vocabulary vocab, const FeatureConfig& features) {
  features.validate();
  const auto labels = static_cast<Eigen::Index>(LabelScheme::for_task(task).size());
  const Eigen::Index v = static_cast<Eigen::Index>(vocab.size());
  const Eigen::Index e = features.embed_dim;
  const Eigen::Index h = features.hidden_dim;
  const Eigen::Index d = features.input_dim();

  Rng rng(features.seed);
  auto uniform = [&rng](Eigen::Index rows, Eigen::Index cols, double scale) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
    return m;
  };

  Model model;
  model.task = task;
  model.features = features;
  model.vocab = std::move(vocab);
  auto& p = model.params;
  p.token_embeddings = uniform(v, e, 0.5);
  p.hidden_weights = uniform(h, d, std::sqrt(6.0 / static_cast<double>(h + d)));
  p.hidden_bias = Vector::Zero(h);
  if (task == TaskKind::RoleLabeling) {
    p.span_weights = uniform(h, 1, 0.5).col(0);
  } else {
    p.span_weights = Vector(0);
  }
  p.emission_weights = uniform(h, labels, std::sqrt(6.0 / static_cast<double>(h + labels)));
  p.emission_bias = Vector::Zero(labels);
  p.crf = Transitions::zeros(labels);
  return model;
}

// ---------------------------------------------------------------------------
// Forward / backward

Activations forward(const Model& model, const SentenceBlock& block, int column,
                    std::optional<std::uint64_t> mask_seed) {
  const auto& p = model.params;
  const auto& fc = model.features;
  const auto len = static_cast<Eigen::Index>(block.length());
  if (len == 0) throw Error(ErrorKind::IndexOutOfRange, "empty sentence");
  if (column < -1 || column >= static_cast<int>(block.label_columns.size())) {
    throw Error(ErrorKind::IndexOutOfRange, "label column " + std::to_string(column) +
                                                " out of range for sentence " + std::to_string(block.id));
  }
  const bool role = model.task == TaskKind::RoleLabeling;
  if (role && column >= 0 && static_cast<std::size_t>(column) >= block.product_spans.size()) {
    throw Error(ErrorKind::IndexOutOfRange, "missing product span for column " + std::to_string(column));
  }

  Activations a;
  a.token_ids.resize(block.length());
  for (std::size_t i = 0; i < block.length(); ++i) a.token_ids[i] = model.vocab.index_of(block.tokens[i]);
  a.in_span.assign(block.length(), 0.0);
  if (role && column >= 0) {
    const auto& span = block.product_spans[static_cast<std::size_t>(column)];
    for (std::size_t i = span.start; i <= span.end && i < block.length(); ++i) a.in_span[i] = 1.0;
  }

  const Eigen::Index e = fc.embed_dim;
  a.input.resize(len, fc.input_dim());
  for (Eigen::Index t = 0; t < len; ++t) {
    for (int o = -fc.window; o <= fc.window; ++o) {
      const Eigen::Index src = t + o;
      const int id = (src < 0 || src >= len) ? Vocabulary::kPad : a.token_ids[src];
      a.input.row(t).segment((o + fc.window) * e, e) = p.token_embeddings.row(id);
    }
  }

  Matrix pre = a.input * p.hidden_weights.transpose();
  pre.rowwise() += p.hidden_bias.transpose();
  if (role) {
    for (Eigen::Index t = 0; t < len; ++t) {
      if (a.in_span[t] != 0.0) pre.row(t) += p.span_weights.transpose();
    }
  }
  a.activation = pre.array().tanh().matrix();

  if (mask_seed && fc.dropout_rate > 0.0) {
    const double keep = 1.0 - fc.dropout_rate;
    a.dropout_scale.resize(len, fc.hidden_dim);
    for (Eigen::Index t = 0; t < len; ++t) {
      for (Eigen::Index u = 0; u < fc.hidden_dim; ++u) {
        const auto key = hash_combine(hash_combine(*mask_seed, static_cast<std::uint64_t>(t)),
                                      static_cast<std::uint64_t>(u));
        a.dropout_scale(t, u) = hashed_uniform(key) < keep ? 1.0 / keep : 0.0;
      }
    }
    a.hidden = a.activation.cwiseProduct(a.dropout_scale);
  } else {
    a.hidden = a.activation;
  }

  a.emissions = a.hidden * p.emission_weights;
  a.emissions.rowwise() += p.emission_bias.transpose();
  return a;
}

Matrix featurize(const Model& model, const SentenceBlock& block, int column,
                 std::optional<std::uint64_t> mask_seed) {
  return forward(model, block, column, mask_seed).hidden;
}

Matrix emission_scores(const Model& model, const SentenceBlock& block, int column,
                       std::optional<std::uint64_t> mask_seed) {
  return forward(model, block, column, mask_seed).emissions;
}

std::vector<LabeledExample> examples_of(std::span<const SentenceBlock> blocks) {
  std::vector<LabeledExample> out;
  for (const auto& b : blocks) {
    for (std::size_t c = 0; c < b.label_columns.size(); ++c) {
      out.push_back({&b, static_cast<int>(c), std::nullopt});
    }
  }
  return out;
}

LossAndGradient nll_and_gradient(std::span<const LabeledExample> batch, const Model& model) {
  const auto& p = model.params;
  LossAndGradient out;
  out.gradient = p.zeros_like();
  auto& g = out.gradient;
  const Eigen::Index e = model.features.embed_dim;
  const int window = model.features.window;

  for (const auto& ex : batch) {
    const auto& block = *ex.block;
    const Activations a = forward(model, block, ex.column, ex.mask_seed);
    const auto& gold = block.label_columns.at(static_cast<std::size_t>(ex.column));
    const auto len = a.emissions.rows();

    const ForwardBackward fb = forward_backward(a.emissions, p.crf);
    const double gold_score = path_score(a.emissions, p.crf, gold);
    out.loss += fb.log_partition - gold_score;

    // d loss / d emissions = posterior - gold indicator.
    Matrix d_emit = fb.marginals.probs;
    for (Eigen::Index t = 0; t < len; ++t) d_emit(t, gold[t]) -= 1.0;

    g.crf.pair += fb.pair_marginals;
    for (Eigen::Index t = 0; t + 1 < len; ++t) g.crf.pair(gold[t], gold[t + 1]) -= 1.0;
    g.crf.start += fb.marginals.probs.row(0).transpose();
    g.crf.start(gold.front()) -= 1.0;
    g.crf.end += fb.marginals.probs.row(len - 1).transpose();
    g.crf.end(gold.back()) -= 1.0;

    g.emission_weights += a.hidden.transpose() * d_emit;
    g.emission_bias += d_emit.colwise().sum().transpose();

    Matrix d_hidden = d_emit * p.emission_weights.transpose();
    if (a.dropout_scale.size() > 0) d_hidden = d_hidden.cwiseProduct(a.dropout_scale);
    const Matrix d_pre =
        d_hidden.cwiseProduct((1.0 - a.activation.array().square()).matrix());

    g.hidden_weights += d_pre.transpose() * a.input;
    g.hidden_bias += d_pre.colwise().sum().transpose();
    if (g.span_weights.size() > 0) {
      for (Eigen::Index t = 0; t < len; ++t) {
        if (a.in_span[t] != 0.0) g.span_weights += d_pre.row(t).transpose();
      }
    }

    const Matrix d_input = d_pre * p.hidden_weights;
    for (Eigen::Index t = 0; t < len; ++t) {
      for (int o = -window; o <= window; ++o) {
        const Eigen::Index src = t + o;
        const int id = (src < 0 || src >= len) ? Vocabulary::kPad : a.token_ids[src];
        g.token_embeddings.row(id) += d_input.row(t).segment((o + window) * e, e);
      }
    }
  }
  if (!std::isfinite(out.loss)) throw Error(ErrorKind::NonFiniteScore, "loss is not finite");
  return out;
}

// ---------------------------------------------------------------------------
// Training

Model train(const Model& model, std::span<const SentenceBlock> labeled, const TrainConfig& config,
            std::vector<double>* epoch_losses) {
  config.validate();
  if (labeled.empty()) throw Error(ErrorKind::EmptyLabeledSet, "no labeled sentences to train on");

  Model out = model;
  std::vector<LabeledExample> examples = examples_of(labeled);
  const bool dropout = out.features.dropout_rate > 0.0;

  for (int epoch = 0; epoch < config.epochs_per_round; ++epoch) {
    const std::uint64_t epoch_seed = hash_combine(config.seed, static_cast<std::uint64_t>(epoch));
    Rng rng(epoch_seed);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      std::vector<LabeledExample> batch;
      for (std::size_t i = begin; i < end; ++i) {
        LabeledExample ex = examples[order[i]];
        if (dropout) ex.mask_seed = hash_combine(epoch_seed, 0x1000 + i);
        batch.push_back(ex);
      }
      LossAndGradient lg = nll_and_gradient(batch, out);
      epoch_loss += lg.loss;

      auto params = out.params.blocks();
      auto grads = lg.gradient.blocks();
      for (std::size_t b = 0; b < params.size(); ++b) {
        const bool crf_block = b >= 6;  // transitions, start_transitions, end_transitions
        const double lr = crf_block ? config.lr_crf : config.lr_features;
        if (lr == 0.0) continue;
        for (std::size_t i = 0; i < params[b].values.size(); ++i) {
          params[b].values[i] -= lr * grads[b].values[i];
        }
      }
    }
    if (!out.params.all_finite()) throw Error(ErrorKind::NonFiniteScore, "training diverged");
    if (epoch_losses) epoch_losses->push_back(epoch_loss / static_cast<double>(examples.size()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inference

ProbTensor predict_probs(const Model& model, const SentenceBlock& block, int column, ProbMode mode) {
  const Matrix emissions = emission_scores(model, block, column);
  if (mode == ProbMode::EmissionSoftmax) return softmax_rows(emissions);
  return forward_backward(emissions, model.params.crf).marginals;
}

std::vector<ProbTensor> mc_passes(const Model& model, const SentenceBlock& block, int column,
                                  int passes, std::uint64_t base_seed, ProbMode mode) {
  if (passes < 2) throw Error(ErrorKind::InvalidT, "MC dropout needs at least 2 passes");
  std::vector<ProbTensor> out;
  out.reserve(static_cast<std::size_t>(passes));
  for (int t = 0; t < passes; ++t) {
    const Matrix emissions = emission_scores(model, block, column, base_seed + static_cast<std::uint64_t>(t));
    out.push_back(mode == ProbMode::EmissionSoftmax
                      ? softmax_rows(emissions)
                      : forward_backward(emissions, model.params.crf).marginals);
  }
  return out;
}

Vector sentence_embedding(const Model& model, const SentenceBlock& block) {
  const Activations a = forward(model, block, -1);
  return a.activation.colwise().mean().transpose();
}

std::vector<TagIndex> decode(const Model& model, const SentenceBlock& block, int column) {
  return viterbi(emission_scores(model, block, column), model.params.crf);
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string serialize_model(const Model& model) {
  std::ostringstream out;
  const auto& fc = model.features;
  out << "seqal-checkpoint 1\n";
  out << "task " << to_string(model.task) << '\n';
  out << "features " << fc.embed_dim << ' ' << fc.hidden_dim << ' ' << format_double(fc.dropout_rate)
      << ' ' << fc.window << ' ' << fc.seed << '\n';
  out << "vocab " << model.vocab.size() << '\n';
  for (const auto& w : model.vocab.words()) out << w << '\n';
  auto params = model.params;
  for (const auto& block : params.blocks()) {
    out << "array " << block.name << ' ' << block.rows << ' ' << block.cols << '\n';
    for (Eigen::Index r = 0; r < block.rows; ++r) {
      for (Eigen::Index c = 0; c < block.cols; ++c) {
        if (c) out << ' ';
        out << format_double(block.values[static_cast<std::size_t>(r * block.cols + c)]);
      }
      out << '\n';
    }
  }
  out << "end\n";
  return out.str();
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  std::string_view next() {
    if (pos_ > text_.size()) throw Error(ErrorKind::MalformedLine, "checkpoint truncated");
    auto nl = text_.find('\n', pos_);
    if (nl == std::string_view::npos) nl = text_.size();
    const auto line = text_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    ++line_;
    return line;
  }

  std::vector<std::string_view> fields() {
    const auto line = next();
    std::vector<std::string_view> out;
    std::size_t p = 0;
    while (p < line.size()) {
      const auto sp = line.find(' ', p);
      const auto stop = sp == std::string_view::npos ? line.size() : sp;
      if (stop > p) out.push_back(line.substr(p, stop - p));
      p = stop + 1;
    }
    return out;
  }

  std::size_t line() const noexcept { return line_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

long long to_int(std::string_view s) {
  const double v = parse_double(s);
  return static_cast<long long>(v);
}

std::uint64_t to_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::MalformedLine, "bad integer '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

Model deserialize_model(std::string_view text) {
  LineReader in(text);
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) throw ParseError(ErrorKind::MalformedLine, in.line(), "checkpoint: " + what);
  };
  expect(in.next() == "seqal-checkpoint 1", "bad header");
  auto f = in.fields();
  expect(f.size() == 2 && f[0] == "task", "expected task line");
  const TaskKind task = parse_task_kind(f[1]);
  f = in.fields();
  expect(f.size() == 6 && f[0] == "features", "expected features line");
  FeatureConfig fc;
  fc.embed_dim = static_cast<int>(to_int(f[1]));
  fc.hidden_dim = static_cast<int>(to_int(f[2]));
  fc.dropout_rate = parse_double(f[3]);
  fc.window = static_cast<int>(to_int(f[4]));
  fc.seed = to_u64(f[5]);
  f = in.fields();
  expect(f.size() == 2 && f[0] == "vocab", "expected vocab line");
  const auto n_words = static_cast<std::size_t>(to_u64(f[1]));
  expect(n_words >= 2, "vocabulary too small");
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n_words; ++i) words.emplace_back(in.next());
  expect(words[0] == "<unk>" && words[1] == "<pad>", "reserved vocabulary entries missing");
  words.erase(words.begin(), words.begin() + 2);

  Model model = init_model(task, Vocabulary::from_tokens(words), fc);
  expect(model.vocab.size() == n_words, "vocabulary entries not unique");
  for (auto& block : model.params.blocks()) {
    f = in.fields();
    expect(f.size() == 4 && f[0] == "array" && f[1] == block.name,
           "expected array " + std::string(block.name));
    expect(to_int(f[2]) == block.rows && to_int(f[3]) == block.cols,
           "shape mismatch for " + std::string(block.name));
    for (Eigen::Index r = 0; r < block.rows; ++r) {
      const auto row = in.fields();
      expect(static_cast<Eigen::Index>(row.size()) == block.cols, "row width mismatch");
      for (Eigen::Index c = 0; c < block.cols; ++c) {
        block.values[static_cast<std::size_t>(r * block.cols + c)] = parse_double(row[c]);
      }
    }
  }
  expect(in.next() == "end", "missing end marker");
  return model;
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << serialize_model(model);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingArtifact, "cannot open checkpoint " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace seqal
