#include "seqal/corpus.hpp"

#include "seqal/error.hpp"
#include "seqal/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace seqal {

std::string_view to_string(TaskKind kind) noexcept {
  return kind == TaskKind::ProductExtraction ? "product" : "role";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "product") return TaskKind::ProductExtraction;
  if (name == "role") return TaskKind::RoleLabeling;
  throw Error(ErrorKind::ConfigInvalid,
              "unknown task '" + std::string(name) + "' (valid: product, role)");
}

LabelScheme::LabelScheme(TaskKind task, std::vector<std::string> types)
    : task_(task), types_(std::move(types)) {
  labels_.push_back("O");
  for (const auto& t : types_) {
    labels_.push_back("B-" + t);
    labels_.push_back("I-" + t);
  }
}

LabelScheme LabelScheme::product() { return LabelScheme(TaskKind::ProductExtraction, {"Prod"}); }

LabelScheme LabelScheme::role() {
  return LabelScheme(TaskKind::RoleLabeling, {"Reactants", "Catalyst", "Workup", "Reaction",
                                              "Solvent", "Yield", "Temp", "Time"});
}

LabelScheme LabelScheme::for_task(TaskKind kind) {
  return kind == TaskKind::ProductExtraction ? product() : role();
}

std::vector<std::string> LabelScheme::roles() const {
  if (task_ == TaskKind::ProductExtraction) return {};
  return types_;
}

std::optional<TagIndex> LabelScheme::index_of(std::string_view tag) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == tag) return static_cast<TagIndex>(i);
  }
  return std::nullopt;
}

std::size_t LabelScheme::max_length() const noexcept {
  return task_ == TaskKind::ProductExtraction ? 256 : 512;
}

bool is_bio_valid(std::span<const TagIndex> tags) noexcept {
  TagIndex prev = 0;
  for (TagIndex t : tags) {
    if (LabelScheme::is_inside(t) &&
        (prev == 0 || LabelScheme::type_of(prev) != LabelScheme::type_of(t))) {
      return false;
    }
    prev = t;
  }
  return true;
}

namespace {

std::vector<TokenSpan> runs_of(std::span<const TagIndex> tags) {
  std::vector<TokenSpan> spans;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (LabelScheme::is_begin(tags[i])) {
      std::size_t j = i;
      while (j + 1 < tags.size() && LabelScheme::is_inside(tags[j + 1]) &&
             LabelScheme::type_of(tags[j + 1]) == LabelScheme::type_of(tags[i])) {
        ++j;
      }
      spans.push_back({i, j});
      i = j;
    }
  }
  return spans;
}

std::vector<TagIndex> span_column(const std::vector<TokenSpan>& spans, std::size_t length) {
  std::vector<TagIndex> col(length, 0);
  for (const auto& s : spans) {
    col[s.start] = LabelScheme::begin_of(0);
    for (std::size_t i = s.start + 1; i <= s.end; ++i) col[i] = LabelScheme::inside_of(0);
  }
  return col;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return out;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

struct PendingBlock {
  std::size_t first_line = 0;
  std::vector<std::size_t> lines;
  std::vector<std::string> tokens;
  std::vector<TagIndex> product_column;
  std::vector<std::vector<TagIndex>> columns;
};

void check_bio(const std::vector<TagIndex>& column, const PendingBlock& pending) {
  TagIndex prev = 0;
  for (std::size_t i = 0; i < column.size(); ++i) {
    const TagIndex t = column[i];
    if (LabelScheme::is_inside(t) &&
        (prev == 0 || LabelScheme::type_of(prev) != LabelScheme::type_of(t))) {
      throw ParseError(ErrorKind::BioViolation, pending.lines[i],
                       "I- tag without a preceding B-/I- of the same type");
    }
    prev = t;
  }
}

SentenceBlock finish_block(PendingBlock& pending, const LabelScheme& scheme, SentenceId id,
                           std::vector<std::string>* warnings) {
  const LabelScheme prod_scheme = LabelScheme::product();
  if (scheme.task() == TaskKind::RoleLabeling) check_bio(pending.product_column, pending);
  for (const auto& col : pending.columns) check_bio(col, pending);

  SentenceBlock block;
  block.id = id;
  block.tokens = std::move(pending.tokens);
  block.label_columns = std::move(pending.columns);
  if (scheme.task() == TaskKind::RoleLabeling) {
    block.product_spans = runs_of(pending.product_column);
    if (block.product_spans.size() != block.label_columns.size()) {
      throw ParseError(ErrorKind::MalformedLine, pending.first_line,
                       "block has " + std::to_string(block.product_spans.size()) +
                           " product spans but " + std::to_string(block.label_columns.size()) +
                           " role columns");
    }
  }

  const std::size_t limit = scheme.max_length();
  if (block.tokens.size() > limit) {
    if (warnings) {
      warnings->push_back("sentence at line " + std::to_string(pending.first_line) +
                          " truncated from " + std::to_string(block.tokens.size()) + " to " +
                          std::to_string(limit) + " tokens");
    }
    block.tokens.resize(limit);
    std::vector<std::vector<TagIndex>> kept_cols;
    std::vector<TokenSpan> kept_spans;
    for (std::size_t c = 0; c < block.label_columns.size(); ++c) {
      auto col = block.label_columns[c];
      col.resize(limit);
      if (scheme.task() == TaskKind::RoleLabeling) {
        TokenSpan span = block.product_spans[c];
        if (span.start >= limit) continue;
        span.end = std::min(span.end, limit - 1);
        kept_spans.push_back(span);
      }
      kept_cols.push_back(std::move(col));
    }
    block.label_columns = std::move(kept_cols);
    block.product_spans = std::move(kept_spans);
  }
  return block;
}

}  // namespace

void validate_block(const SentenceBlock& block, const LabelScheme& scheme) {
  const auto id = std::to_string(block.id);
  if (block.tokens.empty()) throw Error(ErrorKind::MalformedLine, "sentence " + id + " is empty");
  if (block.label_columns.empty()) {
    throw Error(ErrorKind::MalformedLine, "sentence " + id + " has no label column");
  }
  if (scheme.task() == TaskKind::ProductExtraction) {
    if (block.label_columns.size() != 1 || !block.product_spans.empty()) {
      throw Error(ErrorKind::MalformedLine,
                  "product sentence " + id + " must have exactly one label column");
    }
  } else if (block.product_spans.size() != block.label_columns.size()) {
    throw Error(ErrorKind::MalformedLine,
                "role sentence " + id + " product spans do not align with label columns");
  }
  for (const auto& col : block.label_columns) {
    if (col.size() != block.tokens.size()) {
      throw Error(ErrorKind::MalformedLine, "sentence " + id + " column length mismatch");
    }
    for (TagIndex t : col) {
      if (t < 0 || static_cast<std::size_t>(t) >= scheme.size()) {
        throw Error(ErrorKind::InvalidTag, "sentence " + id + " has tag index out of scheme");
      }
    }
    if (!is_bio_valid(col)) {
      throw Error(ErrorKind::BioViolation, "sentence " + id + " is not BIO-valid");
    }
  }
  for (const auto& s : block.product_spans) {
    if (s.start > s.end || s.end >= block.tokens.size()) {
      throw Error(ErrorKind::IndexOutOfRange, "sentence " + id + " product span out of range");
    }
  }
}

std::vector<SentenceBlock> parse_conll(std::string_view text, const LabelScheme& scheme,
                                       const ParseOptions& options) {
  const bool role = scheme.task() == TaskKind::RoleLabeling;
  const LabelScheme prod_scheme = LabelScheme::product();
  std::vector<SentenceBlock> blocks;
  PendingBlock pending;
  std::size_t expected_cols = 0;
  SentenceId next_id = options.first_id;

  auto flush = [&] {
    if (pending.tokens.empty()) return;
    blocks.push_back(finish_block(pending, scheme, next_id++, options.warnings));
    pending = PendingBlock{};
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (is_blank(line)) {
      flush();
      continue;
    }
    const auto fields = split_tabs(line);
    if (pending.tokens.empty()) {
      expected_cols = fields.size();
      pending.first_line = line_no;
      const bool ok = role ? fields.size() >= 3 : fields.size() == 2;
      if (!ok) {
        throw ParseError(ErrorKind::MalformedLine, line_no,
                         "expected " + std::string(role ? "at least 3" : "2") +
                             " tab-separated columns, got " + std::to_string(fields.size()));
      }
      pending.columns.resize(role ? fields.size() - 2 : 1);
    } else if (fields.size() != expected_cols) {
      throw ParseError(ErrorKind::MalformedLine, line_no,
                       "expected " + std::to_string(expected_cols) + " columns, got " +
                           std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw ParseError(ErrorKind::MalformedLine, line_no, "empty token");

    pending.lines.push_back(line_no);
    pending.tokens.emplace_back(fields[0]);
    std::size_t first_label = 1;
    if (role) {
      const auto tag = prod_scheme.index_of(fields[1]);
      if (!tag) {
        throw ParseError(ErrorKind::InvalidTag, line_no,
                         "product-span tag '" + std::string(fields[1]) + "' not in {O, B-Prod, I-Prod}");
      }
      pending.product_column.push_back(*tag);
      first_label = 2;
    }
    for (std::size_t c = first_label; c < fields.size(); ++c) {
      const auto tag = scheme.index_of(fields[c]);
      if (!tag) {
        throw ParseError(ErrorKind::InvalidTag, line_no,
                         "tag '" + std::string(fields[c]) + "' not in label scheme");
      }
      pending.columns[c - first_label].push_back(*tag);
    }
  }
  flush();
  return blocks;
}

std::string serialize_conll(std::span<const SentenceBlock> blocks, const LabelScheme& scheme) {
  const bool role = scheme.task() == TaskKind::RoleLabeling;
  const LabelScheme prod_scheme = LabelScheme::product();
  std::string out;
  for (const auto& block : blocks) {
    const auto product_col = role ? span_column(block.product_spans, block.length())
                                  : std::vector<TagIndex>{};
    for (std::size_t i = 0; i < block.length(); ++i) {
      out += block.tokens[i];
      if (role) {
        out += '\t';
        out += prod_scheme.name(product_col[i]);
      }
      for (const auto& col : block.label_columns) {
        out += '\t';
        out += scheme.name(col[i]);
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

std::vector<SentenceBlock> read_conll_file(const std::string& path, const LabelScheme& scheme,
                                           const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_conll(buf.str(), scheme, options);
}

void write_conll_file(const std::string& path, std::span<const SentenceBlock> blocks,
                      const LabelScheme& scheme) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << serialize_conll(blocks, scheme);
}

bool entity_presence(const SentenceBlock& block) noexcept {
  for (const auto& col : block.label_columns) {
    for (TagIndex t : col) {
      if (t != 0) return true;
    }
  }
  return false;
}

int distinct_role_count(const SentenceBlock& block) noexcept {
  std::set<int> types;
  for (const auto& col : block.label_columns) {
    for (TagIndex t : col) {
      if (t != 0) types.insert(LabelScheme::type_of(t));
    }
  }
  return static_cast<int>(types.size());
}

// ---------------------------------------------------------------------------
// Synthetic corpora

void SynthSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidSpec, what); };
  if (!(entity_rate >= 0.0 && entity_rate <= 1.0)) fail("entity_rate must lie in [0, 1]");
  if (min_length < 1) fail("min_length must be >= 1");
  if (max_length < min_length) fail("max_length must be >= min_length");
  if (vocab_size < 20) fail("vocab_size must be >= 20");
  if (n_train == 0) fail("n_train must be >= 1");
  if (task == TaskKind::RoleLabeling) {
    if (min_roles < 1 || max_roles < min_roles || max_roles > 8) {
      fail("role range must satisfy 1 <= min_roles <= max_roles <= 8");
    }
    if (min_products < 1 || max_products < min_products) {
      fail("product range must satisfy 1 <= min_products <= max_products");
    }
  }
  // Context words plus the longest possible mentions must fit the scheme.
  const std::size_t mention_tokens =
      task == TaskKind::ProductExtraction ? 2 * 4 : 2 * max_products + 2 * max_roles;
  if (max_length + mention_tokens > LabelScheme::for_task(task).max_length()) {
    fail("max_length leaves no room for mentions within the sentence limit");
  }
}

std::size_t planted_entity_count(std::size_t n, double entity_rate) noexcept {
  return std::min(n, static_cast<std::size_t>(std::floor(entity_rate * static_cast<double>(n) + 0.5)));
}

namespace {

// Sub-vocabularies carved out of vocab_size. Chemical names are shared by
// products and reactants; each remaining role owns a small lexicon.
constexpr std::size_t kCueWords = 4;

struct SynthLexicon {
  std::vector<std::string> context;
  std::vector<std::string> chemicals;
  std::vector<std::string> cues;  // precede product mentions in the product task
  std::vector<std::vector<std::string>> role_words;  // indexed by role type

  explicit SynthLexicon(const SynthSpec& spec) {
    const std::size_t n_chem = std::max<std::size_t>(4, spec.vocab_size / 5);
    std::size_t used = n_chem;
    for (std::size_t i = 0; i < n_chem; ++i) chemicals.push_back("chem" + std::to_string(i));
    if (spec.task == TaskKind::ProductExtraction) {
      for (std::size_t i = 0; i < kCueWords; ++i) cues.push_back("cue" + std::to_string(i));
      used += kCueWords;
    }
    if (spec.task == TaskKind::RoleLabeling) {
      const auto names = LabelScheme::role().types();
      role_words.resize(names.size());
      const std::size_t per_role = std::max<std::size_t>(2, spec.vocab_size / 40);
      for (std::size_t r = 1; r < names.size(); ++r) {
        std::string stem = names[r];
        std::transform(stem.begin(), stem.end(), stem.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        for (std::size_t i = 0; i < per_role; ++i) role_words[r].push_back(stem + std::to_string(i));
        used += per_role;
      }
    }
    const std::size_t n_context = spec.vocab_size > used + 8 ? spec.vocab_size - used : 8;
    for (std::size_t i = 0; i < n_context; ++i) context.push_back("w" + std::to_string(i));
  }
};

struct Mention {
  int kind;  // -1 product, otherwise role type
  std::vector<std::string> words;
  std::string cue;  // untagged word right before the mention, may be empty
};

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

// Lays mentions out in shuffled order with at least one context word
// between consecutive mentions, padding with context to the drawn length.
struct Layout {
  std::vector<std::string> tokens;
  std::vector<TokenSpan> spans;  // aligned with mentions
};

Layout lay_out(Rng& rng, const SynthSpec& spec, const SynthLexicon& lex,
               std::vector<Mention>& mentions) {
  for (std::size_t i = mentions.size(); i > 1; --i) std::swap(mentions[i - 1], mentions[rng.below(i)]);
  // The drawn length counts context words only; mentions come on top.
  const std::size_t length = static_cast<std::size_t>(rng.between(
      static_cast<std::int64_t>(spec.min_length), static_cast<std::int64_t>(spec.max_length)));
  const std::size_t gaps_needed = mentions.empty() ? 0 : mentions.size() - 1;

  // Distribute context words into mentions.size() + 1 gaps.
  std::vector<std::size_t> gap(mentions.size() + 1, 0);
  for (std::size_t i = 1; i + 1 < gap.size(); ++i) gap[i] = 1;
  std::size_t free_slots = length > gaps_needed ? length - gaps_needed : 0;
  while (free_slots-- > 0) ++gap[rng.below(gap.size())];

  Layout out;
  for (std::size_t m = 0; m <= mentions.size(); ++m) {
    for (std::size_t g = 0; g < gap[m]; ++g) out.tokens.push_back(pick(rng, lex.context));
    if (m == mentions.size()) break;
    if (!mentions[m].cue.empty()) out.tokens.push_back(mentions[m].cue);
    const std::size_t start = out.tokens.size();
    for (const auto& w : mentions[m].words) out.tokens.push_back(w);
    out.spans.push_back({start, out.tokens.size() - 1});
  }
  return out;
}

std::vector<std::string> draw_words(Rng& rng, const std::vector<std::string>& lexicon,
                                    std::size_t min_len, std::size_t max_len) {
  const auto n = static_cast<std::size_t>(
      rng.between(static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(max_len)));
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back(pick(rng, lexicon));
  return words;
}

void tag_span(std::vector<TagIndex>& col, const TokenSpan& span, int type) {
  col[span.start] = LabelScheme::begin_of(type);
  for (std::size_t i = span.start + 1; i <= span.end; ++i) col[i] = LabelScheme::inside_of(type);
}

SentenceBlock synth_product_block(Rng& rng, const SynthSpec& spec, const SynthLexicon& lex,
                                  bool with_entity) {
  std::vector<Mention> mentions;
  if (with_entity) {
    const auto n = static_cast<std::size_t>(rng.between(1, 2));
    for (std::size_t i = 0; i < n; ++i) {
      auto words = draw_words(rng, lex.chemicals, 1, 3);
      mentions.push_back({-1, std::move(words), pick(rng, lex.cues)});
    }
  }
  Layout layout = lay_out(rng, spec, lex, mentions);
  SentenceBlock block;
  block.tokens = std::move(layout.tokens);
  block.label_columns.assign(1, std::vector<TagIndex>(block.tokens.size(), 0));
  for (const auto& span : layout.spans) tag_span(block.label_columns[0], span, 0);
  return block;
}

SentenceBlock synth_role_block(Rng& rng, const SynthSpec& spec, const SynthLexicon& lex,
                               bool with_entity) {
  constexpr int kReactants = 0;
  const std::size_t n_roles_total = LabelScheme::role().types().size();
  std::vector<Mention> mentions;
  const std::size_t n_products =
      with_entity ? static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(spec.min_products),
                                                         static_cast<std::int64_t>(spec.max_products)))
                  : 1;
  for (std::size_t i = 0; i < n_products; ++i) mentions.push_back({-1, draw_words(rng, lex.chemicals, 1, 2), {}});
  if (with_entity) {
    std::vector<int> roles(n_roles_total);
    std::iota(roles.begin(), roles.end(), 0);
    for (std::size_t i = roles.size(); i > 1; --i) std::swap(roles[i - 1], roles[rng.below(i)]);
    const auto n_roles = static_cast<std::size_t>(rng.between(
        static_cast<std::int64_t>(spec.min_roles), static_cast<std::int64_t>(spec.max_roles)));
    for (std::size_t r = 0; r < n_roles; ++r) {
      const int role = roles[r];
      const auto& lexicon = role == kReactants ? lex.chemicals : lex.role_words[role];
      mentions.push_back({role, draw_words(rng, lexicon, 1, 2), {}});
    }
  }
  Layout layout = lay_out(rng, spec, lex, mentions);

  SentenceBlock block;
  block.tokens = std::move(layout.tokens);
  std::vector<TokenSpan> products;
  for (std::size_t m = 0; m < mentions.size(); ++m) {
    if (mentions[m].kind == -1) products.push_back(layout.spans[m]);
  }
  std::sort(products.begin(), products.end(),
            [](const TokenSpan& a, const TokenSpan& b) { return a.start < b.start; });
  for (const auto& product : products) {
    std::vector<TagIndex> col(block.tokens.size(), 0);
    for (std::size_t m = 0; m < mentions.size(); ++m) {
      const auto& span = layout.spans[m];
      if (mentions[m].kind == -1) {
        // A sibling product reads as a reactant of the conditioning one.
        if (!(span == product)) tag_span(col, span, kReactants);
      } else {
        tag_span(col, span, mentions[m].kind);
      }
    }
    block.label_columns.push_back(std::move(col));
  }
  block.product_spans = std::move(products);
  return block;
}

std::vector<SentenceBlock> synth_split(Rng& rng, const SynthSpec& spec, const SynthLexicon& lex,
                                       std::size_t n, SentenceId& next_id) {
  std::vector<bool> has_entity(n, false);
  const std::size_t n_entity = planted_entity_count(n, spec.entity_rate);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  for (std::size_t i = 0; i < n_entity; ++i) has_entity[order[i]] = true;

  std::vector<SentenceBlock> blocks;
  blocks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SentenceBlock b = spec.task == TaskKind::ProductExtraction
                          ? synth_product_block(rng, spec, lex, has_entity[i])
                          : synth_role_block(rng, spec, lex, has_entity[i]);
    b.id = next_id++;
    blocks.push_back(std::move(b));
  }
  return blocks;
}

}  // namespace

Corpus generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  const SynthLexicon lex(spec);
  Corpus corpus;
  corpus.scheme = LabelScheme::for_task(spec.task);
  Rng rng(hash_combine(spec.seed, static_cast<std::uint64_t>(SeedPurpose::Synthetic)));
  SentenceId next_id = 0;
  corpus.train = synth_split(rng, spec, lex, spec.n_train, next_id);
  corpus.val = synth_split(rng, spec, lex, spec.n_val, next_id);
  corpus.test = synth_split(rng, spec, lex, spec.n_test, next_id);
  return corpus;
}

std::uint64_t corpus_fingerprint(const Corpus& corpus) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  feed(to_string(corpus.scheme.task()));
  for (const auto* split : {&corpus.train, &corpus.val, &corpus.test}) {
    feed("\x1e");
    feed(serialize_conll(*split, corpus.scheme));
  }
  return h;
}

}  // namespace seqal
