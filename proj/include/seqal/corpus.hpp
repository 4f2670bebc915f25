#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seqal {

enum class TaskKind { ProductExtraction, RoleLabeling };

std::string_view to_string(TaskKind kind) noexcept;
TaskKind parse_task_kind(std::string_view name);

using TagIndex = int;
using SentenceId = std::int64_t;

// Ordered tag inventory. Index 0 is always "O"; entity type t (0-based)
// owns B at 1 + 2t and I at 2 + 2t.
class LabelScheme {
 public:
  static LabelScheme product();
  static LabelScheme role();
  static LabelScheme for_task(TaskKind kind);

  TaskKind task() const noexcept { return task_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  // Entity type names: {"Prod"} for products, the eight role names otherwise.
  const std::vector<std::string>& types() const noexcept { return types_; }
  // Role names; empty for the product task.
  std::vector<std::string> roles() const;

  std::size_t size() const noexcept { return labels_.size(); }
  std::optional<TagIndex> index_of(std::string_view tag) const;
  const std::string& name(TagIndex tag) const { return labels_.at(static_cast<std::size_t>(tag)); }

  static bool is_outside(TagIndex tag) noexcept { return tag == 0; }
  static bool is_begin(TagIndex tag) noexcept { return tag > 0 && tag % 2 == 1; }
  static bool is_inside(TagIndex tag) noexcept { return tag > 0 && tag % 2 == 0; }
  // Entity type of a B/I tag, -1 for O.
  static int type_of(TagIndex tag) noexcept { return tag == 0 ? -1 : (tag - 1) / 2; }
  static TagIndex begin_of(int type) noexcept { return 1 + 2 * type; }
  static TagIndex inside_of(int type) noexcept { return 2 + 2 * type; }

  // Longest sentence kept at parse time.
  std::size_t max_length() const noexcept;

 private:
  LabelScheme(TaskKind task, std::vector<std::string> types);

  TaskKind task_;
  std::vector<std::string> types_;
  std::vector<std::string> labels_;
};

// Inclusive token range.
struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct SentenceBlock {
  SentenceId id = 0;
  std::vector<std::string> tokens;
  // One column in the product task, one per conditioning product otherwise.
  std::vector<std::vector<TagIndex>> label_columns;
  // Aligned 1:1 with label_columns in the role task; empty for products.
  std::vector<TokenSpan> product_spans;

  std::size_t length() const noexcept { return tokens.size(); }

  friend bool operator==(const SentenceBlock&, const SentenceBlock&) = default;
};

struct Corpus {
  LabelScheme scheme = LabelScheme::product();
  std::vector<SentenceBlock> train;
  std::vector<SentenceBlock> val;
  std::vector<SentenceBlock> test;
};

// True when every I-X is preceded by B-X or I-X.
bool is_bio_valid(std::span<const TagIndex> tags) noexcept;

// Throws BioViolation / InvalidTag / MalformedLine on a structurally bad block.
void validate_block(const SentenceBlock& block, const LabelScheme& scheme);

struct ParseOptions {
  SentenceId first_id = 0;
  // Sentences longer than the scheme's maximum are truncated; a warning is
  // written here when non-null.
  std::vector<std::string>* warnings = nullptr;
};

// Column layout, tab separated, blank line between sentences:
//   product task: token, tag
//   role task:    token, product-span column (B-Prod/I-Prod/O), role column...
// In the role task the k-th Prod run of column 1 conditions the k-th role
// column.
std::vector<SentenceBlock> parse_conll(std::string_view text, const LabelScheme& scheme,
                                       const ParseOptions& options = {});

std::string serialize_conll(std::span<const SentenceBlock> blocks, const LabelScheme& scheme);

std::vector<SentenceBlock> read_conll_file(const std::string& path, const LabelScheme& scheme,
                                           const ParseOptions& options = {});
void write_conll_file(const std::string& path, std::span<const SentenceBlock> blocks,
                      const LabelScheme& scheme);

// Any non-O tag in any column.
bool entity_presence(const SentenceBlock& block) noexcept;
// Number of distinct entity types appearing across all columns.
int distinct_role_count(const SentenceBlock& block) noexcept;

struct SynthSpec {
  TaskKind task = TaskKind::ProductExtraction;
  std::size_t n_train = 500;
  std::size_t n_val = 100;
  std::size_t n_test = 100;
  std::size_t vocab_size = 400;
  std::size_t min_length = 8;
  std::size_t max_length = 24;
  double entity_rate = 0.3;
  // Distinct roles planted per entity-bearing role block.
  std::size_t min_roles = 1;
  std::size_t max_roles = 4;
  // Conditioning products per entity-bearing role block.
  std::size_t min_products = 1;
  std::size_t max_products = 2;
  std::uint64_t seed = 0;

  // Throws InvalidSpec.
  void validate() const;
};

// Deterministic given the spec. Entity tokens come from sub-vocabularies
// disjoint from the context vocabulary. Ids run 0.. across train, val, test.
Corpus generate_synthetic(const SynthSpec& spec);

// Number of sentences in a split of size n that carry entities.
std::size_t planted_entity_count(std::size_t n, double entity_rate) noexcept;

// FNV-1a over the serialized splits.
std::uint64_t corpus_fingerprint(const Corpus& corpus);

}  // namespace seqal
