#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylemux/rng.hpp"
#include "stylemux/text_pipeline.hpp"

namespace stylemux::corpus {

// Fixed name<->id registry for languages and styles. Ids are positions in the
// construction order and stay stable across save/load.
class Registry {
 public:
  Registry() = default;
  explicit Registry(std::vector<std::string> names);

  int id(const std::string& name) const;     // ConfigError when unknown
  const std::string& name(int id) const;     // IndexError when out of range
  bool contains(const std::string& name) const;
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

// A tokenized sentence pair within one style. Training pairs always cross
// languages; same-language pairs only appear at inference.
struct ParallelPair {
  std::vector<std::string> src_toks, tgt_toks;
  int src_lang = -1, tgt_lang = -1, style = -1;
};

// ---- filtering ----

enum class FilterVerdict { kKeep, kEmpty, kTooLong, kNoAlpha, kRatio };
const char* filter_verdict_name(FilterVerdict v);

struct FilterConfig {
  int max_tokens = 100;
  double max_ratio = 9.0;
};

// Rules fire in a fixed order: empty side, then over-long side, then a side
// with no alphabetic character, then token-length ratio strictly above the
// cap. The verdict names the first rule that fired.
FilterVerdict filter_pair(const std::vector<std::string>& src_toks,
                          const std::vector<std::string>& tgt_toks,
                          const FilterConfig& cfg = {});

struct FilterStats {
  int64_t kept = 0, empty = 0, too_long = 0, no_alpha = 0, ratio = 0;
  int64_t total() const { return kept + empty + too_long + no_alpha + ratio; }
  void count(FilterVerdict v);
  std::string summary() const;
};

std::vector<ParallelPair> filter_corpus(const std::vector<ParallelPair>& pairs,
                                        FilterStats& stats, const FilterConfig& cfg = {});

// ---- factored examples ----

// One training example: source piece ids with token-parallel target-language
// and target-style factor ids (constant within the example), and target piece
// ids wrapped in BOS/EOS.
struct FactoredExample {
  std::vector<int> src_ids;
  std::vector<int> factor_lang;
  std::vector<int> factor_style;
  std::vector<int> tgt_ids;

  bool operator==(const FactoredExample&) const = default;
};

// Number of target positions the loss runs over (the BOS slot predicts the
// first real token, so this is length minus one). Batch budgets count these.
int target_words(const FactoredExample& e);

FactoredExample annotate_factors(const std::vector<std::string>& src_toks,
                                 const std::vector<std::string>& tgt_toks, int tgt_lang,
                                 int tgt_style, const text::SubwordVocabulary& vocab,
                                 int num_langs, int num_styles);

// ---- batching ----

// Row-major padded id matrices, one row per example. Factor rows are padded
// with zeros; true lengths are in src_lens/tgt_lens.
struct Batch {
  std::vector<int> example_ids;  // indices into the example vector fed to build_batches
  int src_len = 0, tgt_len = 0;  // padded row widths
  std::vector<int> src, factor_lang, factor_style, tgt;
  std::vector<int> src_lens, tgt_lens;
  int size() const { return static_cast<int>(example_ids.size()); }
};

// Shuffles, orders by target length so batches pad little, then greedily
// fills batches up to max_words target words each and shuffles the batch
// order. Every example lands in exactly one batch.
std::vector<Batch> build_batches(const std::vector<FactoredExample>& examples, int max_words,
                                 Rng& rng);

// ---- direction enumeration ----

struct Direction {
  int src_lang, tgt_lang, style;
  bool operator==(const Direction&) const = default;
};

// All ordered language pairs crossed with styles; no cross-style tasks ever.
// Fewer than two languages yields an empty list.
std::vector<Direction> enumerate_directions(int num_langs, int num_styles);

// ---- file formats ----

// Line-aligned paired text files. Throws DataError on a length mismatch.
std::vector<ParallelPair> read_parallel(const std::string& src_path,
                                        const std::string& tgt_path);

// TSV shards: space-separated src piece ids, lang factor ids, style factor
// ids, tgt piece ids. One example per line.
void write_shard(const std::string& path, const std::vector<FactoredExample>& examples);
std::vector<FactoredExample> read_shard(const std::string& path);

}  // namespace stylemux::corpus
