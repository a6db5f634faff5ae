#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace stylemux::metrics {

// Corpus-level BLEU-4 accumulator. Counts are pooled across sentences and the
// score is the geometric mean of clipped modified n-gram precisions times the
// brevity penalty. Tokens are compared after ASCII lowercasing. No smoothing:
// an order with hypothesis n-grams but zero matches zeroes the score. Orders
// with no hypothesis n-grams at all (corpora shorter than 4 tokens) drop out
// of the mean so identity still scores 1.
struct BleuStats {
  std::array<int64_t, 4> match{};  // clipped n-gram matches, n = index + 1
  std::array<int64_t, 4> total{};  // hypothesis n-gram counts
  int64_t hyp_len = 0;
  int64_t ref_len = 0;

  void add(const std::vector<std::string>& hyp, const std::vector<std::string>& ref);
  BleuStats& operator+=(const BleuStats& other);

  double precision(int n) const;  // n in [1,4]
  double brevity_penalty() const;
  double score() const;  // in [0,1]
};

// Single-reference corpus BLEU. Throws DataError when line counts differ.
double bleu(const std::vector<std::vector<std::string>>& hyps,
            const std::vector<std::vector<std::string>>& refs);

// Word -> synonym-set lookup. Sets are disjoint; re-adding a known word is a
// DataError. Lookups are exact (callers lowercase).
class SynonymTable {
 public:
  void add_set(const std::vector<std::string>& words);
  std::optional<int> synset(const std::string& word) const;
  bool synonyms(const std::string& a, const std::string& b) const;
  size_t size() const { return ids_.size(); }
  int sets() const { return next_id_; }

  // One set per line, words tab-separated.
  static SynonymTable load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::unordered_map<std::string, int> ids_;
  int next_id_ = 0;
};

struct MeteorConfig {
  double alpha = 0.9;  // F = P*R / (alpha*P + (1-alpha)*R)
  double gamma = 0.5;  // penalty = gamma * (chunks/matches)^beta
  double beta = 3.0;
};

// Unigram-alignment METEOR variant. Tokens are lowercased, then aligned
// one-to-one in three stages: exact match, suffix-strip stem match, synonym
// match. Each stage scans hypothesis positions left to right and takes the
// leftmost free reference token. Chunks are maximal runs of matches adjacent
// on both sides. Score = F * (1 - penalty); no matches scores 0.
double meteor_sentence(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
                       const SynonymTable& synonyms, const MeteorConfig& cfg = {});

// Mean of per-sentence scores. Throws DataError when line counts differ.
double meteor_lite(const std::vector<std::vector<std::string>>& hyps,
                   const std::vector<std::vector<std::string>>& refs,
                   const SynonymTable& synonyms, const MeteorConfig& cfg = {});

// Suffix stripping used by the stem stage: removes one of ing/ed/ly/es/s when
// at least three characters remain. Exposed for tests.
std::string strip_suffix(const std::string& word);

// Count clitic tokens ('ll 's 're 've 'd 'm n't 't, case-insensitive) in
// tokenized text where the tokenizer has already split contractions off.
int count_contractions(const std::vector<std::string>& tokens);
int64_t count_contractions(const std::vector<std::vector<std::string>>& corpus);

// 100*(after-before)/before; empty when the baseline is zero.
std::optional<double> relative_style_change(double before_pct, double after_pct);
// 100*(same-cross)/same; empty when the same-style score is zero.
std::optional<double> relative_metric_decrease(double same_style_score, double cross_style_score);

// One source-style x target-style cell of an evaluation grid.
struct StyleCell {
  double bleu = 0.0;
  double meteor = 0.0;
  int64_t contractions_ref = 0;  // in the human reference
  int64_t contractions_sys = 0;  // in the system output
  double classified_ref_pct = 0.0;  // references recognized as the target style
  double classified_sys_pct = 0.0;  // system output recognized as the target style
  bool same_style = false;
  std::optional<double> style_change_pct;
  std::optional<double> bleu_decrease_pct;    // vs the same-row diagonal
  std::optional<double> meteor_decrease_pct;  // vs the same-row diagonal

  bool operator==(const StyleCell&) const = default;
};

// S x S grid of translation results between styles, mirroring the layout the
// metrics are reported in: one matrix per measure, rows = source style,
// columns = target style. finalize() derives the percentage cells; the TSV
// form carries raw values and parses back losslessly; render() shows scores
// scaled by 100 like conventional BLEU reporting.
struct EvalReport {
  std::vector<std::string> styles;
  std::map<std::string, std::string> meta;
  std::vector<StyleCell> cells;  // row-major src x tgt

  explicit EvalReport(std::vector<std::string> style_names);

  StyleCell& cell(int src, int tgt);
  const StyleCell& cell(int src, int tgt) const;

  // Marks diagonal cells, computes style_change_pct everywhere and the metric
  // decreases off-diagonal against the same-row diagonal.
  void finalize();

  std::string to_tsv() const;
  static EvalReport from_tsv(const std::string& text);
  std::string render() const;
};

}  // namespace stylemux::metrics
