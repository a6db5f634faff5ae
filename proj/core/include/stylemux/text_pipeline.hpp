#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace stylemux::text {

// ---- tokenization ----
//
// Deterministic rule tokenizer. Punctuation splits off as single-codepoint
// tokens, apostrophe contractions split with the clitic kept on the
// apostrophe ("I'll" -> "I 'll", "don't" -> "do n't"), and digit-internal
// [.,:] stay inside the token ("3.14"). Hyphens count as word characters.
// detokenize(tokenize(s)) reproduces s up to whitespace normalization for
// text in this shape; mid-sentence single-quote quotation is the documented
// exception (a leading apostrophe always reads as a clitic).
std::vector<std::string> tokenize(const std::string& raw, const std::string& lang = {});
std::string detokenize(const std::vector<std::string>& tokens);

// True when the codepoint starting at s[i] is a letter. ASCII letters plus
// everything above 0x7f (accented Latin and anything else non-ASCII).
bool has_alpha(const std::string& token);

// ---- truecasing ----
//
// Frequency model over surface casings, keyed by the ASCII-lowercased word.
// apply() rewrites only the sentence-initial token to its most frequent
// casing; invert() restores sentence-initial capitalization.
class TruecaseModel {
 public:
  static TruecaseModel train(const std::vector<std::vector<std::string>>& corpus);

  // Most frequent casing for the word (keyed lowercased). Ties prefer the
  // all-lowercase variant, then the lexicographically smallest. Returns the
  // input unchanged for unseen words.
  std::string best_casing(const std::string& word) const;

  std::vector<std::string> apply(std::vector<std::string> tokens) const;
  static std::vector<std::string> invert(std::vector<std::string> tokens);

  void save(const std::string& path) const;
  static TruecaseModel load(const std::string& path);

  size_t vocab_size() const { return counts_.size(); }

 private:
  // lowercased word -> casing variant -> count
  std::map<std::string, std::map<std::string, int64_t>> counts_;
};

// ---- subword vocabulary ----
//
// Byte-pair encoding over whole words. Merges are learned greedily by pair
// frequency (ties break lexicographically); non-final pieces of a word carry
// the "@@" continuation suffix. Ids 0..3 are reserved for PAD/BOS/EOS/UNK.
class SubwordVocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  struct MergeRule {
    std::string left, right;  // internal symbols; word-final ones end in "</w>"
  };

  // vocab_size counts reserved ids, both piece forms of every alphabet
  // character, and one piece per merge. Too small a budget for the alphabet
  // is a config error; merging stops early once no pair repeats.
  static SubwordVocabulary learn(const std::map<std::string, int64_t>& word_counts, int vocab_size);
  static SubwordVocabulary learn_from_corpus(const std::vector<std::vector<std::string>>& sentences,
                                             int vocab_size);

  std::vector<int> encode_word(const std::string& word) const;
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  // Drops PAD/BOS/EOS, renders unknown ids' piece as "<unk>", and joins
  // continuation pieces back into whole tokens.
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  int piece_to_id(const std::string& piece) const;  // kUnk when absent
  const std::string& id_to_piece(int id) const;     // throws IndexError
  int size() const { return static_cast<int>(pieces_.size()); }
  const std::vector<MergeRule>& merges() const { return merges_; }

  void save(const std::string& path) const;
  static SubwordVocabulary load(const std::string& path);

 private:
  struct Cache {
    std::shared_mutex mu;
    std::unordered_map<std::string, std::vector<int>> words;
  };

  std::vector<MergeRule> merges_;
  std::vector<std::string> pieces_;                // id -> piece
  std::map<std::string, int> piece_ids_;           // piece -> id
  std::unordered_map<std::string, int> merge_rank_;
  std::unique_ptr<Cache> cache_ = std::make_unique<Cache>();

  void index_merges();
  std::vector<int> segment(const std::string& word) const;
};

}  // namespace stylemux::text
