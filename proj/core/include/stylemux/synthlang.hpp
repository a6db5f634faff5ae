#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylemux/metrics.hpp"

namespace stylemux::synth {

// Configuration for a family of synthetic languages over one shared concept
// vocabulary. Languages are bijective relexifications plus a word-order rule,
// so exact translations and cross-style references exist by construction.
// Styles differ only in surface realization, never in concept sequence: a
// slice of the vocabulary carries style-specific variants (20% of it at the
// defaults) and style 0 contracts auxiliaries into apostrophe clitics.
struct SynthSpec {
  uint64_t seed = 1;
  int num_langs = 3;
  int num_styles = 3;
  int vocab_size = 150;  // concepts, including the marked groups below

  // Style-marked concept groups:
  //  A  variants share a stem and differ in a per-(language,style) suffix, a
  //     productive rule learnable from the style factor alone; exactly one is
  //     planted per sentence so the styles stay classifier-separable
  //  B  unrelated stems; style 0 has its own form, styles 1..n-1 share one
  //  C  unrelated stems; whether a language distinguishes styles at all is a
  //     per-(cid,language) coin (forced mixed), so for pairs where only
  //     the target side distinguishes, the style factor is the only signal
  int num_group_a = 8;
  int num_group_b = 8;
  int num_group_c = 8;
  // Auxiliary concepts. Style 0 realizes them as one of the clitic tokens
  // 'll 's 're 've 'd 'm attached to the preceding word; other styles use a
  // per-language expanded word shared by styles 1..n-1.
  int num_aux = 6;

  int min_len = 4;  // sentence length bounds, in concepts
  int max_len = 12;
  double contraction_rate = 0.35;  // fraction of sentences with an auxiliary
  int num_dev = 500;               // per style
  int num_test = 500;              // one pool shared across the whole grid

  void validate() const;  // ConfigError on out-of-range fields
  bool operator==(const SynthSpec&) const = default;
};

enum class ConceptGroup { kUnmarked, kGroupA, kGroupB, kGroupC, kAux };

// Concept ids are laid out contiguously: unmarked first, then groups A, B, C
// and the auxiliaries last, so ids below aux_base() form the sampling pool.
struct SynthLexicon {
  SynthSpec spec;
  // (lang * num_styles + style) * vocab_size + concept -> surface form.
  // Forms are lowercase CV-syllable words ending in vowels, globally unique
  // except the clitics, which are shared across languages on purpose.
  std::vector<std::string> forms;
  // lang * vocab_size + concept -> whether this language gives the concept
  // style-distinct forms (groups A/B/aux everywhere, the coin for group C).
  std::vector<uint8_t> variantful;
  std::unordered_map<std::string, int> form_to_concept;

  int unmarked_base() const { return 0; }
  int group_a_base() const;
  int group_b_base() const;
  int group_c_base() const;
  int aux_base() const;
  ConceptGroup group(int cid) const;

  const std::string& form(int lang, int style, int cid) const;
  bool is_variantful(int lang, int cid) const;
  int concept_of(const std::string& lowercased_form) const;  // -1 when unknown

  bool operator==(const SynthLexicon&) const = default;
};

// Deterministic in spec.seed; byte-identical lexicons for equal specs.
SynthLexicon build_lexicon(const SynthSpec& spec);

// Surface word order. Language 0 keeps concept order, language 1 reverses,
// language 2 swaps adjacent pairs, languages 3+ rotate left by their id.
// perm[i] is the concept position shown at surface slot i.
std::vector<int> order_permutation(int lang, int len);

// Count of (lang,cid) slots whose surface forms differ anywhere between
// the two styles; the grid's style-dissimilarity measure.
int differing_forms(const SynthLexicon& lex, int style_a, int style_b);

struct SynthExample {
  std::vector<int> concepts;
  int marker_pos = -1;  // planted group A position, in concept order
  int aux_pos = -1;     // planted auxiliary position, -1 when none
  // (lang * num_styles + style) -> raw emitted line.
  std::vector<std::string> cells;

  bool operator==(const SynthExample&) const = default;
};

// Tokens of one grid cell: permuted word order, one token per cid, with
// clitics as their own "'xx" tokens exactly as the tokenizer would yield.
std::vector<std::string> realize_tokens(const SynthLexicon& lex, const std::vector<int>& concepts,
                                        int lang, int style);

// Raw text form of the same cell: clitic tokens attach to the preceding word
// ("kato" + "'ll" -> "kato'll") and the first character is uppercased, which
// tokenization plus truecasing undoes exactly.
std::string render_line(const SynthLexicon& lex, const std::vector<int>& concepts, int lang,
                        int style);

// Inverts a raw emitted line back to its concept sequence through the
// tokenizer, the lexicon and the language's order rule. Style is not needed:
// forms identify their concept unambiguously. DataError on unknown forms.
std::vector<int> parse_concepts(const SynthLexicon& lex, const std::string& raw_line, int lang);

struct SynthCorpus {
  // train[style] and dev[style] are drawn independently per style, so the
  // emission carries no cross-style parallel signal at all; test is one pool
  // realized for every (lang, style) cell of the grid.
  std::vector<std::vector<SynthExample>> train;
  std::vector<std::vector<SynthExample>> dev;
  std::vector<SynthExample> test;
};

struct SynthData {
  SynthLexicon lexicon;
  SynthCorpus corpus;
};

// Deterministic given the spec; sentence draws are seeded per (pool, index,
// attempt) and concept sequences are distinct across all pools. Throws
// ConfigError when the vocabulary cannot support that many distinct
// sentences.
SynthData generate(const SynthSpec& spec, int num_train);

// One synonym set per concept with any style-variant form, holding all of
// its surface forms across languages and styles. Forms are globally unique,
// so same-language hypothesis/reference scoring only ever sees the intended
// variants of a set.
metrics::SynonymTable synonym_table(const SynthLexicon& lex);

// Writes the corpus family under out_dir:
//   train.s{S}.l{A}-l{B}.src/.tgt  line-aligned ordered language pairs,
//   dev.s{S}.l{A}-l{B}.src/.tgt    both sides always the same style S
//   test.l{L}.s{S}.txt             grid cell, line-aligned across all cells
//   test.meta.jsonl                per-sentence ground truth sidecar
//   lexicon.json                   spec + lexicon, reloadable
//   synonyms.tsv                   metrics::SynonymTable format
void write_corpus(const SynthData& data, const std::string& out_dir);

void save_lexicon(const SynthLexicon& lex, const std::string& path);
SynthLexicon load_lexicon(const std::string& path);

void save_sidecar(const std::vector<SynthExample>& examples, const std::string& path);
std::vector<SynthExample> load_sidecar(const std::string& path);

// Transfer quality against the ground-truth grid for outputs that should be
// target language tgt_lang in style tgt_style, translated from src_style
// sources. Site membership checks are containment over tokenized lowercased
// output, position-free; sites are counted once per distinct concept per
// sentence.
struct TransferScore {
  // Planted auxiliaries whose source- and target-style forms differ, and how
  // many outputs contain the exact target-style form.
  int64_t marker_sites = 0;
  int64_t marker_converted = 0;
  // All planted auxiliaries, and how many outputs contain any clitic token
  // at all; the contraction-census view of the same sites.
  int64_t clitic_sites = 0;
  int64_t clitic_hits = 0;
  // Distinct style-marked concepts whose forms differ between the styles,
  // and how many were rendered with the target style's variant.
  int64_t synonym_sites = 0;
  int64_t synonym_converted = 0;

  double marker_conversion() const;  // converted/sites; 1.0 when no sites
  double clitic_rate() const;
  double synonym_accuracy() const;
};

// Throws DataError when output and reference sentence counts differ and
// IndexError on out-of-range language or style ids.
TransferScore score_style_transfer(const SynthLexicon& lex, const std::vector<SynthExample>& refs,
                                   const std::vector<std::string>& output_lines, int tgt_lang,
                                   int src_style, int tgt_style);

}  // namespace stylemux::synth
