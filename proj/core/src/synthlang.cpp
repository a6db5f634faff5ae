#include "stylemux/synthlang.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "stylemux/errors.hpp"
#include "stylemux/io.hpp"
#include "stylemux/rng.hpp"
#include "stylemux/text_pipeline.hpp"

namespace stylemux::synth {

namespace {

using nlohmann::json;

const std::vector<std::string>& clitic_inventory() {
  static const std::vector<std::string> kClitics = {"'ll", "'s", "'re", "'ve", "'d", "'m"};
  return kClitics;
}

constexpr char kConsonants[] = "bdfghjklmnprstvz";
constexpr char kVowels[] = "aeiou";

std::string draw_syllable(Rng& rng) {
  std::string s;
  s += kConsonants[rng.uniform_int(16)];
  s += kVowels[rng.uniform_int(5)];
  return s;
}

// Fresh CV word in the given syllable range. The global dedupe set keeps
// lexicons bijective and every surface form unambiguous across languages.
std::string draw_word(Rng& rng, std::set<std::string>& used, int min_syll, int max_syll) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    int n = min_syll + rng.uniform_int(max_syll - min_syll + 1);
    std::string w;
    for (int i = 0; i < n; ++i) w += draw_syllable(rng);
    if (used.insert(w).second) return w;
  }
  throw ConfigError("wordform space exhausted; shrink the vocabulary or style/language counts");
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per (pool, style, sentence, attempt), so sentence draws
// do not depend on generation order.
uint64_t sentence_seed(uint64_t seed, int pool, int style, int index, int attempt) {
  uint64_t s = splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(pool + 1)));
  s = splitmix64(s ^ (0xbf58476d1ce4e5b9ULL * static_cast<uint64_t>(style + 1)));
  s = splitmix64(s ^ (0x94d049bb133111ebULL * static_cast<uint64_t>(index + 1)));
  return splitmix64(s ^ (0x2545f4914f6cdd1dULL * static_cast<uint64_t>(attempt + 1)));
}

}  // namespace

void SynthSpec::validate() const {
  if (num_langs < 1) throw ConfigError("num_langs must be at least 1");
  if (num_styles < 1) throw ConfigError("num_styles must be at least 1");
  if (num_group_a < 1) throw ConfigError("num_group_a must be at least 1; every sentence plants one");
  if (num_group_b < 0 || num_group_c < 0) throw ConfigError("group sizes must be nonnegative");
  if (num_aux < 1) throw ConfigError("num_aux must be at least 1");
  if (num_aux > static_cast<int>(clitic_inventory().size())) {
    throw ConfigError("num_aux exceeds the clitic inventory (" +
                      std::to_string(clitic_inventory().size()) + ")");
  }
  int marked = num_group_a + num_group_b + num_group_c + num_aux;
  if (vocab_size <= marked) {
    throw ConfigError("vocab_size " + std::to_string(vocab_size) +
                      " leaves no unmarked concepts beside " + std::to_string(marked) +
                      " marked ones");
  }
  if (min_len < 2) throw ConfigError("min_len must be at least 2; marker and auxiliary need distinct slots");
  if (max_len < min_len) throw ConfigError("max_len must be at least min_len");
  if (max_len > 100) throw ConfigError("max_len above 100 would trip the corpus length filter");
  if (contraction_rate < 0.0 || contraction_rate > 1.0) {
    throw ConfigError("contraction_rate must be in [0, 1]");
  }
  if (num_dev < 0 || num_test < 0) throw ConfigError("num_dev and num_test must be nonnegative");
}

int SynthLexicon::group_a_base() const {
  return spec.vocab_size - spec.num_group_a - spec.num_group_b - spec.num_group_c - spec.num_aux;
}
int SynthLexicon::group_b_base() const { return group_a_base() + spec.num_group_a; }
int SynthLexicon::group_c_base() const { return group_b_base() + spec.num_group_b; }
int SynthLexicon::aux_base() const { return spec.vocab_size - spec.num_aux; }

ConceptGroup SynthLexicon::group(int cid) const {
  if (cid < 0 || cid >= spec.vocab_size) {
    throw IndexError("concept id " + std::to_string(cid) + " out of range");
  }
  if (cid >= aux_base()) return ConceptGroup::kAux;
  if (cid >= group_c_base()) return ConceptGroup::kGroupC;
  if (cid >= group_b_base()) return ConceptGroup::kGroupB;
  if (cid >= group_a_base()) return ConceptGroup::kGroupA;
  return ConceptGroup::kUnmarked;
}

const std::string& SynthLexicon::form(int lang, int style, int cid) const {
  if (lang < 0 || lang >= spec.num_langs) throw IndexError("language id out of range");
  if (style < 0 || style >= spec.num_styles) throw IndexError("style id out of range");
  if (cid < 0 || cid >= spec.vocab_size) throw IndexError("concept id out of range");
  return forms[(static_cast<size_t>(lang) * spec.num_styles + style) * spec.vocab_size + cid];
}

bool SynthLexicon::is_variantful(int lang, int cid) const {
  if (lang < 0 || lang >= spec.num_langs) throw IndexError("language id out of range");
  if (cid < 0 || cid >= spec.vocab_size) throw IndexError("concept id out of range");
  return variantful[static_cast<size_t>(lang) * spec.vocab_size + cid] != 0;
}

int SynthLexicon::concept_of(const std::string& lowercased_form) const {
  auto it = form_to_concept.find(lowercased_form);
  return it == form_to_concept.end() ? -1 : it->second;
}

SynthLexicon build_lexicon(const SynthSpec& spec) {
  spec.validate();
  SynthLexicon lex;
  lex.spec = spec;
  const int m = spec.num_langs, n = spec.num_styles, V = spec.vocab_size;
  lex.forms.assign(static_cast<size_t>(m) * n * V, {});
  lex.variantful.assign(static_cast<size_t>(m) * V, 0);

  Rng rng(spec.seed);
  std::set<std::string> used(clitic_inventory().begin(), clitic_inventory().end());

  auto put = [&](int lang, int style, int cid, const std::string& w) {
    lex.forms[(static_cast<size_t>(lang) * n + style) * V + cid] = w;
  };
  auto mark = [&](int lang, int cid, bool distinct) {
    lex.variantful[static_cast<size_t>(lang) * V + cid] = distinct ? 1 : 0;
  };

  // Group A style suffixes, one per (language, style), distinct within each
  // language so a shared stem yields distinct per-style forms.
  std::vector<std::string> suffix(static_cast<size_t>(m) * n);
  for (int l = 0; l < m; ++l) {
    std::set<std::string> taken;
    for (int s = 0; s < n; ++s) {
      std::string suf;
      int attempts = 0;
      do {
        if (++attempts > 1000) throw ConfigError("style suffix inventory exhausted");
        suf = draw_syllable(rng);
      } while (!taken.insert(suf).second);
      suffix[static_cast<size_t>(l) * n + s] = suf;
    }
  }

  for (int c = 0; c < V; ++c) {
    switch (lex.group(c)) {
      case ConceptGroup::kUnmarked:
        for (int l = 0; l < m; ++l) {
          std::string w = draw_word(rng, used, 2, 4);
          for (int s = 0; s < n; ++s) put(l, s, c, w);
          mark(l, c, false);
        }
        break;
      case ConceptGroup::kGroupA:
        for (int l = 0; l < m; ++l) {
          // Redraw the stem until every suffixed form is globally fresh.
          for (int attempt = 0;; ++attempt) {
            if (attempt >= 10000) throw ConfigError("wordform space exhausted for group A stems");
            std::string stem;
            int ns = 2 + rng.uniform_int(2);
            for (int i = 0; i < ns; ++i) stem += draw_syllable(rng);
            std::vector<std::string> f(n);
            bool fresh = true;
            for (int s = 0; s < n && fresh; ++s) {
              f[s] = stem + suffix[static_cast<size_t>(l) * n + s];
              fresh = !used.count(f[s]);
            }
            if (!fresh) continue;
            for (int s = 0; s < n; ++s) {
              used.insert(f[s]);
              put(l, s, c, f[s]);
            }
            break;
          }
          mark(l, c, n > 1);
        }
        break;
      case ConceptGroup::kGroupB:
        for (int l = 0; l < m; ++l) {
          put(l, 0, c, draw_word(rng, used, 2, 4));
          if (n > 1) {
            std::string shared = draw_word(rng, used, 2, 4);
            for (int s = 1; s < n; ++s) put(l, s, c, shared);
          }
          mark(l, c, n > 1);
        }
        break;
      case ConceptGroup::kGroupC: {
        std::vector<bool> coin(m);
        for (int l = 0; l < m; ++l) coin[l] = rng.bernoulli(0.5);
        if (m >= 2) {
          // Force a mix: at least one language distinguishes the styles for
          // this concept and at least one does not.
          if (std::all_of(coin.begin(), coin.end(), [](bool b) { return b; })) coin[m - 1] = false;
          if (std::none_of(coin.begin(), coin.end(), [](bool b) { return b; })) coin[0] = true;
        }
        for (int l = 0; l < m; ++l) {
          if (coin[l] && n > 1) {
            for (int s = 0; s < n; ++s) put(l, s, c, draw_word(rng, used, 2, 4));
            mark(l, c, true);
          } else {
            std::string w = draw_word(rng, used, 2, 4);
            for (int s = 0; s < n; ++s) put(l, s, c, w);
            mark(l, c, false);
          }
        }
        break;
      }
      case ConceptGroup::kAux: {
        const std::string& clitic = clitic_inventory()[c - lex.aux_base()];
        for (int l = 0; l < m; ++l) {
          put(l, 0, c, clitic);
          if (n > 1) {
            std::string expanded = draw_word(rng, used, 2, 4);
            for (int s = 1; s < n; ++s) put(l, s, c, expanded);
          }
          mark(l, c, n > 1);
        }
        break;
      }
    }
  }

  for (int l = 0; l < m; ++l) {
    for (int s = 0; s < n; ++s) {
      for (int c = 0; c < V; ++c) lex.form_to_concept.emplace(lex.form(l, s, c), c);
    }
  }
  return lex;
}

std::vector<int> order_permutation(int lang, int len) {
  if (lang < 0) throw IndexError("language id out of range");
  if (len <= 0) return {};
  std::vector<int> perm(len);
  for (int i = 0; i < len; ++i) perm[i] = i;
  if (lang == 0) return perm;
  if (lang == 1) {
    std::reverse(perm.begin(), perm.end());
    return perm;
  }
  if (lang == 2) {
    for (int i = 0; i + 1 < len; i += 2) std::swap(perm[i], perm[i + 1]);
    return perm;
  }
  int shift = lang % len;
  for (int i = 0; i < len; ++i) perm[i] = (i + shift) % len;
  return perm;
}

int differing_forms(const SynthLexicon& lex, int style_a, int style_b) {
  int count = 0;
  for (int l = 0; l < lex.spec.num_langs; ++l) {
    for (int c = 0; c < lex.spec.vocab_size; ++c) {
      if (lex.form(l, style_a, c) != lex.form(l, style_b, c)) ++count;
    }
  }
  return count;
}

std::vector<std::string> realize_tokens(const SynthLexicon& lex, const std::vector<int>& concepts,
                                        int lang, int style) {
  std::vector<int> perm = order_permutation(lang, static_cast<int>(concepts.size()));
  std::vector<std::string> toks(concepts.size());
  for (size_t i = 0; i < concepts.size(); ++i) toks[i] = lex.form(lang, style, concepts[perm[i]]);
  return toks;
}

std::string render_line(const SynthLexicon& lex, const std::vector<int>& concepts, int lang,
                        int style) {
  std::vector<std::string> toks = realize_tokens(lex, concepts, lang, style);
  std::string line;
  for (const std::string& t : toks) {
    if (!line.empty() && t[0] != '\'') line += ' ';
    line += t;
  }
  if (!line.empty() && line[0] >= 'a' && line[0] <= 'z') {
    line[0] = static_cast<char>(line[0] - 'a' + 'A');
  }
  return line;
}

std::vector<int> parse_concepts(const SynthLexicon& lex, const std::string& raw_line, int lang) {
  std::vector<std::string> toks = text::tokenize(raw_line);
  std::vector<int> perm = order_permutation(lang, static_cast<int>(toks.size()));
  std::vector<int> concepts(toks.size());
  for (size_t i = 0; i < toks.size(); ++i) {
    int c = lex.concept_of(io::ascii_lower(toks[i]));
    if (c < 0) throw DataError("surface form '" + toks[i] + "' is not in the lexicon");
    concepts[perm[i]] = c;
  }
  return concepts;
}

SynthData generate(const SynthSpec& spec, int num_train) {
  if (num_train < 0) throw ConfigError("num_train must be nonnegative");
  SynthData data{build_lexicon(spec), {}};
  const SynthLexicon& lex = data.lexicon;
  const int m = spec.num_langs, n = spec.num_styles;
  const int pool = lex.aux_base();  // ids below the auxiliaries form the sampling pool

  int64_t total = static_cast<int64_t>(n) * (num_train + spec.num_dev) + spec.num_test;
  if (total > 0 &&
      spec.min_len * std::log(static_cast<double>(pool)) < std::log(4.0 * static_cast<double>(total))) {
    throw ConfigError("vocabulary too small for " + std::to_string(total) + " distinct sentences");
  }

  std::set<std::vector<int>> seen;
  auto draw = [&](int pool_kind, int style, int index) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      Rng rng(sentence_seed(spec.seed, pool_kind, style, index, attempt));
      int len = spec.min_len + rng.uniform_int(spec.max_len - spec.min_len + 1);
      SynthExample e;
      e.concepts.resize(len);
      for (int i = 0; i < len; ++i) e.concepts[i] = rng.uniform_int(pool);
      e.marker_pos = rng.uniform_int(len);
      e.concepts[e.marker_pos] = lex.group_a_base() + rng.uniform_int(spec.num_group_a);
      if (rng.bernoulli(spec.contraction_rate)) {
        int p;
        do {
          p = rng.uniform_int(len);
        } while (p == e.marker_pos);
        e.aux_pos = p;
        e.concepts[p] = lex.aux_base() + rng.uniform_int(spec.num_aux);
      }
      if (!seen.insert(e.concepts).second) continue;
      e.cells.resize(static_cast<size_t>(m) * n);
      for (int l = 0; l < m; ++l) {
        for (int s = 0; s < n; ++s) {
          e.cells[static_cast<size_t>(l) * n + s] = render_line(lex, e.concepts, l, s);
        }
      }
      return e;
    }
    throw ConfigError("vocabulary too small to keep drawing distinct sentences");
  };

  data.corpus.train.resize(n);
  data.corpus.dev.resize(n);
  for (int s = 0; s < n; ++s) {
    data.corpus.train[s].reserve(num_train);
    for (int i = 0; i < num_train; ++i) data.corpus.train[s].push_back(draw(0, s, i));
  }
  for (int s = 0; s < n; ++s) {
    data.corpus.dev[s].reserve(spec.num_dev);
    for (int i = 0; i < spec.num_dev; ++i) data.corpus.dev[s].push_back(draw(1, s, i));
  }
  data.corpus.test.reserve(spec.num_test);
  for (int i = 0; i < spec.num_test; ++i) data.corpus.test.push_back(draw(2, 0, i));
  return data;
}

metrics::SynonymTable synonym_table(const SynthLexicon& lex) {
  metrics::SynonymTable table;
  for (int c = 0; c < lex.spec.vocab_size; ++c) {
    if (lex.group(c) == ConceptGroup::kUnmarked) continue;
    std::vector<std::string> words;
    std::set<std::string> dedup;  // clitics repeat across languages
    for (int l = 0; l < lex.spec.num_langs; ++l) {
      for (int s = 0; s < lex.spec.num_styles; ++s) {
        const std::string& f = lex.form(l, s, c);
        if (dedup.insert(f).second) words.push_back(f);
      }
    }
    if (words.size() > 1) table.add_set(words);
  }
  return table;
}

void write_corpus(const SynthData& data, const std::string& out_dir) {
  io::ensure_dir(out_dir);
  const SynthLexicon& lex = data.lexicon;
  const int m = lex.spec.num_langs, n = lex.spec.num_styles;

  auto cell_lines = [&](const std::vector<SynthExample>& pool, int lang, int style) {
    std::vector<std::string> lines;
    lines.reserve(pool.size());
    for (const SynthExample& e : pool) lines.push_back(e.cells[static_cast<size_t>(lang) * n + style]);
    return lines;
  };

  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        if (a == b) continue;
        std::string pair = ".s" + std::to_string(s) + ".l" + std::to_string(a) + "-l" +
                           std::to_string(b);
        io::write_lines(out_dir + "/train" + pair + ".src", cell_lines(data.corpus.train[s], a, s));
        io::write_lines(out_dir + "/train" + pair + ".tgt", cell_lines(data.corpus.train[s], b, s));
        io::write_lines(out_dir + "/dev" + pair + ".src", cell_lines(data.corpus.dev[s], a, s));
        io::write_lines(out_dir + "/dev" + pair + ".tgt", cell_lines(data.corpus.dev[s], b, s));
      }
    }
  }
  for (int l = 0; l < m; ++l) {
    for (int s = 0; s < n; ++s) {
      io::write_lines(out_dir + "/test.l" + std::to_string(l) + ".s" + std::to_string(s) + ".txt",
                      cell_lines(data.corpus.test, l, s));
    }
  }
  save_sidecar(data.corpus.test, out_dir + "/test.meta.jsonl");
  save_lexicon(lex, out_dir + "/lexicon.json");
  synonym_table(lex).save(out_dir + "/synonyms.tsv");
}

void save_lexicon(const SynthLexicon& lex, const std::string& path) {
  json j;
  j["spec"] = {{"seed", lex.spec.seed},
               {"num_langs", lex.spec.num_langs},
               {"num_styles", lex.spec.num_styles},
               {"vocab_size", lex.spec.vocab_size},
               {"num_group_a", lex.spec.num_group_a},
               {"num_group_b", lex.spec.num_group_b},
               {"num_group_c", lex.spec.num_group_c},
               {"num_aux", lex.spec.num_aux},
               {"min_len", lex.spec.min_len},
               {"max_len", lex.spec.max_len},
               {"contraction_rate", lex.spec.contraction_rate},
               {"num_dev", lex.spec.num_dev},
               {"num_test", lex.spec.num_test}};
  j["forms"] = lex.forms;
  j["variantful"] = lex.variantful;
  io::write_file(path, j.dump(1) + "\n");
}

SynthLexicon load_lexicon(const std::string& path) {
  SynthLexicon lex;
  try {
    json j = json::parse(io::read_file(path));
    const json& s = j.at("spec");
    lex.spec.seed = s.at("seed").get<uint64_t>();
    lex.spec.num_langs = s.at("num_langs").get<int>();
    lex.spec.num_styles = s.at("num_styles").get<int>();
    lex.spec.vocab_size = s.at("vocab_size").get<int>();
    lex.spec.num_group_a = s.at("num_group_a").get<int>();
    lex.spec.num_group_b = s.at("num_group_b").get<int>();
    lex.spec.num_group_c = s.at("num_group_c").get<int>();
    lex.spec.num_aux = s.at("num_aux").get<int>();
    lex.spec.min_len = s.at("min_len").get<int>();
    lex.spec.max_len = s.at("max_len").get<int>();
    lex.spec.contraction_rate = s.at("contraction_rate").get<double>();
    lex.spec.num_dev = s.at("num_dev").get<int>();
    lex.spec.num_test = s.at("num_test").get<int>();
    lex.forms = j.at("forms").get<std::vector<std::string>>();
    lex.variantful = j.at("variantful").get<std::vector<uint8_t>>();
  } catch (const json::exception& e) {
    throw DataError("malformed lexicon file " + path + ": " + e.what());
  }
  lex.spec.validate();
  size_t want_forms = static_cast<size_t>(lex.spec.num_langs) * lex.spec.num_styles * lex.spec.vocab_size;
  size_t want_flags = static_cast<size_t>(lex.spec.num_langs) * lex.spec.vocab_size;
  if (lex.forms.size() != want_forms || lex.variantful.size() != want_flags) {
    throw DataError("lexicon file " + path + " has inconsistent table sizes");
  }
  for (int l = 0; l < lex.spec.num_langs; ++l) {
    for (int s = 0; s < lex.spec.num_styles; ++s) {
      for (int c = 0; c < lex.spec.vocab_size; ++c) lex.form_to_concept.emplace(lex.form(l, s, c), c);
    }
  }
  return lex;
}

void save_sidecar(const std::vector<SynthExample>& examples, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(examples.size());
  for (const SynthExample& e : examples) {
    json j = {{"concepts", e.concepts},
              {"marker_pos", e.marker_pos},
              {"aux_pos", e.aux_pos},
              {"cells", e.cells}};
    lines.push_back(j.dump());
  }
  io::write_lines(path, lines);
}

std::vector<SynthExample> load_sidecar(const std::string& path) {
  std::vector<SynthExample> out;
  for (const std::string& line : io::read_lines(path)) {
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      SynthExample e;
      e.concepts = j.at("concepts").get<std::vector<int>>();
      e.marker_pos = j.at("marker_pos").get<int>();
      e.aux_pos = j.at("aux_pos").get<int>();
      e.cells = j.at("cells").get<std::vector<std::string>>();
      out.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw DataError("malformed sidecar line in " + path + ": " + e.what());
    }
  }
  return out;
}

double TransferScore::marker_conversion() const {
  return marker_sites ? static_cast<double>(marker_converted) / marker_sites : 1.0;
}
double TransferScore::clitic_rate() const {
  return clitic_sites ? static_cast<double>(clitic_hits) / clitic_sites : 1.0;
}
double TransferScore::synonym_accuracy() const {
  return synonym_sites ? static_cast<double>(synonym_converted) / synonym_sites : 1.0;
}

TransferScore score_style_transfer(const SynthLexicon& lex, const std::vector<SynthExample>& refs,
                                   const std::vector<std::string>& output_lines, int tgt_lang,
                                   int src_style, int tgt_style) {
  const SynthSpec& spec = lex.spec;
  if (tgt_lang < 0 || tgt_lang >= spec.num_langs) throw IndexError("target language out of range");
  if (src_style < 0 || src_style >= spec.num_styles) throw IndexError("source style out of range");
  if (tgt_style < 0 || tgt_style >= spec.num_styles) throw IndexError("target style out of range");
  if (refs.size() != output_lines.size()) {
    throw DataError("output/reference alignment: " + std::to_string(output_lines.size()) +
                    " output lines vs " + std::to_string(refs.size()) + " references");
  }

  TransferScore sc;
  for (size_t i = 0; i < refs.size(); ++i) {
    const SynthExample& e = refs[i];
    std::vector<std::string> toks = text::tokenize(output_lines[i]);
    for (std::string& t : toks) t = io::ascii_lower(t);
    std::unordered_set<std::string> present(toks.begin(), toks.end());

    if (e.aux_pos >= 0) {
      if (e.aux_pos >= static_cast<int>(e.concepts.size())) {
        throw DataError("reference auxiliary position out of range");
      }
      int c = e.concepts[e.aux_pos];
      ++sc.clitic_sites;
      if (metrics::count_contractions(toks) > 0) ++sc.clitic_hits;
      const std::string& f_tgt = lex.form(tgt_lang, tgt_style, c);
      if (f_tgt != lex.form(tgt_lang, src_style, c)) {
        ++sc.marker_sites;
        if (present.count(f_tgt)) ++sc.marker_converted;
      }
    }

    std::set<int> marked;
    for (int c : e.concepts) {
      ConceptGroup g = lex.group(c);
      if (g == ConceptGroup::kGroupA || g == ConceptGroup::kGroupB || g == ConceptGroup::kGroupC) {
        marked.insert(c);
      }
    }
    for (int c : marked) {
      const std::string& f_tgt = lex.form(tgt_lang, tgt_style, c);
      if (f_tgt == lex.form(tgt_lang, src_style, c)) continue;
      ++sc.synonym_sites;
      if (present.count(f_tgt)) ++sc.synonym_converted;
    }
  }
  return sc;
}

}  // namespace stylemux::synth
