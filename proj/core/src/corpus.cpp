#include "stylemux/corpus.hpp"

#include <algorithm>
#include <numeric>

#include "stylemux/errors.hpp"
#include "stylemux/io.hpp"

namespace stylemux::corpus {

Registry::Registry(std::vector<std::string> names) : names_(std::move(names)) {
  for (size_t i = 0; i < names_.size(); ++i) {
    for (size_t j = i + 1; j < names_.size(); ++j) {
      if (names_[i] == names_[j]) throw ConfigError("duplicate registry name: " + names_[i]);
    }
  }
}

int Registry::id(const std::string& name) const {
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  throw ConfigError("unknown registry name: " + name);
}

const std::string& Registry::name(int id) const {
  if (id < 0 || id >= size()) {
    throw IndexError("registry id " + std::to_string(id) + " out of range [0, " +
                     std::to_string(size()) + ")");
  }
  return names_[static_cast<size_t>(id)];
}

bool Registry::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

// ---- filtering ----

const char* filter_verdict_name(FilterVerdict v) {
  switch (v) {
    case FilterVerdict::kKeep: return "keep";
    case FilterVerdict::kEmpty: return "empty";
    case FilterVerdict::kTooLong: return "too_long";
    case FilterVerdict::kNoAlpha: return "no_alpha";
    case FilterVerdict::kRatio: return "ratio";
  }
  return "?";
}

namespace {

bool side_has_alpha(const std::vector<std::string>& toks) {
  for (const auto& t : toks) {
    if (text::has_alpha(t)) return true;
  }
  return false;
}

}  // namespace

FilterVerdict filter_pair(const std::vector<std::string>& src_toks,
                          const std::vector<std::string>& tgt_toks, const FilterConfig& cfg) {
  if (src_toks.empty() || tgt_toks.empty()) return FilterVerdict::kEmpty;
  if (static_cast<int>(src_toks.size()) > cfg.max_tokens ||
      static_cast<int>(tgt_toks.size()) > cfg.max_tokens) {
    return FilterVerdict::kTooLong;
  }
  if (!side_has_alpha(src_toks) || !side_has_alpha(tgt_toks)) return FilterVerdict::kNoAlpha;
  double longer = static_cast<double>(std::max(src_toks.size(), tgt_toks.size()));
  double shorter = static_cast<double>(std::min(src_toks.size(), tgt_toks.size()));
  if (longer / shorter > cfg.max_ratio) return FilterVerdict::kRatio;
  return FilterVerdict::kKeep;
}

void FilterStats::count(FilterVerdict v) {
  switch (v) {
    case FilterVerdict::kKeep: ++kept; break;
    case FilterVerdict::kEmpty: ++empty; break;
    case FilterVerdict::kTooLong: ++too_long; break;
    case FilterVerdict::kNoAlpha: ++no_alpha; break;
    case FilterVerdict::kRatio: ++ratio; break;
  }
}

std::string FilterStats::summary() const {
  return "kept=" + std::to_string(kept) + " empty=" + std::to_string(empty) +
         " too_long=" + std::to_string(too_long) + " no_alpha=" + std::to_string(no_alpha) +
         " ratio=" + std::to_string(ratio);
}

std::vector<ParallelPair> filter_corpus(const std::vector<ParallelPair>& pairs,
                                        FilterStats& stats, const FilterConfig& cfg) {
  std::vector<ParallelPair> kept;
  for (const auto& p : pairs) {
    auto v = filter_pair(p.src_toks, p.tgt_toks, cfg);
    stats.count(v);
    if (v == FilterVerdict::kKeep) kept.push_back(p);
  }
  return kept;
}

// ---- factored examples ----

int target_words(const FactoredExample& e) {
  return std::max(0, static_cast<int>(e.tgt_ids.size()) - 1);
}

FactoredExample annotate_factors(const std::vector<std::string>& src_toks,
                                 const std::vector<std::string>& tgt_toks, int tgt_lang,
                                 int tgt_style, const text::SubwordVocabulary& vocab,
                                 int num_langs, int num_styles) {
  if (tgt_lang < 0 || tgt_lang >= num_langs) {
    throw ConfigError("target language id " + std::to_string(tgt_lang) +
                      " outside registry of size " + std::to_string(num_langs));
  }
  if (tgt_style < 0 || tgt_style >= num_styles) {
    throw ConfigError("target style id " + std::to_string(tgt_style) +
                      " outside registry of size " + std::to_string(num_styles));
  }
  FactoredExample e;
  e.src_ids = vocab.encode(src_toks);
  if (e.src_ids.empty()) throw DataError("source encoded to zero pieces");
  e.factor_lang.assign(e.src_ids.size(), tgt_lang);
  e.factor_style.assign(e.src_ids.size(), tgt_style);
  e.tgt_ids.push_back(text::SubwordVocabulary::kBos);
  auto tgt = vocab.encode(tgt_toks);
  if (tgt.empty()) throw DataError("target encoded to zero pieces");
  e.tgt_ids.insert(e.tgt_ids.end(), tgt.begin(), tgt.end());
  e.tgt_ids.push_back(text::SubwordVocabulary::kEos);
  return e;
}

// ---- batching ----

std::vector<Batch> build_batches(const std::vector<FactoredExample>& examples, int max_words,
                                 Rng& rng) {
  if (max_words <= 0) throw ConfigError("max_words must be positive");
  std::vector<int> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return examples[static_cast<size_t>(a)].tgt_ids.size() <
           examples[static_cast<size_t>(b)].tgt_ids.size();
  });

  std::vector<std::vector<int>> groups;
  int words_in_batch = 0;
  for (int idx : order) {
    int w = target_words(examples[static_cast<size_t>(idx)]);
    if (w > max_words) {
      throw ConfigError("example with " + std::to_string(w) + " target words exceeds batch cap " +
                        std::to_string(max_words));
    }
    if (groups.empty() || words_in_batch + w > max_words) {
      groups.emplace_back();
      words_in_batch = 0;
    }
    groups.back().push_back(idx);
    words_in_batch += w;
  }
  rng.shuffle(groups);

  std::vector<Batch> batches;
  batches.reserve(groups.size());
  for (const auto& ids : groups) {
    Batch b;
    b.example_ids = ids;
    for (int idx : ids) {
      const auto& e = examples[static_cast<size_t>(idx)];
      b.src_len = std::max(b.src_len, static_cast<int>(e.src_ids.size()));
      b.tgt_len = std::max(b.tgt_len, static_cast<int>(e.tgt_ids.size()));
    }
    size_t n = ids.size();
    b.src.assign(n * static_cast<size_t>(b.src_len), text::SubwordVocabulary::kPad);
    b.factor_lang.assign(n * static_cast<size_t>(b.src_len), 0);
    b.factor_style.assign(n * static_cast<size_t>(b.src_len), 0);
    b.tgt.assign(n * static_cast<size_t>(b.tgt_len), text::SubwordVocabulary::kPad);
    for (size_t r = 0; r < n; ++r) {
      const auto& e = examples[static_cast<size_t>(ids[r])];
      b.src_lens.push_back(static_cast<int>(e.src_ids.size()));
      b.tgt_lens.push_back(static_cast<int>(e.tgt_ids.size()));
      std::copy(e.src_ids.begin(), e.src_ids.end(), b.src.begin() + r * b.src_len);
      std::copy(e.factor_lang.begin(), e.factor_lang.end(),
                b.factor_lang.begin() + r * b.src_len);
      std::copy(e.factor_style.begin(), e.factor_style.end(),
                b.factor_style.begin() + r * b.src_len);
      std::copy(e.tgt_ids.begin(), e.tgt_ids.end(), b.tgt.begin() + r * b.tgt_len);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

// ---- direction enumeration ----

std::vector<Direction> enumerate_directions(int num_langs, int num_styles) {
  std::vector<Direction> out;
  for (int a = 0; a < num_langs; ++a) {
    for (int b = 0; b < num_langs; ++b) {
      if (a == b) continue;
      for (int s = 0; s < num_styles; ++s) out.push_back({a, b, s});
    }
  }
  return out;
}

// ---- file formats ----

std::vector<ParallelPair> read_parallel(const std::string& src_path,
                                        const std::string& tgt_path) {
  auto src_lines = io::read_lines(src_path);
  auto tgt_lines = io::read_lines(tgt_path);
  if (src_lines.size() != tgt_lines.size()) {
    throw DataError("line count mismatch: " + src_path + " has " +
                    std::to_string(src_lines.size()) + ", " + tgt_path + " has " +
                    std::to_string(tgt_lines.size()));
  }
  std::vector<ParallelPair> pairs(src_lines.size());
  for (size_t i = 0; i < src_lines.size(); ++i) {
    pairs[i].src_toks = text::tokenize(src_lines[i]);
    pairs[i].tgt_toks = text::tokenize(tgt_lines[i]);
  }
  return pairs;
}

namespace {

std::string join_ids(const std::vector<int>& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(ids[i]);
  }
  return out;
}

std::vector<int> parse_ids(const std::string& col, const std::string& what) {
  std::vector<int> ids;
  for (const auto& tok : io::split_ws(col)) ids.push_back(io::parse_int(tok, what));
  return ids;
}

}  // namespace

void write_shard(const std::string& path, const std::vector<FactoredExample>& examples) {
  std::vector<std::string> lines;
  lines.reserve(examples.size());
  for (const auto& e : examples) {
    lines.push_back(join_ids(e.src_ids) + "\t" + join_ids(e.factor_lang) + "\t" +
                    join_ids(e.factor_style) + "\t" + join_ids(e.tgt_ids));
  }
  io::write_lines(path, lines);
}

std::vector<FactoredExample> read_shard(const std::string& path) {
  std::vector<FactoredExample> examples;
  for (const auto& line : io::read_lines(path)) {
    if (line.empty()) continue;
    auto cols = io::split(line, '\t');
    if (cols.size() != 4) throw DataError("shard line needs 4 columns in " + path + ": " + line);
    FactoredExample e;
    e.src_ids = parse_ids(cols[0], "src id");
    e.factor_lang = parse_ids(cols[1], "lang factor");
    e.factor_style = parse_ids(cols[2], "style factor");
    e.tgt_ids = parse_ids(cols[3], "tgt id");
    if (e.src_ids.empty() || e.tgt_ids.empty() ||
        e.factor_lang.size() != e.src_ids.size() || e.factor_style.size() != e.src_ids.size()) {
      throw DataError("inconsistent shard line in " + path + ": " + line);
    }
    examples.push_back(std::move(e));
  }
  return examples;
}

}  // namespace stylemux::corpus
