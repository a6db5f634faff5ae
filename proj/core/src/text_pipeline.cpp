#include "stylemux/text_pipeline.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include "stylemux/errors.hpp"
#include "stylemux/io.hpp"

namespace stylemux::text {

namespace {

size_t cp_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;  // stray continuation byte, pass through alone
}

size_t cp_len_at(const std::string& s, size_t i) {
  return std::min(cp_len(static_cast<unsigned char>(s[i])), s.size() - i);
}

bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

// Letters, digits, hyphen, underscore, and all non-ASCII codepoints stay
// inside tokens.
bool is_word_char(char c) {
  return is_ascii_letter(c) || is_ascii_digit(c) || c == '-' || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool letter_at(const std::string& s, size_t i) {
  return i < s.size() && (is_ascii_letter(s[i]) || static_cast<unsigned char>(s[i]) >= 0x80);
}

void tokenize_chunk(const std::string& chunk, std::vector<std::string>& out) {
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  size_t i = 0;
  while (i < chunk.size()) {
    size_t len = cp_len_at(chunk, i);
    char c = chunk[i];
    if (is_word_char(c)) {
      cur.append(chunk, i, len);
      i += len;
      continue;
    }
    if (c == '\'') {
      bool nt = !cur.empty() && (cur.back() == 'n' || cur.back() == 'N') &&
                i + 1 < chunk.size() && (chunk[i + 1] == 't' || chunk[i + 1] == 'T') &&
                !letter_at(chunk, i + 2);
      if (nt) {
        // "don't" -> "do" + "n't"; the n moves onto the clitic.
        char n = cur.back();
        cur.pop_back();
        flush();
        out.push_back(std::string(1, n) + "'" + chunk[i + 1]);
        i += 2;
        continue;
      }
      if (letter_at(chunk, i + 1)) {
        // Contraction clitic: "I'll" -> "I" + "'ll".
        flush();
        cur = "'";
        i += 1;
        continue;
      }
      flush();
      out.push_back("'");
      i += 1;
      continue;
    }
    if ((c == '.' || c == ',' || c == ':') && !cur.empty() && is_ascii_digit(cur.back()) &&
        i + 1 < chunk.size() && is_ascii_digit(chunk[i + 1])) {
      // Digit-internal separator: "3.14", "1,000", "12:30".
      cur += c;
      i += 1;
      continue;
    }
    flush();
    out.push_back(chunk.substr(i, len));
    i += len;
  }
  flush();
}

bool is_clitic_token(const std::string& t) {
  return t.size() > 1 && t[0] == '\'' && letter_at(t, 1);
}

bool is_nt_token(const std::string& t) {
  return t.size() == 3 && (t[0] == 'n' || t[0] == 'N') && t[1] == '\'' &&
         (t[2] == 't' || t[2] == 'T');
}

const std::set<std::string> kAttachLeft = {".", ",", "!", "?", ";", ":", ")", "]",
                                           "}", "%", "'", "...", "’"};
const std::set<std::string> kAttachRight = {"(", "[", "{", "$"};

}  // namespace

std::vector<std::string> tokenize(const std::string& raw, const std::string& lang) {
  (void)lang;  // rules are shared across languages for now
  std::vector<std::string> out;
  size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    size_t start = i;
    while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    if (i > start) tokenize_chunk(raw.substr(start, i - start), out);
  }
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  bool no_space_after_prev = false;
  bool dq_open = false;
  for (const auto& t : tokens) {
    bool opening_dq = false, closing_dq = false;
    if (t == "\"") {
      if (!dq_open) opening_dq = true;
      else closing_dq = true;
      dq_open = !dq_open;
    }
    bool attach_left = closing_dq || kAttachLeft.count(t) > 0 || is_clitic_token(t) ||
                       is_nt_token(t);
    if (!out.empty() && !no_space_after_prev && !attach_left) out += ' ';
    out += t;
    no_space_after_prev = opening_dq || kAttachRight.count(t) > 0;
  }
  return out;
}

bool has_alpha(const std::string& token) {
  for (char c : token) {
    if (is_ascii_letter(c) || static_cast<unsigned char>(c) >= 0x80) return true;
  }
  return false;
}

// ---- truecasing ----

TruecaseModel TruecaseModel::train(const std::vector<std::vector<std::string>>& corpus) {
  TruecaseModel m;
  for (const auto& sent : corpus) {
    for (const auto& tok : sent) {
      if (has_alpha(tok)) m.counts_[io::ascii_lower(tok)][tok] += 1;
    }
  }
  return m;
}

std::string TruecaseModel::best_casing(const std::string& word) const {
  std::string key = io::ascii_lower(word);
  auto it = counts_.find(key);
  if (it == counts_.end()) return word;
  const std::string* best = nullptr;
  int64_t best_count = -1;
  for (const auto& [variant, count] : it->second) {
    if (count > best_count || (count == best_count && variant == key)) {
      best = &variant;
      best_count = count;
    }
  }
  return *best;
}

std::vector<std::string> TruecaseModel::apply(std::vector<std::string> tokens) const {
  if (!tokens.empty()) tokens[0] = best_casing(tokens[0]);
  return tokens;
}

std::vector<std::string> TruecaseModel::invert(std::vector<std::string> tokens) {
  if (!tokens.empty() && !tokens[0].empty() && tokens[0][0] >= 'a' && tokens[0][0] <= 'z') {
    tokens[0][0] = static_cast<char>(tokens[0][0] - 'a' + 'A');
  }
  return tokens;
}

void TruecaseModel::save(const std::string& path) const {
  std::vector<std::string> lines;
  for (const auto& [key, variants] : counts_) {
    for (const auto& [variant, count] : variants) {
      lines.push_back(key + "\t" + variant + "\t" + std::to_string(count));
    }
  }
  io::write_lines(path, lines);
}

TruecaseModel TruecaseModel::load(const std::string& path) {
  TruecaseModel m;
  for (const auto& line : io::read_lines(path)) {
    if (line.empty()) continue;
    auto cols = io::split(line, '\t');
    if (cols.size() != 3) throw DataError("bad truecase line in " + path + ": " + line);
    m.counts_[cols[0]][cols[1]] = io::parse_int(cols[2], "truecase count");
  }
  return m;
}

// ---- subword vocabulary ----

namespace {

constexpr const char* kEow = "</w>";

bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

std::vector<std::string> word_symbols(const std::string& word) {
  std::vector<std::string> syms;
  size_t i = 0;
  while (i < word.size()) {
    size_t len = cp_len_at(word, i);
    syms.push_back(word.substr(i, len));
    i += len;
  }
  if (!syms.empty()) syms.back() += kEow;
  return syms;
}

std::string piece_of(const std::string& symbol) {
  if (ends_with(symbol, kEow)) return symbol.substr(0, symbol.size() - 4);
  return symbol + "@@";
}

std::string rank_key(const std::string& l, const std::string& r) { return l + "\x1f" + r; }

}  // namespace

SubwordVocabulary SubwordVocabulary::learn(const std::map<std::string, int64_t>& word_counts,
                                           int vocab_size) {
  struct Entry {
    std::vector<std::string> syms;
    int64_t count;
  };
  std::vector<Entry> words;
  std::set<std::string> base;
  for (const auto& [word, count] : word_counts) {
    if (word.empty() || count <= 0) continue;
    auto syms = word_symbols(word);
    size_t i = 0;
    while (i < word.size()) {
      size_t len = cp_len_at(word, i);
      std::string cp = word.substr(i, len);
      base.insert(cp);
      base.insert(cp + "@@");
      i += len;
    }
    words.push_back({std::move(syms), count});
  }

  SubwordVocabulary v;
  v.pieces_ = {"<pad>", "<bos>", "<eos>", "<unk>"};
  for (const auto& p : base) v.pieces_.push_back(p);
  if (vocab_size < static_cast<int>(v.pieces_.size())) {
    throw ConfigError("vocab_size " + std::to_string(vocab_size) + " below minimum " +
                      std::to_string(v.pieces_.size()) +
                      " (reserved ids plus both piece forms of every character)");
  }
  for (int id = 0; id < static_cast<int>(v.pieces_.size()); ++id) v.piece_ids_[v.pieces_[id]] = id;

  int budget = vocab_size - static_cast<int>(v.pieces_.size());
  for (int m = 0; m < budget; ++m) {
    std::map<std::pair<std::string, std::string>, int64_t> pair_counts;
    for (const auto& w : words) {
      for (size_t j = 0; j + 1 < w.syms.size(); ++j) {
        pair_counts[{w.syms[j], w.syms[j + 1]}] += w.count;
      }
    }
    // Highest count wins; ascending map order makes ties lexicographic.
    const std::pair<std::string, std::string>* best = nullptr;
    int64_t best_count = 0;
    for (const auto& [pair, count] : pair_counts) {
      if (count > best_count) {
        best = &pair;
        best_count = count;
      }
    }
    if (!best || best_count < 2) break;

    auto [l, r] = *best;
    v.merges_.push_back({l, r});
    std::string merged = l + r;
    for (auto& w : words) {
      std::vector<std::string> next;
      next.reserve(w.syms.size());
      for (size_t j = 0; j < w.syms.size(); ++j) {
        if (j + 1 < w.syms.size() && w.syms[j] == l && w.syms[j + 1] == r) {
          next.push_back(merged);
          ++j;
        } else {
          next.push_back(w.syms[j]);
        }
      }
      w.syms = std::move(next);
    }
    std::string piece = piece_of(merged);
    if (!v.piece_ids_.count(piece)) {
      v.piece_ids_[piece] = static_cast<int>(v.pieces_.size());
      v.pieces_.push_back(piece);
    }
  }
  v.index_merges();
  return v;
}

SubwordVocabulary SubwordVocabulary::learn_from_corpus(
    const std::vector<std::vector<std::string>>& sentences, int vocab_size) {
  std::map<std::string, int64_t> counts;
  for (const auto& sent : sentences) {
    for (const auto& tok : sent) counts[tok] += 1;
  }
  return learn(counts, vocab_size);
}

void SubwordVocabulary::index_merges() {
  merge_rank_.clear();
  for (size_t i = 0; i < merges_.size(); ++i) {
    merge_rank_[rank_key(merges_[i].left, merges_[i].right)] = static_cast<int>(i);
  }
}

std::vector<int> SubwordVocabulary::segment(const std::string& word) const {
  auto syms = word_symbols(word);
  while (syms.size() > 1) {
    int best_rank = -1;
    for (size_t j = 0; j + 1 < syms.size(); ++j) {
      auto it = merge_rank_.find(rank_key(syms[j], syms[j + 1]));
      if (it != merge_rank_.end() && (best_rank < 0 || it->second < best_rank)) {
        best_rank = it->second;
      }
    }
    if (best_rank < 0) break;
    const auto& rule = merges_[best_rank];
    std::vector<std::string> next;
    next.reserve(syms.size());
    for (size_t j = 0; j < syms.size(); ++j) {
      if (j + 1 < syms.size() && syms[j] == rule.left && syms[j + 1] == rule.right) {
        next.push_back(rule.left + rule.right);
        ++j;
      } else {
        next.push_back(syms[j]);
      }
    }
    syms = std::move(next);
  }
  std::vector<int> ids;
  ids.reserve(syms.size());
  for (const auto& s : syms) {
    auto it = piece_ids_.find(piece_of(s));
    ids.push_back(it == piece_ids_.end() ? kUnk : it->second);
  }
  return ids;
}

std::vector<int> SubwordVocabulary::encode_word(const std::string& word) const {
  {
    std::shared_lock lock(cache_->mu);
    auto it = cache_->words.find(word);
    if (it != cache_->words.end()) return it->second;
  }
  auto ids = segment(word);
  std::unique_lock lock(cache_->mu);
  cache_->words.emplace(word, ids);
  return ids;
}

std::vector<int> SubwordVocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  for (const auto& tok : tokens) {
    auto ids = encode_word(tok);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

std::vector<std::string> SubwordVocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  std::string cur;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    const std::string& piece = id_to_piece(id);
    if (piece.size() > 2 && ends_with(piece, "@@")) {
      cur.append(piece, 0, piece.size() - 2);
    } else {
      cur += piece;
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);  // dangling continuation piece
  return out;
}

int SubwordVocabulary::piece_to_id(const std::string& piece) const {
  auto it = piece_ids_.find(piece);
  return it == piece_ids_.end() ? kUnk : it->second;
}

const std::string& SubwordVocabulary::id_to_piece(int id) const {
  if (id < 0 || id >= static_cast<int>(pieces_.size())) {
    throw IndexError("piece id " + std::to_string(id) + " out of range [0, " +
                     std::to_string(pieces_.size()) + ")");
  }
  return pieces_[static_cast<size_t>(id)];
}

void SubwordVocabulary::save(const std::string& path) const {
  std::vector<std::string> lines;
  for (const auto& m : merges_) lines.push_back(m.left + " " + m.right);
  for (size_t id = 0; id < pieces_.size(); ++id) {
    lines.push_back(pieces_[id] + "\t" + std::to_string(id));
  }
  io::write_lines(path, lines);
}

SubwordVocabulary SubwordVocabulary::load(const std::string& path) {
  SubwordVocabulary v;
  std::vector<std::pair<std::string, int>> pieces;
  for (const auto& line : io::read_lines(path)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab != std::string::npos) {
      pieces.emplace_back(line.substr(0, tab), io::parse_int(line.substr(tab + 1), "piece id"));
      continue;
    }
    auto sp = line.find(' ');
    if (sp == std::string::npos) throw DataError("bad vocabulary line in " + path + ": " + line);
    v.merges_.push_back({line.substr(0, sp), line.substr(sp + 1)});
  }
  v.pieces_.assign(pieces.size(), {});
  for (auto& [piece, id] : pieces) {
    if (id < 0 || id >= static_cast<int>(pieces.size()) || !v.pieces_[id].empty()) {
      throw DataError("piece ids in " + path + " are not dense and unique");
    }
    v.pieces_[id] = piece;
    v.piece_ids_[v.pieces_[id]] = id;
  }
  const char* reserved[] = {"<pad>", "<bos>", "<eos>", "<unk>"};
  for (int i = 0; i < 4; ++i) {
    if (static_cast<int>(v.pieces_.size()) <= i || v.pieces_[i] != reserved[i]) {
      throw DataError("vocabulary in " + path + " lacks reserved ids 0..3");
    }
  }
  v.index_merges();
  return v;
}

}  // namespace stylemux::text
