#include "stylemux/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "stylemux/errors.hpp"
#include "stylemux/io.hpp"

namespace stylemux::metrics {

namespace {

// n-gram key: tokens joined on a separator no token can contain.
std::string ngram_key(const std::vector<std::string>& toks, size_t start, size_t n) {
  std::string key;
  for (size_t i = 0; i < n; ++i) {
    if (i) key += '\x1f';
    key += toks[start + i];
  }
  return key;
}

std::vector<std::string> lowered(const std::vector<std::string>& toks) {
  std::vector<std::string> out;
  out.reserve(toks.size());
  for (const auto& t : toks) out.push_back(io::ascii_lower(t));
  return out;
}

}  // namespace

void BleuStats::add(const std::vector<std::string>& hyp_raw,
                    const std::vector<std::string>& ref_raw) {
  auto hyp = lowered(hyp_raw);
  auto ref = lowered(ref_raw);
  hyp_len += static_cast<int64_t>(hyp.size());
  ref_len += static_cast<int64_t>(ref.size());
  for (size_t n = 1; n <= 4; ++n) {
    if (hyp.size() < n) break;
    std::unordered_map<std::string, int64_t> ref_counts;
    if (ref.size() >= n) {
      for (size_t i = 0; i + n <= ref.size(); ++i) ++ref_counts[ngram_key(ref, i, n)];
    }
    std::unordered_map<std::string, int64_t> hyp_counts;
    for (size_t i = 0; i + n <= hyp.size(); ++i) ++hyp_counts[ngram_key(hyp, i, n)];
    for (const auto& [key, count] : hyp_counts) {
      total[n - 1] += count;
      auto it = ref_counts.find(key);
      if (it != ref_counts.end()) match[n - 1] += std::min(count, it->second);
    }
  }
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (int i = 0; i < 4; ++i) {
    match[i] += other.match[i];
    total[i] += other.total[i];
  }
  hyp_len += other.hyp_len;
  ref_len += other.ref_len;
  return *this;
}

double BleuStats::precision(int n) const {
  if (n < 1 || n > 4) throw ConfigError("BLEU n-gram order must be 1..4");
  if (total[n - 1] == 0) return 0.0;
  return static_cast<double>(match[n - 1]) / static_cast<double>(total[n - 1]);
}

double BleuStats::brevity_penalty() const {
  if (hyp_len == 0) return 0.0;
  double ratio = 1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len);
  return std::exp(std::min(0.0, ratio));
}

double BleuStats::score() const {
  if (hyp_len == 0) return 0.0;
  // Orders with no hypothesis n-grams at all are left out of the mean so a
  // corpus of very short sentences can still score (and identity scores 1).
  // An order with n-grams but zero matches still zeroes the score.
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= 4; ++n) {
    if (total[n - 1] == 0) continue;
    double p = precision(n);
    if (p == 0.0) return 0.0;
    log_sum += std::log(p);
    ++orders;
  }
  if (orders == 0) return 0.0;
  return brevity_penalty() * std::exp(log_sum / static_cast<double>(orders));
}

double bleu(const std::vector<std::vector<std::string>>& hyps,
            const std::vector<std::vector<std::string>>& refs) {
  if (hyps.size() != refs.size()) {
    throw DataError("BLEU: " + std::to_string(hyps.size()) + " hypotheses vs " +
                    std::to_string(refs.size()) + " references");
  }
  BleuStats stats;
  for (size_t i = 0; i < hyps.size(); ++i) stats.add(hyps[i], refs[i]);
  return stats.score();
}

void SynonymTable::add_set(const std::vector<std::string>& words) {
  if (words.empty()) throw DataError("empty synonym set");
  int id = next_id_++;
  for (const auto& w : words) {
    auto [it, inserted] = ids_.emplace(w, id);
    if (!inserted) throw DataError("word in more than one synonym set: " + w);
  }
}

std::optional<int> SynonymTable::synset(const std::string& word) const {
  auto it = ids_.find(word);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

bool SynonymTable::synonyms(const std::string& a, const std::string& b) const {
  auto sa = synset(a);
  return sa && sa == synset(b);
}

SynonymTable SynonymTable::load(const std::string& path) {
  SynonymTable table;
  for (const auto& line : io::read_lines(path)) {
    if (line.empty()) continue;
    table.add_set(io::split(line, '\t'));
  }
  return table;
}

void SynonymTable::save(const std::string& path) const {
  std::vector<std::vector<std::string>> sets(static_cast<size_t>(next_id_));
  for (const auto& [word, id] : ids_) sets[static_cast<size_t>(id)].push_back(word);
  std::vector<std::string> lines;
  for (auto& set : sets) {
    std::sort(set.begin(), set.end());
    lines.push_back(io::join(set, "\t"));
  }
  io::write_lines(path, lines);
}

std::string strip_suffix(const std::string& word) {
  static const std::vector<std::string> kSuffixes = {"ing", "ed", "ly", "es", "s"};
  for (const auto& suf : kSuffixes) {
    if (word.size() >= suf.size() + 3 && word.compare(word.size() - suf.size(), suf.size(), suf) == 0) {
      return word.substr(0, word.size() - suf.size());
    }
  }
  return word;
}

double meteor_sentence(const std::vector<std::string>& hyp_raw,
                       const std::vector<std::string>& ref_raw, const SynonymTable& synonyms,
                       const MeteorConfig& cfg) {
  auto hyp = lowered(hyp_raw);
  auto ref = lowered(ref_raw);
  if (hyp.empty() || ref.empty()) return 0.0;

  // align[i] = matched reference position for hypothesis token i.
  std::vector<int> align(hyp.size(), -1);
  std::vector<bool> ref_used(ref.size(), false);

  auto run_stage = [&](auto&& matches) {
    for (size_t i = 0; i < hyp.size(); ++i) {
      if (align[i] >= 0) continue;
      for (size_t j = 0; j < ref.size(); ++j) {
        if (ref_used[j]) continue;
        if (matches(hyp[i], ref[j])) {
          align[i] = static_cast<int>(j);
          ref_used[j] = true;
          break;
        }
      }
    }
  };
  run_stage([](const std::string& a, const std::string& b) { return a == b; });
  run_stage([](const std::string& a, const std::string& b) {
    return strip_suffix(a) == strip_suffix(b);
  });
  run_stage([&](const std::string& a, const std::string& b) { return synonyms.synonyms(a, b); });

  int m = 0;
  for (int a : align) m += a >= 0 ? 1 : 0;
  if (m == 0) return 0.0;

  double p = static_cast<double>(m) / static_cast<double>(hyp.size());
  double r = static_cast<double>(m) / static_cast<double>(ref.size());
  double f = p * r / (cfg.alpha * p + (1.0 - cfg.alpha) * r);

  int chunks = 0;
  int prev_i = -2, prev_j = -2;
  for (size_t i = 0; i < hyp.size(); ++i) {
    if (align[i] < 0) continue;
    bool contiguous = static_cast<int>(i) == prev_i + 1 && align[i] == prev_j + 1;
    if (!contiguous) ++chunks;
    prev_i = static_cast<int>(i);
    prev_j = align[i];
  }

  double penalty = cfg.gamma * std::pow(static_cast<double>(chunks) / m, cfg.beta);
  return f * (1.0 - penalty);
}

double meteor_lite(const std::vector<std::vector<std::string>>& hyps,
                   const std::vector<std::vector<std::string>>& refs,
                   const SynonymTable& synonyms, const MeteorConfig& cfg) {
  if (hyps.size() != refs.size()) {
    throw DataError("METEOR: " + std::to_string(hyps.size()) + " hypotheses vs " +
                    std::to_string(refs.size()) + " references");
  }
  if (hyps.empty()) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < hyps.size(); ++i) sum += meteor_sentence(hyps[i], refs[i], synonyms, cfg);
  return sum / static_cast<double>(hyps.size());
}

int count_contractions(const std::vector<std::string>& tokens) {
  static const std::vector<std::string> kClitics = {"'ll", "'s", "'re", "'ve",
                                                    "'d",  "'m", "n't", "'t"};
  int count = 0;
  for (const auto& tok : tokens) {
    std::string low = io::ascii_lower(tok);
    for (const auto& c : kClitics) {
      if (low == c) {
        ++count;
        break;
      }
    }
  }
  return count;
}

int64_t count_contractions(const std::vector<std::vector<std::string>>& corpus) {
  int64_t count = 0;
  for (const auto& sent : corpus) count += count_contractions(sent);
  return count;
}

std::optional<double> relative_style_change(double before_pct, double after_pct) {
  if (before_pct == 0.0) return std::nullopt;
  return 100.0 * (after_pct - before_pct) / before_pct;
}

std::optional<double> relative_metric_decrease(double same_style_score,
                                               double cross_style_score) {
  if (same_style_score == 0.0) return std::nullopt;
  return 100.0 * (same_style_score - cross_style_score) / same_style_score;
}

EvalReport::EvalReport(std::vector<std::string> style_names) : styles(std::move(style_names)) {
  if (styles.empty()) throw ConfigError("evaluation grid needs at least one style");
  cells.resize(styles.size() * styles.size());
}

StyleCell& EvalReport::cell(int src, int tgt) {
  int s = static_cast<int>(styles.size());
  if (src < 0 || src >= s || tgt < 0 || tgt >= s) throw IndexError("style cell out of range");
  return cells[static_cast<size_t>(src) * s + tgt];
}

const StyleCell& EvalReport::cell(int src, int tgt) const {
  return const_cast<EvalReport*>(this)->cell(src, tgt);
}

void EvalReport::finalize() {
  int s = static_cast<int>(styles.size());
  for (int i = 0; i < s; ++i) {
    const StyleCell diag = cell(i, i);
    for (int j = 0; j < s; ++j) {
      StyleCell& c = cell(i, j);
      c.same_style = i == j;
      c.style_change_pct = relative_style_change(c.classified_ref_pct, c.classified_sys_pct);
      if (i == j) {
        c.bleu_decrease_pct.reset();
        c.meteor_decrease_pct.reset();
      } else {
        c.bleu_decrease_pct = relative_metric_decrease(diag.bleu, c.bleu);
        c.meteor_decrease_pct = relative_metric_decrease(diag.meteor, c.meteor);
      }
    }
  }
}

namespace {

std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_full(*v) : "n/a"; }

std::optional<double> parse_opt(const std::string& s, const std::string& context) {
  if (s == "n/a") return std::nullopt;
  return io::parse_double(s, context);
}

// Per-measure accessors used by both the TSV writer and the reader.
struct Measure {
  const char* name;
  std::string (*get)(const StyleCell&);
  void (*set)(StyleCell&, const std::string&);
};

const std::vector<Measure>& measures() {
  static const std::vector<Measure> kMeasures = {
      {"bleu", [](const StyleCell& c) { return fmt_full(c.bleu); },
       [](StyleCell& c, const std::string& s) { c.bleu = io::parse_double(s, "bleu"); }},
      {"meteor", [](const StyleCell& c) { return fmt_full(c.meteor); },
       [](StyleCell& c, const std::string& s) { c.meteor = io::parse_double(s, "meteor"); }},
      {"contractions_ref",
       [](const StyleCell& c) { return std::to_string(c.contractions_ref); },
       [](StyleCell& c, const std::string& s) {
         c.contractions_ref = io::parse_int(s, "contractions_ref");
       }},
      {"contractions_sys",
       [](const StyleCell& c) { return std::to_string(c.contractions_sys); },
       [](StyleCell& c, const std::string& s) {
         c.contractions_sys = io::parse_int(s, "contractions_sys");
       }},
      {"classified_ref_pct",
       [](const StyleCell& c) { return fmt_full(c.classified_ref_pct); },
       [](StyleCell& c, const std::string& s) {
         c.classified_ref_pct = io::parse_double(s, "classified_ref_pct");
       }},
      {"classified_sys_pct",
       [](const StyleCell& c) { return fmt_full(c.classified_sys_pct); },
       [](StyleCell& c, const std::string& s) {
         c.classified_sys_pct = io::parse_double(s, "classified_sys_pct");
       }},
      {"style_change_pct", [](const StyleCell& c) { return fmt_opt(c.style_change_pct); },
       [](StyleCell& c, const std::string& s) {
         c.style_change_pct = parse_opt(s, "style_change_pct");
       }},
      {"bleu_decrease_pct", [](const StyleCell& c) { return fmt_opt(c.bleu_decrease_pct); },
       [](StyleCell& c, const std::string& s) {
         c.bleu_decrease_pct = parse_opt(s, "bleu_decrease_pct");
       }},
      {"meteor_decrease_pct",
       [](const StyleCell& c) { return fmt_opt(c.meteor_decrease_pct); },
       [](StyleCell& c, const std::string& s) {
         c.meteor_decrease_pct = parse_opt(s, "meteor_decrease_pct");
       }},
  };
  return kMeasures;
}

}  // namespace

std::string EvalReport::to_tsv() const {
  std::ostringstream out;
  for (const auto& [key, value] : meta) out << "#meta\t" << key << '\t' << value << '\n';
  out << "#styles";
  for (const auto& s : styles) out << '\t' << s;
  out << '\n';
  int s = static_cast<int>(styles.size());
  for (const auto& m : measures()) {
    out << "#table\t" << m.name << '\n';
    out << ".";
    for (const auto& name : styles) out << '\t' << name;
    out << '\n';
    for (int i = 0; i < s; ++i) {
      out << styles[static_cast<size_t>(i)];
      for (int j = 0; j < s; ++j) out << '\t' << m.get(cell(i, j));
      out << '\n';
    }
  }
  return out.str();
}

EvalReport EvalReport::from_tsv(const std::string& text) {
  std::vector<std::string> lines;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  std::map<std::string, std::string> meta;
  std::vector<std::string> styles;
  size_t pos = 0;
  while (pos < lines.size()) {
    auto cols = io::split(lines[pos], '\t');
    if (cols[0] == "#meta") {
      if (cols.size() != 3) throw DataError("report meta line needs key and value");
      meta[cols[1]] = cols[2];
      ++pos;
    } else if (cols[0] == "#styles") {
      styles.assign(cols.begin() + 1, cols.end());
      ++pos;
      break;
    } else {
      throw DataError("unexpected report line: " + lines[pos]);
    }
  }
  if (styles.empty()) throw DataError("report has no #styles line");
  EvalReport report(styles);
  report.meta = std::move(meta);
  int s = static_cast<int>(styles.size());

  while (pos < lines.size()) {
    auto head = io::split(lines[pos], '\t');
    if (head.size() != 2 || head[0] != "#table") {
      throw DataError("expected #table line, got: " + lines[pos]);
    }
    const Measure* measure = nullptr;
    for (const auto& m : measures()) {
      if (head[1] == m.name) measure = &m;
    }
    if (!measure) throw DataError("unknown report table: " + head[1]);
    pos += 2;  // the #table line and the column-name row
    for (int i = 0; i < s; ++i, ++pos) {
      if (pos >= lines.size()) throw DataError("truncated report table: " + head[1]);
      auto cols = io::split(lines[pos], '\t');
      if (static_cast<int>(cols.size()) != s + 1) {
        throw DataError("report row has wrong column count: " + lines[pos]);
      }
      for (int j = 0; j < s; ++j) measure->set(report.cell(i, j), cols[static_cast<size_t>(j) + 1]);
    }
  }
  for (int i = 0; i < s; ++i) report.cell(i, i).same_style = true;
  return report;
}

namespace {

std::string fmt_score(double v) {  // scores reported scaled by 100
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

std::string fmt_pct(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", *v);
  return buf;
}

void render_table(std::ostringstream& out, const std::string& title,
                  const std::vector<std::string>& styles,
                  const std::vector<std::vector<std::string>>& rows) {
  size_t s = styles.size();
  std::vector<size_t> width(s + 1, 0);
  for (size_t j = 0; j <= s; ++j) {
    width[j] = j == 0 ? 0 : styles[j - 1].size();
    for (const auto& row : rows) width[j] = std::max(width[j], row[j].size());
  }
  for (size_t j = 0; j < s; ++j) width[0] = std::max(width[0], styles[j].size());

  out << title << '\n';
  out << std::string(width[0], ' ');
  for (size_t j = 0; j < s; ++j) {
    out << "  " << std::string(width[j + 1] - styles[j].size(), ' ') << styles[j];
  }
  out << '\n';
  for (size_t i = 0; i < rows.size(); ++i) {
    out << styles[i] << std::string(width[0] - styles[i].size(), ' ');
    for (size_t j = 0; j < s; ++j) {
      out << "  " << std::string(width[j + 1] - rows[i][j + 1].size(), ' ') << rows[i][j + 1];
    }
    out << '\n';
  }
}

}  // namespace

std::string EvalReport::render() const {
  std::ostringstream out;
  for (const auto& [key, value] : meta) out << key << ": " << value << '\n';
  if (!meta.empty()) out << '\n';
  size_t s = styles.size();

  auto grid = [&](auto&& fmt) {
    std::vector<std::vector<std::string>> rows;
    for (size_t i = 0; i < s; ++i) {
      std::vector<std::string> row(s + 1);
      row[0] = styles[i];
      for (size_t j = 0; j < s; ++j) {
        row[j + 1] = fmt(cell(static_cast<int>(i), static_cast<int>(j)));
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };

  render_table(out, "BLEU / METEOR (x100)", styles, grid([](const StyleCell& c) {
                 return fmt_score(c.bleu) + "/" + fmt_score(c.meteor);
               }));
  out << '\n';
  render_table(out, "Contractions, system (reference on the diagonal)", styles,
               grid([](const StyleCell& c) {
                 std::string v = std::to_string(c.contractions_sys);
                 if (c.same_style) v += " (" + std::to_string(c.contractions_ref) + ")";
                 return v;
               }));
  out << '\n';
  render_table(out, "Recognized as target style, reference / system (%)", styles,
               grid([](const StyleCell& c) {
                 char buf[64];
                 std::snprintf(buf, sizeof buf, "%.1f / %.1f", c.classified_ref_pct,
                               c.classified_sys_pct);
                 return std::string(buf);
               }));
  out << '\n';
  render_table(out, "Relative change in style presence", styles,
               grid([](const StyleCell& c) { return fmt_pct(c.style_change_pct); }));
  out << '\n';
  render_table(out, "Relative decrease in BLEU / METEOR", styles, grid([](const StyleCell& c) {
                 if (c.same_style) return std::string("-");
                 return fmt_pct(c.bleu_decrease_pct) + "/" + fmt_pct(c.meteor_decrease_pct);
               }));
  return out.str();
}

}  // namespace stylemux::metrics
