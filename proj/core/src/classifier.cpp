#include "stylemux/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "stylemux/checkpoint.hpp"
#include "stylemux/errors.hpp"
#include "stylemux/io.hpp"
#include "stylemux/log.hpp"
#include "stylemux/tensor_ops.hpp"
#include "stylemux/trainer.hpp"

namespace stylemux::cls {

void CnnConfig::validate() const {
  if (filter_widths.empty()) throw ConfigError("classifier needs at least one filter width");
  for (int w : filter_widths) {
    if (w < 1) throw ConfigError("filter widths must be positive");
  }
  if (filters_per_width < 1) throw ConfigError("filters_per_width must be positive");
  if (embed_dim < 1) throw ConfigError("embed_dim must be positive");
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (vocab_cap < 3) throw ConfigError("vocab_cap must cover the reserved ids");
}

std::map<std::string, std::string> CnnConfig::to_map() const {
  std::vector<std::string> widths;
  for (int w : filter_widths) widths.push_back(std::to_string(w));
  return {
      {"filter_widths", io::join(widths, ",")},
      {"filters_per_width", std::to_string(filters_per_width)},
      {"embed_dim", std::to_string(embed_dim)},
      {"dropout_p", std::to_string(dropout_p)},
      {"vocab_cap", std::to_string(vocab_cap)},
  };
}

CnnConfig CnnConfig::from_map(const std::map<std::string, std::string>& m) {
  auto need = [&](const std::string& key) {
    auto it = m.find(key);
    if (it == m.end()) throw DataError("classifier config missing key: " + key);
    return it->second;
  };
  CnnConfig cfg;
  cfg.filter_widths.clear();
  for (const auto& part : io::split(need("filter_widths"), ',')) {
    cfg.filter_widths.push_back(static_cast<int>(io::parse_int(part, "filter_widths")));
  }
  cfg.filters_per_width = static_cast<int>(io::parse_int(need("filters_per_width"),
                                                         "filters_per_width"));
  cfg.embed_dim = static_cast<int>(io::parse_int(need("embed_dim"), "embed_dim"));
  cfg.dropout_p = io::parse_double(need("dropout_p"), "dropout_p");
  cfg.vocab_cap = static_cast<int>(io::parse_int(need("vocab_cap"), "vocab_cap"));
  cfg.validate();
  return cfg;
}

WordVocab WordVocab::build(const std::vector<std::vector<std::string>>& corpus, int cap) {
  if (cap < 3) throw ConfigError("vocab cap must cover the reserved ids");
  std::map<std::string, int64_t> counts;
  for (const auto& sent : corpus) {
    for (const auto& tok : sent) ++counts[io::ascii_lower(tok)];
  }
  std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(), counts.end());
  // Descending count; the map already yields lexicographic order for ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> words = {"<pad>", "<unk>"};
  for (const auto& [word, count] : ranked) {
    if (static_cast<int>(words.size()) >= cap) break;
    if (word == "<pad>" || word == "<unk>") continue;
    words.push_back(word);
  }
  return from_words(std::move(words));
}

WordVocab WordVocab::from_words(std::vector<std::string> words) {
  if (words.size() < 2 || words[0] != "<pad>" || words[1] != "<unk>") {
    throw DataError("word vocabulary must start with <pad> and <unk>");
  }
  WordVocab v;
  v.words_ = std::move(words);
  for (size_t i = 0; i < v.words_.size(); ++i) {
    auto [it, inserted] = v.ids_.emplace(v.words_[i], static_cast<int>(i));
    if (!inserted) throw DataError("duplicate word in vocabulary: " + v.words_[i]);
  }
  return v;
}

int WordVocab::id(const std::string& word) const {
  auto it = ids_.find(io::ascii_lower(word));
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> WordVocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

TextCnn init_cnn(const CnnConfig& cfg, WordVocab vocab, Rng& rng) {
  cfg.validate();
  if (vocab.size() < 2) throw ConfigError("classifier vocabulary is empty");
  TextCnn cnn;
  cnn.cfg = cfg;
  cnn.vocab = std::move(vocab);
  const int v = cnn.vocab.size(), e = cfg.embed_dim, f = cfg.filters_per_width;
  auto uniform = [&](Shape shape) {
    return Tensor::randu(std::move(shape), rng, -0.08, 0.08, true);
  };
  cnn.embed = uniform({v, e});
  for (int w : cfg.filter_widths) {
    cnn.conv_w.push_back(uniform({w * e, f}));
    cnn.conv_b.push_back(Tensor::zeros({f}, true));
  }
  const int pooled = static_cast<int>(cfg.filter_widths.size()) * f;
  cnn.out_w = uniform({pooled, 2});
  cnn.out_b = Tensor::zeros({2}, true);
  return cnn;
}

std::vector<std::pair<std::string, Tensor*>> named_cnn_params(TextCnn& cnn) {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("embed", &cnn.embed);
  for (size_t i = 0; i < cnn.conv_w.size(); ++i) {
    out.emplace_back("conv_w." + std::to_string(i), &cnn.conv_w[i]);
    out.emplace_back("conv_b." + std::to_string(i), &cnn.conv_b[i]);
  }
  out.emplace_back("out_w", &cnn.out_w);
  out.emplace_back("out_b", &cnn.out_b);
  return out;
}

Tensor cnn_logits(Tape& tape, const TextCnn& cnn, const std::vector<int>& ids_raw, bool train,
                  Rng& rng) {
  for (int id : ids_raw) {
    if (id < 0 || id >= cnn.vocab.size()) {
      throw IndexError("classifier token id out of range: " + std::to_string(id));
    }
  }
  // Trailing padding never changes the result: windows over it are dropped.
  std::vector<int> ids = ids_raw;
  while (!ids.empty() && ids.back() == WordVocab::kPad) ids.pop_back();
  int max_w = *std::max_element(cnn.cfg.filter_widths.begin(), cnn.cfg.filter_widths.end());
  while (static_cast<int>(ids.size()) < max_w) ids.push_back(WordVocab::kPad);

  auto x = nn::embedding_lookup(tape, cnn.embed, ids);  // [T x E]
  Tensor pooled;
  for (size_t i = 0; i < cnn.cfg.filter_widths.size(); ++i) {
    auto windows = nn::unfold(tape, x, cnn.cfg.filter_widths[i]);
    auto act = nn::relu(tape, nn::linear(tape, windows, cnn.conv_w[i], cnn.conv_b[i]));
    auto best = nn::col_max(tape, act);  // [1 x F]
    pooled = i == 0 ? best : nn::concat_last_dim(tape, pooled, best);
  }
  auto dropped = nn::dropout(tape, pooled, cnn.cfg.dropout_p, train, rng);
  return nn::linear(tape, dropped, cnn.out_w, cnn.out_b);  // [1 x 2]
}

std::array<double, 2> class_probs(const TextCnn& cnn, const std::vector<std::string>& tokens) {
  Tape tape(false);
  Rng unused(0);
  auto logits = cnn_logits(tape, cnn, cnn.vocab.encode(tokens), false, unused);
  double a = logits.data()[0], b = logits.data()[1];
  double hi = std::max(a, b);
  double ea = std::exp(a - hi), eb = std::exp(b - hi);
  return {ea / (ea + eb), eb / (ea + eb)};
}

double style_prob(const TextCnn& cnn, const std::vector<std::string>& tokens) {
  return class_probs(cnn, tokens)[1];
}

void ClassifierTrainConfig::validate() const {
  if (lr <= 0) throw ConfigError("classifier lr must be positive");
  if (batch_size < 2) throw ConfigError("classifier batch size must be at least 2");
  if (updates < 1) throw ConfigError("classifier updates must be positive");
  if (val_fraction <= 0.0 || val_fraction >= 1.0) {
    throw ConfigError("val_fraction must be in (0, 1)");
  }
}

namespace {

using Sentences = std::vector<std::vector<std::string>>;

double balanced_accuracy(const TextCnn& cnn, const Sentences& pos, const Sentences& neg) {
  int correct = 0;
  for (const auto& s : pos) correct += style_prob(cnn, s) > 0.5 ? 1 : 0;
  for (const auto& s : neg) correct += style_prob(cnn, s) <= 0.5 ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(pos.size() + neg.size());
}

}  // namespace

TrainedClassifier train_classifier(
    int style_id, const std::vector<std::vector<std::vector<std::string>>>& corpus_by_style,
    const CnnConfig& cfg, const ClassifierTrainConfig& tc) {
  cfg.validate();
  tc.validate();
  if (style_id < 0 || style_id >= static_cast<int>(corpus_by_style.size())) {
    throw IndexError("style id out of range: " + std::to_string(style_id));
  }
  int populated = 0;
  for (const auto& style : corpus_by_style) populated += style.empty() ? 0 : 1;
  if (populated < 2) throw ConfigError("one-vs-rest training needs at least two styles with data");

  Rng rng(tc.seed);
  Sentences pos = corpus_by_style[static_cast<size_t>(style_id)];
  Sentences neg;
  for (size_t s = 0; s < corpus_by_style.size(); ++s) {
    if (static_cast<int>(s) == style_id) continue;
    neg.insert(neg.end(), corpus_by_style[s].begin(), corpus_by_style[s].end());
  }
  if (pos.empty()) throw ConfigError("target style has no sentences");
  rng.shuffle(pos);
  rng.shuffle(neg);

  auto split = [&](Sentences& all) {
    size_t held = std::max<size_t>(1, static_cast<size_t>(std::llround(
                                          tc.val_fraction * static_cast<double>(all.size()))));
    if (held >= all.size()) throw ConfigError("too few sentences to hold out a validation split");
    Sentences val(all.end() - static_cast<int64_t>(held), all.end());
    all.resize(all.size() - held);
    return val;
  };
  Sentences pos_val = split(pos);
  Sentences neg_val = split(neg);
  // Balance the held-out split so chance sits at 50%.
  size_t val_n = std::min(pos_val.size(), neg_val.size());
  pos_val.resize(val_n);
  neg_val.resize(val_n);

  Sentences vocab_corpus = pos;
  vocab_corpus.insert(vocab_corpus.end(), neg.begin(), neg.end());
  auto vocab = WordVocab::build(vocab_corpus, cfg.vocab_cap);
  TextCnn cnn = init_cnn(cfg, std::move(vocab), rng);

  std::vector<Tensor*> params;
  for (auto& [name, t] : named_cnn_params(cnn)) params.push_back(t);
  train::Adam adam(params, tc.beta1, tc.beta2, tc.eps);

  const int half = tc.batch_size / 2;
  for (int update = 0; update < tc.updates; ++update) {
    Tape tape;
    Tensor loss_sum;
    int drawn = 0;
    auto draw = [&](const Sentences& pool, int label) {
      const auto& sent = pool[static_cast<size_t>(rng.uniform_int(
          static_cast<int>(pool.size())))];
      auto logits = cnn_logits(tape, cnn, cnn.vocab.encode(sent), true, rng);
      auto loss = nn::cross_entropy(tape, logits, {label}, -1);
      loss_sum = drawn == 0 ? loss : nn::add(tape, loss_sum, loss);
      ++drawn;
    };
    for (int i = 0; i < half; ++i) draw(pos, 1);
    for (int i = 0; i < tc.batch_size - half; ++i) draw(neg, 0);
    auto loss = nn::scale(tape, loss_sum, 1.0 / drawn);
    backward(tape, loss);
    adam.step(tc.lr);
    for (Tensor* t : params) t->zero_grad();
  }

  TrainedClassifier out{std::move(cnn), 0.0};
  out.val_accuracy = balanced_accuracy(out.cnn, pos_val, neg_val);
  log::info("classifier style " + std::to_string(style_id) + " validation accuracy " +
            std::to_string(out.val_accuracy));
  return out;
}

double classify_corpus(const TextCnn& cnn,
                       const std::vector<std::vector<std::string>>& sentences) {
  if (sentences.empty()) throw ConfigError("cannot classify an empty corpus");
  int hits = 0;
  for (const auto& s : sentences) hits += style_prob(cnn, s) > 0.5 ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(sentences.size());
}

std::vector<std::string> classification_report(
    const TextCnn& cnn, const std::vector<std::vector<std::string>>& sentences) {
  std::vector<std::string> lines;
  lines.reserve(sentences.size());
  char buf[64];
  for (size_t i = 0; i < sentences.size(); ++i) {
    double p = style_prob(cnn, sentences[i]);
    std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%d", i, p, p > 0.5 ? 1 : 0);
    lines.emplace_back(buf);
  }
  return lines;
}

void save_classifier(const TextCnn& cnn, const std::string& path) {
  ckpt::Checkpoint file;
  file.config = cnn.cfg.to_map();
  file.config["type"] = "textcnn";
  file.config["vocab"] = io::join(cnn.vocab.words(), "\x1f");
  TextCnn shallow = cnn;  // tensors share storage; list the names cheaply
  for (auto& [name, t] : named_cnn_params(shallow)) {
    file.add(name, t->shape(), t->data());
  }
  file.save(path);
}

TextCnn load_classifier(const std::string& path) {
  auto file = ckpt::Checkpoint::load(path);
  auto type = file.config.find("type");
  if (type == file.config.end() || type->second != "textcnn") {
    throw DataError("not a classifier checkpoint: " + path);
  }
  auto vocab_it = file.config.find("vocab");
  if (vocab_it == file.config.end()) throw DataError("classifier checkpoint lacks a vocabulary");
  auto cfg = CnnConfig::from_map(file.config);
  auto vocab = WordVocab::from_words(io::split(vocab_it->second, '\x1f'));

  Rng rng(0);
  TextCnn cnn = init_cnn(cfg, std::move(vocab), rng);
  for (auto& [name, t] : named_cnn_params(cnn)) {
    const auto& block = file.block(name);
    if (block.shape != t->shape()) throw DataError("checkpoint shape mismatch for " + name);
    t->data() = block.data;
  }
  return cnn;
}

}  // namespace stylemux::cls
