#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylemux/rng.hpp"
#include "stylemux/tensor.hpp"

namespace stylemux::cls {

// Convolutional sentence classifier: parallel full-height filters of several
// widths over word embeddings, max-pooled over time, one linear head with two
// classes (target style vs the rest).
struct CnnConfig {
  std::vector<int> filter_widths = {3, 4, 5};
  int filters_per_width = 128;
  int embed_dim = 128;
  double dropout_p = 0.5;
  int vocab_cap = 20000;  // most frequent words, ids 0/1 reserved

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  static CnnConfig from_map(const std::map<std::string, std::string>& m);
};

// Word-level vocabulary: 0 = <pad>, 1 = <unk>, then words by descending
// frequency (ties lexicographic), capped. Lookups lowercase their input.
class WordVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  WordVocab() = default;
  static WordVocab build(const std::vector<std::vector<std::string>>& corpus, int cap);
  static WordVocab from_words(std::vector<std::string> words);  // id order, incl. reserved

  int id(const std::string& word) const;
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

struct TextCnn {
  CnnConfig cfg;
  WordVocab vocab;
  Tensor embed;                // [V x E]
  std::vector<Tensor> conv_w;  // per width: [w*E x F]
  std::vector<Tensor> conv_b;  // [F]
  Tensor out_w;                // [widths*F x 2]
  Tensor out_b;                // [2]
};

TextCnn init_cnn(const CnnConfig& cfg, WordVocab vocab, Rng& rng);
std::vector<std::pair<std::string, Tensor*>> named_cnn_params(TextCnn& cnn);

// Two-class logits for one sentence, shape [1 x 2]. Trailing <pad> ids are
// trimmed first so padded and unpadded inputs classify identically; the rest
// is padded up to the widest filter when shorter.
Tensor cnn_logits(Tape& tape, const TextCnn& cnn, const std::vector<int>& ids, bool train,
                  Rng& rng);

// Softmax over the two logits, computed in double. [P(rest), P(target)].
std::array<double, 2> class_probs(const TextCnn& cnn, const std::vector<std::string>& tokens);
double style_prob(const TextCnn& cnn, const std::vector<std::string>& tokens);

struct ClassifierTrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int batch_size = 32;
  int updates = 600;
  double val_fraction = 0.1;  // held out per style before training
  uint64_t seed = 1;

  void validate() const;
};

struct TrainedClassifier {
  TextCnn cnn;
  double val_accuracy = 0.0;  // on a class-balanced held-out split
};

// One-vs-rest training: sentences of corpus_by_style[style_id] against all
// other styles pooled, batches sampled half positive half negative.
// Throws ConfigError when fewer than two styles have sentences.
TrainedClassifier train_classifier(int style_id,
                                   const std::vector<std::vector<std::vector<std::string>>>&
                                       corpus_by_style,
                                   const CnnConfig& cfg, const ClassifierTrainConfig& tc);

// Percentage of sentences with P(target) > 0.5. Empty corpus is a ConfigError.
double classify_corpus(const TextCnn& cnn, const std::vector<std::vector<std::string>>& sentences);

// One line per sentence: id<TAB>prob<TAB>label, label = prob > 0.5.
std::vector<std::string> classification_report(const TextCnn& cnn,
                                               const std::vector<std::vector<std::string>>&
                                                   sentences);

void save_classifier(const TextCnn& cnn, const std::string& path);
TextCnn load_classifier(const std::string& path);

}  // namespace stylemux::cls
