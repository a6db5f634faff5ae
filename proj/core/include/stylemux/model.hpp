#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stylemux/corpus.hpp"
#include "stylemux/errors.hpp"
#include "stylemux/rng.hpp"
#include "stylemux/tensor.hpp"
#include "stylemux/tensor_ops.hpp"

namespace stylemux::model {

struct ModelConfig {
  int layers = 6;
  int model_dim = 512;
  int heads = 8;
  int ffn_dim = 0;          // 0 resolves to 4*model_dim
  int token_embed_dim = 0;  // 0 resolves to model_dim
  int factor_embed_dim = 4;
  double dropout_p = 0.1;
  int vocab_size = 0;
  int max_len = 256;
  int num_langs = 0;
  int num_styles = 0;

  void finalize() {
    if (ffn_dim == 0) ffn_dim = 4 * model_dim;
    if (token_embed_dim == 0) token_embed_dim = model_dim;
  }
  void validate() const;
  std::map<std::string, std::string> to_map() const;
  static ModelConfig from_map(const std::map<std::string, std::string>& m);
};

// One transformer layer. Encoder layers leave the cross-attention tensors
// (c*, ln2_*) default-constructed.
template <class T>
struct LayerT {
  TensorT<T> wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b;
  TensorT<T> cwq, cbq, cwk, cbk, cwv, cbv, cwo, cbo, ln2_g, ln2_b;
  TensorT<T> w1, b1, w2, b2, ln3_g, ln3_b;
};

template <class T>
struct ParamsT {
  ModelConfig cfg;
  TensorT<T> src_embed, tgt_embed;     // [V x E]
  TensorT<T> lang_embed, style_embed;  // [m x F], [n x F]
  TensorT<T> in_proj_w, in_proj_b;     // [E+2F x d], [d]
  TensorT<T> out_w, out_b;             // [d x V], [V]
  std::vector<LayerT<T>> enc, dec;
};
using Params = ParamsT<float>;

inline void ModelConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(layers, "layers");
  positive(model_dim, "model_dim");
  positive(heads, "heads");
  positive(ffn_dim, "ffn_dim");
  positive(token_embed_dim, "token_embed_dim");
  positive(factor_embed_dim, "factor_embed_dim");
  positive(num_langs, "num_langs");
  positive(num_styles, "num_styles");
  if (model_dim % heads != 0) throw ConfigError("heads must divide model_dim");
  if (token_embed_dim != model_dim) {
    // The decoder feeds target embeddings straight into the stack; only the
    // factored source side carries a reconciling projection.
    throw ConfigError("token_embed_dim must equal model_dim");
  }
  if (vocab_size < 5) throw ConfigError("vocab_size must cover reserved ids plus content");
  if (max_len < 2) throw ConfigError("max_len must be at least 2");
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("dropout_p must be in [0, 1)");
}

inline std::map<std::string, std::string> ModelConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["layers"] = std::to_string(layers);
  m["model_dim"] = std::to_string(model_dim);
  m["heads"] = std::to_string(heads);
  m["ffn_dim"] = std::to_string(ffn_dim);
  m["token_embed_dim"] = std::to_string(token_embed_dim);
  m["factor_embed_dim"] = std::to_string(factor_embed_dim);
  m["dropout_p"] = std::to_string(dropout_p);
  m["vocab_size"] = std::to_string(vocab_size);
  m["max_len"] = std::to_string(max_len);
  m["num_langs"] = std::to_string(num_langs);
  m["num_styles"] = std::to_string(num_styles);
  return m;
}

ModelConfig model_config_from_map(const std::map<std::string, std::string>& m);
inline ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& m) {
  return model_config_from_map(m);
}

template <class T>
ParamsT<T> init_params(const ModelConfig& cfg_in, Rng& rng) {
  ModelConfig cfg = cfg_in;
  cfg.finalize();
  cfg.validate();
  const int d = cfg.model_dim, e = cfg.token_embed_dim, f = cfg.factor_embed_dim;
  const int v = cfg.vocab_size;
  auto uw = [&](Shape s) { return TensorT<T>::randu(std::move(s), rng, -0.08, 0.08, true); };
  auto zero = [&](Shape s) { return TensorT<T>::zeros(std::move(s), true); };
  auto one = [&](Shape s) {
    std::vector<T> data(static_cast<size_t>(shape_numel(s)), T(1));
    return TensorT<T>::leaf(std::move(s), std::move(data), true);
  };
  auto make_layer = [&](bool cross) {
    LayerT<T> L;
    L.wq = uw({d, d}); L.bq = zero({d});
    L.wk = uw({d, d}); L.bk = zero({d});
    L.wv = uw({d, d}); L.bv = zero({d});
    L.wo = uw({d, d}); L.bo = zero({d});
    L.ln1_g = one({d}); L.ln1_b = zero({d});
    if (cross) {
      L.cwq = uw({d, d}); L.cbq = zero({d});
      L.cwk = uw({d, d}); L.cbk = zero({d});
      L.cwv = uw({d, d}); L.cbv = zero({d});
      L.cwo = uw({d, d}); L.cbo = zero({d});
      L.ln2_g = one({d}); L.ln2_b = zero({d});
    }
    L.w1 = uw({d, cfg.ffn_dim}); L.b1 = zero({cfg.ffn_dim});
    L.w2 = uw({cfg.ffn_dim, d}); L.b2 = zero({d});
    L.ln3_g = one({d}); L.ln3_b = zero({d});
    return L;
  };

  ParamsT<T> p;
  p.cfg = cfg;
  p.src_embed = uw({v, e});
  p.tgt_embed = uw({v, e});
  p.lang_embed = uw({cfg.num_langs, f});
  p.style_embed = uw({cfg.num_styles, f});
  p.in_proj_w = uw({e + 2 * f, d});
  p.in_proj_b = zero({d});
  p.out_w = uw({d, v});
  p.out_b = zero({v});
  for (int i = 0; i < cfg.layers; ++i) p.enc.push_back(make_layer(false));
  for (int i = 0; i < cfg.layers; ++i) p.dec.push_back(make_layer(true));
  return p;
}

// Stable parameter naming; also the checkpoint block order.
template <class T>
std::vector<std::pair<std::string, TensorT<T>*>> named_params(ParamsT<T>& p) {
  std::vector<std::pair<std::string, TensorT<T>*>> out;
  auto add = [&](const std::string& n, TensorT<T>& t) { out.emplace_back(n, &t); };
  add("src_embed", p.src_embed);
  add("tgt_embed", p.tgt_embed);
  add("lang_embed", p.lang_embed);
  add("style_embed", p.style_embed);
  add("in_proj_w", p.in_proj_w);
  add("in_proj_b", p.in_proj_b);
  auto add_layer = [&](const std::string& prefix, LayerT<T>& L, bool cross) {
    add(prefix + ".wq", L.wq); add(prefix + ".bq", L.bq);
    add(prefix + ".wk", L.wk); add(prefix + ".bk", L.bk);
    add(prefix + ".wv", L.wv); add(prefix + ".bv", L.bv);
    add(prefix + ".wo", L.wo); add(prefix + ".bo", L.bo);
    add(prefix + ".ln1_g", L.ln1_g); add(prefix + ".ln1_b", L.ln1_b);
    if (cross) {
      add(prefix + ".cwq", L.cwq); add(prefix + ".cbq", L.cbq);
      add(prefix + ".cwk", L.cwk); add(prefix + ".cbk", L.cbk);
      add(prefix + ".cwv", L.cwv); add(prefix + ".cbv", L.cbv);
      add(prefix + ".cwo", L.cwo); add(prefix + ".cbo", L.cbo);
      add(prefix + ".ln2_g", L.ln2_g); add(prefix + ".ln2_b", L.ln2_b);
    }
    add(prefix + ".w1", L.w1); add(prefix + ".b1", L.b1);
    add(prefix + ".w2", L.w2); add(prefix + ".b2", L.b2);
    add(prefix + ".ln3_g", L.ln3_g); add(prefix + ".ln3_b", L.ln3_b);
  };
  for (size_t i = 0; i < p.enc.size(); ++i) add_layer("enc" + std::to_string(i), p.enc[i], false);
  for (size_t i = 0; i < p.dec.size(); ++i) add_layer("dec" + std::to_string(i), p.dec[i], true);
  add("out_w", p.out_w);
  add("out_b", p.out_b);
  return out;
}

namespace detail {

// Sinusoidal position rows for a padded batch laid out [batch*width x dim];
// row r*width+j gets the encoding for position j.
template <class T>
TensorT<T> positions_leaf(int batch, int width, int dim) {
  std::vector<T> pe(static_cast<size_t>(width) * dim);
  for (int pos = 0; pos < width; ++pos) {
    for (int k = 0; k < dim; ++k) {
      double expo = (2.0 * (k / 2)) / dim;
      double angle = pos / std::pow(10000.0, expo);
      pe[static_cast<size_t>(pos) * dim + k] =
          static_cast<T>((k % 2 == 0) ? std::sin(angle) : std::cos(angle));
    }
  }
  std::vector<T> all(static_cast<size_t>(batch) * pe.size());
  for (int r = 0; r < batch; ++r) {
    std::copy(pe.begin(), pe.end(), all.begin() + static_cast<size_t>(r) * pe.size());
  }
  return TensorT<T>::leaf({batch * width, dim}, std::move(all), false);
}

template <class T>
TensorT<T> self_block(TapeT<T>& tape, const LayerT<T>& L, const TensorT<T>& x,
                      const std::vector<int>& lens, int heads, bool causal, double p_drop,
                      bool train, Rng& rng) {
  auto q = nn::linear(tape, x, L.wq, L.bq);
  auto k = nn::linear(tape, x, L.wk, L.bk);
  auto v = nn::linear(tape, x, L.wv, L.bv);
  auto a = nn::attention(tape, q, k, v, lens, lens, heads, causal);
  auto o = nn::linear(tape, a, L.wo, L.bo);
  auto res = nn::add(tape, x, nn::dropout(tape, o, p_drop, train, rng));
  return nn::layer_norm(tape, res, L.ln1_g, L.ln1_b);
}

template <class T>
TensorT<T> cross_block(TapeT<T>& tape, const LayerT<T>& L, const TensorT<T>& x,
                       const TensorT<T>& memory, const std::vector<int>& q_lens,
                       const std::vector<int>& kv_lens, int heads, double p_drop, bool train,
                       Rng& rng) {
  auto q = nn::linear(tape, x, L.cwq, L.cbq);
  auto k = nn::linear(tape, memory, L.cwk, L.cbk);
  auto v = nn::linear(tape, memory, L.cwv, L.cbv);
  auto a = nn::attention(tape, q, k, v, q_lens, kv_lens, heads, false);
  auto o = nn::linear(tape, a, L.cwo, L.cbo);
  auto res = nn::add(tape, x, nn::dropout(tape, o, p_drop, train, rng));
  return nn::layer_norm(tape, res, L.ln2_g, L.ln2_b);
}

template <class T>
TensorT<T> ffn_block(TapeT<T>& tape, const LayerT<T>& L, const TensorT<T>& x, double p_drop,
                     bool train, Rng& rng) {
  auto h = nn::relu(tape, nn::linear(tape, x, L.w1, L.b1));
  auto o = nn::linear(tape, h, L.w2, L.b2);
  auto res = nn::add(tape, x, nn::dropout(tape, o, p_drop, train, rng));
  return nn::layer_norm(tape, res, L.ln3_g, L.ln3_b);
}

template <class T>
TensorT<T> embed_rows(TapeT<T>& tape, const ParamsT<T>& p, const TensorT<T>& table,
                      const std::vector<int>& flat_ids, int batch, int width, bool project,
                      const std::vector<int>* flat_lang, const std::vector<int>* flat_style,
                      bool train, Rng& rng) {
  TensorT<T> x;
  if (project) {
    auto tok = nn::embedding_lookup(tape, table, flat_ids);
    auto lf = nn::embedding_lookup(tape, p.lang_embed, *flat_lang);
    auto sf = nn::embedding_lookup(tape, p.style_embed, *flat_style);
    auto cat = nn::concat_last_dim(tape, tok, lf, sf);
    x = nn::linear(tape, cat, p.in_proj_w, p.in_proj_b);
  } else {
    x = nn::embedding_lookup(tape, table, flat_ids);
  }
  x = nn::scale(tape, x, std::sqrt(static_cast<double>(p.cfg.model_dim)));
  x = nn::add(tape, x, positions_leaf<T>(batch, width, p.cfg.model_dim));
  return nn::dropout(tape, x, p.cfg.dropout_p, train, rng);
}

}  // namespace detail

// Factored source embedding: token, target-language, and target-style
// embeddings concatenated per position, projected to model width, scaled by
// sqrt(d), plus sinusoidal positions.
template <class T>
TensorT<T> embed_source(TapeT<T>& tape, const ParamsT<T>& p, const std::vector<int>& src_ids,
                        const std::vector<int>& factor_lang, const std::vector<int>& factor_style,
                        bool train = false, Rng* rng = nullptr) {
  if (src_ids.empty()) throw DataError("embed_source: empty source");
  if (factor_lang.size() != src_ids.size() || factor_style.size() != src_ids.size()) {
    throw DimensionError("embed_source: factor sequences must match source length");
  }
  if (static_cast<int>(src_ids.size()) > p.cfg.max_len) {
    throw DimensionError("embed_source: source exceeds max_len");
  }
  Rng dummy(0);
  return detail::embed_rows(tape, p, p.src_embed, src_ids, 1, static_cast<int>(src_ids.size()),
                            true, &factor_lang, &factor_style, train, rng ? *rng : dummy);
}

// Encoder stack over padded rows [B*W x d].
template <class T>
TensorT<T> encode_rows(TapeT<T>& tape, const ParamsT<T>& p, TensorT<T> x,
                       const std::vector<int>& lens, bool train, Rng& rng) {
  for (const auto& L : p.enc) {
    x = detail::self_block(tape, L, x, lens, p.cfg.heads, false, p.cfg.dropout_p, train, rng);
    x = detail::ffn_block(tape, L, x, p.cfg.dropout_p, train, rng);
  }
  return x;
}

// Single-sentence encoder over an already-embedded input; output keeps the
// input's [len x d] shape.
template <class T>
TensorT<T> encode(TapeT<T>& tape, const ParamsT<T>& p, const TensorT<T>& embedded) {
  Rng dummy(0);
  return encode_rows(tape, p, embedded, {embedded.dim(0)}, false, dummy);
}

template <class T>
TensorT<T> encode_sentence(TapeT<T>& tape, const ParamsT<T>& p, const std::vector<int>& src_ids,
                           int tgt_lang, int tgt_style) {
  std::vector<int> lang(src_ids.size(), tgt_lang), style(src_ids.size(), tgt_style);
  auto x = embed_source(tape, p, src_ids, lang, style);
  Rng dummy(0);
  return encode_rows(tape, p, x, {static_cast<int>(src_ids.size())}, false, dummy);
}

// Decoder stack over padded rows; memory is the encoder output.
template <class T>
TensorT<T> decode_rows(TapeT<T>& tape, const ParamsT<T>& p, const std::vector<int>& dec_in,
                       const std::vector<int>& dec_lens, int dec_width, const TensorT<T>& memory,
                       const std::vector<int>& src_lens, bool train, Rng& rng) {
  const int batch = static_cast<int>(dec_lens.size());
  auto x = detail::embed_rows(tape, p, p.tgt_embed, dec_in, batch, dec_width, false, nullptr,
                              nullptr, train, rng);
  for (const auto& L : p.dec) {
    x = detail::self_block(tape, L, x, dec_lens, p.cfg.heads, true, p.cfg.dropout_p, train, rng);
    x = detail::cross_block(tape, L, x, memory, dec_lens, src_lens, p.cfg.heads, p.cfg.dropout_p,
                            train, rng);
    x = detail::ffn_block(tape, L, x, p.cfg.dropout_p, train, rng);
  }
  return x;
}

// Per-position vocabulary logits for one decoder prefix, [len x V].
template <class T>
TensorT<T> decoder_logits(TapeT<T>& tape, const ParamsT<T>& p, const std::vector<int>& prefix,
                          const TensorT<T>& memory) {
  if (prefix.empty()) throw DataError("decoder prefix must not be empty");
  if (static_cast<int>(prefix.size()) > p.cfg.max_len) {
    throw DimensionError("decoder prefix exceeds max_len " + std::to_string(p.cfg.max_len));
  }
  Rng dummy(0);
  auto h = decode_rows(tape, p, prefix, {static_cast<int>(prefix.size())},
                       static_cast<int>(prefix.size()), memory, {memory.dim(0)}, false, dummy);
  return nn::linear(tape, h, p.out_w, p.out_b);
}

// Next-token logits after the given prefix (last row of decoder_logits).
template <class T>
std::vector<T> decode_step(const ParamsT<T>& p, const TensorT<T>& memory,
                           const std::vector<int>& prefix) {
  TapeT<T> tape(false);
  auto logits = decoder_logits(tape, p, prefix, memory);
  const int v = logits.dim(1);
  auto base = static_cast<size_t>(logits.dim(0) - 1) * v;
  return std::vector<T>(logits.data().begin() + base, logits.data().begin() + base + v);
}

// Teacher-forced mean cross-entropy over the batch's non-PAD target
// positions. Position j predicts target token j+1.
template <class T>
TensorT<T> forward_loss(TapeT<T>& tape, const ParamsT<T>& p, const corpus::Batch& b, bool train,
                        Rng& rng) {
  const int n = b.size();
  if (n == 0) throw DataError("forward_loss: empty batch");
  if (b.tgt_len < 2) throw DataError("forward_loss: target width below BOS+token");
  for (int r = 0; r < n; ++r) {
    if (b.tgt_lens[static_cast<size_t>(r)] < 2) {
      throw DataError("forward_loss: target shorter than BOS+token");
    }
  }
  auto src_x = detail::embed_rows(tape, p, p.src_embed, b.src, n, b.src_len, true,
                                  &b.factor_lang, &b.factor_style, train, rng);
  auto memory = encode_rows(tape, p, src_x, b.src_lens, train, rng);

  const int w = b.tgt_len - 1;
  std::vector<int> dec_in(static_cast<size_t>(n) * w);
  std::vector<int> targets(static_cast<size_t>(n) * w);
  std::vector<int> dec_lens(static_cast<size_t>(n));
  for (int r = 0; r < n; ++r) {
    dec_lens[static_cast<size_t>(r)] = b.tgt_lens[static_cast<size_t>(r)] - 1;
    for (int j = 0; j < w; ++j) {
      dec_in[static_cast<size_t>(r) * w + j] = b.tgt[static_cast<size_t>(r) * b.tgt_len + j];
      bool live = j + 1 < b.tgt_lens[static_cast<size_t>(r)];
      targets[static_cast<size_t>(r) * w + j] =
          live ? b.tgt[static_cast<size_t>(r) * b.tgt_len + j + 1] : -1;
    }
  }
  auto h = decode_rows(tape, p, dec_in, dec_lens, w, memory, b.src_lens, train, rng);
  auto logits = nn::linear(tape, h, p.out_w, p.out_b);
  return nn::cross_entropy(tape, logits, targets, -1);
}

// ---- decoding ----

std::vector<double> log_softmax(const std::vector<float>& logits);

// Beam search driven by a pluggable next-token log-probability function, so
// tests can swap in scripted models and exhaustive enumeration.
using StepLogProbs = std::function<std::vector<double>(const std::vector<int>& prefix)>;

std::vector<int> beam_search_core(const StepLogProbs& step, int beam, int max_len, int bos,
                                  int eos, int vocab);
std::pair<std::vector<int>, double> beam_search_core_scored(const StepLogProbs& step, int beam,
                                                            int max_len, int bos, int eos,
                                                            int vocab);

std::vector<int> greedy_decode(const Params& p, const std::vector<int>& src_ids, int tgt_lang,
                               int tgt_style, int max_len = 0);
std::pair<std::vector<int>, double> beam_search_scored(const Params& p,
                                                       const std::vector<int>& src_ids,
                                                       int tgt_lang, int tgt_style, int beam = 5,
                                                       int max_len = 0);
std::vector<int> beam_search(const Params& p, const std::vector<int>& src_ids, int tgt_lang,
                             int tgt_style, int beam = 5, int max_len = 0);

// ---- persistence ----

void save_params(const Params& p, const std::string& path);
Params load_params(const std::string& path);

}  // namespace stylemux::model
