#include "stylemux/model.hpp"

#include <algorithm>
#include <cmath>

#include "stylemux/checkpoint.hpp"
#include "stylemux/errors.hpp"
#include "stylemux/io.hpp"
#include "stylemux/text_pipeline.hpp"

namespace stylemux::model {

ModelConfig model_config_from_map(const std::map<std::string, std::string>& m) {
  ModelConfig cfg;
  auto get_int = [&](const char* key, int& out) {
    auto it = m.find(key);
    if (it == m.end()) throw DataError(std::string("model config missing key: ") + key);
    out = io::parse_int(it->second, key);
  };
  get_int("layers", cfg.layers);
  get_int("model_dim", cfg.model_dim);
  get_int("heads", cfg.heads);
  get_int("ffn_dim", cfg.ffn_dim);
  get_int("token_embed_dim", cfg.token_embed_dim);
  get_int("factor_embed_dim", cfg.factor_embed_dim);
  get_int("vocab_size", cfg.vocab_size);
  get_int("max_len", cfg.max_len);
  get_int("num_langs", cfg.num_langs);
  get_int("num_styles", cfg.num_styles);
  auto it = m.find("dropout_p");
  if (it == m.end()) throw DataError("model config missing key: dropout_p");
  cfg.dropout_p = io::parse_double(it->second, "dropout_p");
  cfg.validate();
  return cfg;
}

std::vector<double> log_softmax(const std::vector<float>& logits) {
  double mx = logits[0];
  for (float x : logits) mx = std::max(mx, static_cast<double>(x));
  double denom = 0.0;
  for (float x : logits) denom += std::exp(static_cast<double>(x) - mx);
  double log_denom = mx + std::log(denom);
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<double>(logits[i]) - log_denom;
  return out;
}

namespace {

struct Hyp {
  std::vector<int> toks;  // includes leading BOS, and EOS once finished
  double logp = 0.0;
};

// Generated length: tokens after BOS, counting EOS.
double norm_score(const Hyp& h) {
  auto gen = static_cast<double>(h.toks.size()) - 1.0;
  return h.logp / std::max(1.0, gen);
}

}  // namespace

std::pair<std::vector<int>, double> beam_search_core_scored(const StepLogProbs& step, int beam,
                                                            int max_len, int bos, int eos,
                                                            int vocab) {
  if (beam < 1) throw ConfigError("beam must be at least 1");
  if (max_len < 1) throw ConfigError("max_len must be at least 1");
  std::vector<Hyp> live = {{{bos}, 0.0}};
  std::vector<Hyp> finished;

  for (int t = 0; t < max_len && !live.empty(); ++t) {
    struct Cand {
      double logp;
      int hyp, tok;
    };
    std::vector<Cand> cands;
    cands.reserve(live.size() * static_cast<size_t>(vocab));
    for (size_t h = 0; h < live.size(); ++h) {
      auto lp = step(live[h].toks);
      if (static_cast<int>(lp.size()) != vocab) {
        throw DimensionError("step function returned wrong vocabulary size");
      }
      for (int tok = 0; tok < vocab; ++tok) {
        cands.push_back({live[h].logp + lp[static_cast<size_t>(tok)], static_cast<int>(h), tok});
      }
    }
    // Cumulative log-probability pruning; ties resolve by hypothesis then
    // token id so the search is fully deterministic.
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      if (a.hyp != b.hyp) return a.hyp < b.hyp;
      return a.tok < b.tok;
    });
    // Top `beam` continuations overall; a finished hypothesis consumes its
    // slot and retires, which keeps beam=1 identical to greedy decoding.
    std::vector<Hyp> next;
    int taken = 0;
    for (const auto& c : cands) {
      if (taken >= beam) break;
      ++taken;
      Hyp h = live[static_cast<size_t>(c.hyp)];
      h.toks.push_back(c.tok);
      h.logp = c.logp;
      if (c.tok == eos) {
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
  }

  for (auto& h : live) finished.push_back(std::move(h));  // unfinished at max_len
  if (finished.empty()) throw Error("beam search produced no hypotheses");
  size_t best = 0;
  for (size_t i = 1; i < finished.size(); ++i) {
    if (norm_score(finished[i]) > norm_score(finished[best])) best = i;
  }
  std::vector<int> out(finished[best].toks.begin() + 1, finished[best].toks.end());
  return {out, norm_score(finished[best])};
}

std::vector<int> beam_search_core(const StepLogProbs& step, int beam, int max_len, int bos,
                                  int eos, int vocab) {
  return beam_search_core_scored(step, beam, max_len, bos, eos, vocab).first;
}

namespace {

constexpr int kBos = text::SubwordVocabulary::kBos;
constexpr int kEos = text::SubwordVocabulary::kEos;

int generation_cap(const Params& p, int max_len) {
  // the decoder prefix holds BOS plus everything generated so far
  int cap = p.cfg.max_len - 1;
  if (max_len > 0) cap = std::min(cap, max_len);
  if (cap < 1) throw ConfigError("max_len leaves no room to generate");
  return cap;
}

}  // namespace

std::vector<int> greedy_decode(const Params& p, const std::vector<int>& src_ids, int tgt_lang,
                               int tgt_style, int max_len) {
  Tape tape(false);
  auto memory = encode_sentence(tape, p, src_ids, tgt_lang, tgt_style);
  int cap = generation_cap(p, max_len);
  std::vector<int> prefix = {kBos};
  std::vector<int> out;
  for (int t = 0; t < cap; ++t) {
    auto logits = decode_step(p, memory, prefix);
    int best = 0;
    for (int i = 1; i < static_cast<int>(logits.size()); ++i) {
      if (logits[static_cast<size_t>(i)] > logits[static_cast<size_t>(best)]) best = i;
    }
    out.push_back(best);
    if (best == kEos) break;
    prefix.push_back(best);
  }
  return out;
}

std::pair<std::vector<int>, double> beam_search_scored(const Params& p,
                                                       const std::vector<int>& src_ids,
                                                       int tgt_lang, int tgt_style, int beam,
                                                       int max_len) {
  Tape tape(false);
  auto memory = encode_sentence(tape, p, src_ids, tgt_lang, tgt_style);
  auto step = [&](const std::vector<int>& prefix) {
    return log_softmax(decode_step(p, memory, prefix));
  };
  return beam_search_core_scored(step, beam, generation_cap(p, max_len), kBos, kEos,
                                 p.cfg.vocab_size);
}

std::vector<int> beam_search(const Params& p, const std::vector<int>& src_ids, int tgt_lang,
                             int tgt_style, int beam, int max_len) {
  return beam_search_scored(p, src_ids, tgt_lang, tgt_style, beam, max_len).first;
}

void save_params(const Params& p, const std::string& path) {
  ckpt::Checkpoint c;
  c.config = p.cfg.to_map();
  Params shallow = p;  // tensors are shared handles; this copies no data
  for (auto& [name, t] : named_params(shallow)) {
    c.add(name, t->shape(), t->data());
  }
  c.save(path);
}

Params load_params(const std::string& path) {
  auto c = ckpt::Checkpoint::load(path);
  ModelConfig cfg = model_config_from_map(c.config);
  Rng rng(0);
  Params p = init_params<float>(cfg, rng);
  for (auto& [name, t] : named_params(p)) {
    const auto& b = c.block(name);
    if (b.shape != t->shape()) throw DataError("checkpoint block " + name + " has wrong shape");
    std::copy(b.data.begin(), b.data.end(), t->data().begin());
  }
  return p;
}

}  // namespace stylemux::model
