// Model step costs at the evaluation scale: d=64, 2 layers.
#include <benchmark/benchmark.h>

#include <vector>

#include "stylemux/corpus.hpp"
#include "stylemux/model.hpp"
#include "stylemux/rng.hpp"

using namespace stylemux;

namespace {

struct Setup {
  model::Params params;
  std::vector<corpus::Batch> batches;
  std::vector<int> src;
};

const Setup& setup() {
  static Setup s = [] {
    model::ModelConfig cfg;
    cfg.layers = 2;
    cfg.model_dim = 64;
    cfg.heads = 8;
    cfg.ffn_dim = 256;
    cfg.factor_embed_dim = 8;
    cfg.vocab_size = 4000;
    cfg.max_len = 64;
    cfg.num_langs = 3;
    cfg.num_styles = 3;
    Rng rng(1);
    Setup out{model::init_params<float>(cfg, rng), {}, {}};

    Rng drng(2);
    std::vector<corpus::FactoredExample> examples;
    for (int i = 0; i < 256; ++i) {
      corpus::FactoredExample e;
      int src_len = 6 + drng.uniform_int(8), tgt_len = 6 + drng.uniform_int(8);
      int lang = drng.uniform_int(3), style = drng.uniform_int(3);
      for (int j = 0; j < src_len; ++j) {
        e.src_ids.push_back(5 + drng.uniform_int(3990));
        e.factor_lang.push_back(lang);
        e.factor_style.push_back(style);
      }
      e.tgt_ids.push_back(1);
      for (int j = 0; j < tgt_len; ++j) e.tgt_ids.push_back(5 + drng.uniform_int(3990));
      e.tgt_ids.push_back(2);
      examples.push_back(std::move(e));
    }
    Rng brng(3);
    out.batches = corpus::build_batches(examples, 3072, brng);
    out.src = examples[0].src_ids;
    return out;
  }();
  return s;
}

void BM_forward_loss(benchmark::State& state) {
  const auto& s = setup();
  Rng rng(4);
  size_t i = 0;
  for (auto _ : state) {
    nn::Tape tape(false);
    auto loss = model::forward_loss(tape, s.params, s.batches[i++ % s.batches.size()], false, rng);
    benchmark::DoNotOptimize(loss.item());
  }
}

void BM_forward_backward(benchmark::State& state) {
  // params stay requires_grad; gradients accumulate but costs are unaffected
  auto& s = const_cast<Setup&>(setup());
  Rng rng(4);
  size_t i = 0;
  for (auto _ : state) {
    nn::Tape tape(true);
    auto loss = model::forward_loss(tape, s.params, s.batches[i++ % s.batches.size()], true, rng);
    nn::backward(tape, loss);
    benchmark::DoNotOptimize(loss.item());
  }
}

void BM_greedy_decode(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) {
    auto out = model::greedy_decode(s.params, s.src, 1, 0, 24);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_beam_decode(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) {
    auto out = model::beam_search(s.params, s.src, 1, 0, 5, 24);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_forward_loss)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_forward_backward)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_greedy_decode)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_beam_decode)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
