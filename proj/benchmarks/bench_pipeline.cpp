// Text pipeline throughput on generated corpus lines.
#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "stylemux/synthlang.hpp"
#include "stylemux/text_pipeline.hpp"

using namespace stylemux;

namespace {

struct Corpus {
  std::vector<std::string> raw;
  std::vector<std::vector<std::string>> tokenized;
  text::TruecaseModel truecase;
  text::SubwordVocabulary vocab;
};

const Corpus& corpus() {
  static Corpus c = [] {
    Corpus out;
    synth::SynthSpec spec;
    spec.seed = 3;
    spec.num_dev = 0;
    spec.num_test = 2000;
    auto data = synth::generate(spec, 0);
    for (const auto& e : data.corpus.test) out.raw.push_back(e.cells[0]);
    for (const auto& line : out.raw) out.tokenized.push_back(text::tokenize(line));
    out.truecase = text::TruecaseModel::train(out.tokenized);
    auto cased = out.tokenized;
    for (auto& toks : cased) toks = out.truecase.apply(std::move(toks));
    out.vocab = text::SubwordVocabulary::learn_from_corpus(cased, 2000);
    return out;
  }();
  return c;
}

void BM_tokenize(benchmark::State& state) {
  const auto& c = corpus();
  size_t i = 0;
  for (auto _ : state) {
    auto toks = text::tokenize(c.raw[i++ % c.raw.size()]);
    benchmark::DoNotOptimize(toks.data());
  }
}

void BM_truecase_apply(benchmark::State& state) {
  const auto& c = corpus();
  size_t i = 0;
  for (auto _ : state) {
    auto toks = c.truecase.apply(c.tokenized[i++ % c.tokenized.size()]);
    benchmark::DoNotOptimize(toks.data());
  }
}

void BM_bpe_encode(benchmark::State& state) {
  const auto& c = corpus();
  size_t i = 0;
  for (auto _ : state) {
    auto ids = c.vocab.encode(c.tokenized[i++ % c.tokenized.size()]);
    benchmark::DoNotOptimize(ids.data());
  }
}

void BM_bpe_round_trip(benchmark::State& state) {
  const auto& c = corpus();
  size_t i = 0;
  for (auto _ : state) {
    auto back = text::detokenize(
        text::TruecaseModel::invert(c.vocab.decode(c.vocab.encode(c.tokenized[i % c.tokenized.size()]))));
    benchmark::DoNotOptimize(back.data());
    ++i;
  }
}

void BM_bpe_learn(benchmark::State& state) {
  const auto& c = corpus();
  for (auto _ : state) {
    auto vocab = text::SubwordVocabulary::learn_from_corpus(c.tokenized, 2000);
    benchmark::DoNotOptimize(vocab.size());
  }
}

}  // namespace

BENCHMARK(BM_tokenize);
BENCHMARK(BM_truecase_apply);
BENCHMARK(BM_bpe_encode);
BENCHMARK(BM_bpe_round_trip);
BENCHMARK(BM_bpe_learn)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
