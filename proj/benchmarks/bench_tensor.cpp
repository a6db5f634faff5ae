// Core op throughput at transformer-shaped sizes.
#include <benchmark/benchmark.h>

#include "stylemux/rng.hpp"
#include "stylemux/tensor_ops.hpp"

using namespace stylemux;

namespace {

Tensor randu(nn::Shape shape, uint64_t seed, bool requires_grad = false) {
  Rng rng(seed);
  return Tensor::randu(std::move(shape), rng, -1.0, 1.0, requires_grad);
}

void BM_matmul(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  auto a = randu({n, n}, 1), b = randu({n, n}, 2);
  for (auto _ : state) {
    nn::Tape tape(false);
    auto c = nn::matmul(tape, a, b);
    benchmark::DoNotOptimize(c.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 2ll * n * n * n);
}

void BM_matmul_backward(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto a = randu({n, n}, 1, true), b = randu({n, n}, 2, true);
    nn::Tape tape(true);
    auto loss = nn::sum(tape, nn::matmul(tape, a, b));
    nn::backward(tape, loss);
    benchmark::DoNotOptimize(a.grad().data());
  }
}

void BM_attention(benchmark::State& state) {
  int len = static_cast<int>(state.range(0));
  auto q = randu({len, 64}, 1), k = randu({len, 64}, 2), v = randu({len, 64}, 3);
  for (auto _ : state) {
    nn::Tape tape(false);
    auto y = nn::attention(tape, q, k, v, {len}, {len}, 8, false);
    benchmark::DoNotOptimize(y.data().data());
  }
}

void BM_layer_norm(benchmark::State& state) {
  auto x = randu({512, 64}, 1);
  auto g = randu({64}, 2), b = randu({64}, 3);
  for (auto _ : state) {
    nn::Tape tape(false);
    auto y = nn::layer_norm(tape, x, g, b);
    benchmark::DoNotOptimize(y.data().data());
  }
}

void BM_softmax(benchmark::State& state) {
  auto x = randu({512, 4000}, 1);
  for (auto _ : state) {
    nn::Tape tape(false);
    auto y = nn::softmax(tape, x, 1);
    benchmark::DoNotOptimize(y.data().data());
  }
}

void BM_cross_entropy(benchmark::State& state) {
  auto logits = randu({512, 4000}, 1);
  std::vector<int> targets(512);
  Rng rng(4);
  for (auto& t : targets) t = rng.uniform_int(4000);
  for (auto _ : state) {
    nn::Tape tape(false);
    auto y = nn::cross_entropy(tape, logits, targets);
    benchmark::DoNotOptimize(y.data().data());
  }
}

}  // namespace

BENCHMARK(BM_matmul)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_matmul_backward)->Arg(64)->Arg(256);
BENCHMARK(BM_attention)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(BM_layer_norm);
BENCHMARK(BM_softmax);
BENCHMARK(BM_cross_entropy);

BENCHMARK_MAIN();
