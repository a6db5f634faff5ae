#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stylemux/corpus.hpp"
#include "stylemux/errors.hpp"
#include "stylemux/io.hpp"
#include "stylemux/model.hpp"
#include "stylemux/rng.hpp"
#include "stylemux/tensor.hpp"
#include "stylemux/trainer.hpp"

using namespace stylemux;
using train::Adam;
using train::PlateauSchedule;
using train::TrainConfig;

namespace {

model::ModelConfig tiny_config(int layers, int d, int heads, int vocab) {
  model::ModelConfig cfg;
  cfg.layers = layers;
  cfg.model_dim = d;
  cfg.heads = heads;
  cfg.ffn_dim = 3 * d;
  cfg.token_embed_dim = d;
  cfg.factor_embed_dim = 2;
  cfg.dropout_p = 0.0;
  cfg.vocab_size = vocab;
  cfg.max_len = 16;
  cfg.num_langs = 3;
  cfg.num_styles = 3;
  return cfg;
}

corpus::FactoredExample make_example(std::vector<int> src, std::vector<int> tgt_inner, int lang,
                                     int style) {
  corpus::FactoredExample e;
  e.src_ids = std::move(src);
  e.factor_lang.assign(e.src_ids.size(), lang);
  e.factor_style.assign(e.src_ids.size(), style);
  e.tgt_ids.push_back(1);  // BOS
  for (int t : tgt_inner) e.tgt_ids.push_back(t);
  e.tgt_ids.push_back(2);  // EOS
  return e;
}

std::string fresh_dir(const std::string& name) {
  std::string dir = std::string("/tmp/stylemux_test_train_") + name;
  std::filesystem::remove_all(dir);
  return dir;
}

// Eight short pairs a d=32 model can memorize: each maps a distinct source
// trigram to its element-wise successor.
std::vector<corpus::FactoredExample> toy_pairs() {
  std::vector<corpus::FactoredExample> ex;
  for (int i = 0; i < 8; ++i) {
    std::vector<int> src = {4 + i, 5 + i, 6 + i};
    std::vector<int> tgt = {5 + i, 6 + i, 7 + i};
    ex.push_back(make_example(src, tgt, i % 3, (i / 3) % 3));
  }
  return ex;
}

}  // namespace

TEST_CASE("train config validation rejects out-of-range values") {
  TrainConfig ok;
  CHECK_NOTHROW(ok.validate());

  auto expect_bad = [](auto&& mutate) {
    TrainConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  };
  expect_bad([](TrainConfig& c) { c.lr0 = 0.0; });
  expect_bad([](TrainConfig& c) { c.lr0 = -1e-4; });
  expect_bad([](TrainConfig& c) { c.decay_factor = 0.0; });
  expect_bad([](TrainConfig& c) { c.decay_factor = 1.0; });
  expect_bad([](TrainConfig& c) { c.patience_decay = 0; });
  expect_bad([](TrainConfig& c) { c.patience_stop = c.patience_decay - 1; });
  expect_bad([](TrainConfig& c) { c.checkpoint_interval = 0; });
  expect_bad([](TrainConfig& c) { c.max_words_per_batch = 0; });
  expect_bad([](TrainConfig& c) { c.max_updates = -1; });
}

TEST_CASE("adam with constant unit gradient moves each element by about -lr") {
  // Closed form: with g == 1 every step, bias correction makes m_hat == 1 and
  // v_hat == 1, so each update is exactly lr / (1 + eps).
  auto p = Tensor::leaf({3}, {1.0f, 2.0f, 3.0f}, true);
  Adam adam({&p}, 0.9, 0.999, 1e-8);
  const double lr = 0.01;
  std::vector<float> before = p.data();
  for (int step = 1; step <= 3; ++step) {
    for (auto& g : p.grad()) g = 1.0f;
    adam.step(lr);
    for (size_t i = 0; i < p.data().size(); ++i) {
      CHECK(p.data()[i] ==
            doctest::Approx(before[i] - step * lr / (1.0 + 1e-8)).epsilon(1e-6));
    }
    p.zero_grad();
  }
  CHECK(adam.steps() == 3);
}

TEST_CASE("adam with zero gradients leaves parameters untouched") {
  auto p = Tensor::leaf({4}, {0.5f, -0.5f, 2.0f, -2.0f}, true);
  std::vector<float> before = p.data();
  Adam adam({&p}, 0.9, 0.999, 1e-8);
  for (auto& g : p.grad()) g = 0.0f;
  adam.step(0.1);
  adam.step(0.1);
  CHECK(p.data() == before);
}

TEST_CASE("adam keeps identical parameters identical") {
  auto a = Tensor::leaf({5}, {0.1f, 0.2f, 0.3f, 0.4f, 0.5f}, true);
  auto b = Tensor::leaf({5}, {0.1f, 0.2f, 0.3f, 0.4f, 0.5f}, true);
  Adam adam({&a, &b}, 0.9, 0.999, 1e-8);
  Rng rng(7);
  for (int step = 0; step < 10; ++step) {
    for (size_t i = 0; i < 5; ++i) {
      float g = static_cast<float>(rng.uniform(-1.0, 1.0));
      a.grad()[i] = g;
      b.grad()[i] = g;
    }
    adam.step(0.05);
    CHECK(a.data() == b.data());
    a.zero_grad();
    b.zero_grad();
  }
}

TEST_CASE("adam matches an independent double-precision reference") {
  const size_t n = 6;
  std::vector<float> init = {0.3f, -1.2f, 0.0f, 2.5f, -0.7f, 1.1f};
  auto p = Tensor::leaf({static_cast<int64_t>(n)}, init, true);
  Adam adam({&p}, 0.9, 0.999, 1e-8);

  // Reference written independently: plain double state, textbook update.
  std::vector<double> ref(init.begin(), init.end());
  std::vector<double> m(n, 0.0), v(n, 0.0);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.01;

  Rng rng(11);
  for (int t = 1; t <= 25; ++t) {
    std::vector<double> g(n);
    for (size_t i = 0; i < n; ++i) {
      g[i] = rng.uniform(-1.0, 1.0);
      p.grad()[i] = static_cast<float>(g[i]);
    }
    adam.step(lr);
    p.zero_grad();
    for (size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      double m_hat = m[i] / (1 - std::pow(b1, t));
      double v_hat = v[i] / (1 - std::pow(b2, t));
      ref[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
  for (size_t i = 0; i < n; ++i) {
    CHECK(p.data()[i] == doctest::Approx(ref[i]).epsilon(1e-4));
  }
}

TEST_CASE("adam aborts on a NaN gradient") {
  auto p = Tensor::leaf({2}, {1.0f, 2.0f}, true);
  Adam adam({&p}, 0.9, 0.999, 1e-8);
  p.grad()[0] = 1.0f;
  p.grad()[1] = std::nanf("");
  CHECK_THROWS_AS(adam.step(0.01), NumericalError);
}

TEST_CASE("plateau schedule decays once on the frozen [10,9,9,9] sequence") {
  PlateauSchedule s(1.0, 0.7, 2, 100);
  auto d1 = s.observe(10.0);
  CHECK(d1.improved);
  CHECK_FALSE(d1.decayed);
  auto d2 = s.observe(9.0);
  CHECK(d2.improved);
  auto d3 = s.observe(9.0);
  CHECK_FALSE(d3.improved);
  CHECK_FALSE(d3.decayed);
  auto d4 = s.observe(9.0);
  CHECK_FALSE(d4.improved);
  CHECK(d4.decayed);
  CHECK_FALSE(d4.stop);
  CHECK(s.decays() == 1);
  CHECK(s.lr() == doctest::Approx(0.7));
  CHECK(s.best() == doctest::Approx(9.0));
}

TEST_CASE("plateau schedule never decays while perplexity keeps improving") {
  PlateauSchedule s(2e-4, 0.7, 8, 32);
  double ppl = 50.0;
  for (int i = 0; i < 64; ++i) {
    auto d = s.observe(ppl);
    CHECK(d.improved);
    CHECK_FALSE(d.decayed);
    CHECK_FALSE(d.stop);
    ppl *= 0.99;
  }
  CHECK(s.decays() == 0);
  CHECK(s.lr() == doctest::Approx(2e-4));
}

TEST_CASE("plateau schedule with defaults decays at misses 8, 16, 24 and stops at 32") {
  const double lr0 = 2e-4;
  PlateauSchedule s(lr0, 0.7, 8, 32);
  CHECK(s.observe(10.0).improved);  // establishes the best
  for (int miss = 1; miss <= 32; ++miss) {
    auto d = s.observe(10.0);  // ties are not improvements
    CHECK_FALSE(d.improved);
    bool expect_decay = miss == 8 || miss == 16 || miss == 24;
    CHECK(d.decayed == expect_decay);
    CHECK(d.stop == (miss == 32));
    int expect_decays = miss >= 24 ? 3 : miss >= 16 ? 2 : miss >= 8 ? 1 : 0;
    CHECK(s.decays() == expect_decays);
    CHECK(d.lr == doctest::Approx(lr0 * std::pow(0.7, expect_decays)));
  }
}

TEST_CASE("plateau schedule agrees with an independent simulator on random sequences") {
  // Reference simulator written as a standalone function over the whole
  // sequence, structured differently from the incremental class.
  struct SimStep {
    bool improved, decayed, stop;
    double lr;
  };
  auto simulate = [](const std::vector<double>& ppls, double lr0, double factor, int pd,
                     int ps) {
    std::vector<SimStep> out;
    double best = std::numeric_limits<double>::infinity();
    int since_improve = 0;     // drives the stop
    int since_decay_mark = 0;  // drives the decay, cleared by either event
    int k = 0;
    for (double ppl : ppls) {
      SimStep st{false, false, false, 0.0};
      if (ppl < best) {
        best = ppl;
        since_improve = 0;
        since_decay_mark = 0;
        st.improved = true;
      } else {
        ++since_improve;
        ++since_decay_mark;
        if (since_improve >= ps) {
          st.stop = true;
        } else if (since_decay_mark >= pd) {
          ++k;
          since_decay_mark = 0;
          st.decayed = true;
        }
      }
      st.lr = lr0 * std::pow(factor, k);
      out.push_back(st);
      if (st.stop) break;
    }
    return out;
  };

  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    int pd = 1 + rng.uniform_int(4);
    int ps = pd + rng.uniform_int(8);
    int len = 5 + rng.uniform_int(45);
    std::vector<double> ppls(len);
    for (auto& p : ppls) p = 1.0 + rng.uniform_int(6);  // small grid forces ties
    auto expected = simulate(ppls, 1.0, 0.7, pd, ps);

    PlateauSchedule s(1.0, 0.7, pd, ps);
    for (size_t i = 0; i < expected.size(); ++i) {
      auto d = s.observe(ppls[i]);
      REQUIRE(d.improved == expected[i].improved);
      REQUIRE(d.decayed == expected[i].decayed);
      REQUIRE(d.stop == expected[i].stop);
      REQUIRE(d.lr == doctest::Approx(expected[i].lr).epsilon(1e-12));
      if (d.stop) break;
    }
  }
}

TEST_CASE("validation perplexity of an all-zero model equals the vocabulary size") {
  auto cfg = tiny_config(1, 4, 2, 16);
  Rng rng(3);
  auto p = model::init_params<float>(cfg, rng);
  for (auto& [name, t] : model::named_params(p)) {
    for (auto& x : t->data()) x = 0.0f;
  }
  std::vector<corpus::FactoredExample> dev = {
      make_example({5, 6}, {7, 8, 9}, 0, 0),
      make_example({10, 11, 12}, {13}, 1, 2),
  };
  Rng brng(1);
  auto batches = corpus::build_batches(dev, 1 << 20, brng);
  CHECK(train::validate_ppl(p, batches) == doctest::Approx(16.0).epsilon(1e-4));
}

TEST_CASE("validation perplexity recombines from half splits by token-weighted logs") {
  auto cfg = tiny_config(2, 8, 2, 20);
  Rng rng(4);
  auto p = model::init_params<float>(cfg, rng);

  std::vector<corpus::FactoredExample> dev;
  Rng gen(17);
  for (int i = 0; i < 10; ++i) {
    int slen = 1 + gen.uniform_int(5);
    int tlen = 1 + gen.uniform_int(5);
    std::vector<int> src(slen), tgt(tlen);
    for (auto& t : src) t = 4 + gen.uniform_int(16);
    for (auto& t : tgt) t = 4 + gen.uniform_int(16);
    dev.push_back(make_example(src, tgt, gen.uniform_int(3), gen.uniform_int(3)));
  }

  auto ppl_of = [&](const std::vector<corpus::FactoredExample>& set) {
    Rng brng(1);
    return train::validate_ppl(p, corpus::build_batches(set, 1 << 20, brng));
  };
  auto tokens_of = [](const std::vector<corpus::FactoredExample>& set) {
    int64_t n = 0;
    for (const auto& e : set) n += static_cast<int64_t>(e.tgt_ids.size()) - 1;
    return n;
  };

  std::vector<corpus::FactoredExample> half1(dev.begin(), dev.begin() + 5);
  std::vector<corpus::FactoredExample> half2(dev.begin() + 5, dev.end());
  double n1 = static_cast<double>(tokens_of(half1));
  double n2 = static_cast<double>(tokens_of(half2));
  double recombined =
      std::exp((n1 * std::log(ppl_of(half1)) + n2 * std::log(ppl_of(half2))) / (n1 + n2));
  CHECK(ppl_of(dev) == doctest::Approx(recombined).epsilon(1e-4));
}

TEST_CASE("validation on an empty dev set is a config error") {
  auto cfg = tiny_config(1, 4, 2, 9);
  Rng rng(5);
  auto p = model::init_params<float>(cfg, rng);
  CHECK_THROWS_AS(train::validate_ppl(p, {}), ConfigError);
}

TEST_CASE("training memorizes an eight-pair toy corpus") {
  auto cfg = tiny_config(2, 32, 4, 24);
  Rng rng(1);
  auto p = model::init_params<float>(cfg, rng);

  auto pairs = toy_pairs();
  TrainConfig tc;
  tc.lr0 = 1e-3;
  tc.checkpoint_interval = 100;
  tc.max_updates = 2000;
  tc.seed = 1;
  tc.out_dir = fresh_dir("overfit");
  auto result = train::train_loop(p, pairs, pairs, tc);

  REQUIRE_FALSE(result.history.empty());
  double final_loss = result.history.back().train_loss;
  INFO("final train loss " << final_loss);
  CHECK(final_loss < 0.1);
  CHECK(result.best_ppl < 1.2);  // memorized dev drives perplexity toward 1

  for (const auto& row : result.history) {
    CHECK(result.best_ppl <= row.val_ppl + 1e-12);
  }

  // lr only ever takes scheduled values and never increases.
  double prev_lr = tc.lr0;
  for (const auto& row : result.history) {
    CHECK(row.lr <= prev_lr + 1e-15);
    double k = std::log(row.lr / tc.lr0) / std::log(0.7);
    CHECK(std::abs(k - std::round(k)) < 1e-9);
    prev_lr = row.lr;
  }

  // best.ckpt is a byte copy of the winning checkpoint.
  CHECK(io::read_file(tc.out_dir + "/best.ckpt") == io::read_file(result.best_path));

  // The log mirrors the history rows.
  auto log_lines = io::read_lines(tc.out_dir + "/train.log");
  REQUIRE(log_lines.size() == result.history.size());
  for (size_t i = 0; i < log_lines.size(); ++i) {
    auto cols = io::split(log_lines[i], '\t');
    REQUIRE(cols.size() == 4);
    CHECK(io::parse_int(cols[0], "step") == result.history[i].step);
    CHECK(io::parse_double(cols[2], "ppl") ==
          doctest::Approx(result.history[i].val_ppl).epsilon(1e-9));
  }

  // A reload of best.ckpt decodes the training pairs greedily.
  auto best = model::load_params(tc.out_dir + "/best.ckpt");
  int exact = 0;
  for (const auto& e : pairs) {
    auto out = model::greedy_decode(best, e.src_ids, e.factor_lang[0], e.factor_style[0]);
    std::vector<int> want(e.tgt_ids.begin() + 1, e.tgt_ids.end());  // generated part, no BOS
    if (out == want) ++exact;
  }
  INFO("exact decodes " << exact << "/8");
  CHECK(exact >= 7);
}

TEST_CASE("same seed trains to bit-identical checkpoints") {
  auto pairs = toy_pairs();
  auto run = [&](const std::string& tag) {
    auto cfg = tiny_config(1, 8, 2, 24);
    Rng rng(2);
    auto p = model::init_params<float>(cfg, rng);
    TrainConfig tc;
    tc.checkpoint_interval = 20;
    tc.max_updates = 40;
    tc.seed = 9;
    tc.out_dir = fresh_dir(tag);
    train::train_loop(p, pairs, pairs, tc);
    return tc.out_dir;
  };
  auto dir1 = run("det_a");
  auto dir2 = run("det_b");
  CHECK(io::read_file(dir1 + "/ckpt-40") == io::read_file(dir2 + "/ckpt-40"));
  CHECK(io::read_file(dir1 + "/train.log") == io::read_file(dir2 + "/train.log"));
}

TEST_CASE("an update budget that is not a multiple of the interval still checkpoints at the end") {
  auto pairs = toy_pairs();
  auto cfg = tiny_config(1, 8, 2, 24);
  Rng rng(2);
  auto p = model::init_params<float>(cfg, rng);
  TrainConfig tc;
  tc.checkpoint_interval = 20;
  tc.max_updates = 50;
  tc.out_dir = fresh_dir("unaligned");
  auto result = train::train_loop(p, pairs, pairs, tc);
  CHECK(result.steps == 50);
  CHECK_FALSE(result.early_stopped);
  REQUIRE(result.history.size() == 3);
  CHECK(result.history[0].step == 20);
  CHECK(result.history[1].step == 40);
  CHECK(result.history[2].step == 50);
  CHECK(io::exists(tc.out_dir + "/ckpt-50"));
}

TEST_CASE("training stops early once validation stops improving") {
  // Dev labels contradict the training labels, so dev perplexity rises as the
  // model memorizes and the stop patience runs out.
  std::vector<corpus::FactoredExample> train_set = toy_pairs();
  std::vector<corpus::FactoredExample> dev_set;
  for (auto e : toy_pairs()) {
    for (auto& t : e.tgt_ids) {
      if (t != 1 && t != 2) t = 23 - t;  // remap inner tokens
    }
    dev_set.push_back(e);
  }
  auto cfg = tiny_config(2, 16, 2, 24);
  Rng rng(3);
  auto p = model::init_params<float>(cfg, rng);
  TrainConfig tc;
  tc.lr0 = 1e-3;
  tc.checkpoint_interval = 50;
  // Stop wins over decay when both thresholds are hit, so equal patiences
  // keep decays out of the way entirely.
  tc.patience_decay = 3;
  tc.patience_stop = 3;
  tc.max_updates = 5000;
  tc.out_dir = fresh_dir("earlystop");
  auto result = train::train_loop(p, train_set, dev_set, tc);
  CHECK(result.early_stopped);
  CHECK(result.steps < 5000);
  // The recorded best is still the minimum over history.
  for (const auto& row : result.history) CHECK(result.best_ppl <= row.val_ppl + 1e-12);
}

TEST_CASE("train loop rejects empty inputs and a missing output dir") {
  auto cfg = tiny_config(1, 4, 2, 9);
  Rng rng(5);
  auto p = model::init_params<float>(cfg, rng);
  auto pairs = toy_pairs();
  TrainConfig tc;
  tc.out_dir = fresh_dir("rejects");
  CHECK_THROWS_AS(train::train_loop(p, {}, pairs, tc), ConfigError);
  CHECK_THROWS_AS(train::train_loop(p, pairs, {}, tc), ConfigError);
  TrainConfig no_dir;
  CHECK_THROWS_AS(train::train_loop(p, pairs, pairs, no_dir), ConfigError);
}
