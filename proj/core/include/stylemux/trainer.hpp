#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "stylemux/corpus.hpp"
#include "stylemux/model.hpp"
#include "stylemux/tensor.hpp"

namespace stylemux::train {

struct TrainConfig {
  double lr0 = 2e-4;
  double decay_factor = 0.7;
  int patience_decay = 8;    // non-improving checkpoints before an lr decay
  int patience_stop = 32;    // consecutive non-improving checkpoints before stopping
  int checkpoint_interval = 4000;  // updates between validations
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  uint64_t seed = 1;
  int max_updates = 0;  // 0 runs until early stop
  int max_words_per_batch = 2048;
  std::string out_dir;  // receives ckpt-{step}, best.ckpt, train.log

  void validate() const;
};

// Standard Adam with bias correction over a fixed parameter list. Gradients
// are read from each tensor's grad buffer; callers zero them afterwards.
class Adam {
 public:
  Adam(std::vector<Tensor*> params, double beta1, double beta2, double eps);

  // Throws NumericalError on a NaN gradient (names the parameter index).
  void step(double lr);
  int64_t steps() const { return t_; }

 private:
  struct Slot {
    Tensor* param;
    std::vector<float> m, v;
  };
  std::vector<Slot> slots_;
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

// Plateau learning-rate state machine. The decay counter resets on
// improvement or decay; the stop counter only on improvement, so the decay
// cadence is 8, 16, 24 misses and the stop fires at 32 with the defaults.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr0, double decay_factor, int patience_decay, int patience_stop);

  struct Decision {
    bool improved = false;
    bool decayed = false;
    bool stop = false;
    double lr = 0.0;  // rate in effect after this observation
  };
  Decision observe(double ppl);

  double lr() const;
  double best() const { return best_; }
  int decays() const { return decays_; }

 private:
  double lr0_, factor_;
  int patience_decay_, patience_stop_;
  double best_ = std::numeric_limits<double>::infinity();
  int decay_ctr_ = 0, stop_ctr_ = 0, decays_ = 0;
};

// Corpus perplexity: exp(total NLL / total target tokens).
double validate_ppl(const model::Params& p, const std::vector<corpus::Batch>& dev);

struct CheckpointRow {
  int64_t step;
  double train_loss;  // mean over updates since the previous checkpoint
  double val_ppl;
  double lr;
  std::string path;
};

struct TrainResult {
  std::vector<CheckpointRow> history;
  std::string best_path;
  double best_ppl = std::numeric_limits<double>::infinity();
  int64_t steps = 0;
  bool early_stopped = false;
};

// Optimizes params in place. Validates, persists ckpt-{step}, and advances
// the plateau schedule every checkpoint_interval updates; writes best.ckpt
// and train.log (step<TAB>train_loss<TAB>val_ppl<TAB>lr) under out_dir.
TrainResult train_loop(model::Params& p, const std::vector<corpus::FactoredExample>& train_set,
                       const std::vector<corpus::FactoredExample>& dev_set,
                       const TrainConfig& cfg);

}  // namespace stylemux::train
