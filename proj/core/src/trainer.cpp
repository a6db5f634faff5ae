#include "stylemux/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "stylemux/errors.hpp"
#include "stylemux/io.hpp"
#include "stylemux/log.hpp"

namespace stylemux::train {

void TrainConfig::validate() const {
  if (lr0 <= 0) throw ConfigError("lr0 must be positive");
  if (decay_factor <= 0 || decay_factor >= 1) throw ConfigError("decay_factor must be in (0, 1)");
  if (patience_decay < 1) throw ConfigError("patience_decay must be at least 1");
  if (patience_stop < patience_decay) {
    throw ConfigError("patience_stop must be at least patience_decay");
  }
  if (checkpoint_interval < 1) throw ConfigError("checkpoint_interval must be at least 1");
  if (max_words_per_batch < 1) throw ConfigError("max_words_per_batch must be at least 1");
  if (max_updates < 0) throw ConfigError("max_updates must be non-negative");
}

Adam::Adam(std::vector<Tensor*> params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (Tensor* p : params) {
    slots_.push_back({p, std::vector<float>(p->data().size(), 0.0f),
                      std::vector<float>(p->data().size(), 0.0f)});
  }
}

void Adam::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t s = 0; s < slots_.size(); ++s) {
    auto& slot = slots_[s];
    auto& data = slot.param->data();
    const auto& grad = slot.param->grad();
    for (size_t i = 0; i < data.size(); ++i) {
      double g = grad[i];
      if (std::isnan(g)) {
        throw NumericalError("NaN gradient in parameter " + std::to_string(s) + " element " +
                             std::to_string(i) + " at update " + std::to_string(t_));
      }
      double m = beta1_ * slot.m[i] + (1.0 - beta1_) * g;
      double v = beta2_ * slot.v[i] + (1.0 - beta2_) * g * g;
      slot.m[i] = static_cast<float>(m);
      slot.v[i] = static_cast<float>(v);
      data[i] -= static_cast<float>(lr * (m / bc1) / (std::sqrt(v / bc2) + eps_));
    }
  }
}

PlateauSchedule::PlateauSchedule(double lr0, double decay_factor, int patience_decay,
                                 int patience_stop)
    : lr0_(lr0), factor_(decay_factor), patience_decay_(patience_decay),
      patience_stop_(patience_stop) {}

double PlateauSchedule::lr() const { return lr0_ * std::pow(factor_, decays_); }

PlateauSchedule::Decision PlateauSchedule::observe(double ppl) {
  Decision d;
  if (ppl < best_) {
    best_ = ppl;
    decay_ctr_ = 0;
    stop_ctr_ = 0;
    d.improved = true;
  } else {
    ++decay_ctr_;
    ++stop_ctr_;
    if (stop_ctr_ >= patience_stop_) {
      d.stop = true;
    } else if (decay_ctr_ >= patience_decay_) {
      ++decays_;
      decay_ctr_ = 0;
      d.decayed = true;
    }
  }
  d.lr = lr();
  return d;
}

double validate_ppl(const model::Params& p, const std::vector<corpus::Batch>& dev) {
  if (dev.empty()) throw ConfigError("validation set is empty");
  double total_nll = 0.0;
  int64_t total_tokens = 0;
  Rng unused(0);
  for (const auto& b : dev) {
    int64_t tokens = 0;
    for (int len : b.tgt_lens) tokens += len - 1;
    Tape tape(false);
    auto loss = model::forward_loss(tape, p, b, false, unused);
    total_nll += static_cast<double>(loss.item()) * static_cast<double>(tokens);
    total_tokens += tokens;
  }
  return std::exp(total_nll / static_cast<double>(total_tokens));
}

TrainResult train_loop(model::Params& p, const std::vector<corpus::FactoredExample>& train_set,
                       const std::vector<corpus::FactoredExample>& dev_set,
                       const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  if (dev_set.empty()) throw ConfigError("validation set is empty");
  if (cfg.out_dir.empty()) throw ConfigError("out_dir is required");
  io::ensure_dir(cfg.out_dir);

  Rng batch_rng(cfg.seed);
  Rng dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  Rng dev_rng(42);  // fixed batch layout for validation
  auto dev_batches = corpus::build_batches(dev_set, cfg.max_words_per_batch, dev_rng);

  std::vector<Tensor*> param_list;
  for (auto& [name, t] : model::named_params(p)) param_list.push_back(t);
  Adam adam(param_list, cfg.beta1, cfg.beta2, cfg.eps);
  PlateauSchedule schedule(cfg.lr0, cfg.decay_factor, cfg.patience_decay, cfg.patience_stop);

  std::string log_path = cfg.out_dir + "/train.log";
  std::ofstream log_file(log_path, std::ios::trunc);
  if (!log_file) throw DataError("cannot write " + log_path);
  log_file << std::setprecision(12);

  TrainResult result;
  double loss_accum = 0.0;
  int64_t loss_count = 0;
  bool stop = false;

  while (!stop) {
    auto batches = corpus::build_batches(train_set, cfg.max_words_per_batch, batch_rng);
    for (const auto& b : batches) {
      Tape tape;
      auto loss = model::forward_loss(tape, p, b, true, dropout_rng);
      backward(tape, loss);
      adam.step(schedule.lr());
      for (Tensor* t : param_list) t->zero_grad();
      loss_accum += loss.item();
      ++loss_count;
      ++result.steps;

      bool interval_hit = result.steps % cfg.checkpoint_interval == 0;
      bool budget_hit = cfg.max_updates > 0 && result.steps >= cfg.max_updates;
      if (interval_hit || budget_hit) {
        double ppl = validate_ppl(p, dev_batches);
        auto decision = schedule.observe(ppl);
        CheckpointRow row;
        row.step = result.steps;
        row.train_loss = loss_accum / static_cast<double>(loss_count);
        row.val_ppl = ppl;
        row.lr = decision.lr;
        row.path = cfg.out_dir + "/ckpt-" + std::to_string(result.steps);
        model::save_params(p, row.path);
        result.history.push_back(row);
        log_file << row.step << '\t' << row.train_loss << '\t' << row.val_ppl << '\t' << row.lr
                 << '\n';
        log_file.flush();
        loss_accum = 0.0;
        loss_count = 0;
        if (ppl < result.best_ppl) {
          result.best_ppl = ppl;
          result.best_path = row.path;
        }
        log::debug("checkpoint " + std::to_string(row.step) + " ppl " + std::to_string(ppl) +
                   " lr " + std::to_string(decision.lr));
        if (decision.stop) {
          result.early_stopped = true;
          stop = true;
          break;
        }
        if (budget_hit) {
          stop = true;
          break;
        }
      }
    }
  }

  if (result.best_path.empty()) throw Error("training produced no checkpoints");
  io::write_file(cfg.out_dir + "/best.ckpt", io::read_file(result.best_path));
  return result;
}

}  // namespace stylemux::train
