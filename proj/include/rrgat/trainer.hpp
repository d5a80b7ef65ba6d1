#pragma once

#include <array>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "rrgat/model.hpp"
#include "rrgat/pipeline.hpp"

namespace rrgat {

struct TrainConfig {
  int batch_size = 250;
  int epochs = 300;
  double lr = 5.4e-3;
  double min_lr = 1e-6;
  double gamma = 0.8;
  int patience = 13;
  double weight_decay = 1e-4;
  double dropout = 0.05;
  std::uint64_t seed = 0;
  // Optional early exit once the epoch train loss falls below this; 0
  // disables it. Used by memorization checks; off by default.
  double stop_below_train_loss = 0.0;

  void validate() const;
};

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& json_text);

// Multi-task loss: per-task MSE over the batch, averaged over the two
// tasks. pred and target are B x 2.
TensorPtr multitask_loss(Tape& tape, const TensorPtr& pred, const TensorPtr& target);

// Halves the learning rate by gamma after `patience` consecutive epochs
// without an improvement greater than 1e-8; never raises it and floors at
// min_lr. The first observation sets the baseline.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, double gamma, int patience, double min_lr)
      : lr_(lr), gamma_(gamma), min_lr_(min_lr), patience_(patience) {}

  double lr() const { return lr_; }
  void observe(double val_loss);

 private:
  double lr_, gamma_, min_lr_;
  int patience_;
  int stall_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct TaskMetrics {
  double rmse = 0.0;
  double r2 = 0.0;
  bool r2_defined = true;  // false when the target set has zero variance
};

struct ParityPoint {
  int row_id = 0;
  int task = 0;  // 1 or 2
  double actual = 0.0;
  double predicted = 0.0;
};

struct Metrics {
  std::array<TaskMetrics, 2> transformed;
  std::array<TaskMetrics, 2> original;  // after inverse scaling and squaring
  std::vector<ParityPoint> parity;      // original scale
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::array<double, 2> val_rmse{0.0, 0.0};
  std::array<double, 2> val_r2{0.0, 0.0};
};

struct TrainResult {
  std::map<std::string, TensorPtr> best_params;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  std::vector<EpochLog> log;
};

// Full training loop: seeded epoch shuffling, disjoint-union minibatches,
// Adam with weight decay, plateau scheduling, best-on-validation checkpoint
// selection. Deterministic for a fixed config.
TrainResult train_model(MimoGat& model, const PreparedDataset& data,
                        const TrainConfig& cfg);

// RMSE/R2 in transformed space and, after inversion, in original r space,
// plus parity pairs. Batch size only affects grouping, not the numbers.
Metrics evaluate_model(const MimoGat& model, const std::vector<PreparedSample>& samples,
                       const TargetScaler& scaler, int batch_size);

}  // namespace rrgat
