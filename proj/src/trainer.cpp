#include "rrgat/trainer.hpp"

#include <cmath>

#include "json.hpp"
#include "rrgat/errors.hpp"

namespace rrgat {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch_size < 1) throw data_error("batch_size must be positive");
  if (epochs < 1) throw data_error("epochs must be positive");
  if (lr <= 0.0) throw data_error("lr must be positive");
  if (min_lr <= 0.0 || min_lr > lr) throw data_error("need 0 < min_lr <= lr");
  if (gamma <= 0.0 || gamma > 1.0) throw data_error("gamma must be in (0,1]");
  if (patience < 1) throw data_error("patience must be positive");
  if (weight_decay < 0.0) throw data_error("weight_decay must be non-negative");
  if (dropout < 0.0 || dropout >= 1.0) throw data_error("dropout must be in [0,1)");
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["lr"] = cfg.lr;
  j["min_lr"] = cfg.min_lr;
  j["gamma"] = cfg.gamma;
  j["patience"] = cfg.patience;
  j["weight_decay"] = cfg.weight_decay;
  j["dropout"] = cfg.dropout;
  j["seed"] = cfg.seed;
  j["stop_below_train_loss"] = cfg.stop_below_train_loss;
  return j.dump();
}

TrainConfig train_config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw data_error(std::string("bad train config: ") + e.what());
  }
  TrainConfig cfg;
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.lr = j.at("lr").get<double>();
  cfg.min_lr = j.at("min_lr").get<double>();
  cfg.gamma = j.at("gamma").get<double>();
  cfg.patience = j.at("patience").get<int>();
  cfg.weight_decay = j.at("weight_decay").get<double>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.stop_below_train_loss = j.value("stop_below_train_loss", 0.0);
  cfg.validate();
  return cfg;
}

TensorPtr multitask_loss(Tape& tape, const TensorPtr& pred, const TensorPtr& target) {
  if (pred->cols() != 2 || target->cols() != 2)
    throw numeric_error("multitask_loss: expected two-target batches");
  if (pred->rows() == 0) throw numeric_error("multitask_loss: empty batch");
  // mean over tasks of per-task MSE == overall element mean, both tasks
  // share the batch size.
  return tape.mse(pred, target);
}

void PlateauScheduler::observe(double val_loss) {
  if (val_loss < best_ - 1e-8) {
    best_ = val_loss;
    stall_ = 0;
    return;
  }
  ++stall_;
  if (stall_ >= patience_) {
    lr_ = std::max(lr_ * gamma_, min_lr_);
    stall_ = 0;
  }
}

namespace {

struct BatchTensors {
  BatchGraph m1, m2, co;
  TensorPtr targets;  // B x 2 transformed scale
};

BatchTensors build_batch_tensors(const std::vector<PreparedSample>& samples,
                                 const std::vector<int>& order, std::size_t begin,
                                 std::size_t end) {
  std::vector<const FeaturizedGraph*> g1, g2, gco;
  std::vector<double> targets;
  for (std::size_t k = begin; k < end; ++k) {
    const PreparedSample& s = samples[static_cast<std::size_t>(order[k])];
    g1.push_back(&s.m1);
    g2.push_back(&s.m2);
    gco.push_back(&s.co);
    targets.push_back(s.y[0]);
    targets.push_back(s.y[1]);
  }
  BatchTensors bt;
  bt.m1 = build_batch(g1);
  bt.m2 = build_batch(g2);
  bt.co = build_batch(gco);
  bt.targets = Tensor::values(end - begin, 2, std::move(targets));
  return bt;
}

std::vector<int> identity_order(std::size_t n) {
  std::vector<int> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<int>(i);
  return v;
}

// Transformed-scale predictions for a sample set, batched, no gradients.
std::vector<std::array<double, 2>> predict_all(const MimoGat& model,
                                               const std::vector<PreparedSample>& samples,
                                               int batch_size) {
  std::vector<std::array<double, 2>> preds;
  preds.reserve(samples.size());
  const std::vector<int> order = identity_order(samples.size());
  for (std::size_t begin = 0; begin < samples.size();
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(samples.size(), begin + static_cast<std::size_t>(batch_size));
    BatchTensors bt = build_batch_tensors(samples, order, begin, end);
    Tape tape;
    tape.set_grad_enabled(false);
    TensorPtr out = model.forward(tape, bt.m1, bt.m2, bt.co, /*train=*/false, nullptr);
    for (std::size_t i = 0; i < end - begin; ++i)
      preds.push_back({out->at(i, 0), out->at(i, 1)});
  }
  return preds;
}

TaskMetrics task_metrics(const std::vector<double>& actual,
                         const std::vector<double>& predicted) {
  TaskMetrics m;
  const double n = static_cast<double>(actual.size());
  double sse = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = predicted[i] - actual[i];
    sse += d * d;
    mean += actual[i];
  }
  mean /= n;
  m.rmse = std::sqrt(sse / n);
  double sstot = 0.0;
  for (double a : actual) sstot += (a - mean) * (a - mean);
  if (sstot <= 0.0) {
    m.r2_defined = false;
    m.r2 = std::numeric_limits<double>::quiet_NaN();
  } else {
    m.r2 = 1.0 - sse / sstot;
  }
  return m;
}

double combined_val_loss(const std::vector<PreparedSample>& samples,
                         const std::vector<std::array<double, 2>>& preds) {
  double acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (int task = 0; task < 2; ++task) {
      const double d = preds[i][task] - samples[i].y[task];
      acc += d * d;
    }
  return acc / (2.0 * static_cast<double>(samples.size()));
}

}  // namespace

Metrics evaluate_model(const MimoGat& model, const std::vector<PreparedSample>& samples,
                       const TargetScaler& scaler, int batch_size) {
  if (samples.empty()) throw data_error("evaluate_model: empty sample set");
  const auto preds = predict_all(model, samples, batch_size);

  Metrics metrics;
  for (int task = 0; task < 2; ++task) {
    std::vector<double> actual_t, pred_t, actual_r, pred_r;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      actual_t.push_back(samples[i].y[task]);
      pred_t.push_back(preds[i][task]);
      actual_r.push_back(samples[i].r[task]);
      pred_r.push_back(sqrt_invert(scaler.invert(task, preds[i][task])));
    }
    metrics.transformed[task] = task_metrics(actual_t, pred_t);
    metrics.original[task] = task_metrics(actual_r, pred_r);
    for (std::size_t i = 0; i < samples.size(); ++i)
      metrics.parity.push_back({samples[i].row_id, task + 1, actual_r[i], pred_r[i]});
  }
  return metrics;
}

TrainResult train_model(MimoGat& model, const PreparedDataset& data,
                        const TrainConfig& cfg) {
  cfg.validate();
  if (data.train.empty()) throw data_error("train_model: empty training split");
  if (data.val.empty()) throw data_error("train_model: empty validation split");

  const SplitRng root(cfg.seed);
  AdamState adam;
  PlateauScheduler scheduler(cfg.lr, cfg.gamma, cfg.patience, cfg.min_lr);

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  std::vector<int> order = identity_order(data.train.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    SplitRng shuffle_rng = root.split("epoch_shuffle").split(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle_rng.next_below(i));
      std::swap(order[i - 1], order[j]);
    }

    const double lr_used = scheduler.lr();
    double epoch_loss = 0.0;
    int batch_index = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      BatchTensors bt = build_batch_tensors(data.train, order, begin, end);
      SplitRng drop_rng = root.split("dropout")
                              .split(static_cast<std::uint64_t>(epoch))
                              .split(static_cast<std::uint64_t>(batch_index));
      Tape tape;
      TensorPtr pred = model.forward(tape, bt.m1, bt.m2, bt.co, /*train=*/true, &drop_rng);
      TensorPtr loss = multitask_loss(tape, pred, bt.targets);
      const double loss_value = loss->item();
      if (!std::isfinite(loss_value))
        throw numeric_error("training aborted: non-finite loss at epoch " +
                            std::to_string(epoch));
      tape.backward(loss);
      adam_step(model.params(), adam, lr_used, cfg.weight_decay);
      epoch_loss += loss_value * static_cast<double>(end - begin);
    }
    epoch_loss /= static_cast<double>(order.size());

    const auto val_preds = predict_all(model, data.val, cfg.batch_size);
    const double val_loss = combined_val_loss(data.val, val_preds);

    EpochLog log;
    log.epoch = epoch;
    log.lr = lr_used;
    log.train_loss = epoch_loss;
    log.val_loss = val_loss;
    for (int task = 0; task < 2; ++task) {
      std::vector<double> actual, predicted;
      for (std::size_t i = 0; i < data.val.size(); ++i) {
        actual.push_back(data.val[i].y[task]);
        predicted.push_back(val_preds[i][task]);
      }
      const TaskMetrics tm = task_metrics(actual, predicted);
      log.val_rmse[task] = tm.rmse;
      log.val_r2[task] = tm.r2;
    }
    result.log.push_back(log);

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      result.best_params = model.params().snapshot_values();
    }
    scheduler.observe(val_loss);

    if (cfg.stop_below_train_loss > 0.0 && epoch_loss < cfg.stop_below_train_loss)
      break;
  }
  return result;
}

}  // namespace rrgat
