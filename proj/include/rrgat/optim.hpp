#pragma once

#include <map>
#include <string>
#include <vector>

#include "rrgat/rng.hpp"
#include "rrgat/tensor.hpp"

namespace rrgat {

// Named collection of learnable tensors. Iteration order is the name order,
// which keeps optimizer updates and checkpoints deterministic.
class ParamStore {
 public:
  // Glorot-uniform init seeded by a stream derived from the parameter name,
  // so values do not depend on registration order.
  TensorPtr add_weight(const std::string& name, std::size_t rows,
                       std::size_t cols, const SplitRng& root);
  TensorPtr add_zeros(const std::string& name, std::size_t rows, std::size_t cols);
  TensorPtr at(const std::string& name) const;
  bool contains(const std::string& name) const { return items_.count(name) > 0; }

  const std::map<std::string, TensorPtr>& items() const { return items_; }
  std::size_t total_size() const;

  // Deep copy of the values (fresh tensors, grads not copied).
  std::map<std::string, TensorPtr> snapshot_values() const;
  // Overwrites values from a snapshot; names and shapes must match.
  void load_values(const std::map<std::string, TensorPtr>& values);

 private:
  TensorPtr insert(const std::string& name, TensorPtr t);
  std::map<std::string, TensorPtr> items_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}
  const AdamConfig& config() const { return cfg_; }
  long step_count() const { return step_; }

  friend void adam_step(ParamStore& params, AdamState& state, double lr,
                        double weight_decay);

 private:
  AdamConfig cfg_;
  long step_ = 0;
  std::map<std::string, std::vector<double>> m_, v_;
};

// One Adam update with L2 applied as weight_decay * param added to the
// gradient. Moments update, the step counter increments and gradients are
// cleared. Throws if any parameter is missing its gradient buffer.
void adam_step(ParamStore& params, AdamState& state, double lr,
               double weight_decay);

}  // namespace rrgat
