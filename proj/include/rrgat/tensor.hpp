#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "rrgat/rng.hpp"

namespace rrgat {

inline constexpr double kLeakyReluSlope = 0.01;
inline constexpr double kEluAlpha = 1.0;

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major 2-D array of 64-bit floats with a lazily allocated
// gradient buffer. Scalars are 1x1.
class Tensor {
 public:
  Tensor(std::size_t rows, std::size_t cols, bool requires_grad = false);

  static TensorPtr zeros(std::size_t rows, std::size_t cols,
                         bool requires_grad = false);
  static TensorPtr values(std::size_t rows, std::size_t cols,
                          std::vector<double> data, bool requires_grad = false);
  static TensorPtr scalar(double v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::vector<std::size_t> shape() const { return {rows_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double item() const;  // requires 1x1

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool v) { requires_grad_ = v; }
  bool has_grad() const { return !grad_.empty(); }
  double* grad() { return grad_.data(); }
  const double* grad() const { return grad_.data(); }
  void ensure_grad();
  void zero_grad();

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
  std::vector<double> grad_;
  bool requires_grad_;
};

// Eager forward evaluation with an operation tape for reverse-mode
// differentiation. One tape per forward/backward episode; tensors are
// confined to the thread that owns the tape.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
  // Elementwise; b may also be a 1 x cols row vector broadcast over rows.
  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
  TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
  // Multiplies row i of a by s(i,0).
  TensorPtr scale_rows(const TensorPtr& a, const TensorPtr& s);
  TensorPtr concat_cols(const TensorPtr& a, const TensorPtr& b);
  TensorPtr concat_rows(const TensorPtr& a, const TensorPtr& b);
  TensorPtr gather_rows(const TensorPtr& a, const std::vector<int>& idx);
  // offsets has S+1 entries partitioning [0, rows).
  TensorPtr segment_sum(const TensorPtr& a, const std::vector<int>& offsets);
  // a must be a column; softmax within each segment, max-subtracted.
  TensorPtr segment_softmax(const TensorPtr& a, const std::vector<int>& offsets);
  TensorPtr leaky_relu(const TensorPtr& a);
  TensorPtr elu(const TensorPtr& a);
  TensorPtr sigmoid(const TensorPtr& a);
  TensorPtr tanh_op(const TensorPtr& a);
  // Inverted dropout; exact identity when train is false or p == 0 (no
  // randomness consumed).
  TensorPtr dropout(const TensorPtr& a, double p, bool train, SplitRng& rng);
  TensorPtr mean(const TensorPtr& a);
  TensorPtr mse(const TensorPtr& pred, const TensorPtr& target);

  // Populates gradients of every requires-grad tensor reachable from loss;
  // grads of other on-tape tensors stay zero. loss must be 1x1.
  void backward(const TensorPtr& loss);

  std::size_t node_count() const { return nodes_.size(); }

  // Inference-only mode: no backward nodes are recorded and outputs never
  // require grad. backward() is unavailable on such a tape.
  void set_grad_enabled(bool on) { grad_enabled_ = on; }

  // Records the sign of every leaky_relu/elu input while enabled, so a
  // gradient checker can detect perturbations that cross a kink.
  void set_trace_kinks(bool on) { trace_kinks_ = on; }
  const std::vector<std::uint8_t>& kink_trace() const { return kink_trace_; }

 private:
  TensorPtr make_output(std::size_t r, std::size_t c,
                        std::initializer_list<const TensorPtr*> inputs);
  void record(std::function<void()> back);
  void trace_signs(const TensorPtr& x);

  std::vector<std::function<void()>> nodes_;
  bool grad_enabled_ = true;
  bool trace_kinks_ = false;
  std::vector<std::uint8_t> kink_trace_;
};

}  // namespace rrgat
