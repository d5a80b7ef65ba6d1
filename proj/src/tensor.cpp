#include "rrgat/tensor.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>
#include <string>

#include "rrgat/errors.hpp"

namespace rrgat {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<RowMat>;
using ConstMap = Eigen::Map<const RowMat>;

[[noreturn]] void shape_fail(const char* op, const Tensor& a) {
  throw numeric_error(std::string("shape mismatch in ") + op + " (" +
                      std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ")");
}

void check_finite(const TensorPtr& t, const char* op) {
  const double* p = t->data();
  for (std::size_t i = 0, n = t->size(); i < n; ++i) {
    if (!std::isfinite(p[i]))
      throw numeric_error(std::string("non-finite value produced by ") + op);
  }
}

}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols, bool requires_grad)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0), requires_grad_(requires_grad) {}

TensorPtr Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return std::make_shared<Tensor>(rows, cols, requires_grad);
}

TensorPtr Tensor::values(std::size_t rows, std::size_t cols,
                         std::vector<double> data, bool requires_grad) {
  if (data.size() != rows * cols)
    throw numeric_error("tensor data length does not match shape");
  auto t = std::make_shared<Tensor>(rows, cols, requires_grad);
  t->data_ = std::move(data);
  return t;
}

TensorPtr Tensor::scalar(double v) { return values(1, 1, {v}); }

double Tensor::item() const {
  if (size() != 1) throw numeric_error("item() on a non-scalar tensor");
  return data_[0];
}

void Tensor::ensure_grad() {
  if (grad_.empty()) grad_.assign(data_.size(), 0.0);
}

void Tensor::zero_grad() {
  std::fill(grad_.begin(), grad_.end(), 0.0);
}

TensorPtr Tape::make_output(std::size_t r, std::size_t c,
                            std::initializer_list<const TensorPtr*> inputs) {
  bool needs = false;
  if (grad_enabled_)
    for (const TensorPtr* in : inputs) needs = needs || (*in)->requires_grad();
  auto out = Tensor::zeros(r, c, needs);
  if (needs) {
    out->ensure_grad();
    for (const TensorPtr* in : inputs)
      if ((*in)->requires_grad()) (*in)->ensure_grad();
  }
  return out;
}

void Tape::record(std::function<void()> back) {
  nodes_.push_back(std::move(back));
}

void Tape::trace_signs(const TensorPtr& x) {
  if (!trace_kinks_) return;
  const double* p = x->data();
  for (std::size_t i = 0, n = x->size(); i < n; ++i)
    kink_trace_.push_back(p[i] < 0.0 ? 1 : 0);
}

void Tape::backward(const TensorPtr& loss) {
  if (loss->size() != 1) throw numeric_error("backward: loss is not a scalar");
  if (!loss->requires_grad())
    throw numeric_error("backward: loss does not depend on any parameter");
  loss->ensure_grad();
  loss->grad()[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
  if (a->cols() != b->rows()) shape_fail("matmul", *a);
  auto out = make_output(a->rows(), b->cols(), {&a, &b});
  {
    ConstMap A(a->data(), a->rows(), a->cols());
    ConstMap B(b->data(), b->rows(), b->cols());
    Map C(out->data(), out->rows(), out->cols());
    C.noalias() = A * B;
  }
  check_finite(out, "matmul");
  if (out->requires_grad()) {
    record([a, b, out] {
      ConstMap G(out->grad(), out->rows(), out->cols());
      if (a->requires_grad()) {
        ConstMap B(b->data(), b->rows(), b->cols());
        Map GA(a->grad(), a->rows(), a->cols());
        GA.noalias() += G * B.transpose();
      }
      if (b->requires_grad()) {
        ConstMap A(a->data(), a->rows(), a->cols());
        Map GB(b->grad(), b->rows(), b->cols());
        GB.noalias() += A.transpose() * G;
      }
    });
  }
  return out;
}

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
  const bool broadcast = b->rows() == 1 && a->cols() == b->cols() && a->rows() != 1;
  if (!broadcast && (a->rows() != b->rows() || a->cols() != b->cols()))
    shape_fail("add", *a);
  auto out = make_output(a->rows(), a->cols(), {&a, &b});
  const std::size_t n = a->size(), c = a->cols();
  for (std::size_t i = 0; i < n; ++i)
    out->data()[i] = a->data()[i] + b->data()[broadcast ? i % c : i];
  check_finite(out, "add");
  if (out->requires_grad()) {
    record([a, b, out, broadcast, n, c] {
      if (a->requires_grad())
        for (std::size_t i = 0; i < n; ++i) a->grad()[i] += out->grad()[i];
      if (b->requires_grad())
        for (std::size_t i = 0; i < n; ++i)
          b->grad()[broadcast ? i % c : i] += out->grad()[i];
    });
  }
  return out;
}

TensorPtr Tape::sub(const TensorPtr& a, const TensorPtr& b) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_fail("sub", *a);
  auto out = make_output(a->rows(), a->cols(), {&a, &b});
  for (std::size_t i = 0, n = a->size(); i < n; ++i)
    out->data()[i] = a->data()[i] - b->data()[i];
  check_finite(out, "sub");
  if (out->requires_grad()) {
    record([a, b, out] {
      const std::size_t n = out->size();
      if (a->requires_grad())
        for (std::size_t i = 0; i < n; ++i) a->grad()[i] += out->grad()[i];
      if (b->requires_grad())
        for (std::size_t i = 0; i < n; ++i) b->grad()[i] -= out->grad()[i];
    });
  }
  return out;
}

TensorPtr Tape::mul(const TensorPtr& a, const TensorPtr& b) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_fail("mul", *a);
  auto out = make_output(a->rows(), a->cols(), {&a, &b});
  for (std::size_t i = 0, n = a->size(); i < n; ++i)
    out->data()[i] = a->data()[i] * b->data()[i];
  check_finite(out, "mul");
  if (out->requires_grad()) {
    record([a, b, out] {
      const std::size_t n = out->size();
      if (a->requires_grad())
        for (std::size_t i = 0; i < n; ++i)
          a->grad()[i] += out->grad()[i] * b->data()[i];
      if (b->requires_grad())
        for (std::size_t i = 0; i < n; ++i)
          b->grad()[i] += out->grad()[i] * a->data()[i];
    });
  }
  return out;
}

TensorPtr Tape::scale_rows(const TensorPtr& a, const TensorPtr& s) {
  if (s->cols() != 1 || s->rows() != a->rows()) shape_fail("scale_rows", *s);
  auto out = make_output(a->rows(), a->cols(), {&a, &s});
  const std::size_t r = a->rows(), c = a->cols();
  for (std::size_t i = 0; i < r; ++i) {
    const double f = s->data()[i];
    for (std::size_t j = 0; j < c; ++j)
      out->data()[i * c + j] = a->data()[i * c + j] * f;
  }
  check_finite(out, "scale_rows");
  if (out->requires_grad()) {
    record([a, s, out, r, c] {
      for (std::size_t i = 0; i < r; ++i) {
        const double f = s->data()[i];
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          const double g = out->grad()[i * c + j];
          if (a->requires_grad()) a->grad()[i * c + j] += g * f;
          acc += g * a->data()[i * c + j];
        }
        if (s->requires_grad()) s->grad()[i] += acc;
      }
    });
  }
  return out;
}

TensorPtr Tape::concat_cols(const TensorPtr& a, const TensorPtr& b) {
  if (a->rows() != b->rows()) shape_fail("concat_cols", *a);
  const std::size_t r = a->rows(), ca = a->cols(), cb = b->cols();
  auto out = make_output(r, ca + cb, {&a, &b});
  for (std::size_t i = 0; i < r; ++i) {
    std::memcpy(out->data() + i * (ca + cb), a->data() + i * ca, ca * sizeof(double));
    std::memcpy(out->data() + i * (ca + cb) + ca, b->data() + i * cb, cb * sizeof(double));
  }
  if (out->requires_grad()) {
    record([a, b, out, r, ca, cb] {
      for (std::size_t i = 0; i < r; ++i) {
        if (a->requires_grad())
          for (std::size_t j = 0; j < ca; ++j)
            a->grad()[i * ca + j] += out->grad()[i * (ca + cb) + j];
        if (b->requires_grad())
          for (std::size_t j = 0; j < cb; ++j)
            b->grad()[i * cb + j] += out->grad()[i * (ca + cb) + ca + j];
      }
    });
  }
  return out;
}

TensorPtr Tape::concat_rows(const TensorPtr& a, const TensorPtr& b) {
  if (a->cols() != b->cols()) shape_fail("concat_rows", *a);
  const std::size_t c = a->cols();
  auto out = make_output(a->rows() + b->rows(), c, {&a, &b});
  std::memcpy(out->data(), a->data(), a->size() * sizeof(double));
  std::memcpy(out->data() + a->size(), b->data(), b->size() * sizeof(double));
  if (out->requires_grad()) {
    record([a, b, out] {
      if (a->requires_grad())
        for (std::size_t i = 0; i < a->size(); ++i) a->grad()[i] += out->grad()[i];
      if (b->requires_grad())
        for (std::size_t i = 0; i < b->size(); ++i)
          b->grad()[i] += out->grad()[a->size() + i];
    });
  }
  return out;
}

TensorPtr Tape::gather_rows(const TensorPtr& a, const std::vector<int>& idx) {
  const std::size_t c = a->cols();
  for (int i : idx)
    if (i < 0 || static_cast<std::size_t>(i) >= a->rows())
      throw numeric_error("gather_rows: index out of range");
  auto out = make_output(idx.size(), c, {&a});
  for (std::size_t k = 0; k < idx.size(); ++k)
    std::memcpy(out->data() + k * c, a->data() + static_cast<std::size_t>(idx[k]) * c,
                c * sizeof(double));
  if (out->requires_grad()) {
    record([a, out, idx, c] {
      if (!a->requires_grad()) return;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        double* dst = a->grad() + static_cast<std::size_t>(idx[k]) * c;
        const double* src = out->grad() + k * c;
        for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

namespace {
void validate_offsets(const std::vector<int>& offsets, std::size_t rows, const char* op) {
  if (offsets.size() < 2 || offsets.front() != 0 ||
      offsets.back() != static_cast<int>(rows))
    throw numeric_error(std::string(op) + ": offsets do not partition the rows");
  for (std::size_t s = 1; s < offsets.size(); ++s)
    if (offsets[s] < offsets[s - 1])
      throw numeric_error(std::string(op) + ": offsets not monotone");
}
}  // namespace

TensorPtr Tape::segment_sum(const TensorPtr& a, const std::vector<int>& offsets) {
  validate_offsets(offsets, a->rows(), "segment_sum");
  const std::size_t nseg = offsets.size() - 1, c = a->cols();
  auto out = make_output(nseg, c, {&a});
  for (std::size_t s = 0; s < nseg; ++s)
    for (int i = offsets[s]; i < offsets[s + 1]; ++i)
      for (std::size_t j = 0; j < c; ++j)
        out->data()[s * c + j] += a->data()[static_cast<std::size_t>(i) * c + j];
  check_finite(out, "segment_sum");
  if (out->requires_grad()) {
    record([a, out, offsets, nseg, c] {
      if (!a->requires_grad()) return;
      for (std::size_t s = 0; s < nseg; ++s)
        for (int i = offsets[s]; i < offsets[s + 1]; ++i)
          for (std::size_t j = 0; j < c; ++j)
            a->grad()[static_cast<std::size_t>(i) * c + j] += out->grad()[s * c + j];
    });
  }
  return out;
}

TensorPtr Tape::segment_softmax(const TensorPtr& a, const std::vector<int>& offsets) {
  if (a->cols() != 1) shape_fail("segment_softmax", *a);
  validate_offsets(offsets, a->rows(), "segment_softmax");
  const std::size_t nseg = offsets.size() - 1;
  for (std::size_t s = 0; s < nseg; ++s)
    if (offsets[s] == offsets[s + 1])
      throw numeric_error("segment_softmax: empty segment");

  auto out = make_output(a->rows(), 1, {&a});
  for (std::size_t s = 0; s < nseg; ++s) {
    double mx = a->data()[offsets[s]];
    for (int i = offsets[s]; i < offsets[s + 1]; ++i)
      mx = std::max(mx, a->data()[i]);
    double denom = 0.0;
    for (int i = offsets[s]; i < offsets[s + 1]; ++i) {
      out->data()[i] = std::exp(a->data()[i] - mx);
      denom += out->data()[i];
    }
    for (int i = offsets[s]; i < offsets[s + 1]; ++i) out->data()[i] /= denom;
  }
  check_finite(out, "segment_softmax");
  if (out->requires_grad()) {
    record([a, out, offsets, nseg] {
      if (!a->requires_grad()) return;
      for (std::size_t s = 0; s < nseg; ++s) {
        double dot = 0.0;
        for (int i = offsets[s]; i < offsets[s + 1]; ++i)
          dot += out->grad()[i] * out->data()[i];
        for (int i = offsets[s]; i < offsets[s + 1]; ++i)
          a->grad()[i] += out->data()[i] * (out->grad()[i] - dot);
      }
    });
  }
  return out;
}

TensorPtr Tape::leaky_relu(const TensorPtr& a) {
  trace_signs(a);
  auto out = make_output(a->rows(), a->cols(), {&a});
  for (std::size_t i = 0, n = a->size(); i < n; ++i) {
    const double x = a->data()[i];
    out->data()[i] = x >= 0.0 ? x : kLeakyReluSlope * x;
  }
  check_finite(out, "leaky_relu");
  if (out->requires_grad()) {
    record([a, out] {
      if (!a->requires_grad()) return;
      for (std::size_t i = 0, n = a->size(); i < n; ++i)
        a->grad()[i] += out->grad()[i] * (a->data()[i] >= 0.0 ? 1.0 : kLeakyReluSlope);
    });
  }
  return out;
}

TensorPtr Tape::elu(const TensorPtr& a) {
  trace_signs(a);
  auto out = make_output(a->rows(), a->cols(), {&a});
  for (std::size_t i = 0, n = a->size(); i < n; ++i) {
    const double x = a->data()[i];
    out->data()[i] = x >= 0.0 ? x : kEluAlpha * (std::exp(x) - 1.0);
  }
  check_finite(out, "elu");
  if (out->requires_grad()) {
    record([a, out] {
      if (!a->requires_grad()) return;
      for (std::size_t i = 0, n = a->size(); i < n; ++i) {
        const double x = a->data()[i];
        a->grad()[i] += out->grad()[i] * (x >= 0.0 ? 1.0 : kEluAlpha * std::exp(x));
      }
    });
  }
  return out;
}

TensorPtr Tape::sigmoid(const TensorPtr& a) {
  auto out = make_output(a->rows(), a->cols(), {&a});
  for (std::size_t i = 0, n = a->size(); i < n; ++i)
    out->data()[i] = 1.0 / (1.0 + std::exp(-a->data()[i]));
  check_finite(out, "sigmoid");
  if (out->requires_grad()) {
    record([a, out] {
      if (!a->requires_grad()) return;
      for (std::size_t i = 0, n = a->size(); i < n; ++i) {
        const double y = out->data()[i];
        a->grad()[i] += out->grad()[i] * y * (1.0 - y);
      }
    });
  }
  return out;
}

TensorPtr Tape::tanh_op(const TensorPtr& a) {
  auto out = make_output(a->rows(), a->cols(), {&a});
  for (std::size_t i = 0, n = a->size(); i < n; ++i)
    out->data()[i] = std::tanh(a->data()[i]);
  check_finite(out, "tanh");
  if (out->requires_grad()) {
    record([a, out] {
      if (!a->requires_grad()) return;
      for (std::size_t i = 0, n = a->size(); i < n; ++i) {
        const double y = out->data()[i];
        a->grad()[i] += out->grad()[i] * (1.0 - y * y);
      }
    });
  }
  return out;
}

TensorPtr Tape::dropout(const TensorPtr& a, double p, bool train, SplitRng& rng) {
  if (p < 0.0 || p >= 1.0) throw numeric_error("dropout: p must be in [0,1)");
  if (!train || p == 0.0) return a;
  auto mask = std::make_shared<std::vector<double>>(a->size());
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0, n = a->size(); i < n; ++i)
    (*mask)[i] = rng.uniform() >= p ? keep_scale : 0.0;
  auto out = make_output(a->rows(), a->cols(), {&a});
  for (std::size_t i = 0, n = a->size(); i < n; ++i)
    out->data()[i] = a->data()[i] * (*mask)[i];
  check_finite(out, "dropout");
  if (out->requires_grad()) {
    record([a, out, mask] {
      if (!a->requires_grad()) return;
      for (std::size_t i = 0, n = a->size(); i < n; ++i)
        a->grad()[i] += out->grad()[i] * (*mask)[i];
    });
  }
  return out;
}

TensorPtr Tape::mean(const TensorPtr& a) {
  auto out = make_output(1, 1, {&a});
  double acc = 0.0;
  for (std::size_t i = 0, n = a->size(); i < n; ++i) acc += a->data()[i];
  out->data()[0] = acc / static_cast<double>(a->size());
  check_finite(out, "mean");
  if (out->requires_grad()) {
    record([a, out] {
      if (!a->requires_grad()) return;
      const double g = out->grad()[0] / static_cast<double>(a->size());
      for (std::size_t i = 0, n = a->size(); i < n; ++i) a->grad()[i] += g;
    });
  }
  return out;
}

TensorPtr Tape::mse(const TensorPtr& pred, const TensorPtr& target) {
  if (pred->rows() != target->rows() || pred->cols() != target->cols())
    shape_fail("mse", *pred);
  if (pred->size() == 0) throw numeric_error("mse: empty input");
  auto out = make_output(1, 1, {&pred, &target});
  double acc = 0.0;
  for (std::size_t i = 0, n = pred->size(); i < n; ++i) {
    const double d = pred->data()[i] - target->data()[i];
    acc += d * d;
  }
  out->data()[0] = acc / static_cast<double>(pred->size());
  check_finite(out, "mse");
  if (out->requires_grad()) {
    record([pred, target, out] {
      const std::size_t n = pred->size();
      const double g = out->grad()[0] * 2.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = pred->data()[i] - target->data()[i];
        if (pred->requires_grad()) pred->grad()[i] += g * d;
        if (target->requires_grad()) target->grad()[i] -= g * d;
      }
    });
  }
  return out;
}

}  // namespace rrgat
