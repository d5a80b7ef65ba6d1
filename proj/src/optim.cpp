#include "rrgat/optim.hpp"

#include <cmath>

#include "rrgat/errors.hpp"

namespace rrgat {

TensorPtr ParamStore::insert(const std::string& name, TensorPtr t) {
  if (items_.count(name))
    throw data_error("duplicate parameter name: " + name);
  t->set_requires_grad(true);
  items_[name] = t;
  return t;
}

TensorPtr ParamStore::add_weight(const std::string& name, std::size_t rows,
                                 std::size_t cols, const SplitRng& root) {
  auto t = Tensor::zeros(rows, cols);
  SplitRng rng = root.split(name);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (std::size_t i = 0; i < t->size(); ++i)
    t->data()[i] = rng.uniform(-limit, limit);
  return insert(name, std::move(t));
}

TensorPtr ParamStore::add_zeros(const std::string& name, std::size_t rows,
                                std::size_t cols) {
  return insert(name, Tensor::zeros(rows, cols));
}

TensorPtr ParamStore::at(const std::string& name) const {
  auto it = items_.find(name);
  if (it == items_.end()) throw data_error("unknown parameter: " + name);
  return it->second;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [name, t] : items_) n += t->size();
  return n;
}

std::map<std::string, TensorPtr> ParamStore::snapshot_values() const {
  std::map<std::string, TensorPtr> out;
  for (const auto& [name, t] : items_) {
    out[name] = Tensor::values(t->rows(), t->cols(),
                               std::vector<double>(t->data(), t->data() + t->size()));
  }
  return out;
}

void ParamStore::load_values(const std::map<std::string, TensorPtr>& values) {
  if (values.size() != items_.size())
    throw data_error("parameter set mismatch while loading values");
  for (auto& [name, t] : items_) {
    auto it = values.find(name);
    if (it == values.end()) throw data_error("missing parameter in snapshot: " + name);
    const TensorPtr& src = it->second;
    if (src->rows() != t->rows() || src->cols() != t->cols())
      throw data_error("shape mismatch for parameter " + name);
    std::copy(src->data(), src->data() + src->size(), t->data());
  }
}

void adam_step(ParamStore& params, AdamState& state, double lr,
               double weight_decay) {
  ++state.step_;
  const AdamConfig& cfg = state.cfg_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_));

  for (auto& [name, p] : params.items()) {
    if (!p->has_grad())
      throw numeric_error("adam_step: missing gradient for parameter " + name);
    auto& m = state.m_[name];
    auto& v = state.v_[name];
    if (m.empty()) {
      m.assign(p->size(), 0.0);
      v.assign(p->size(), 0.0);
    }
    double* w = p->data();
    double* g = p->grad();
    for (std::size_t i = 0, n = p->size(); i < n; ++i) {
      const double grad = g[i] + weight_decay * w[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad * grad;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    p->zero_grad();
  }
}

}  // namespace rrgat
