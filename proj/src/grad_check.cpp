#include "rrgat/grad_check.hpp"

#include <cmath>

#include "rrgat/errors.hpp"

namespace rrgat {

GradCheckReport grad_check(const std::function<TensorPtr(Tape&)>& f,
                           const std::vector<TensorPtr>& wrt, double eps) {
  if (eps <= 0.0) throw numeric_error("grad_check: eps must be positive");

  // Analytic pass. Checked tensors may carry gradients from earlier
  // episodes; start them from zero.
  for (const TensorPtr& t : wrt) {
    t->ensure_grad();
    t->zero_grad();
  }
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    TensorPtr loss = f(tape);
    if (loss->size() != 1) throw numeric_error("grad_check: f is not scalar-valued");
    tape.backward(loss);
    for (const TensorPtr& t : wrt) {
      if (!t->has_grad())
        throw numeric_error("grad_check: a checked tensor has no gradient");
      analytic.emplace_back(t->grad(), t->grad() + t->size());
    }
  }

  auto eval = [&f](std::vector<std::uint8_t>& signs) {
    Tape tape;
    tape.set_trace_kinks(true);
    TensorPtr loss = f(tape);
    signs = tape.kink_trace();
    return loss->item();
  };

  GradCheckReport report;
  std::vector<std::uint8_t> signs_plus, signs_minus;
  for (std::size_t t = 0; t < wrt.size(); ++t) {
    double* x = wrt[t]->data();
    for (std::size_t i = 0; i < wrt[t]->size(); ++i) {
      const double saved = x[i];
      x[i] = saved + eps;
      const double fp = eval(signs_plus);
      x[i] = saved - eps;
      const double fm = eval(signs_minus);
      x[i] = saved;

      if (signs_plus != signs_minus) {
        ++report.skipped;
        continue;
      }
      const double numeric = (fp - fm) / (2.0 * eps);
      const double rel = std::abs(analytic[t][i] - numeric) /
                         std::max(1.0, std::abs(numeric));
      report.max_rel_err = std::max(report.max_rel_err, rel);
      ++report.checked;
    }
  }
  return report;
}

}  // namespace rrgat
