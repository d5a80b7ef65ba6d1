#pragma once

#include <functional>
#include <vector>

#include "rrgat/tensor.hpp"

namespace rrgat {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose perturbation crossed a kink
};

// Compares reverse-mode gradients of a scalar-valued function against
// central finite differences, coordinate by coordinate over the given
// tensors. f must rebuild the same computation on the tape it is handed and
// must be deterministic (dropout off). Coordinates where the +eps and -eps
// evaluations disagree on any leaky_relu/elu input sign are skipped, since
// the difference quotient straddles a kink there.
//
// Relative error is |analytic - numeric| / max(1, |numeric|).
GradCheckReport grad_check(const std::function<TensorPtr(Tape&)>& f,
                           const std::vector<TensorPtr>& wrt, double eps);

}  // namespace rrgat
