#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "higenet/autograd.hpp"
#include "higenet/tensor.hpp"

namespace higenet {

// Scalar objective over a parameter store, evaluated on the supplied tape.
using ObjectiveFn = std::function<Var(Tape&, ParamStore&)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// Compares the tape gradient of `f` with central differences
// (f(θ+h) − f(θ−h)) / 2h, coordinate by coordinate. Relative error uses the
// denominator max(|analytic|, |numeric|, 1e-8). `params` is restored on exit.
GradCheckReport finite_diff_check(const ObjectiveFn& f, ParamStore& params, double step = 1e-5);

}  // namespace higenet
