#include "higenet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace higenet {

namespace {

double evaluate(const ObjectiveFn& f, ParamStore& params) {
  Tape tape(false);
  const double v = f(tape, params).value().item();
  if (!std::isfinite(v)) throw std::runtime_error("finite_diff_check: objective is not finite");
  return v;
}

}  // namespace

GradCheckReport finite_diff_check(const ObjectiveFn& f, ParamStore& params, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");

  params.zero_grad();
  {
    Tape tape(true);
    Var loss = f(tape, params);
    if (!std::isfinite(loss.value().item())) throw std::runtime_error("finite_diff_check: objective is not finite");
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& entry : params) {
    auto g = entry.value.grad();
    analytic.emplace_back(g.begin(), g.end());
  }

  GradCheckReport report;
  std::size_t p = 0;
  for (auto& entry : params) {
    Tensor& theta = entry.value;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + step;
      const double up = evaluate(f, params);
      theta[i] = saved - step;
      const double down = evaluate(f, params);
      theta[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coordinates;
      if (rel > report.max_rel_error || report.worst_param.empty()) {
        if (rel >= report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_param = entry.name;
          report.worst_index = i;
          report.analytic = a;
          report.numeric = numeric;
        }
      }
    }
    ++p;
  }
  return report;
}

}  // namespace higenet
