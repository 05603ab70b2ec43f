#pragma once

#include <cstdint>
#include <string>

namespace dstofw {

enum class StepRule {
  dstofw_convex,     // 2/(k+1)
  dstofw_nonconvex,  // k^-alpha
  denfw_convex,      // 2/(k+1)
  denfw_nonconvex,   // k^-alpha
  cenfw_convex,      // 2/(2^t + k + 1), t = k / q
  cenfw_nonconvex,   // 1/sqrt(K)
};

struct StepSchedule {
  StepRule rule = StepRule::dstofw_convex;
  double alpha = 0.5;
  std::int64_t q = 1;        // cenfw_convex
  std::int64_t horizon = 1;  // cenfw_nonconvex

  /// gamma_k for k >= 1.
  double operator()(std::int64_t k) const;

  std::string describe() const;
};

double step_size(std::int64_t k, const StepSchedule& schedule);

}  // namespace dstofw
