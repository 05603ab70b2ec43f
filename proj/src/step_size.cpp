#include "dstofw/step_size.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "dstofw/error.hpp"

namespace dstofw {

double StepSchedule::operator()(std::int64_t k) const {
  if (k < 1) throw NumericError(fmt::format("step_size: iteration {} must be >= 1", k));
  const auto kd = static_cast<double>(k);
  switch (rule) {
    case StepRule::dstofw_convex:
    case StepRule::denfw_convex:
      return 2.0 / (kd + 1.0);
    case StepRule::dstofw_nonconvex:
    case StepRule::denfw_nonconvex:
      return std::pow(kd, -alpha);
    case StepRule::cenfw_convex: {
      // 2 / (2^t + k + 1) rewritten as 2^{1-t} / (1 + (k+1) 2^{-t}) to stay finite for large t.
      const auto t = static_cast<int>(std::min<std::int64_t>(k / q, 1 << 20));
      const double scale = std::ldexp(1.0, -t);
      // Past 2^1074 the value rounds to zero; keep the smallest positive step instead.
      return std::max(2.0 * scale / (1.0 + (kd + 1.0) * scale),
                      std::numeric_limits<double>::denorm_min());
    }
    case StepRule::cenfw_nonconvex:
      return 1.0 / std::sqrt(static_cast<double>(horizon));
  }
  return 0.0;
}

std::string StepSchedule::describe() const {
  switch (rule) {
    case StepRule::dstofw_convex:
    case StepRule::denfw_convex:
      return "2/(k+1)";
    case StepRule::dstofw_nonconvex:
    case StepRule::denfw_nonconvex:
      return fmt::format("k^-{}", alpha);
    case StepRule::cenfw_convex:
      return fmt::format("2/(2^(k//{})+k+1)", q);
    case StepRule::cenfw_nonconvex:
      return fmt::format("1/sqrt({})", horizon);
  }
  return "?";
}

double step_size(std::int64_t k, const StepSchedule& schedule) { return schedule(k); }

}  // namespace dstofw
