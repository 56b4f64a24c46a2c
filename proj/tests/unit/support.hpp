#pragma once

#include <cmath>
#include <functional>
#include <initializer_list>
#include <vector>

#include "evcharge/model.hpp"

namespace evtest {

using evcharge::Bounds;
using evcharge::EVRequest;
using evcharge::Instance;

inline EVRequest ev(int id, int a, int d, double E, double R, double v) {
  return EVRequest{id, a, d, E, R, v};
}

inline Instance make_instance(int horizon, double capacity, std::vector<double> prices,
                              Bounds bounds, std::vector<EVRequest> requests) {
  Instance inst;
  inst.config.horizon = horizon;
  inst.config.capacity = capacity;
  inst.config.prices = std::move(prices);
  inst.bounds = bounds;
  inst.requests = std::move(requests);
  return inst;
}

// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (b <= a) return 0.0;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline bool close_rel(double a, double b, double rel, double abs_floor = 0.0) {
  return std::fabs(a - b) <= std::max(abs_floor, rel * std::max(std::fabs(a), std::fabs(b)));
}

}  // namespace evtest
