#include "evcharge/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "evcharge/error.hpp"

namespace evcharge {

PricingParams make_params(const Bounds& bounds, const StationConfig& config) {
  check_bounds(bounds);
  if (!(config.capacity > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "capacity must be positive");
  }
  for (std::size_t t = 0; t < config.prices.size(); ++t) {
    if (config.prices[t] > bounds.pmax) {
      throw Error(ErrorCode::kPriceExceedsPmax,
                  "price " + std::to_string(config.prices[t]) + " at slot " +
                      std::to_string(t) + " exceeds pmax " +
                      std::to_string(bounds.pmax));
    }
  }
  PricingParams p;
  p.bounds = bounds;
  p.capacity = config.capacity;
  p.prices = config.prices;
  p.theta = p.boundary_price() / (bounds.L - bounds.pmax);
  p.alpha = 1.0 + 2.0 * std::log(p.theta);
  p.beta = p.capacity / p.alpha;
  return p;
}

// ---------------------------------------------------------------------------
// Exponential curve
// ---------------------------------------------------------------------------

namespace {

double exp_price(const PricingParams& pp, Slot t, double w) {
  if (w < pp.beta) return pp.bounds.L;
  const double p = pp.price_at(t);
  return (pp.bounds.L - p) * std::exp(pp.alpha * w / pp.capacity - 1.0) + p;
}

double exp_inverse(const PricingParams& pp, Slot t, double level) {
  const double L = pp.bounds.L;
  if (level < L) return 0.0;
  if (level == L) return pp.beta;
  const double p = pp.price_at(t);
  const double w = pp.capacity / pp.alpha * (1.0 + std::log((level - p) / (L - p)));
  return std::clamp(w, pp.beta, pp.capacity);
}

double exp_integral(const PricingParams& pp, Slot t, double w0, double w1) {
  const double L = pp.bounds.L;
  const double flat = L * (std::min(w1, pp.beta) - std::min(w0, pp.beta));
  if (w1 <= pp.beta) return flat;
  const double a = std::max(w0, pp.beta);
  const double p = pp.price_at(t);
  const double scale = pp.capacity / pp.alpha;
  // (C/alpha) G (e^{alpha w1/C} - e^{alpha a/C}) + p (w1 - a), G = (L - p)/e
  const double growth = (L - p) * std::exp(a / scale - 1.0) * std::expm1((w1 - a) / scale);
  return flat + scale * growth + p * (w1 - a);
}

}  // namespace

double ExponentialPricing::price(Slot t, double w) const {
  return exp_price(params_, t, w);
}

double ExponentialPricing::inverse(Slot t, double level) const {
  return exp_inverse(params_, t, level);
}

double ExponentialPricing::integral(Slot t, double w0, double w1) const {
  return exp_integral(params_, t, w0, w1);
}

PriceQuote phi(const PricingParams& params, Slot t, double w) {
  if (w > params.capacity) return PriceQuote::infinite();
  return PriceQuote::of(exp_price(params, t, w));
}

double phi_inverse(const PricingParams& params, Slot t, double price) {
  if (price < params.bounds.L) {
    throw Error(ErrorCode::kPriceBelowL, "price " + std::to_string(price) +
                                             " below L " +
                                             std::to_string(params.bounds.L));
  }
  return exp_inverse(params, t, price);
}

double pseudo_cost(const PricingParams& params, Slot t, double w0, double w1) {
  if (w1 > params.capacity) {
    throw Error(ErrorCode::kCapacityExceeded,
                "utilization " + std::to_string(w1) + " above capacity");
  }
  if (w0 < 0.0 || w0 > w1) {
    throw Error(ErrorCode::kInvalidConfig, "pseudo_cost needs 0 <= w0 <= w1");
  }
  return exp_integral(params, t, w0, w1);
}

// ---------------------------------------------------------------------------
// Linear ramp
// ---------------------------------------------------------------------------

double LinearRampPricing::price(Slot t, double w) const {
  const double p = prices_[static_cast<std::size_t>(t)];
  return p + (w / capacity_) * (top_ - p);
}

double LinearRampPricing::inverse(Slot t, double level) const {
  const double p = prices_[static_cast<std::size_t>(t)];
  if (level < p) return 0.0;
  return std::clamp(capacity_ * (level - p) / (top_ - p), 0.0, capacity_);
}

double LinearRampPricing::integral(Slot t, double w0, double w1) const {
  const double p = prices_[static_cast<std::size_t>(t)];
  return p * (w1 - w0) + (top_ - p) / (2.0 * capacity_) * (w1 * w1 - w0 * w0);
}

// ---------------------------------------------------------------------------
// Sufficient-condition check
// ---------------------------------------------------------------------------

SufficientConditionReport check_sufficient_condition(const PricingFunction& fn,
                                                     const PricingParams& params,
                                                     int grid_points) {
  if (grid_points < 2) {
    throw Error(ErrorCode::kInvalidConfig, "grid_points must be at least 2");
  }
  SufficientConditionReport report;
  report.worst_ode_margin = std::numeric_limits<double>::infinity();
  report.worst_end_margin = std::numeric_limits<double>::infinity();

  const double C = params.capacity;
  const double alpha = params.alpha;
  const double beta = params.beta;
  const double L = params.bounds.L;
  const double h = C * 1e-6;

  // One representative slot per distinct energy price.
  std::set<double> seen;
  for (Slot t = 0; t < static_cast<Slot>(params.prices.size()); ++t) {
    const double p = params.price_at(t);
    if (!seen.insert(p).second) continue;

    auto f = [&](double w) { return fn.price(t, w); };
    for (int i = 0; i < grid_points; ++i) {
      const double w = beta + (C - beta) * i / (grid_points - 1);
      double slope;
      if (w - h < beta) {
        slope = (-3.0 * f(w) + 4.0 * f(w + h) - f(w + 2.0 * h)) / (2.0 * h);
      } else if (w + h > C) {
        slope = (3.0 * f(w) - 4.0 * f(w - h) + f(w - 2.0 * h)) / (2.0 * h);
      } else {
        slope = (f(w + h) - f(w - h)) / (2.0 * h);
      }
      const double lhs = alpha * f(w) - C * slope;
      const double margin = lhs - alpha * p;
      report.worst_ode_margin = std::min(report.worst_ode_margin, margin);
      report.worst_ode_residual = std::max(report.worst_ode_residual, std::abs(margin));
    }

    const double start_error = std::abs(f(beta) - L);
    report.start_error = std::max(report.start_error, start_error);
    report.worst_end_margin =
        std::min(report.worst_end_margin, f(C) - params.boundary_price());
  }

  report.ode_ok = report.worst_ode_margin >= -kOdeTolerance;
  report.start_ok = report.start_error <= 1e-9 * L;
  report.end_ok = report.worst_end_margin >= -1e-12 * params.boundary_price();
  return report;
}

SufficientConditionReport check_sufficient_condition(const PricingParams& params,
                                                     int grid_points) {
  return check_sufficient_condition(ExponentialPricing(params), params, grid_points);
}

}  // namespace evcharge
