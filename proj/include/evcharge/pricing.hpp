#pragma once

#include <optional>
#include <vector>

#include "evcharge/model.hpp"

namespace evcharge {

// Parameters of the three-segment exponential pricing function.
struct PricingParams {
  Bounds bounds;
  double capacity = 0.0;
  std::vector<double> prices;
  // theta = (U Dmax / Dmin) / (L - pmax), alpha = 1 + 2 ln theta, beta = C / alpha.
  double theta = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  // U * Dmax / Dmin: the price the curve must reach at full capacity.
  double boundary_price() const {
    return bounds.U * static_cast<double>(bounds.Dmax) / bounds.Dmin;
  }
  double price_at(Slot t) const { return prices[static_cast<std::size_t>(t)]; }

  friend bool operator==(const PricingParams&, const PricingParams&) = default;
};

// A per-unit price. `finite == false` stands for the infinite segment above
// capacity; `value` is meaningless in that case.
struct PriceQuote {
  bool finite = true;
  double value = 0.0;

  static PriceQuote of(double v) { return {true, v}; }
  static PriceQuote infinite() { return {false, 0.0}; }

  friend bool operator==(const PriceQuote&, const PriceQuote&) = default;
};

PricingParams make_params(const Bounds& bounds, const StationConfig& config);

// phi_t(w): L on [0, beta), ((L - p_t)/e) e^{alpha w / C} + p_t on [beta, C],
// infinite above C.
PriceQuote phi(const PricingParams& params, Slot t, double w);

// Right inverse on [L, phi_t(C)]; returns beta at price L.
double phi_inverse(const PricingParams& params, Slot t, double price);

// Closed-form integral of phi_t over [w0, w1].
double pseudo_cost(const PricingParams& params, Slot t, double w0, double w1);

// ---------------------------------------------------------------------------
// Pricing-function interface shared by the scheduler and the online policies.
// ---------------------------------------------------------------------------
class PricingFunction {
 public:
  virtual ~PricingFunction() = default;

  virtual double capacity() const = 0;

  // Finite price for 0 <= w <= C.
  virtual double price(Slot t, double w) const = 0;

  // Largest w in [0, C] with price(t, w) <= level; 0 if no such w exists.
  virtual double inverse(Slot t, double level) const = 0;

  // Integral of price(t, .) over [w0, w1], 0 <= w0 <= w1 <= C.
  virtual double integral(Slot t, double w0, double w1) const = 0;

  // A constant segment [0, flat_end(t)) shared by every slot at the same price.
  virtual std::optional<double> flat_price() const { return std::nullopt; }
  virtual double flat_end(Slot) const { return 0.0; }

  PriceQuote quote(Slot t, double w) const {
    if (w > capacity()) return PriceQuote::infinite();
    return PriceQuote::of(price(t, w));
  }
};

// The optimal exponential curve built from PricingParams.
class ExponentialPricing final : public PricingFunction {
 public:
  explicit ExponentialPricing(PricingParams params) : params_(std::move(params)) {}

  const PricingParams& params() const { return params_; }

  double capacity() const override { return params_.capacity; }
  double price(Slot t, double w) const override;
  double inverse(Slot t, double level) const override;
  double integral(Slot t, double w0, double w1) const override;
  std::optional<double> flat_price() const override { return params_.bounds.L; }
  double flat_end(Slot) const override { return params_.beta; }

 private:
  PricingParams params_;
};

// Linear ramp from p_t at w = 0 to `top` at w = C.
class LinearRampPricing final : public PricingFunction {
 public:
  LinearRampPricing(double capacity, std::vector<double> prices, double top)
      : capacity_(capacity), prices_(std::move(prices)), top_(top) {}

  double capacity() const override { return capacity_; }
  double price(Slot t, double w) const override;
  double inverse(Slot t, double level) const override;
  double integral(Slot t, double w0, double w1) const override;

 private:
  double capacity_;
  std::vector<double> prices_;
  double top_;
};

// Constant price on [0, C].
class FlatPricing final : public PricingFunction {
 public:
  FlatPricing(double capacity, double level) : capacity_(capacity), level_(level) {}

  double capacity() const override { return capacity_; }
  double price(Slot, double) const override { return level_; }
  double inverse(Slot, double level) const override {
    return level >= level_ ? capacity_ : 0.0;
  }
  double integral(Slot, double w0, double w1) const override {
    return level_ * (w1 - w0);
  }
  std::optional<double> flat_price() const override { return level_; }
  double flat_end(Slot) const override { return capacity_; }

 private:
  double capacity_;
  double level_;
};

struct SufficientConditionReport {
  // alpha phi(w) - C phi'(w) - alpha p_t >= -tol on the grid.
  bool ode_ok = true;
  // phi(beta) == L.
  bool start_ok = true;
  // phi(C) >= U Dmax / Dmin.
  bool end_ok = true;
  double worst_ode_margin = 0.0;
  double worst_ode_residual = 0.0;
  double start_error = 0.0;
  double worst_end_margin = 0.0;

  bool passed() const { return ode_ok && start_ok && end_ok; }
};

inline constexpr double kOdeTolerance = 1e-5;

// Checks the sufficient condition on [beta, C] for every distinct slot price.
// phi' uses central differences with h = C * 1e-6 (one-sided at the ends).
SufficientConditionReport check_sufficient_condition(const PricingFunction& fn,
                                                     const PricingParams& params,
                                                     int grid_points);
SufficientConditionReport check_sufficient_condition(const PricingParams& params,
                                                     int grid_points);

}  // namespace evcharge
