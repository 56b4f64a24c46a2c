#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evcharge/model.hpp"
#include "evcharge/pricing.hpp"
#include "evcharge/scheduler.hpp"

namespace evcharge {

// Everything the certifier needs to know about one arrival.
struct TraceEvent {
  int id = 0;
  bool feasible = false;
  bool admitted = false;
  // Posted price; nullopt when the candidate was infeasible.
  std::optional<double> price;
  double mu_hat = 0.0;
  bool capacity_pressed = false;
  // Window slots in order, with the candidate allocation even when rejected.
  std::vector<SlotEnergy> y;
  std::vector<double> sigma_hat;
  std::vector<double> w_before;
  std::vector<double> w_after;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct Trace {
  Instance instance;
  PricingParams params;
  std::vector<TraceEvent> events;

  friend bool operator==(const Trace&, const Trace&) = default;
};

struct TrialOutcome {
  std::string policy;
  std::vector<bool> admissions;
  std::vector<PriceQuote> prices;
  ChargingSchedule schedule;
  double welfare = 0.0;
  UtilizationProfile utilization;
  // Empty unless tracing was requested.
  std::vector<TraceEvent> trace;

  int admitted_count() const;
};

struct Decision {
  bool admit = false;
  PriceQuote price;
  CandidateSchedule candidate;
};

// One online policy. step() sees only the current utilization and the current
// request; the driver commits the allocation when the policy admits.
class OnlinePolicy {
 public:
  virtual ~OnlinePolicy() = default;
  virtual std::string name() const = 0;
  virtual Decision step(const UtilizationProfile& w, const EVRequest& req) const = 0;
};

// Posts the water-filling price of `fn` and admits when v >= price.
class PostedPricePolicy final : public OnlinePolicy {
 public:
  PostedPricePolicy(std::string name, std::shared_ptr<const PricingFunction> fn)
      : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  Decision step(const UtilizationProfile& w, const EVRequest& req) const override;

 private:
  std::string name_;
  std::shared_ptr<const PricingFunction> fn_;
};

// First-come-first-served, water-filling on utilization, price 0.
class UtilizationBalancePolicy final : public OnlinePolicy {
 public:
  explicit UtilizationBalancePolicy(double capacity);
  std::string name() const override { return "uboa"; }
  Decision step(const UtilizationProfile& w, const EVRequest& req) const override;

 private:
  double capacity_;
};

// First-come-first-served, cheapest slots first, price 0.
class CheapestSlotPolicy final : public OnlinePolicy {
 public:
  CheapestSlotPolicy(double capacity, std::vector<double> prices)
      : capacity_(capacity), prices_(std::move(prices)) {}
  std::string name() const override { return "pboa"; }
  Decision step(const UtilizationProfile& w, const EVRequest& req) const override;

 private:
  double capacity_;
  std::vector<double> prices_;
};

// Relative slack under which v and the posted price count as a tie.
inline constexpr double kTieTolerance = 1e-12;

TrialOutcome run_policy(const Instance& instance, const OnlinePolicy& policy,
                        bool trace = false);

// Throws kParamsMismatch if params were not built from this instance.
TrialOutcome run_opa(const Instance& instance, const PricingParams& params,
                     bool trace = false);
TrialOutcome run_uboa(const Instance& instance);
TrialOutcome run_pboa(const Instance& instance);
// Linear ramp p_t + (w/C)(U Dmax/Dmin - p_t) through the OPA loop.
TrialOutcome run_ommp(const Instance& instance, const PricingParams& params);

// Recomputes sum v x - sum p y from the outcome; throws kInconsistentOutcome
// when the schedule breaks a constraint of the welfare problem.
double welfare(const TrialOutcome& outcome, const Instance& instance);

}  // namespace evcharge
