#include "evcharge/online.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evcharge/error.hpp"

namespace evcharge {

namespace {

// Price equal to the slot's utilization: water-filling on it levels the
// least-utilized slots first.
class UtilizationPricing final : public PricingFunction {
 public:
  explicit UtilizationPricing(double capacity) : capacity_(capacity) {}
  double capacity() const override { return capacity_; }
  double price(Slot, double w) const override { return w; }
  double inverse(Slot, double level) const override {
    return std::clamp(level, 0.0, capacity_);
  }
  double integral(Slot, double w0, double w1) const override {
    return 0.5 * (w1 * w1 - w0 * w0);
  }

 private:
  double capacity_;
};

bool admits(double value, double price) {
  return value >= price - kTieTolerance * std::max(1.0, std::abs(price));
}

}  // namespace

int TrialOutcome::admitted_count() const {
  return static_cast<int>(std::count(admissions.begin(), admissions.end(), true));
}

Decision PostedPricePolicy::step(const UtilizationProfile& w, const EVRequest& req) const {
  Decision d;
  d.candidate = schedule_candidate(*fn_, w, req);
  if (!d.candidate.feasible) {
    d.price = PriceQuote::infinite();
    return d;
  }
  const double xi = posted_price(*fn_, w, d.candidate);
  d.price = PriceQuote::of(xi);
  d.admit = admits(req.value, xi);
  return d;
}

UtilizationBalancePolicy::UtilizationBalancePolicy(double capacity) : capacity_(capacity) {}

Decision UtilizationBalancePolicy::step(const UtilizationProfile& w,
                                        const EVRequest& req) const {
  Decision d;
  d.price = PriceQuote::of(0.0);
  if (!residual_feasible(w, req, capacity_)) {
    d.candidate.feasible = false;
    return d;
  }
  d.candidate = schedule_candidate(UtilizationPricing(capacity_), w, req);
  d.admit = d.candidate.feasible;
  return d;
}

Decision CheapestSlotPolicy::step(const UtilizationProfile& w, const EVRequest& req) const {
  Decision d;
  d.price = PriceQuote::of(0.0);
  if (!residual_feasible(w, req, capacity_)) return d;

  std::vector<Slot> order(static_cast<std::size_t>(req.window()));
  std::iota(order.begin(), order.end(), req.arrival);
  std::stable_sort(order.begin(), order.end(), [&](Slot a, Slot b) {
    return prices_[static_cast<std::size_t>(a)] < prices_[static_cast<std::size_t>(b)];
  });

  auto& cand = d.candidate;
  cand.feasible = true;
  cand.y.resize(order.size());
  cand.sigma_hat.assign(order.size(), 0.0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    cand.y[i].slot = req.arrival + static_cast<Slot>(i);
  }
  double remaining = req.energy;
  for (Slot t : order) {
    if (remaining <= 0.0) break;
    const double take =
        std::min({req.rate, std::max(0.0, capacity_ - w[t]), remaining});
    cand.y[static_cast<std::size_t>(t - req.arrival)].energy = take;
    remaining -= take;
  }
  d.admit = true;
  return d;
}

TrialOutcome run_policy(const Instance& instance, const OnlinePolicy& policy, bool trace) {
  const auto& cfg = instance.config;
  TrialOutcome out;
  out.policy = policy.name();
  out.utilization = UtilizationProfile(cfg.horizon, cfg.capacity);
  auto& w = out.utilization;
  out.admissions.reserve(instance.requests.size());
  out.prices.reserve(instance.requests.size());

  double value = 0.0;
  double cost = 0.0;
  for (const auto& req : instance.requests) {
    Decision d = policy.step(w, req);
    out.admissions.push_back(d.admit);
    out.prices.push_back(d.price);

    TraceEvent ev;
    if (trace) {
      ev.id = req.id;
      ev.feasible = d.candidate.feasible;
      ev.admitted = d.admit;
      if (d.price.finite) ev.price = d.price.value;
      ev.mu_hat = d.candidate.mu_hat;
      ev.capacity_pressed = d.candidate.capacity_pressed;
      ev.y = d.candidate.y;
      ev.sigma_hat = d.candidate.sigma_hat;
      for (Slot t = req.arrival; t < req.departure; ++t) ev.w_before.push_back(w[t]);
    }

    if (d.admit) {
      auto& alloc = out.schedule[req.id];
      for (const auto& e : d.candidate.y) {
        if (e.energy <= 0.0) continue;
        alloc.push_back(e);
        w.add(e.slot, e.energy);
        cost += cfg.prices[static_cast<std::size_t>(e.slot)] * e.energy;
      }
      value += req.value;
    }

    if (trace) {
      for (Slot t = req.arrival; t < req.departure; ++t) ev.w_after.push_back(w[t]);
      out.trace.push_back(std::move(ev));
    }
  }
  out.welfare = value - cost;
  return out;
}

TrialOutcome run_opa(const Instance& instance, const PricingParams& params, bool trace) {
  const auto& cfg = instance.config;
  if (!(params.bounds == instance.bounds) || params.capacity != cfg.capacity ||
      params.prices != cfg.prices) {
    throw Error(ErrorCode::kParamsMismatch,
                "pricing parameters were not built from this instance");
  }
  const PostedPricePolicy opa("opa", std::make_shared<ExponentialPricing>(params));
  return run_policy(instance, opa, trace);
}

TrialOutcome run_uboa(const Instance& instance) {
  return run_policy(instance, UtilizationBalancePolicy(instance.config.capacity));
}

TrialOutcome run_pboa(const Instance& instance) {
  return run_policy(instance,
                    CheapestSlotPolicy(instance.config.capacity, instance.config.prices));
}

TrialOutcome run_ommp(const Instance& instance, const PricingParams& params) {
  const PostedPricePolicy ommp(
      "ommp", std::make_shared<LinearRampPricing>(params.capacity, params.prices,
                                                  params.boundary_price()));
  return run_policy(instance, ommp);
}

double welfare(const TrialOutcome& outcome, const Instance& instance) {
  const auto& reqs = instance.requests;
  if (outcome.admissions.size() != reqs.size()) {
    throw Error(ErrorCode::kInconsistentOutcome, "admission vector has wrong length");
  }
  const auto& cfg = instance.config;
  std::vector<double> load(static_cast<std::size_t>(cfg.horizon), 0.0);
  double value = 0.0;
  double cost = 0.0;
  for (std::size_t n = 0; n < reqs.size(); ++n) {
    const auto& r = reqs[n];
    const auto it = outcome.schedule.find(r.id);
    const bool scheduled = it != outcome.schedule.end() && !it->second.empty();
    if (!outcome.admissions[n]) {
      if (scheduled) {
        throw Error(ErrorCode::kInconsistentOutcome,
                    "rejected EV " + std::to_string(r.id) + " has an allocation");
      }
      continue;
    }
    double delivered = 0.0;
    if (scheduled) {
      for (const auto& e : it->second) {
        if (e.slot < r.arrival || e.slot >= r.departure) {
          throw Error(ErrorCode::kInconsistentOutcome,
                      "EV " + std::to_string(r.id) + " charged outside its window");
        }
        if (e.energy < 0.0 || e.energy > r.rate * (1.0 + kDemandTolerance)) {
          throw Error(ErrorCode::kInconsistentOutcome,
                      "EV " + std::to_string(r.id) + " breaks its rate limit");
        }
        delivered += e.energy;
        load[static_cast<std::size_t>(e.slot)] += e.energy;
        cost += cfg.prices[static_cast<std::size_t>(e.slot)] * e.energy;
      }
    }
    if (std::abs(delivered - r.energy) > kDemandTolerance * r.energy) {
      throw Error(ErrorCode::kInconsistentOutcome,
                  "admitted EV " + std::to_string(r.id) + " receives " +
                      std::to_string(delivered) + " of " + std::to_string(r.energy));
    }
    value += r.value;
  }
  for (std::size_t t = 0; t < load.size(); ++t) {
    if (load[t] > cfg.capacity * (1.0 + kDemandTolerance)) {
      throw Error(ErrorCode::kInconsistentOutcome,
                  "slot " + std::to_string(t) + " exceeds capacity");
    }
  }
  return value - cost;
}

}  // namespace evcharge
