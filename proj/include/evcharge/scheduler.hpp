#pragma once

#include <vector>

#include "evcharge/model.hpp"
#include "evcharge/pricing.hpp"

namespace evcharge {

struct CandidateSchedule {
  // One entry per slot of the request window, in slot order; zero allocations
  // are kept so sigma_hat lines up with y.
  std::vector<SlotEnergy> y;
  double mu_hat = 0.0;
  std::vector<double> sigma_hat;
  bool feasible = false;
  // The request needed more than the residual capacity of some slot: either
  // no feasible schedule exists, or the water level sits above phi_t(C) on a
  // slot clamped at C.
  bool capacity_pressed = false;

  double total() const;
};

// Demand tolerance: schedules meet E within this fraction of E.
inline constexpr double kDemandTolerance = 1e-9;

bool residual_feasible(const UtilizationProfile& w, const EVRequest& req, double capacity);

// Water-filling solution of min sum_t integral_{w_t}^{w_t + y_t} price(t, u) du
// subject to sum_t y_t = E, 0 <= y_t <= min(R, C - w_t).
CandidateSchedule schedule_candidate(const PricingFunction& fn,
                                     const UtilizationProfile& w,
                                     const EVRequest& req);
CandidateSchedule schedule_candidate(const PricingParams& params,
                                     const UtilizationProfile& w,
                                     const EVRequest& req);

// sum_t price(t, w_t + y_t) * y_t. Throws kInfeasibleCandidate.
double posted_price(const PricingFunction& fn, const UtilizationProfile& w,
                    const CandidateSchedule& cand);
double posted_price(const PricingParams& params, const UtilizationProfile& w,
                    const CandidateSchedule& cand);

// sum_t integral of price over [w_t, w_t + y_t].
double candidate_pseudo_cost(const PricingFunction& fn, const UtilizationProfile& w,
                             const std::vector<SlotEnergy>& y);

struct BruteForceResult {
  bool feasible = false;
  double cost = 0.0;
  std::vector<SlotEnergy> y;
};

inline constexpr int kBruteForceMaxSlots = 6;
inline constexpr int kBruteForceMaxGrid = 1000;

// Exact minimum over allocations on the E/grid lattice, by dynamic programming
// over slots. Throws kTooLarge beyond the limits above.
BruteForceResult brute_force_min_cost(const PricingParams& params,
                                      const UtilizationProfile& w,
                                      const EVRequest& req, int grid);

}  // namespace evcharge
