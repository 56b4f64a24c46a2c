#include "evcharge/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evcharge/error.hpp"

namespace evcharge {

double CandidateSchedule::total() const {
  double s = 0.0;
  for (const auto& e : y) s += e.energy;
  return s;
}

namespace {

constexpr int kMaxBisection = 200;

std::vector<double> residual_caps(const UtilizationProfile& w, const EVRequest& req,
                                  double capacity) {
  std::vector<double> caps;
  caps.reserve(static_cast<std::size_t>(req.window()));
  for (Slot t = req.arrival; t < req.departure; ++t) {
    caps.push_back(std::max(0.0, std::min(req.rate, capacity - w[t])));
  }
  return caps;
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// delta with sum_i min(delta, caps_i) == target; requires sum(caps) >= target.
double equal_increment(std::vector<double> caps, double target) {
  std::sort(caps.begin(), caps.end());
  double remaining = target;
  std::size_t left = caps.size();
  for (double c : caps) {
    if (c * static_cast<double>(left) >= remaining) break;
    remaining -= c;
    --left;
  }
  return left == 0 ? caps.back() : remaining / static_cast<double>(left);
}

// Pushes the sub-tolerance remainder onto slots that already carry energy
// (or takes it back from them), keeping every y inside [0, cap]. Idle slots are
// touched only when the active ones cannot absorb it, since a stray 1e-13 on a
// slot priced above the water level breaks stationarity.
void settle(std::vector<double>& y, const std::vector<double>& caps, double target) {
  double diff = target - sum(y);
  for (bool active_only : {true, false}) {
    for (std::size_t i = 0; i < y.size() && diff != 0.0; ++i) {
      if (active_only && !(y[i] > 0.0)) continue;
      const double next = std::clamp(y[i] + diff, 0.0, caps[i]);
      diff -= next - y[i];
      y[i] = next;
    }
  }
}

}  // namespace

bool residual_feasible(const UtilizationProfile& w, const EVRequest& req, double capacity) {
  return sum(residual_caps(w, req, capacity)) >= req.energy * (1.0 - kDemandTolerance);
}

CandidateSchedule schedule_candidate(const PricingFunction& fn,
                                     const UtilizationProfile& w,
                                     const EVRequest& req) {
  const double C = fn.capacity();
  const double E = req.energy;
  const auto caps = residual_caps(w, req, C);
  const std::size_t n = caps.size();
  const double total_cap = sum(caps);

  CandidateSchedule cand;
  cand.y.resize(n);
  cand.sigma_hat.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) cand.y[i].slot = req.arrival + static_cast<Slot>(i);

  if (total_cap < E * (1.0 - kDemandTolerance)) {
    cand.feasible = false;
    cand.capacity_pressed = true;
    return cand;
  }
  cand.feasible = true;

  auto slot = [&](std::size_t i) { return req.arrival + static_cast<Slot>(i); };
  auto fill = [&](double mu, std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = caps[i] > 0.0
                 ? std::clamp(fn.inverse(slot(i), mu) - w[slot(i)], 0.0, caps[i])
                 : 0.0;
      s += y[i];
    }
    return s;
  };

  std::vector<double> y(n, 0.0);
  double mu = 0.0;
  bool have_mu = false;

  const auto flat = fn.flat_price();
  std::vector<double> flat_caps(n, 0.0);
  if (flat) {
    for (std::size_t i = 0; i < n; ++i) {
      flat_caps[i] = std::min(caps[i], std::max(0.0, fn.flat_end(slot(i)) - w[slot(i)]));
    }
  }

  if (total_cap <= E * (1.0 + kDemandTolerance)) {
    // Every slot must run at its cap.
    y = caps;
  } else if (flat && sum(flat_caps) >= E) {
    const double delta = equal_increment(flat_caps, E);
    for (std::size_t i = 0; i < n; ++i) y[i] = std::min(delta, flat_caps[i]);
    mu = *flat;
    have_mu = true;
  } else {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (caps[i] <= 0.0) continue;
      lo = std::min(lo, fn.price(slot(i), w[slot(i)]));
      hi = std::max(hi, fn.price(slot(i), w[slot(i)] + caps[i]));
    }
    if (flat) lo = std::max(lo, *flat);

    // Bisect for the smallest level whose fill meets E: rate-capped slots make
    // the fill flat over whole price ranges, and the lowest such level is the
    // one that leaves sigma at zero on slots that are not strictly cheaper.
    std::vector<double> y_lo(n), y_hi(n), y_mid(n);
    double s_lo = fill(lo, y_lo);
    double s_hi = fill(hi, y_hi);
    const double target = E * (1.0 - 1e-12);
    if (s_lo >= target) {
      y = y_lo;
      mu = lo;
    } else {
      for (int it = 0; it < kMaxBisection; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi) || hi - lo <= 1e-14 * std::abs(hi)) break;
        const double s = fill(mid, y_mid);
        if (s >= target) {
          hi = mid;
          s_hi = s;
          y_hi = y_mid;
        } else {
          lo = mid;
          s_lo = s;
          y_lo = y_mid;
        }
      }
      // Interpolate inside the final bracket so the total lands on E.
      const double f = s_hi > s_lo ? std::clamp((E - s_lo) / (s_hi - s_lo), 0.0, 1.0) : 1.0;
      for (std::size_t i = 0; i < n; ++i) y[i] = y_lo[i] + f * (y_hi[i] - y_lo[i]);
      mu = hi;
    }
    have_mu = true;
  }

  settle(y, caps, E);

  if (!have_mu) {
    mu = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] > 0.0) mu = std::max(mu, fn.price(slot(i), std::min(C, w[slot(i)] + y[i])));
    }
  }
  cand.mu_hat = mu;

  for (std::size_t i = 0; i < n; ++i) {
    const Slot t = slot(i);
    cand.y[i].energy = y[i];
    if (y[i] > 0.0) {
      cand.sigma_hat[i] = std::max(mu - fn.price(t, std::min(C, w[t] + y[i])), 0.0);
    }
    const bool clamped_by_capacity = C - w[t] < req.rate && y[i] >= caps[i] * (1.0 - 1e-12);
    if (clamped_by_capacity) {
      const double top = fn.price(t, C);
      if (mu > top + 1e-9 * std::max(1.0, std::abs(top))) cand.capacity_pressed = true;
    }
  }
  return cand;
}

CandidateSchedule schedule_candidate(const PricingParams& params,
                                     const UtilizationProfile& w,
                                     const EVRequest& req) {
  return schedule_candidate(ExponentialPricing(params), w, req);
}

double posted_price(const PricingFunction& fn, const UtilizationProfile& w,
                    const CandidateSchedule& cand) {
  if (!cand.feasible) {
    throw Error(ErrorCode::kInfeasibleCandidate, "no feasible candidate schedule");
  }
  double xi = 0.0;
  for (const auto& e : cand.y) {
    if (e.energy > 0.0) {
      xi += fn.price(e.slot, std::min(fn.capacity(), w[e.slot] + e.energy)) * e.energy;
    }
  }
  return xi;
}

double posted_price(const PricingParams& params, const UtilizationProfile& w,
                    const CandidateSchedule& cand) {
  return posted_price(ExponentialPricing(params), w, cand);
}

double candidate_pseudo_cost(const PricingFunction& fn, const UtilizationProfile& w,
                             const std::vector<SlotEnergy>& y) {
  double cost = 0.0;
  for (const auto& e : y) {
    cost += fn.integral(e.slot, w[e.slot], std::min(fn.capacity(), w[e.slot] + e.energy));
  }
  return cost;
}

BruteForceResult brute_force_min_cost(const PricingParams& params,
                                      const UtilizationProfile& w,
                                      const EVRequest& req, int grid) {
  if (req.window() > kBruteForceMaxSlots) {
    throw Error(ErrorCode::kTooLarge, "brute force limited to " +
                                          std::to_string(kBruteForceMaxSlots) + " slots");
  }
  if (grid < 1 || grid > kBruteForceMaxGrid) {
    throw Error(ErrorCode::kTooLarge, "grid must be in [1, " +
                                          std::to_string(kBruteForceMaxGrid) + "]");
  }
  const ExponentialPricing fn(params);
  const double C = params.capacity;
  const double q = req.energy / grid;
  const auto caps = residual_caps(w, req, C);
  const std::size_t n = caps.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // best[j][s]: least cost of placing s units on the first j slots.
  std::vector<std::vector<double>> best(n + 1, std::vector<double>(grid + 1, kInf));
  std::vector<std::vector<int>> choice(n + 1, std::vector<int>(grid + 1, 0));
  best[0][0] = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Slot t = req.arrival + static_cast<Slot>(j);
    const int kmax = std::min(grid, static_cast<int>(std::floor(caps[j] / q + 1e-9)));
    std::vector<double> unit_cost(static_cast<std::size_t>(kmax) + 1);
    for (int k = 0; k <= kmax; ++k) {
      unit_cost[k] = fn.integral(t, w[t], std::min(C, w[t] + k * q));
    }
    for (int s = 0; s <= grid; ++s) {
      if (best[j][s] == kInf) continue;
      for (int k = 0; k <= kmax && s + k <= grid; ++k) {
        const double c = best[j][s] + unit_cost[k];
        if (c < best[j + 1][s + k]) {
          best[j + 1][s + k] = c;
          choice[j + 1][s + k] = k;
        }
      }
    }
  }

  BruteForceResult out;
  if (best[n][grid] == kInf) return out;
  out.feasible = true;
  out.cost = best[n][grid];
  out.y.resize(n);
  int s = grid;
  for (std::size_t j = n; j > 0; --j) {
    const int k = choice[j][s];
    out.y[j - 1] = {req.arrival + static_cast<Slot>(j - 1), k * q};
    s -= k;
  }
  return out;
}

}  // namespace evcharge
