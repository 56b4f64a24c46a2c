#pragma once

#include <optional>
#include <vector>

#include "evcharge/model.hpp"

namespace evcharge {

struct FlowSchedule {
  bool feasible = false;
  double cost = 0.0;
  ChargingSchedule schedule;
  // Optimality witness: the final residual network has no negative cycle.
  bool no_negative_cycle = false;
};

// Min-cost schedule for a fixed admitted set: source -> EV (E_n) -> slot
// (R_n, t in window) -> sink (C, cost p_t), in integer units of epsilon.
// E_n, R_n and C must be multiples of epsilon (kQuantizationError otherwise).
FlowSchedule min_cost_schedule_flow(const StationConfig& config,
                                    const std::vector<EVRequest>& admitted,
                                    double epsilon);

struct OracleResult {
  double welfare = 0.0;
  std::vector<bool> admissions;
  ChargingSchedule schedule;
  double epsilon = 0.0;
  long nodes = 0;
};

inline constexpr int kOfflineOptMaxN = 24;
inline constexpr int kEnumerateMaxN = 12;

// E_min / 100.
double default_epsilon(const Instance& instance);

// Rounds E, R and C to the epsilon lattice (E stays within R times the window).
Instance quantize(const Instance& instance, double epsilon);

// Exact welfare optimum of the quantized instance by branch-and-bound over
// admissions. Throws kTooLarge above kOfflineOptMaxN requests.
OracleResult offline_opt(const Instance& instance,
                         std::optional<double> epsilon = std::nullopt);

// Brute force over all admission vectors; throws kTooLarge above
// kEnumerateMaxN requests.
double enumerate_opt(const Instance& instance,
                     std::optional<double> epsilon = std::nullopt);

}  // namespace evcharge
