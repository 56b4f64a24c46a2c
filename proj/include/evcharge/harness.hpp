#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evcharge/certify.hpp"
#include "evcharge/model.hpp"
#include "evcharge/online.hpp"

namespace evcharge {

enum class PolicyKind { kOpa, kUboa, kPboa, kOmmp };

std::string_view to_string(PolicyKind p);
// Comma-separated names ("opa,uboa"); throws kInvalidConfig on unknown names.
std::vector<PolicyKind> parse_policies(const std::string& list);
const std::vector<PolicyKind>& all_policies();

TrialOutcome run_policy(PolicyKind policy, const Instance& instance, bool trace = false);

// How values change between trials of one instance.
enum class ValueRedraw { kNone, kUniform, kSessionModel };

struct TrialConfig {
  Instance instance;
  std::string instance_id = "instance";
  std::vector<PolicyKind> policies = all_policies();
  int trials = 1;
  ValueRedraw redraw = ValueRedraw::kUniform;
  // Skew of the kUniform redraw (1 keeps densities uniform on [L, U]).
  double value_skew = 1.0;
  // Used by kSessionModel.
  ValueModel value_model;
  bool exact_oracle = true;
  bool certify = false;
  std::optional<double> epsilon;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct PolicyResult {
  PolicyKind policy = PolicyKind::kOpa;
  double welfare = 0.0;
  // oracle / welfare; +inf when the policy earns nothing.
  std::optional<double> ratio;

  bool infinite() const { return ratio && std::isinf(*ratio); }
};

struct TrialResult {
  std::string instance_id;
  int trial = 0;
  std::vector<PolicyResult> policies;
  std::optional<double> oracle_welfare;
  std::optional<Classification> classification;
  std::optional<bool> certified;
  // Non-empty when the trial failed; other fields are then partial.
  std::string error;
};

// Empirical profit ratio with the zero-welfare sentinel.
double profit_ratio(double oracle_welfare, double policy_welfare);

std::vector<TrialResult> run_trials(const TrialConfig& cfg);

// Instance of trial `trial` under the config's value-redraw rule.
Instance trial_instance(const TrialConfig& cfg, int trial);

// Number of slots covered by at least one availability window.
int busy_slots(const Instance& instance);

// Sets C = level * sum(E) / busy_slots, rounded to a multiple of `quantum`
// (at least one quantum).
Instance with_congestion(const Instance& instance, double level, double quantum);

struct CdfRow {
  double level = 0.0;
  PolicyKind policy = PolicyKind::kOpa;
  double ratio = 0.0;
};

struct CongestionConfig {
  std::vector<double> levels;
  TrialConfig trial;
  // Capacity lattice; defaults to the trial epsilon, else E_min / 100.
  std::optional<double> capacity_quantum;
};

// One row per (level, source, trial, policy), ratios sorted per (level, policy).
std::vector<CdfRow> congestion_study(const std::vector<Instance>& sources,
                                     const CongestionConfig& cfg);

// Fraction of finite-or-infinite ratios below `threshold` for one level/policy.
double fraction_below(const std::vector<CdfRow>& rows, double level, PolicyKind policy,
                      double threshold);
double mean_ratio(const std::vector<CdfRow>& rows, double level, PolicyKind policy);

enum class SweepAxis { kCapacity, kRho, kDelta, kPmax };

std::string_view to_string(SweepAxis a);
SweepAxis parse_axis(const std::string& name);

inline constexpr double kSweepPmaxGuard = 0.95;

struct SweepConfig {
  SweepAxis axis = SweepAxis::kRho;
  std::vector<double> grid;
  GeneratorConfig generator;
  // Fraction of mean busy-slot demand used as capacity (the capacity axis
  // overrides it).
  double congestion = 0.3;
  int instances = 4;
  TrialConfig trial;
};

struct SweepRow {
  SweepAxis axis = SweepAxis::kRho;
  double value = 0.0;
  PolicyKind policy = PolicyKind::kOpa;
  // nullopt marks a skipped grid point.
  std::optional<double> mean_ratio;
  int n_trials = 0;
  int n_inf = 0;
  std::string skipped_reason;
};

std::vector<SweepRow> parameter_sweep(const SweepConfig& cfg);

// Synthetic defaults shared by the CLI and the experiments.
GeneratorConfig default_generator();

void write_trial_csv(std::ostream& out, const std::vector<TrialResult>& rows);
void write_cdf_csv(std::ostream& out, const std::vector<CdfRow>& rows);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace evcharge
