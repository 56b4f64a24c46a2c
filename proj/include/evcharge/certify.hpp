#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "evcharge/online.hpp"
#include "evcharge/pricing.hpp"

namespace evcharge {

enum class Classification { kCapacityFree, kCapacityLimited };

std::string_view to_string(Classification c);

struct DualCertificate {
  // Indexed by slot.
  std::vector<double> lambda_bar;
  // Indexed by arrival position; sigma_bar[n] follows the window of EV n.
  std::vector<double> mu_bar;
  std::vector<std::vector<double>> sigma_bar;
  std::vector<double> eta_bar;
  // Position of the first EV after which some slot reaches beta; -1 if none.
  int k_index = -1;

  friend bool operator==(const DualCertificate&, const DualCertificate&) = default;
};

// Outcome of one family of checks.
struct CheckResult {
  bool ok = true;
  int checked = 0;
  int violations = 0;
  // Largest amount by which a constraint is exceeded (<= 0 when all hold).
  double worst_margin = -std::numeric_limits<double>::infinity();
  // Up to kMaxExamples human-readable violations.
  std::vector<std::string> examples;

  void record(double excess, double tol, const std::string& what);
  void merge(const CheckResult& other);
};

inline constexpr double kDualTolerance = 1e-7;
inline constexpr double kKktTolerance = 1e-7;
inline constexpr double kPdRelativeTolerance = 1e-6;

struct DualFeasibilityReport {
  CheckResult nonnegativity;
  // v - mu E + sum sigma R - eta <= tol.
  CheckResult value_constraint;
  // mu - lambda_t - p_t - sigma_t <= tol.
  CheckResult slot_constraint;

  bool ok() const { return nonnegativity.ok && value_constraint.ok && slot_constraint.ok; }
};

struct KktReport {
  CheckResult stationarity;
  CheckResult slackness;
  // sum y phi == mu E - sum sigma R.
  CheckResult identity;

  bool ok() const { return stationarity.ok && slackness.ok && identity.ok; }
  void merge(const KktReport& other);
};

struct PdReport {
  bool degenerate_k = false;
  int k_index = -1;
  CheckResult initial;
  CheckResult incremental;
  double primal = 0.0;
  double dual = 0.0;

  bool ok() const { return initial.ok && incremental.ok; }
};

struct CertReport {
  Classification classification = Classification::kCapacityFree;
  // Replaying the trace reproduces its utilizations, prices and decisions.
  CheckResult consistency;
  DualFeasibilityReport dual;
  KktReport kkt;
  PdReport pd;
  // False on capacity-limited traces, where pd is informational.
  bool pd_asserted = true;
  double cr_bound = 0.0;

  bool dual_feasible() const { return dual.ok(); }
  bool kkt_ok() const { return kkt.ok(); }
  bool initial_ok() const { return pd.initial.ok; }
  bool incremental_ok() const { return pd.incremental.ok; }
  bool passed() const { return consistency.ok && dual.ok() && kkt.ok() && (!pd_asserted || pd.ok()); }
};

// Throws kNoTrace when the trace does not cover every request.
Classification classify_trace(const Trace& trace);

DualCertificate build_certificate(const Trace& trace, const PricingParams& params);

DualFeasibilityReport check_dual_feasibility(const DualCertificate& cert,
                                             const Instance& instance, const Trace& trace);

KktReport check_kkt(const TraceEvent& event, const EVRequest& req,
                    const PricingParams& params);

// `alpha` defaults to params.alpha. Throws kWrongClassification on a
// capacity-limited trace unless `allow_limited` is set.
PdReport check_pd_inequalities(const Trace& trace, const PricingParams& params,
                               std::optional<double> alpha = std::nullopt,
                               bool allow_limited = false);

// max{alpha, 6 sqrt(e), 3 theta alpha e^{1 - alpha/2}}.
double cr_bound(const PricingParams& params);

// 3 sqrt(e) max{2, 1 + 2 ln theta}: the bound for the capacity-limited class.
double capacity_limited_bound(const PricingParams& params);

// Replays admitted allocations and compares them with the recorded snapshots,
// posted prices and admission decisions.
CheckResult check_trace_consistency(const Trace& trace);

// Runs every check on a trace with its own parameters.
CertReport certify_trace(const Trace& trace);

}  // namespace evcharge
