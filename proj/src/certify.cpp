#include "evcharge/certify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "evcharge/error.hpp"

namespace evcharge {

namespace {

constexpr std::size_t kMaxExamples = 5;

// Utilizations built by equal flat-region increments land on beta only up to
// rounding.
bool reaches_beta(const PricingParams& params, double w) {
  return w >= params.beta - 1e-12 * params.capacity;
}

void require_trace(const Trace& trace) {
  const auto& reqs = trace.instance.requests;
  if (trace.events.size() != reqs.size()) {
    throw Error(ErrorCode::kNoTrace, "trace has " + std::to_string(trace.events.size()) +
                                         " events for " + std::to_string(reqs.size()) +
                                         " requests");
  }
  for (std::size_t n = 0; n < reqs.size(); ++n) {
    const auto& ev = trace.events[n];
    const auto width = static_cast<std::size_t>(reqs[n].window());
    if (ev.id != reqs[n].id || ev.y.size() != width || ev.sigma_hat.size() != width ||
        ev.w_before.size() != width || ev.w_after.size() != width) {
      throw Error(ErrorCode::kNoTrace,
                  "event " + std::to_string(n) + " does not match request " +
                      std::to_string(reqs[n].id));
    }
  }
}

std::string where(int n, Slot t) {
  std::ostringstream os;
  os << "EV#" << n << " slot " << t;
  return os.str();
}

// phi at the utilization the event would leave behind in window slot i.
double post_price(const ExponentialPricing& fn, const TraceEvent& ev, std::size_t i) {
  return fn.price(ev.y[i].slot, std::min(fn.capacity(), ev.w_before[i] + ev.y[i].energy));
}

}  // namespace

std::string_view to_string(Classification c) {
  return c == Classification::kCapacityFree ? "CAPACITY_FREE" : "CAPACITY_LIMITED";
}

void CheckResult::record(double excess, double tol, const std::string& what) {
  ++checked;
  worst_margin = std::max(worst_margin, excess);
  if (excess > tol) {
    ok = false;
    ++violations;
    if (examples.size() < kMaxExamples) {
      std::ostringstream os;
      os << what << " exceeds by " << excess;
      examples.push_back(os.str());
    }
  }
}

void CheckResult::merge(const CheckResult& other) {
  ok = ok && other.ok;
  checked += other.checked;
  violations += other.violations;
  worst_margin = std::max(worst_margin, other.worst_margin);
  for (const auto& e : other.examples) {
    if (examples.size() < kMaxExamples) examples.push_back(e);
  }
}

void KktReport::merge(const KktReport& other) {
  stationarity.merge(other.stationarity);
  slackness.merge(other.slackness);
  identity.merge(other.identity);
}

Classification classify_trace(const Trace& trace) {
  require_trace(trace);
  for (const auto& ev : trace.events) {
    if (ev.capacity_pressed || !ev.feasible) return Classification::kCapacityLimited;
  }
  return Classification::kCapacityFree;
}

DualCertificate build_certificate(const Trace& trace, const PricingParams& params) {
  require_trace(trace);
  const auto& inst = trace.instance;
  const ExponentialPricing fn(params);
  const std::size_t N = inst.requests.size();

  DualCertificate cert;
  cert.mu_bar.resize(N);
  cert.sigma_bar.resize(N);
  cert.eta_bar.resize(N);
  UtilizationProfile w(inst.config.horizon, inst.config.capacity);

  for (std::size_t n = 0; n < N; ++n) {
    const auto& req = inst.requests[n];
    const auto& ev = trace.events[n];
    const std::size_t width = ev.y.size();

    double mu = -std::numeric_limits<double>::infinity();
    if (ev.feasible) {
      for (std::size_t i = 0; i < width; ++i) {
        if (ev.y[i].energy > 0.0) mu = std::max(mu, post_price(fn, ev, i));
      }
    } else {
      // No schedule exists; the price of a full slot is a valid multiplier.
      for (std::size_t i = 0; i < width; ++i) {
        mu = std::max(mu, fn.price(ev.y[i].slot, params.capacity));
      }
    }
    cert.mu_bar[n] = mu;

    // sigma follows the candidate for rejected EVs too; only eta depends on
    // the admission decision.
    auto& sigma = cert.sigma_bar[n];
    sigma.assign(width, 0.0);
    if (ev.feasible) {
      for (std::size_t i = 0; i < width; ++i) {
        if (ev.y[i].energy > 0.0) sigma[i] = mu - post_price(fn, ev, i);
      }
    }
    if (ev.admitted) {
      double eta = req.value - mu * req.energy;
      for (std::size_t i = 0; i < width; ++i) eta += sigma[i] * req.rate;
      cert.eta_bar[n] = eta;
      for (const auto& e : ev.y) {
        if (e.energy > 0.0) w.add(e.slot, e.energy);
      }
      if (cert.k_index < 0) {
        for (const auto& e : ev.y) {
          if (reaches_beta(params, w[e.slot])) {
            cert.k_index = static_cast<int>(n);
            break;
          }
        }
      }
    }
  }

  cert.lambda_bar.assign(static_cast<std::size_t>(inst.config.horizon), 0.0);
  for (Slot t = 0; t < inst.config.horizon; ++t) {
    if (reaches_beta(params, w[t])) {
      cert.lambda_bar[static_cast<std::size_t>(t)] = fn.price(t, w[t]) - params.price_at(t);
    }
  }
  return cert;
}

DualFeasibilityReport check_dual_feasibility(const DualCertificate& cert,
                                             const Instance& instance, const Trace& trace) {
  require_trace(trace);
  DualFeasibilityReport rep;
  const auto& prices = instance.config.prices;

  for (std::size_t t = 0; t < cert.lambda_bar.size(); ++t) {
    rep.nonnegativity.record(-cert.lambda_bar[t], kDualTolerance,
                             "lambda at slot " + std::to_string(t) + " negative;");
  }
  for (std::size_t n = 0; n < instance.requests.size(); ++n) {
    const auto& req = instance.requests[n];
    const int id = static_cast<int>(n);
    rep.nonnegativity.record(-cert.mu_bar[n], kDualTolerance, "mu of EV#" + std::to_string(n) + " negative;");
    rep.nonnegativity.record(-cert.eta_bar[n], kDualTolerance, "eta of EV#" + std::to_string(n) + " negative;");

    double lhs = req.value - cert.mu_bar[n] * req.energy - cert.eta_bar[n];
    for (std::size_t i = 0; i < cert.sigma_bar[n].size(); ++i) {
      const double sigma = cert.sigma_bar[n][i];
      const Slot t = req.arrival + static_cast<Slot>(i);
      rep.nonnegativity.record(-sigma, kDualTolerance, "sigma at " + where(id, t) + " negative;");
      lhs += sigma * req.rate;
      const double slot_excess = cert.mu_bar[n] - cert.lambda_bar[static_cast<std::size_t>(t)] -
                                 prices[static_cast<std::size_t>(t)] - sigma;
      rep.slot_constraint.record(slot_excess, kDualTolerance,
                                 "mu - lambda - p - sigma at " + where(id, t));
    }
    rep.value_constraint.record(lhs, kDualTolerance,
                                "v - mu E + sum sigma R - eta at EV#" + std::to_string(n));
  }
  return rep;
}

KktReport check_kkt(const TraceEvent& ev, const EVRequest& req, const PricingParams& params) {
  KktReport rep;
  if (!ev.feasible) return rep;
  const ExponentialPricing fn(params);
  const double mu = ev.mu_hat;
  double total = 0.0;
  double lhs = 0.0;
  double rhs = mu * req.energy;
  for (std::size_t i = 0; i < ev.y.size(); ++i) {
    const double y = ev.y[i].energy;
    const double sigma = ev.sigma_hat[i];
    const double phi = post_price(fn, ev, i);
    const double gamma = y > 0.0 ? 0.0 : std::max(phi - mu, 0.0);
    const std::string at = where(ev.id, ev.y[i].slot);
    rep.stationarity.record(std::abs(phi - mu + sigma - gamma), kKktTolerance,
                            "stationarity at " + at);
    rep.slackness.record(std::abs(sigma * (y - req.rate)), kKktTolerance,
                         "sigma (y - R) at " + at);
    rep.slackness.record(std::abs(gamma * y), kKktTolerance, "gamma y at " + at);
    rep.slackness.record(std::max({-sigma, -gamma, -y}), kKktTolerance,
                         "negative multiplier or allocation at " + at);
    total += y;
    lhs += y * phi;
    rhs -= sigma * req.rate;
  }
  rep.slackness.record(std::abs(mu * (req.energy - total)), kKktTolerance,
                       "mu (E - sum y) at EV " + std::to_string(ev.id));
  rep.identity.record(std::abs(lhs - rhs), kKktTolerance,
                      "sum y phi vs mu E - sum sigma R at EV " + std::to_string(ev.id));
  return rep;
}

PdReport check_pd_inequalities(const Trace& trace, const PricingParams& params,
                               std::optional<double> alpha_override, bool allow_limited) {
  if (!allow_limited && classify_trace(trace) == Classification::kCapacityLimited) {
    throw Error(ErrorCode::kWrongClassification,
                "primal-dual inequalities apply to capacity-free traces only");
  }
  const DualCertificate cert = build_certificate(trace, params);
  const auto& inst = trace.instance;
  const ExponentialPricing fn(params);
  const double alpha = alpha_override.value_or(params.alpha);
  const double C = params.capacity;
  const std::size_t N = inst.requests.size();

  // Running primal and dual objectives after each EV.
  std::vector<double> P(N + 1, 0.0), D(N + 1, 0.0);
  UtilizationProfile w(inst.config.horizon, C);
  std::vector<double> lambda_term(static_cast<std::size_t>(inst.config.horizon), 0.0);
  double lambda_sum = 0.0;
  double eta_sum = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const auto& req = inst.requests[n];
    const auto& ev = trace.events[n];
    double gain = 0.0;
    if (ev.admitted) {
      gain = req.value;
      for (const auto& e : ev.y) {
        if (e.energy <= 0.0) continue;
        gain -= params.price_at(e.slot) * e.energy;
        w.add(e.slot, e.energy);
        auto& term = lambda_term[static_cast<std::size_t>(e.slot)];
        const double next =
            reaches_beta(params, w[e.slot]) ? C * (fn.price(e.slot, w[e.slot]) - params.price_at(e.slot)) : 0.0;
        lambda_sum += next - term;
        term = next;
      }
    }
    eta_sum += cert.eta_bar[n];
    P[n + 1] = P[n] + gain;
    D[n + 1] = lambda_sum + eta_sum;
  }

  PdReport rep;
  rep.k_index = cert.k_index;
  rep.primal = P[N];
  rep.dual = D[N];
  const double tol = kPdRelativeTolerance * std::max(1.0, std::abs(D[N]));
  if (cert.k_index < 0) {
    rep.degenerate_k = true;
    rep.initial.record(D[N] / alpha - P[N], tol, "DEGENERATE_K: D_N / alpha - P_N");
    return rep;
  }
  const auto k = static_cast<std::size_t>(cert.k_index) + 1;
  rep.initial.record(D[k] / alpha - P[k], tol, "D_k / alpha - P_k at k=EV#" + std::to_string(k - 1));
  for (std::size_t n = k + 1; n <= N; ++n) {
    rep.incremental.record((D[n] - D[n - 1]) / alpha - (P[n] - P[n - 1]), tol,
                           "dual step / alpha - primal step at EV#" + std::to_string(n - 1));
  }
  return rep;
}

double cr_bound(const PricingParams& params) {
  const double a = params.alpha;
  return std::max({a, 6.0 * std::sqrt(std::numbers::e),
                   3.0 * params.theta * a * std::exp(1.0 - a / 2.0)});
}

double capacity_limited_bound(const PricingParams& params) {
  return 3.0 * std::sqrt(std::numbers::e) * std::max(2.0, 1.0 + 2.0 * std::log(params.theta));
}

CheckResult check_trace_consistency(const Trace& trace) {
  require_trace(trace);
  const auto& inst = trace.instance;
  const ExponentialPricing fn(trace.params);
  const double C = inst.config.capacity;
  const double tol = 1e-9 * std::max(1.0, C);
  UtilizationProfile w(inst.config.horizon, C);
  CheckResult rep;
  for (std::size_t n = 0; n < inst.requests.size(); ++n) {
    const auto& req = inst.requests[n];
    const auto& ev = trace.events[n];
    const int id = static_cast<int>(n);
    double total = 0.0;
    double xi = 0.0;
    for (std::size_t i = 0; i < ev.y.size(); ++i) {
      const Slot t = ev.y[i].slot;
      rep.record(std::abs(t - (req.arrival + static_cast<Slot>(i))), 0.0,
                 "slot label at " + where(id, t));
      rep.record(std::abs(ev.w_before[i] - w[t]), tol, "recorded utilization at " + where(id, t));
      rep.record(ev.y[i].energy - req.rate, kDemandTolerance * req.rate,
                 "rate limit at " + where(id, t));
      rep.record(ev.w_before[i] + ev.y[i].energy - C, tol, "capacity at " + where(id, t));
      total += ev.y[i].energy;
      if (ev.y[i].energy > 0.0) xi += post_price(fn, ev, i) * ev.y[i].energy;
    }
    if (ev.feasible) {
      rep.record(std::abs(total - req.energy), kDemandTolerance * req.energy,
                 "demand of EV#" + std::to_string(n));
      const double recorded = ev.price.value_or(std::numeric_limits<double>::infinity());
      rep.record(std::abs(recorded - xi), 1e-9 * std::max(1.0, xi),
                 "posted price of EV#" + std::to_string(n));
      const bool should_admit =
          req.value >= recorded - kTieTolerance * std::max(1.0, std::abs(recorded));
      rep.record(should_admit == ev.admitted ? 0.0 : 1.0, 0.0,
                 "admission decision of EV#" + std::to_string(n));
    } else {
      rep.record(ev.admitted ? 1.0 : 0.0, 0.0, "admitted infeasible EV#" + std::to_string(n));
    }
    if (ev.admitted) {
      for (const auto& e : ev.y) {
        if (e.energy > 0.0) w.add(e.slot, e.energy);
      }
    }
    for (std::size_t i = 0; i < ev.y.size(); ++i) {
      rep.record(std::abs(ev.w_after[i] - w[ev.y[i].slot]), tol,
                 "recorded post-utilization at " + where(id, ev.y[i].slot));
    }
  }
  return rep;
}

CertReport certify_trace(const Trace& trace) {
  CertReport rep;
  const auto& params = trace.params;
  rep.classification = classify_trace(trace);
  rep.consistency = check_trace_consistency(trace);
  const DualCertificate cert = build_certificate(trace, params);
  rep.dual = check_dual_feasibility(cert, trace.instance, trace);
  for (std::size_t n = 0; n < trace.events.size(); ++n) {
    rep.kkt.merge(check_kkt(trace.events[n], trace.instance.requests[n], params));
  }
  rep.pd_asserted = rep.classification == Classification::kCapacityFree;
  rep.pd = check_pd_inequalities(trace, params, std::nullopt, /*allow_limited=*/true);
  rep.cr_bound = cr_bound(params);
  return rep;
}

}  // namespace evcharge
