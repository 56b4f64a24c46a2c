#include "evcharge/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "evcharge/error.hpp"
#include "evcharge/random.hpp"

namespace evcharge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInstance: return "EMPTY_INSTANCE";
    case ErrorCode::kTheoremPrecondition: return "THEOREM_PRECONDITION";
    case ErrorCode::kInvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kIoError: return "IO_ERROR";
    case ErrorCode::kPriceExceedsPmax: return "PRICE_EXCEEDS_PMAX";
    case ErrorCode::kPriceBelowL: return "PRICE_BELOW_L";
    case ErrorCode::kCapacityExceeded: return "CAPACITY_EXCEEDED";
    case ErrorCode::kInfeasibleCandidate: return "INFEASIBLE_CANDIDATE";
    case ErrorCode::kTooLarge: return "TOO_LARGE";
    case ErrorCode::kParamsMismatch: return "PARAMS_MISMATCH";
    case ErrorCode::kInconsistentOutcome: return "INCONSISTENT_OUTCOME";
    case ErrorCode::kQuantizationError: return "QUANTIZATION_ERROR";
    case ErrorCode::kNoTrace: return "NO_TRACE";
    case ErrorCode::kWrongClassification: return "WRONG_CLASSIFICATION";
  }
  return "UNKNOWN";
}

void UtilizationProfile::add(Slot t, double energy) {
  double& slot = w_[static_cast<std::size_t>(t)];
  slot = std::min(capacity_, slot + energy);
}

namespace {

// Relative slack for comparisons against bounds that were themselves computed
// from the same floating-point data.
constexpr double kBoundTol = 1e-12;

std::string describe(const EVRequest& r, const std::string& what) {
  std::ostringstream os;
  os << "EV " << r.id << ": " << what;
  return os.str();
}

}  // namespace

void check_bounds(const Bounds& b) {
  if (!(b.L > 0.0) || !(b.U >= b.L)) {
    throw Error(ErrorCode::kInvalidConfig, "bounds need 0 < L <= U");
  }
  if (b.Dmin < 1 || b.Dmax < b.Dmin) {
    throw Error(ErrorCode::kInvalidConfig, "bounds need 1 <= Dmin <= Dmax");
  }
  if (b.pmax < 0.0 || b.pmax >= b.L) {
    throw Error(ErrorCode::kTheoremPrecondition,
                "bounds need 0 <= pmax < L for a finite fluctuation ratio");
  }
  if (b.ratio_product() < 2.0) {
    throw Error(ErrorCode::kTheoremPrecondition,
                "(U/L)(Dmax/Dmin) = " + std::to_string(b.ratio_product()) +
                    " < 2");
  }
}

ValidationReport validate_instance(const Instance& instance) {
  ValidationReport report;
  auto& bad = report.violations;
  const auto& cfg = instance.config;
  const auto& b = instance.bounds;

  if (!(b.L > 0.0) || !(b.U >= b.L)) bad.push_back("bounds: need 0 < L <= U");
  if (b.Dmin < 1 || b.Dmax < b.Dmin) bad.push_back("bounds: need 1 <= Dmin <= Dmax");
  if (b.pmax > b.L) bad.push_back("bounds: pmax exceeds L");
  if (b.L > 0.0 && b.Dmin >= 1 && b.ratio_product() < 2.0) {
    bad.push_back("bounds: (U/L)(Dmax/Dmin) below 2");
  }

  if (!(cfg.capacity > 0.0)) bad.push_back("config: capacity must be positive");
  if (cfg.horizon < b.Dmax) bad.push_back("config: horizon shorter than Dmax");
  if (static_cast<int>(cfg.prices.size()) != cfg.horizon) {
    bad.push_back("config: price vector length differs from horizon");
  }
  for (std::size_t t = 0; t < cfg.prices.size(); ++t) {
    const double p = cfg.prices[t];
    if (p < 0.0 || p > b.pmax * (1.0 + kBoundTol)) {
      bad.push_back("config: price at slot " + std::to_string(t) +
                    " outside [0, pmax]");
    }
  }

  Slot last_arrival = std::numeric_limits<Slot>::min();
  for (const auto& r : instance.requests) {
    if (r.arrival < last_arrival) {
      bad.push_back(describe(r, "requests not sorted by arrival"));
    }
    last_arrival = std::max(last_arrival, r.arrival);

    if (r.arrival >= r.departure) {
      bad.push_back(describe(r, "empty availability window"));
      continue;
    }
    if (r.arrival < 0 || r.departure > cfg.horizon) {
      bad.push_back(describe(r, "availability window outside horizon"));
    }
    if (r.window() < b.Dmin) bad.push_back(describe(r, "availability below Dmin"));
    if (r.window() > b.Dmax) bad.push_back(describe(r, "availability exceeds Dmax"));
    if (!(r.energy > 0.0)) {
      bad.push_back(describe(r, "energy must be positive"));
      continue;
    }
    if (!(r.rate > 0.0)) bad.push_back(describe(r, "rate must be positive"));
    if (!(r.value > 0.0)) bad.push_back(describe(r, "value must be positive"));
    if (r.energy > r.rate * r.window() * (1.0 + kBoundTol)) {
      bad.push_back(describe(r, "energy exceeds rate times window"));
    }
    const double density = r.value_density();
    if (density < b.L * (1.0 - kBoundTol)) {
      bad.push_back(describe(r, "value density below L"));
    }
    if (density > b.U * (1.0 + kBoundTol)) {
      bad.push_back(describe(r, "value density above U"));
    }
    if (cfg.capacity > 0.0 && r.rate > kRateWarningFraction * cfg.capacity) {
      report.warnings.push_back(
          describe(r, "rate above 5% of capacity (infinitesimal-rate stress)"));
    }
  }
  return report;
}

Bounds derive_bounds(const Instance& instance) {
  if (instance.requests.empty()) {
    throw Error(ErrorCode::kEmptyInstance, "cannot derive bounds without requests");
  }
  Bounds b;
  b.L = std::numeric_limits<double>::infinity();
  b.U = 0.0;
  b.Dmin = std::numeric_limits<int>::max();
  b.Dmax = 0;
  for (const auto& r : instance.requests) {
    b.L = std::min(b.L, r.value_density());
    b.U = std::max(b.U, r.value_density());
    b.Dmin = std::min(b.Dmin, r.window());
    b.Dmax = std::max(b.Dmax, r.window());
  }
  b.pmax = 0.0;
  for (double p : instance.config.prices) b.pmax = std::max(b.pmax, p);
  if (b.ratio_product() < 2.0) {
    throw Error(ErrorCode::kTheoremPrecondition,
                "(U/L)(Dmax/Dmin) = " + std::to_string(b.ratio_product()) +
                    " < 2");
  }
  return b;
}

double schedule_cost(const StationConfig& config, const ChargingSchedule& schedule) {
  double cost = 0.0;
  for (const auto& [id, allocation] : schedule) {
    for (const auto& a : allocation) {
      cost += config.prices[static_cast<std::size_t>(a.slot)] * a.energy;
    }
  }
  return cost;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

std::vector<double> time_of_use_prices(const PriceModel& model, int horizon,
                                       double pmax) {
  std::vector<double> prices(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    const double phase = 2.0 * std::numbers::pi * (t + model.phase) / model.period;
    const double p = model.mean + model.amplitude * std::sin(phase);
    prices[static_cast<std::size_t>(t)] = std::clamp(p, 0.0, pmax);
  }
  return prices;
}

namespace {

bool on_lattice(double x, double q) {
  const double k = std::round(x / q);
  return k >= 1.0 && std::abs(x - k * q) <= 1e-9 * q;
}

}  // namespace

Instance generate_synthetic(const GeneratorConfig& gen, std::uint64_t seed) {
  const auto& b = gen.bounds;
  if (gen.n < 0 || gen.horizon < 1 || !(gen.capacity > 0.0) ||
      !(gen.demand.rate > 0.0) || !(gen.price.period > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "generator needs n >= 0, T >= 1, C, R > 0");
  }
  try {
    check_bounds(b);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  if (!(gen.value_skew > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "value skew must be positive");
  }
  if (gen.horizon < b.Dmax) {
    throw Error(ErrorCode::kInvalidConfig, "horizon shorter than Dmax");
  }
  const double q = gen.demand.energy_quantum;
  if (q > 0.0 && (!on_lattice(gen.demand.rate, q) || !on_lattice(gen.capacity, q))) {
    throw Error(ErrorCode::kInvalidConfig,
                "rate and capacity must be multiples of the energy quantum");
  }

  Rng rng(seed);
  Instance inst;
  inst.bounds = b;
  inst.config.horizon = gen.horizon;
  inst.config.capacity = gen.capacity;
  inst.config.prices = time_of_use_prices(gen.price, gen.horizon, b.pmax);

  inst.requests.reserve(static_cast<std::size_t>(gen.n));
  const double rate = gen.demand.rate;
  for (int i = 0; i < gen.n; ++i) {
    EVRequest r;
    const int duration = static_cast<int>(rng.uniform_int(b.Dmin, b.Dmax));
    r.arrival = static_cast<Slot>(rng.uniform_int(0, gen.horizon - duration));
    r.departure = r.arrival + duration;
    r.rate = rate;
    const double max_energy = rate * duration;
    if (q > 0.0) {
      const auto units = static_cast<std::int64_t>(std::floor(max_energy / q + 1e-9));
      r.energy = q * static_cast<double>(rng.uniform_int(1, units));
    } else {
      // (0, R * duration]
      r.energy = max_energy * (1.0 - rng.uniform(0.0, 1.0));
    }
    r.value = r.energy * sample_density(b, gen.value_skew, rng);
    inst.requests.push_back(r);
  }
  std::stable_sort(inst.requests.begin(), inst.requests.end(),
                   [](const EVRequest& x, const EVRequest& y) {
                     return x.arrival < y.arrival;
                   });
  for (std::size_t i = 0; i < inst.requests.size(); ++i) {
    inst.requests[i].id = static_cast<int>(i);
  }
  return inst;
}

double sample_density(const Bounds& b, double skew, Rng& rng) {
  const double u = rng.uniform(0.0, 1.0);
  return b.L + (b.U - b.L) * (skew == 1.0 ? u : std::pow(u, skew));
}

Instance redraw_values(const Instance& instance, std::uint64_t seed, double skew) {
  if (!(skew > 0.0)) throw Error(ErrorCode::kInvalidConfig, "value skew must be positive");
  Rng rng(seed);
  Instance out = instance;
  for (auto& r : out.requests) {
    r.value = r.energy * sample_density(out.bounds, skew, rng);
  }
  return out;
}

Instance generate_worst_case(double capacity, int Dmin, double rate,
                             const Bounds& bounds, Slot t_prime) {
  if (!(capacity > 0.0) || !(rate > 0.0) || Dmin < 1) {
    throw Error(ErrorCode::kInvalidConfig, "worst case needs C, R > 0 and Dmin >= 1");
  }
  const double per_group = capacity / (2.0 * rate);
  const double rounded = std::round(per_group);
  if (rounded < 1.0 || std::abs(per_group - rounded) > 1e-9 * per_group) {
    throw Error(ErrorCode::kInvalidConfig, "C/(2R) must be a positive integer");
  }
  if (t_prime < Dmin) {
    throw Error(ErrorCode::kInvalidConfig, "t_prime must be at least Dmin");
  }
  if (Dmin < bounds.Dmin || Dmin > bounds.Dmax) {
    throw Error(ErrorCode::kInvalidConfig, "fixture window outside [Dmin, Dmax]");
  }

  Instance inst;
  inst.bounds = bounds;
  inst.config.horizon = std::max(t_prime + Dmin, bounds.Dmax);
  inst.config.capacity = capacity;
  inst.config.prices.assign(static_cast<std::size_t>(inst.config.horizon), bounds.pmax);

  const int group_size = static_cast<int>(rounded);
  const double energy = rate * Dmin;
  int id = 0;
  auto add_group = [&](Slot arrival) {
    for (int i = 0; i < group_size; ++i) {
      inst.requests.push_back(EVRequest{.id = id++,
                                        .arrival = arrival,
                                        .departure = arrival + Dmin,
                                        .energy = energy,
                                        .rate = rate,
                                        .value = energy * bounds.U});
    }
  };
  add_group(t_prime - Dmin + 1);
  add_group(t_prime);
  return inst;
}

}  // namespace evcharge
