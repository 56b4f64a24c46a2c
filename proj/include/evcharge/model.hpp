#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace evcharge {

class Rng;

// Slots are abstract, 0-based indices into the horizon.
using Slot = int;

struct EVRequest {
  int id = 0;
  Slot arrival = 0;
  // Exclusive: the EV is available on [arrival, departure).
  Slot departure = 0;
  double energy = 0.0;
  double rate = 0.0;
  double value = 0.0;

  int window() const { return departure - arrival; }
  double value_density() const { return value / energy; }

  friend bool operator==(const EVRequest&, const EVRequest&) = default;
};

struct StationConfig {
  int horizon = 0;
  double capacity = 0.0;
  std::vector<double> prices;

  friend bool operator==(const StationConfig&, const StationConfig&) = default;
};

// Value-density, availability and price bounds known to the operator.
struct Bounds {
  double L = 0.0;
  double U = 0.0;
  int Dmin = 1;
  int Dmax = 1;
  double pmax = 0.0;

  // (U/L)(Dmax/Dmin); the competitive guarantee needs it to be at least 2.
  double ratio_product() const {
    return (U / L) * (static_cast<double>(Dmax) / Dmin);
  }

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct Instance {
  StationConfig config;
  Bounds bounds;
  std::vector<EVRequest> requests;

  friend bool operator==(const Instance&, const Instance&) = default;
};

class UtilizationProfile {
 public:
  UtilizationProfile() = default;
  UtilizationProfile(int horizon, double capacity)
      : capacity_(capacity), w_(static_cast<std::size_t>(horizon), 0.0) {}
  UtilizationProfile(std::vector<double> w, double capacity)
      : capacity_(capacity), w_(std::move(w)) {}

  double operator[](Slot t) const { return w_[static_cast<std::size_t>(t)]; }
  double capacity() const { return capacity_; }
  int horizon() const { return static_cast<int>(w_.size()); }
  const std::vector<double>& values() const { return w_; }

  // Commits energy to a slot; never lets the slot exceed capacity.
  void add(Slot t, double energy);

 private:
  double capacity_ = 0.0;
  std::vector<double> w_;
};

struct SlotEnergy {
  Slot slot = 0;
  double energy = 0.0;

  friend bool operator==(const SlotEnergy&, const SlotEnergy&) = default;
};

// Per-EV allocations keyed by request id. Rejected EVs have no entry.
using ChargingSchedule = std::map<int, std::vector<SlotEnergy>>;

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
};

// Assumption-1 stress threshold: a rate above this fraction of C warns.
inline constexpr double kRateWarningFraction = 0.05;

ValidationReport validate_instance(const Instance& instance);

// Tightest bounds consistent with the requests and prices.
Bounds derive_bounds(const Instance& instance);

// Throws kTheoremPrecondition / kInvalidConfig when the bounds are unusable.
void check_bounds(const Bounds& bounds);

// Energy cost sum_t p_t * sum_n y_nt of a schedule.
double schedule_cost(const StationConfig& config, const ChargingSchedule& schedule);

// ---------------------------------------------------------------------------
// Instance generation
// ---------------------------------------------------------------------------

// Time-of-use tariff: mean + amplitude * sin(2*pi*(t + phase)/period), clipped
// to [0, pmax].
struct PriceModel {
  double mean = 0.25;
  double amplitude = 0.25;
  double period = 24.0;
  double phase = 0.0;
};

struct DemandModel {
  double rate = 1.0;
  // Energy lattice. When positive, energies are drawn as multiples of it so the
  // offline oracle is exact; rate and capacity must then be multiples as well.
  double energy_quantum = 0.0;
};

struct GeneratorConfig {
  int n = 0;
  int horizon = 0;
  double capacity = 0.0;
  Bounds bounds;
  PriceModel price;
  DemandModel demand;
  // Value densities are L + (U - L) u^skew with u uniform on [0, 1): 1 is
  // uniform on [L, U], larger values put most EVs near L with a tail to U.
  double value_skew = 1.0;
};

std::vector<double> time_of_use_prices(const PriceModel& model, int horizon,
                                       double pmax);

Instance generate_synthetic(const GeneratorConfig& gen, std::uint64_t seed);

// Redraws every EV's value density as L + (U - L) u^skew.
double sample_density(const Bounds& bounds, double skew, Rng& rng);
Instance redraw_values(const Instance& instance, std::uint64_t seed, double skew = 1.0);

// Two zero-slack groups of C/(2R) EVs meeting at slot t_prime. Group 1 occupies
// [t_prime - Dmin + 1, t_prime], group 2 occupies [t_prime, t_prime + Dmin - 1].
// Every EV has energy R * Dmin and value density U.
Instance generate_worst_case(double capacity, int Dmin, double rate,
                             const Bounds& bounds, Slot t_prime);

// ---------------------------------------------------------------------------
// Session ingestion
// ---------------------------------------------------------------------------

struct ValueModel {
  double L = 1.0;
  double U = 2.0;
  std::uint64_t noise_seed = 0;
};

// Reads `arrival,departure,energy,max_rate` rows. Values follow
//   v = E * (L + (U - L) * (d - a - Dmin) / (Dmax - Dmin) * zeta),
// zeta ~ U[0.5, 1], with Dmin/Dmax taken from the file. Warnings (clipped
// energies) are appended to `warnings` when provided.
Instance ingest_sessions(const std::filesystem::path& path,
                         const ValueModel& value_model,
                         const StationConfig& config,
                         std::vector<std::string>* warnings = nullptr);

// Re-applies the duration-affine value model with a fresh noise seed.
Instance resample_session_values(const Instance& instance,
                                 const ValueModel& value_model);

}  // namespace evcharge
