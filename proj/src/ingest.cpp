#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "evcharge/error.hpp"
#include "evcharge/model.hpp"
#include "evcharge/random.hpp"

namespace evcharge {

namespace {

constexpr std::string_view kHeader = "arrival,departure,energy,max_rate";

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

int parse_int(const std::string& cell, int row, int col) {
  int value = 0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(row, col, "expected an integer slot index, got '" + cell + "'");
  }
  return value;
}

double parse_double(const std::string& cell, int row, int col) {
  double value = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(row, col, "expected a number, got '" + cell + "'");
  }
  return value;
}

double density_for(const EVRequest& r, const ValueModel& vm, int Dmin, int Dmax,
                   Rng& rng) {
  const double zeta = rng.uniform(0.5, 1.0);
  const double span = Dmax > Dmin
                          ? static_cast<double>(r.window() - Dmin) / (Dmax - Dmin)
                          : 0.0;
  return std::clamp(vm.L + (vm.U - vm.L) * span * zeta, vm.L, vm.U);
}

}  // namespace

Instance resample_session_values(const Instance& instance, const ValueModel& vm) {
  Instance out = instance;
  if (out.requests.empty()) return out;
  int Dmin = std::numeric_limits<int>::max();
  int Dmax = 0;
  for (const auto& r : out.requests) {
    Dmin = std::min(Dmin, r.window());
    Dmax = std::max(Dmax, r.window());
  }
  Rng rng(vm.noise_seed);
  for (auto& r : out.requests) {
    r.value = r.energy * density_for(r, vm, Dmin, Dmax, rng);
  }
  return out;
}

Instance ingest_sessions(const std::filesystem::path& path, const ValueModel& vm,
                         const StationConfig& config,
                         std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || trim(line) != kHeader) {
    throw ParseError(0, 1, "header must be '" + std::string(kHeader) + "'");
  }

  Instance inst;
  inst.config = config;
  int row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (cells.size() != 4) {
      throw ParseError(row, static_cast<int>(std::min<std::size_t>(cells.size() + 1, 5)),
                       "expected 4 columns");
    }
    EVRequest r;
    r.id = row - 1;
    r.arrival = parse_int(cells[0], row, 1);
    r.departure = parse_int(cells[1], row, 2);
    r.energy = parse_double(cells[2], row, 3);
    r.rate = parse_double(cells[3], row, 4);
    if (r.departure <= r.arrival) {
      throw ParseError(row, 2, "departure must be after arrival");
    }
    if (!(r.energy > 0.0)) throw ParseError(row, 3, "energy must be positive");
    if (!(r.rate > 0.0)) throw ParseError(row, 4, "max_rate must be positive");
    const double reachable = r.rate * r.window();
    if (r.energy > reachable) {
      if (warnings) {
        warnings->push_back("row " + std::to_string(row) + ": energy " +
                            std::to_string(r.energy) + " clipped to rate x window " +
                            std::to_string(reachable));
      }
      r.energy = reachable;
    }
    inst.requests.push_back(r);
  }

  std::stable_sort(inst.requests.begin(), inst.requests.end(),
                   [](const EVRequest& a, const EVRequest& b) {
                     return a.arrival < b.arrival;
                   });

  inst.bounds.L = vm.L;
  inst.bounds.U = vm.U;
  inst.bounds.Dmin = inst.requests.empty() ? 1 : std::numeric_limits<int>::max();
  inst.bounds.Dmax = inst.requests.empty() ? 1 : 0;
  for (const auto& r : inst.requests) {
    inst.bounds.Dmin = std::min(inst.bounds.Dmin, r.window());
    inst.bounds.Dmax = std::max(inst.bounds.Dmax, r.window());
  }
  inst.bounds.pmax = 0.0;
  for (double p : config.prices) inst.bounds.pmax = std::max(inst.bounds.pmax, p);

  return resample_session_values(inst, vm);
}

}  // namespace evcharge
