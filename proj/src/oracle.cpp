#include "evcharge/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>

#include "evcharge/error.hpp"

namespace evcharge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::int64_t to_units(double x, double epsilon, const char* what) {
  const double q = x / epsilon;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q))) {
    throw Error(ErrorCode::kQuantizationError,
                std::string(what) + " " + std::to_string(x) +
                    " is not a multiple of epsilon " + std::to_string(epsilon));
  }
  return static_cast<std::int64_t>(r);
}

// Residual network for the scheduling flow. EV source arcs start closed and
// are opened one EV at a time; successive shortest paths from a min-cost flow
// keep the flow min-cost for the enlarged demand.
class ScheduleFlow {
 public:
  ScheduleFlow(const StationConfig& config, const std::vector<EVRequest>& evs,
               double epsilon)
      : evs_(evs), epsilon_(epsilon) {
    const int n = static_cast<int>(evs.size());
    const int T = config.horizon;
    nodes_ = n + T + 2;
    sink_ = n + T + 1;
    head_.assign(static_cast<std::size_t>(nodes_), {});
    source_arc_.resize(static_cast<std::size_t>(n));
    demand_.resize(static_cast<std::size_t>(n));
    const std::int64_t cap = to_units(config.capacity, epsilon, "capacity");
    for (int j = 0; j < n; ++j) {
      const auto& r = evs[static_cast<std::size_t>(j)];
      if (r.arrival < 0 || r.departure > T) {
        throw Error(ErrorCode::kInvalidConfig,
                    "EV " + std::to_string(r.id) + " window outside the horizon");
      }
      demand_[static_cast<std::size_t>(j)] = to_units(r.energy, epsilon, "energy");
      const std::int64_t rate = to_units(r.rate, epsilon, "rate");
      source_arc_[static_cast<std::size_t>(j)] = add_arc(0, ev_node(j), 0, 0.0);
      for (Slot t = r.arrival; t < r.departure; ++t) {
        add_arc(ev_node(j), slot_node(t), rate, 0.0);
      }
    }
    for (Slot t = 0; t < T; ++t) {
      slot_arc_.push_back(
          add_arc(slot_node(t), sink_, cap, config.prices[static_cast<std::size_t>(t)]));
    }
    potential_.assign(static_cast<std::size_t>(nodes_), 0.0);
  }

  // Opens EV j and routes its full demand. Returns false (leaving the network
  // in an unspecified state) when the demand cannot be met.
  bool include(int j) {
    const std::int64_t need = demand_[static_cast<std::size_t>(j)];
    arcs_[static_cast<std::size_t>(source_arc_[static_cast<std::size_t>(j)])].cap += need;
    reset_potentials();
    std::int64_t left = need;
    while (left > 0) {
      const std::int64_t pushed = augment(left);
      if (pushed == 0) return false;
      left -= pushed;
    }
    return true;
  }

  double cost() const {
    double c = 0.0;
    for (int a : slot_arc_) {
      const auto& arc = arcs_[static_cast<std::size_t>(a)];
      c += static_cast<double>(arc.flow) * epsilon_ * arc.cost;
    }
    return c;
  }

  ChargingSchedule schedule(const std::vector<bool>& included) const {
    ChargingSchedule out;
    for (std::size_t j = 0; j < evs_.size(); ++j) {
      if (!included[j]) continue;
      auto& alloc = out[evs_[j].id];
      for (int a : head_[static_cast<std::size_t>(ev_node(static_cast<int>(j)))]) {
        const auto& arc = arcs_[static_cast<std::size_t>(a)];
        if (arc.to == 0 || arc.flow <= 0) continue;
        alloc.push_back({arc.to - static_cast<int>(evs_.size()) - 1,
                         static_cast<double>(arc.flow) * epsilon_});
      }
    }
    return out;
  }

  // True when no residual cycle has negative cost (Bellman-Ford).
  bool no_negative_cycle() const {
    std::vector<double> d(static_cast<std::size_t>(nodes_), 0.0);
    for (int round = 0; round < nodes_; ++round) {
      bool changed = false;
      for (const auto& arc : arcs_) {
        if (arc.cap - arc.flow <= 0) continue;
        const double nd = d[static_cast<std::size_t>(arc.from)] + arc.cost;
        if (nd < d[static_cast<std::size_t>(arc.to)] - 1e-12) {
          d[static_cast<std::size_t>(arc.to)] = nd;
          changed = true;
        }
      }
      if (!changed) return true;
    }
    return false;
  }

 private:
  struct Arc {
    int from;
    int to;
    std::int64_t cap;
    std::int64_t flow;
    double cost;
    int rev;
  };

  int ev_node(int j) const { return 1 + j; }
  int slot_node(Slot t) const { return 1 + static_cast<int>(evs_.size()) + t; }

  int add_arc(int from, int to, std::int64_t cap, double cost) {
    const int a = static_cast<int>(arcs_.size());
    arcs_.push_back({from, to, cap, 0, cost, a + 1});
    arcs_.push_back({to, from, 0, 0, -cost, a});
    head_[static_cast<std::size_t>(from)].push_back(a);
    head_[static_cast<std::size_t>(to)].push_back(a + 1);
    return a;
  }

  // Arcs back into the source are never usable: an included EV stays fully
  // charged, so its supply cannot be handed back.
  std::int64_t residual(const Arc& a) const { return a.to == 0 ? 0 : a.cap - a.flow; }

  void push(int a, std::int64_t amount) {
    arcs_[static_cast<std::size_t>(a)].flow += amount;
    arcs_[static_cast<std::size_t>(arcs_[static_cast<std::size_t>(a)].rev)].flow -= amount;
  }

  // Shortest residual distances from the source, tolerating negative arcs.
  void reset_potentials() {
    std::vector<double> d(static_cast<std::size_t>(nodes_), kInf);
    d[0] = 0.0;
    for (int round = 0; round < nodes_; ++round) {
      bool changed = false;
      for (const auto& arc : arcs_) {
        if (residual(arc) <= 0 || d[static_cast<std::size_t>(arc.from)] == kInf) continue;
        const double nd = d[static_cast<std::size_t>(arc.from)] + arc.cost;
        if (nd < d[static_cast<std::size_t>(arc.to)]) {
          d[static_cast<std::size_t>(arc.to)] = nd;
          changed = true;
        }
      }
      if (!changed) break;
    }
    for (int v = 0; v < nodes_; ++v) {
      if (d[static_cast<std::size_t>(v)] != kInf) potential_[static_cast<std::size_t>(v)] = d[static_cast<std::size_t>(v)];
    }
  }

  // One Dijkstra round on reduced costs; pushes up to `limit` units.
  std::int64_t augment(std::int64_t limit) {
    const auto N = static_cast<std::size_t>(nodes_);
    std::vector<double> dist(N, kInf);
    std::vector<int> via(N, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[0] = 0.0;
    pq.push({0.0, 0});
    while (!pq.empty()) {
      const auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[static_cast<std::size_t>(u)]) continue;
      for (int a : head_[static_cast<std::size_t>(u)]) {
        const auto& arc = arcs_[static_cast<std::size_t>(a)];
        if (residual(arc) <= 0) continue;
        const double reduced = std::max(
            0.0, arc.cost + potential_[static_cast<std::size_t>(u)] -
                     potential_[static_cast<std::size_t>(arc.to)]);
        const double nd = d + reduced;
        if (nd < dist[static_cast<std::size_t>(arc.to)]) {
          dist[static_cast<std::size_t>(arc.to)] = nd;
          via[static_cast<std::size_t>(arc.to)] = a;
          pq.push({nd, arc.to});
        }
      }
    }
    if (dist[static_cast<std::size_t>(sink_)] == kInf) return 0;
    for (std::size_t v = 0; v < N; ++v) {
      if (dist[v] != kInf) potential_[v] += dist[v];
    }
    std::int64_t amount = limit;
    for (int v = sink_; v != 0;) {
      const auto& arc = arcs_[static_cast<std::size_t>(via[static_cast<std::size_t>(v)])];
      amount = std::min(amount, residual(arc));
      v = arc.from;
    }
    for (int v = sink_; v != 0;) {
      const int a = via[static_cast<std::size_t>(v)];
      push(a, amount);
      v = arcs_[static_cast<std::size_t>(a)].from;
    }
    return amount;
  }

  std::vector<EVRequest> evs_;
  double epsilon_;
  int nodes_ = 0;
  int sink_ = 0;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> head_;
  std::vector<int> source_arc_;
  std::vector<int> slot_arc_;
  std::vector<std::int64_t> demand_;
  std::vector<double> potential_;
};

double min_price(const StationConfig& config, const EVRequest& r) {
  double m = kInf;
  for (Slot t = r.arrival; t < r.departure; ++t) {
    m = std::min(m, config.prices[static_cast<std::size_t>(t)]);
  }
  return m;
}

struct Search {
  const Instance* instance = nullptr;
  std::vector<int> order;
  // optimistic[d]: sum over order[d..] of max(0, v - E * min window price).
  std::vector<double> optimistic;
  double best = 0.0;
  std::vector<bool> best_set;
  std::optional<ScheduleFlow> best_flow;
  long nodes = 0;

  void visit(std::size_t depth, const ScheduleFlow& flow, std::vector<bool>& chosen,
             double value) {
    ++nodes;
    const double current = value - flow.cost();
    if (current > best) {
      best = current;
      best_set = chosen;
      best_flow = flow;
    }
    if (depth == order.size()) return;
    if (current + optimistic[depth] <= best) return;

    const int j = order[depth];
    const auto& r = instance->requests[static_cast<std::size_t>(j)];
    ScheduleFlow with = flow;
    if (with.include(j)) {
      chosen[static_cast<std::size_t>(j)] = true;
      visit(depth + 1, with, chosen, value + r.value);
      chosen[static_cast<std::size_t>(j)] = false;
    }
    visit(depth + 1, flow, chosen, value);
  }
};

}  // namespace

FlowSchedule min_cost_schedule_flow(const StationConfig& config,
                                    const std::vector<EVRequest>& admitted,
                                    double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidConfig, "epsilon must be positive");
  ScheduleFlow flow(config, admitted, epsilon);
  FlowSchedule out;
  for (int j = 0; j < static_cast<int>(admitted.size()); ++j) {
    if (!flow.include(j)) return out;
  }
  out.feasible = true;
  out.cost = flow.cost();
  out.no_negative_cycle = flow.no_negative_cycle();
  out.schedule = flow.schedule(std::vector<bool>(admitted.size(), true));
  return out;
}

namespace {

// Welfare of one admitted set, summed in request order. Both oracles report
// through this so equal sets give bit-identical welfare.
double subset_welfare(const Instance& q, const std::vector<bool>& admitted, double eps) {
  std::vector<EVRequest> subset;
  double value = 0.0;
  for (std::size_t j = 0; j < q.requests.size(); ++j) {
    if (!admitted[j]) continue;
    subset.push_back(q.requests[j]);
    value += q.requests[j].value;
  }
  if (subset.empty()) return 0.0;
  const auto flow = min_cost_schedule_flow(q.config, subset, eps);
  return flow.feasible ? value - flow.cost : -kInf;
}

}  // namespace

double default_epsilon(const Instance& instance) {
  double emin = kInf;
  for (const auto& r : instance.requests) emin = std::min(emin, r.energy);
  return emin == kInf ? 1.0 : emin / 100.0;
}

Instance quantize(const Instance& instance, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidConfig, "epsilon must be positive");
  auto snap = [&](double x) { return std::round(x / epsilon) * epsilon; };
  Instance out = instance;
  out.config.capacity = snap(out.config.capacity);
  for (auto& r : out.requests) {
    r.rate = snap(r.rate);
    r.energy = std::min(snap(r.energy), r.rate * r.window());
  }
  return out;
}

OracleResult offline_opt(const Instance& instance, std::optional<double> epsilon) {
  const auto& reqs = instance.requests;
  if (static_cast<int>(reqs.size()) > kOfflineOptMaxN) {
    throw Error(ErrorCode::kTooLarge, "offline_opt handles at most " +
                                          std::to_string(kOfflineOptMaxN) + " requests");
  }
  const double eps = epsilon.value_or(default_epsilon(instance));
  const Instance q = quantize(instance, eps);

  Search s;
  s.instance = &q;
  s.order.resize(reqs.size());
  std::iota(s.order.begin(), s.order.end(), 0);
  std::stable_sort(s.order.begin(), s.order.end(), [&](int a, int b) {
    return q.requests[static_cast<std::size_t>(a)].value_density() >
           q.requests[static_cast<std::size_t>(b)].value_density();
  });
  s.optimistic.assign(reqs.size() + 1, 0.0);
  for (std::size_t d = reqs.size(); d > 0; --d) {
    const auto& r = q.requests[static_cast<std::size_t>(s.order[d - 1])];
    s.optimistic[d - 1] =
        s.optimistic[d] + std::max(0.0, r.value - r.energy * min_price(q.config, r));
  }

  const ScheduleFlow root(q.config, q.requests, eps);
  std::vector<bool> chosen(reqs.size(), false);
  s.best_set = chosen;
  s.best_flow = root;
  s.visit(0, root, chosen, 0.0);

  OracleResult out;
  out.welfare = std::max(0.0, subset_welfare(q, s.best_set, eps));
  out.admissions = s.best_set;
  out.schedule = s.best_flow->schedule(s.best_set);
  for (auto it = out.schedule.begin(); it != out.schedule.end();) {
    it = it->second.empty() ? out.schedule.erase(it) : std::next(it);
  }
  out.epsilon = eps;
  out.nodes = s.nodes;
  return out;
}

double enumerate_opt(const Instance& instance, std::optional<double> epsilon) {
  const auto& reqs = instance.requests;
  if (static_cast<int>(reqs.size()) > kEnumerateMaxN) {
    throw Error(ErrorCode::kTooLarge, "enumerate_opt handles at most " +
                                          std::to_string(kEnumerateMaxN) + " requests");
  }
  const double eps = epsilon.value_or(default_epsilon(instance));
  const Instance q = quantize(instance, eps);
  const std::size_t n = reqs.size();
  double best = 0.0;
  std::vector<bool> admitted(n);
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    for (std::size_t j = 0; j < n; ++j) admitted[j] = (mask >> j) & 1u;
    best = std::max(best, subset_welfare(q, admitted, eps));
  }
  return best;
}

}  // namespace evcharge
