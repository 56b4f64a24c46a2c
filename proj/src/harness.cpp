#include "evcharge/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "evcharge/error.hpp"
#include "evcharge/oracle.hpp"
#include "evcharge/random.hpp"

namespace evcharge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

bool needs_params(const TrialConfig& cfg) {
  return cfg.certify || std::any_of(cfg.policies.begin(), cfg.policies.end(), [](PolicyKind p) {
           return p == PolicyKind::kOpa || p == PolicyKind::kOmmp;
         });
}

}  // namespace

std::string_view to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::kOpa: return "opa";
    case PolicyKind::kUboa: return "uboa";
    case PolicyKind::kPboa: return "pboa";
    case PolicyKind::kOmmp: return "ommp";
  }
  return "unknown";
}

const std::vector<PolicyKind>& all_policies() {
  static const std::vector<PolicyKind> all = {PolicyKind::kOpa, PolicyKind::kUboa,
                                              PolicyKind::kPboa, PolicyKind::kOmmp};
  return all;
}

std::vector<PolicyKind> parse_policies(const std::string& list) {
  std::vector<PolicyKind> out;
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    const auto& all = all_policies();
    const auto it = std::find_if(all.begin(), all.end(),
                                 [&](PolicyKind p) { return to_string(p) == name; });
    if (it == all.end()) throw Error(ErrorCode::kInvalidConfig, "unknown policy '" + name + "'");
    if (std::find(out.begin(), out.end(), *it) == out.end()) out.push_back(*it);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidConfig, "no policies given");
  return out;
}

TrialOutcome run_policy(PolicyKind policy, const Instance& instance, bool trace) {
  switch (policy) {
    case PolicyKind::kOpa:
      return run_opa(instance, make_params(instance.bounds, instance.config), trace);
    case PolicyKind::kUboa: return run_uboa(instance);
    case PolicyKind::kPboa: return run_pboa(instance);
    case PolicyKind::kOmmp:
      return run_ommp(instance, make_params(instance.bounds, instance.config));
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown policy");
}

double profit_ratio(double oracle_welfare, double policy_welfare) {
  if (policy_welfare > 0.0) return oracle_welfare / policy_welfare;
  // Nothing to gain and nothing earned is a perfect run.
  return oracle_welfare <= 0.0 ? 1.0 : kInf;
}

Instance trial_instance(const TrialConfig& cfg, int trial) {
  const std::uint64_t seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(trial));
  switch (cfg.redraw) {
    case ValueRedraw::kNone: return cfg.instance;
    case ValueRedraw::kUniform: return redraw_values(cfg.instance, seed, cfg.value_skew);
    case ValueRedraw::kSessionModel: {
      ValueModel vm = cfg.value_model;
      vm.noise_seed = seed;
      return resample_session_values(cfg.instance, vm);
    }
  }
  return cfg.instance;
}

std::vector<TrialResult> run_trials(const TrialConfig& cfg) {
  if (cfg.trials < 1) throw Error(ErrorCode::kInvalidConfig, "trials must be at least 1");
  std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
  parallel_for(cfg.trials, cfg.threads, [&](int i) {
    TrialResult& r = results[static_cast<std::size_t>(i)];
    r.instance_id = cfg.instance_id;
    r.trial = i;
    try {
      const Instance inst = trial_instance(cfg, i);
      std::optional<PricingParams> params;
      if (needs_params(cfg)) params = make_params(inst.bounds, inst.config);
      for (PolicyKind p : cfg.policies) {
        PolicyResult pr;
        pr.policy = p;
        if (p == PolicyKind::kOpa) {
          const TrialOutcome out = run_opa(inst, *params, /*trace=*/true);
          pr.welfare = out.welfare;
          const Trace trace{inst, *params, out.trace};
          r.classification = classify_trace(trace);
          if (cfg.certify) r.certified = certify_trace(trace).passed();
        } else {
          pr.welfare = run_policy(p, inst).welfare;
        }
        r.policies.push_back(pr);
      }
      if (cfg.exact_oracle) {
        const double opt = offline_opt(inst, cfg.epsilon).welfare;
        r.oracle_welfare = opt;
        for (auto& pr : r.policies) pr.ratio = profit_ratio(opt, pr.welfare);
      }
    } catch (const Error& e) {
      r.error = e.what();
    }
  });
  return results;
}

int busy_slots(const Instance& instance) {
  std::vector<bool> busy(static_cast<std::size_t>(instance.config.horizon), false);
  for (const auto& r : instance.requests) {
    for (Slot t = r.arrival; t < r.departure; ++t) busy[static_cast<std::size_t>(t)] = true;
  }
  return static_cast<int>(std::count(busy.begin(), busy.end(), true));
}

Instance with_congestion(const Instance& instance, double level, double quantum) {
  if (!(level > 0.0) || !(quantum > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "congestion level and quantum must be positive");
  }
  Instance out = instance;
  const int busy = busy_slots(instance);
  double demand = 0.0;
  for (const auto& r : instance.requests) demand += r.energy;
  const double raw = busy > 0 ? level * demand / busy : quantum;
  out.config.capacity = std::max(1.0, std::round(raw / quantum)) * quantum;
  return out;
}

std::vector<CdfRow> congestion_study(const std::vector<Instance>& sources,
                                     const CongestionConfig& cfg) {
  std::vector<CdfRow> rows;
  for (double level : cfg.levels) {
    if (!(level > 0.0 && level <= 1.0)) {
      throw Error(ErrorCode::kInvalidConfig, "congestion levels must lie in (0, 1]");
    }
    std::map<PolicyKind, std::vector<double>> ratios;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const Instance& src = sources[s];
      double quantum = cfg.capacity_quantum.value_or(0.0);
      if (!(quantum > 0.0)) quantum = cfg.trial.epsilon.value_or(default_epsilon(src));
      TrialConfig tc = cfg.trial;
      tc.instance = with_congestion(src, level, quantum);
      tc.instance_id = "source" + std::to_string(s);
      tc.seed = mix_seed(cfg.trial.seed, s);
      tc.exact_oracle = true;
      for (const auto& r : run_trials(tc)) {
        if (!r.error.empty()) continue;
        for (const auto& pr : r.policies) ratios[pr.policy].push_back(*pr.ratio);
      }
    }
    for (auto& [policy, list] : ratios) {
      std::sort(list.begin(), list.end());
      for (double x : list) rows.push_back({level, policy, x});
    }
  }
  return rows;
}

double fraction_below(const std::vector<CdfRow>& rows, double level, PolicyKind policy,
                      double threshold) {
  int total = 0, below = 0;
  for (const auto& r : rows) {
    if (r.level != level || r.policy != policy) continue;
    ++total;
    if (r.ratio < threshold) ++below;
  }
  return total == 0 ? 0.0 : static_cast<double>(below) / total;
}

double mean_ratio(const std::vector<CdfRow>& rows, double level, PolicyKind policy) {
  double sum = 0.0;
  int count = 0;
  for (const auto& r : rows) {
    if (r.level != level || r.policy != policy || std::isinf(r.ratio)) continue;
    sum += r.ratio;
    ++count;
  }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / count;
}

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kCapacity: return "capacity";
    case SweepAxis::kRho: return "rho";
    case SweepAxis::kDelta: return "delta";
    case SweepAxis::kPmax: return "pmax";
  }
  return "unknown";
}

SweepAxis parse_axis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::kCapacity, SweepAxis::kRho, SweepAxis::kDelta, SweepAxis::kPmax}) {
    if (to_string(a) == name) return a;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown sweep axis '" + name + "'");
}

GeneratorConfig default_generator() {
  GeneratorConfig g;
  g.n = 12;
  g.horizon = 12;
  g.capacity = 4.0;
  g.bounds = Bounds{1.0, 2.0, 2, 4, 0.5};
  g.price = PriceModel{0.25, 0.25, 12.0, 0.0};
  g.demand = DemandModel{1.0, 0.25};
  return g;
}

std::vector<SweepRow> parameter_sweep(const SweepConfig& cfg) {
  std::vector<SweepRow> rows;
  for (std::size_t gi = 0; gi < cfg.grid.size(); ++gi) {
    const double v = cfg.grid[gi];
    GeneratorConfig gen = cfg.generator;
    double congestion = cfg.congestion;
    std::string skipped;
    switch (cfg.axis) {
      case SweepAxis::kCapacity: congestion = v; break;
      case SweepAxis::kRho: gen.bounds.U = v * gen.bounds.L; break;
      case SweepAxis::kDelta:
        gen.bounds.Dmax = static_cast<int>(std::lround(v * gen.bounds.Dmin));
        gen.horizon = std::max(gen.horizon, gen.bounds.Dmax);
        break;
      case SweepAxis::kPmax:
        if (v > kSweepPmaxGuard * gen.bounds.L) {
          skipped = "pmax above " + fmt(kSweepPmaxGuard) + " L";
        }
        gen.bounds.pmax = v;
        gen.price.mean = gen.price.amplitude = v / 2.0;
        break;
    }
    if (skipped.empty()) {
      try {
        check_bounds(gen.bounds);
        if (!(congestion > 0.0 && congestion <= 1.0)) {
          throw Error(ErrorCode::kInvalidConfig, "capacity level outside (0, 1]");
        }
      } catch (const Error& e) {
        skipped = e.what();
      }
    }

    std::map<PolicyKind, SweepRow> acc;
    std::map<PolicyKind, double> sums;
    for (PolicyKind p : cfg.trial.policies) acc[p] = SweepRow{cfg.axis, v, p, std::nullopt, 0, 0, skipped};

    if (skipped.empty()) {
      for (int i = 0; i < cfg.instances; ++i) {
        const std::uint64_t seed = mix_seed(cfg.trial.seed, gi * 100003 + static_cast<std::uint64_t>(i));
        Instance inst = generate_synthetic(gen, seed);
        const double quantum =
            gen.demand.energy_quantum > 0.0 ? gen.demand.energy_quantum : default_epsilon(inst);
        TrialConfig tc = cfg.trial;
        tc.value_skew = gen.value_skew;
        tc.instance = with_congestion(inst, congestion, quantum);
        tc.instance_id = "grid" + std::to_string(gi) + "-inst" + std::to_string(i);
        tc.seed = mix_seed(seed, 1);
        tc.exact_oracle = true;
        if (!tc.epsilon && gen.demand.energy_quantum > 0.0) tc.epsilon = gen.demand.energy_quantum;
        for (const auto& r : run_trials(tc)) {
          if (!r.error.empty()) continue;
          for (const auto& pr : r.policies) {
            auto& row = acc[pr.policy];
            if (pr.infinite()) {
              ++row.n_inf;
            } else {
              ++row.n_trials;
              sums[pr.policy] += *pr.ratio;
            }
          }
        }
      }
      for (auto& [p, row] : acc) {
        if (row.n_trials > 0) row.mean_ratio = sums[p] / row.n_trials;
      }
    }
    for (PolicyKind p : cfg.trial.policies) rows.push_back(acc[p]);
  }
  return rows;
}

void write_trial_csv(std::ostream& out, const std::vector<TrialResult>& rows) {
  std::vector<const TrialResult*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const TrialResult* a, const TrialResult* b) {
    return std::tie(a->instance_id, a->trial) < std::tie(b->instance_id, b->trial);
  });
  out << "instance_id,policy,welfare,oracle_welfare,ratio,classification,certified\n";
  for (const TrialResult* r : sorted) {
    const std::string id = r->instance_id + "-t" + std::to_string(r->trial);
    const std::string cls = !r->error.empty()    ? "ERROR"
                            : r->classification ? std::string(to_string(*r->classification))
                                                : "NA";
    const std::string cert = r->certified ? (*r->certified ? "true" : "false") : "NA";
    const std::string oracle = r->oracle_welfare ? fmt(*r->oracle_welfare) : "nan";
    for (const auto& pr : r->policies) {
      out << id << ',' << to_string(pr.policy) << ',' << fmt(pr.welfare) << ',' << oracle << ','
          << (pr.ratio ? fmt(*pr.ratio) : "nan") << ',' << cls << ',' << cert << '\n';
    }
  }
}

void write_cdf_csv(std::ostream& out, const std::vector<CdfRow>& rows) {
  out << "level,policy,ratio\n";
  for (const auto& r : rows) {
    out << fmt(r.level) << ',' << to_string(r.policy) << ',' << fmt(r.ratio) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "axis,value,policy,mean_ratio,n_trials,n_inf\n";
  for (const auto& r : rows) {
    out << to_string(r.axis) << ',' << fmt(r.value) << ',' << to_string(r.policy) << ','
        << (r.mean_ratio ? fmt(*r.mean_ratio) : "nan") << ',' << r.n_trials << ',' << r.n_inf
        << '\n';
  }
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace evcharge
