#include "evcharge/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "evcharge/certify.hpp"
#include "evcharge/error.hpp"
#include "evcharge/harness.hpp"
#include "evcharge/oracle.hpp"
#include "evcharge/random.hpp"
#include "evcharge/serialize.hpp"

namespace evcharge {

namespace {

struct GenOptions {
  std::string kind = "synthetic";
  std::string sessions;
  int n = 0;
  int horizon = 0;
  double capacity = 0.0;
  double congestion = 0.3;
  double L = 0.0, U = 0.0, pmax = -1.0;
  int dmin = 0, dmax = 0;
  double rate = 0.0;
  double quantum = -1.0;
  int t_prime = -1;
  double skew = 1.0;
};

// Applies overrides on top of the shared synthetic defaults.
GeneratorConfig generator_from(const GenOptions& o) {
  GeneratorConfig g = default_generator();
  if (o.n > 0) g.n = o.n;
  if (o.horizon > 0) g.horizon = o.horizon;
  if (o.L > 0) g.bounds.L = o.L;
  if (o.U > 0) g.bounds.U = o.U;
  if (o.dmin > 0) g.bounds.Dmin = o.dmin;
  if (o.dmax > 0) g.bounds.Dmax = o.dmax;
  if (o.pmax >= 0) g.bounds.pmax = o.pmax;
  if (o.rate > 0) g.demand.rate = o.rate;
  if (o.quantum >= 0) g.demand.energy_quantum = o.quantum;
  g.value_skew = o.skew;
  g.price.mean = g.price.amplitude = g.bounds.pmax / 2.0;
  g.price.period = g.horizon;
  return g;
}

double lattice(const GeneratorConfig& g) {
  return g.demand.energy_quantum > 0.0 ? g.demand.energy_quantum : g.demand.rate;
}

// Synthetic instance; capacity is fixed by --capacity or derived from
// --congestion.
Instance synthetic_instance(const GenOptions& o, std::uint64_t seed) {
  GeneratorConfig g = generator_from(o);
  g.capacity = o.capacity > 0 ? o.capacity : lattice(g);
  Instance inst = generate_synthetic(g, seed);
  if (o.capacity <= 0) inst = with_congestion(inst, o.congestion, lattice(g));
  return inst;
}

Instance make_instance(const GenOptions& o, std::uint64_t seed) {
  if (o.kind == "synthetic") return synthetic_instance(o, seed);
  if (o.kind == "worst-case") {
    const GeneratorConfig g = generator_from(o);
    const double C = o.capacity > 0 ? o.capacity : 10.0;
    const double R = o.rate > 0 ? o.rate : 1.0;
    Bounds b = g.bounds;
    if (o.dmax <= 0) b.Dmax = b.Dmin;
    const int tp = o.t_prime >= 0 ? o.t_prime : b.Dmin;
    return generate_worst_case(C, b.Dmin, R, b, tp);
  }
  if (o.kind == "sessions") {
    if (o.sessions.empty()) throw Error(ErrorCode::kInvalidConfig, "--sessions is required");
    const GeneratorConfig g = generator_from(o);
    ValueModel vm{g.bounds.L, g.bounds.U, seed};
    StationConfig cfg;
    cfg.horizon = g.horizon;
    cfg.capacity = o.capacity > 0 ? o.capacity : 1.0;
    cfg.prices = time_of_use_prices(g.price, cfg.horizon, g.bounds.pmax);
    std::vector<std::string> warnings;
    Instance inst = ingest_sessions(o.sessions, vm, cfg, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return inst;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown instance kind '" + o.kind + "'");
}

void add_generator_options(CLI::App* cmd, GenOptions& o) {
  cmd->add_option("--n", o.n, "Number of EVs");
  cmd->add_option("--horizon", o.horizon, "Number of slots");
  cmd->add_option("--capacity", o.capacity, "Station capacity (overrides --congestion)");
  cmd->add_option("--congestion", o.congestion, "Capacity as a fraction of busy-slot demand");
  cmd->add_option("--L", o.L, "Lowest value density");
  cmd->add_option("--U", o.U, "Highest value density");
  cmd->add_option("--dmin", o.dmin, "Shortest availability window");
  cmd->add_option("--dmax", o.dmax, "Longest availability window");
  cmd->add_option("--pmax", o.pmax, "Highest energy price");
  cmd->add_option("--rate", o.rate, "Charging rate limit");
  cmd->add_option("--quantum", o.quantum, "Energy lattice (0 for continuous energies)");
  cmd->add_option("--skew", o.skew, "Value-density skew (1 = uniform on [L, U])");
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidConfig, "not a number: '" + cell + "'");
    }
  }
  return out;
}

template <typename Writer>
void emit(const std::string& path, Writer&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  write(out);
}

void print_report(std::ostream& out, const CertReport& r) {
  auto line = [&](const char* name, const CheckResult& c) {
    out << "  " << name << ": " << (c.ok ? "ok" : "FAIL") << " (" << c.violations << "/"
        << c.checked << " violated, worst excess " << c.worst_margin << ")\n";
    for (const auto& e : c.examples) out << "    " << e << '\n';
  };
  out << "classification: " << to_string(r.classification) << '\n';
  line("trace consistency", r.consistency);
  line("dual nonnegativity", r.dual.nonnegativity);
  line("dual value constraint", r.dual.value_constraint);
  line("dual slot constraint", r.dual.slot_constraint);
  line("kkt stationarity", r.kkt.stationarity);
  line("kkt slackness", r.kkt.slackness);
  line("kkt identity", r.kkt.identity);
  out << "  primal-dual (" << (r.pd_asserted ? "asserted" : "informational")
      << (r.pd.degenerate_k ? ", DEGENERATE_K" : "") << ", k=" << r.pd.k_index << ")\n";
  line("pd initial", r.pd.initial);
  line("pd incremental", r.pd.incremental);
  out << "cr bound: " << r.cr_bound << '\n';
  out << "certified: " << (r.passed() ? "yes" : "no") << '\n';
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Online posted pricing for EV charging: simulation, oracle and certification"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out_path;
  std::string policies = "opa,uboa,pboa,ommp";
  double epsilon = 0.0;
  int trials = 1;
  int threads = 1;
  GenOptions gen;

  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic, worst-case or ingested instance");
  gen_cmd->add_option("--kind", gen.kind, "synthetic | worst-case | sessions");
  gen_cmd->add_option("--sessions", gen.sessions, "Session CSV for --kind sessions");
  gen_cmd->add_option("--t-prime", gen.t_prime, "Meeting slot of the worst-case groups");
  gen_cmd->add_option("--seed", seed, "Random seed");
  gen_cmd->add_option("--out", out_path, "Instance JSON path")->required();
  add_generator_options(gen_cmd, gen);

  std::string instance_path;
  std::string trace_path;
  std::string oracle_mode = "exact";
  bool certify_flag = false;
  auto* sim = app.add_subcommand("simulate", "Run policies on an instance and write trial rows");
  sim->add_option("--instance", instance_path, "Instance JSON (synthetic if omitted)");
  sim->add_option("--policies", policies, "Comma-separated policies");
  sim->add_option("--seed", seed, "Master seed");
  sim->add_option("--trials", trials, "Value redraws")->check(CLI::PositiveNumber);
  sim->add_option("--epsilon", epsilon, "Oracle energy quantum");
  sim->add_option("--oracle", oracle_mode, "exact | skip")->check(CLI::IsMember({"exact", "skip"}));
  sim->add_flag("--certify", certify_flag, "Certify every OPA trace");
  sim->add_option("--out", out_path, "Trial CSV path (stdout if omitted)");
  sim->add_option("--trace", trace_path, "Write the OPA trace of the first trial here");
  sim->add_option("--threads", threads, "Worker threads");
  add_generator_options(sim, gen);

  auto* oracle_cmd = app.add_subcommand("oracle", "Offline optimum of an instance");
  oracle_cmd->add_option("--instance", instance_path, "Instance JSON")->required();
  oracle_cmd->add_option("--epsilon", epsilon, "Energy quantum (default E_min/100)");
  oracle_cmd->add_option("--out", out_path, "Result JSON path (stdout if omitted)");

  bool strict = false;
  auto* cert_cmd = app.add_subcommand("certify", "Check the dual certificate of an OPA trace");
  cert_cmd->add_option("--trace", trace_path, "Trace JSON")->required();
  cert_cmd->add_flag("--strict", strict, "Exit with status 2 unless every check passes");
  cert_cmd->add_option("--out", out_path, "Report JSON path");

  std::string axis;
  std::string grid;
  int instances = 2;
  auto* sweep_cmd = app.add_subcommand("sweep", "Mean profit ratio along one parameter axis");
  sweep_cmd->add_option("--axis", axis, "capacity | rho | delta | pmax")->required();
  sweep_cmd->add_option("--grid", grid, "Comma-separated axis values")->required();
  sweep_cmd->add_option("--instances", instances, "Instances per grid point")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--trials", trials, "Value redraws per instance")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--policies", policies, "Comma-separated policies");
  sweep_cmd->add_option("--seed", seed, "Master seed");
  sweep_cmd->add_option("--out", out_path, "Sweep CSV path (stdout if omitted)");
  sweep_cmd->add_option("--threads", threads, "Worker threads");
  add_generator_options(sweep_cmd, gen);

  std::string levels = "0.6,0.3,0.15";
  auto* cong_cmd = app.add_subcommand("congestion", "Profit-ratio distribution per congestion level");
  cong_cmd->add_option("--levels", levels, "Comma-separated capacity fractions");
  cong_cmd->add_option("--instances", instances, "Synthetic instances")->check(CLI::PositiveNumber);
  cong_cmd->add_option("--trials", trials, "Value redraws per instance")->check(CLI::PositiveNumber);
  cong_cmd->add_option("--policies", policies, "Comma-separated policies");
  cong_cmd->add_option("--seed", seed, "Master seed");
  cong_cmd->add_option("--out", out_path, "CDF CSV path (stdout if omitted)");
  cong_cmd->add_option("--threads", threads, "Worker threads");
  add_generator_options(cong_cmd, gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (gen_cmd->parsed()) {
      save_instance(out_path, make_instance(gen, seed));
      return 0;
    }

    if (sim->parsed()) {
      TrialConfig cfg;
      cfg.policies = parse_policies(policies);
      cfg.seed = seed;
      cfg.trials = trials;
      cfg.threads = threads;
      cfg.exact_oracle = oracle_mode == "exact";
      cfg.certify = certify_flag;
      if (instance_path.empty()) {
        cfg.instance = synthetic_instance(gen, seed);
        cfg.instance_id = "synthetic" + std::to_string(seed);
        cfg.epsilon = lattice(generator_from(gen));
        cfg.value_skew = gen.skew;
      } else {
        cfg.instance = load_instance(instance_path);
        cfg.instance_id = std::filesystem::path(instance_path).stem().string();
      }
      if (epsilon > 0) cfg.epsilon = epsilon;
      const auto rows = run_trials(cfg);
      for (const auto& r : rows) {
        if (!r.error.empty()) std::cerr << "trial " << r.trial << ": " << r.error << '\n';
      }
      emit(out_path, [&](std::ostream& os) { write_trial_csv(os, rows); });
      if (!trace_path.empty()) {
        const Instance inst = trial_instance(cfg, 0);
        const PricingParams params = make_params(inst.bounds, inst.config);
        save_trace(trace_path, Trace{inst, params, run_opa(inst, params, true).trace});
      }
      return 0;
    }

    if (oracle_cmd->parsed()) {
      const Instance inst = load_instance(instance_path);
      const OracleResult r =
          offline_opt(inst, epsilon > 0 ? std::optional<double>(epsilon) : std::nullopt);
      nlohmann::json doc{{"welfare", r.welfare},
                         {"epsilon", r.epsilon},
                         {"admissions", r.admissions},
                         {"nodes", r.nodes}};
      nlohmann::json sched = nlohmann::json::object();
      for (const auto& [id, alloc] : r.schedule) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& e : alloc) a.push_back({{"slot", e.slot}, {"y", e.energy}});
        sched[std::to_string(id)] = a;
      }
      doc["schedule"] = sched;
      emit(out_path, [&](std::ostream& os) { os << doc.dump(1) << '\n'; });
      return 0;
    }

    if (cert_cmd->parsed()) {
      const Trace trace = load_trace(trace_path);
      const CertReport report = certify_trace(trace);
      print_report(std::cout, report);
      if (!out_path.empty()) write_json(out_path, nlohmann::json(report));
      return strict && !report.passed() ? 2 : 0;
    }

    if (sweep_cmd->parsed()) {
      SweepConfig cfg;
      cfg.axis = parse_axis(axis);
      cfg.grid = parse_list(grid);
      cfg.generator = generator_from(gen);
      cfg.generator.capacity = lattice(cfg.generator);
      cfg.congestion = gen.congestion;
      cfg.instances = instances;
      cfg.trial.policies = parse_policies(policies);
      cfg.trial.trials = trials;
      cfg.trial.seed = seed;
      cfg.trial.threads = threads;
      const auto rows = parameter_sweep(cfg);
      for (const auto& r : rows) {
        if (!r.skipped_reason.empty() && r.policy == cfg.trial.policies.front()) {
          std::cerr << "skipped " << to_string(cfg.axis) << "=" << r.value << ": "
                    << r.skipped_reason << '\n';
        }
      }
      emit(out_path, [&](std::ostream& os) { write_sweep_csv(os, rows); });
      return 0;
    }

    if (cong_cmd->parsed()) {
      const GeneratorConfig g = generator_from(gen);
      std::vector<Instance> sources;
      for (int i = 0; i < instances; ++i) {
        GeneratorConfig gi = g;
        gi.capacity = lattice(g);
        sources.push_back(generate_synthetic(gi, mix_seed(seed, static_cast<std::uint64_t>(i))));
      }
      CongestionConfig cfg;
      cfg.levels = parse_list(levels);
      cfg.trial.policies = parse_policies(policies);
      cfg.trial.trials = trials;
      cfg.trial.seed = seed;
      cfg.trial.threads = threads;
      cfg.trial.epsilon = lattice(g);
      cfg.trial.value_skew = g.value_skew;
      const auto rows = congestion_study(sources, cfg);
      emit(out_path, [&](std::ostream& os) { write_cdf_csv(os, rows); });
      for (double level : cfg.levels) {
        for (PolicyKind p : cfg.trial.policies) {
          std::cerr << "level " << level << " " << to_string(p)
                    << ": mean ratio " << mean_ratio(rows, level, p) << ", fraction below 2 "
                    << fraction_below(rows, level, p, 2.0) << '\n';
        }
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace evcharge
