#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "evcharge/error.hpp"
#include "evcharge/harness.hpp"
#include "evcharge/oracle.hpp"
#include "support.hpp"

using namespace evcharge;
using evtest::ev;
using evtest::make_instance;

namespace {

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

int count_fields(const std::string& line) {
  return static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
}

TrialConfig small_config(std::uint64_t seed) {
  GeneratorConfig g = default_generator();
  g.n = 8;
  g.horizon = 6;
  g.bounds.Dmax = 3;
  TrialConfig cfg;
  cfg.instance = with_congestion(generate_synthetic(g, seed), 0.4, 0.25);
  cfg.instance_id = "small";
  cfg.trials = 5;
  cfg.seed = seed;
  cfg.epsilon = 0.25;
  return cfg;
}

}  // namespace

TEST_CASE("profit_ratio sentinel") {
  CHECK(profit_ratio(3.0, 1.5) == 2.0);
  CHECK(std::isinf(profit_ratio(2.0, 0.0)));
  CHECK(profit_ratio(0.0, 0.0) == 1.0);
}

TEST_CASE("policy names and axes") {
  CHECK(parse_policies("opa,uboa") == std::vector<PolicyKind>{PolicyKind::kOpa, PolicyKind::kUboa});
  CHECK(parse_policies("ommp").size() == 1);
  CHECK_THROWS_AS(parse_policies("opa,greedy"), Error);
  CHECK(parse_axis("pmax") == SweepAxis::kPmax);
  CHECK(to_string(parse_axis("capacity")) == "capacity");
  CHECK_THROWS_AS(parse_axis("volume"), Error);
}

TEST_CASE("run_trials is deterministic and bounded by the oracle") {
  const auto cfg = small_config(11);
  const auto a = run_trials(cfg);
  const auto b = run_trials(cfg);
  REQUIRE(a.size() == 5);
  std::set<double> oracle_values;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].error.empty());
    REQUIRE(a[i].oracle_welfare);
    CHECK(*a[i].oracle_welfare == *b[i].oracle_welfare);
    oracle_values.insert(*a[i].oracle_welfare);
    REQUIRE(a[i].policies.size() == b[i].policies.size());
    for (std::size_t k = 0; k < a[i].policies.size(); ++k) {
      const auto& pr = a[i].policies[k];
      CHECK(pr.welfare == b[i].policies[k].welfare);
      CHECK(pr.welfare <= *a[i].oracle_welfare + 1e-9);
      REQUIRE(pr.ratio);
      CHECK(*pr.ratio >= 1.0 - 1e-9);
    }
  }
  // Values are redrawn per trial.
  CHECK(oracle_values.size() > 1);

  auto threaded = cfg;
  threaded.threads = 3;
  const auto c = run_trials(threaded);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(*c[i].oracle_welfare == *a[i].oracle_welfare);
}

TEST_CASE("run_trials marks failed trials without aborting") {
  auto cfg = small_config(3);
  // Too many requests for the exact oracle: every trial fails, none throws.
  GeneratorConfig g = default_generator();
  g.n = 30;
  cfg.instance = generate_synthetic(g, 3);
  const auto rows = run_trials(cfg);
  REQUIRE(rows.size() == 5);
  for (const auto& r : rows) {
    CHECK(r.error.find("TOO_LARGE") != std::string::npos);
    CHECK(r.policies.size() == cfg.policies.size());
  }
  auto bad = cfg;
  bad.trials = 0;
  CHECK_THROWS_AS(run_trials(bad), Error);
}

TEST_CASE("OPA ratios stay under the competitive bound when rates are small") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    GeneratorConfig g = default_generator();
    g.n = 10;
    g.horizon = 6;
    g.bounds.Dmax = 3;
    g.demand = DemandModel{0.25, 0.25};
    g.capacity = 5.0;
    TrialConfig cfg;
    cfg.instance = generate_synthetic(g, seed);
    REQUIRE(validate_instance(cfg.instance).warnings.empty());
    cfg.trials = 4;
    cfg.seed = seed;
    cfg.epsilon = 0.25;
    cfg.policies = {PolicyKind::kOpa};
    cfg.certify = true;
    const double bound = cr_bound(make_params(cfg.instance.bounds, cfg.instance.config));
    for (const auto& r : run_trials(cfg)) {
      REQUIRE(r.error.empty());
      CHECK(r.classification.has_value());
      CHECK(r.certified.has_value());
      CHECK(*r.policies[0].ratio <= bound + 1e-6);
    }
  }
}

TEST_CASE("zero-welfare trials carry the infinite sentinel") {
  // One EV worth more than its energy cost; with C = 0.25 and demand 1 over a
  // single slot nothing fits.
  const Bounds b{1.0, 3.0, 1, 1, 0.0};
  auto inst = make_instance(1, 0.25, {0.0}, b, {ev(0, 0, 1, 0.25, 0.25, 0.7)});
  TrialConfig cfg;
  cfg.instance = inst;
  cfg.redraw = ValueRedraw::kNone;
  cfg.policies = {PolicyKind::kOpa};
  cfg.epsilon = 0.25;
  const auto rows = run_trials(cfg);
  REQUIRE(rows[0].error.empty());
  // v below L E: OPA rejects while the oracle earns 0.7.
  CHECK(rows[0].policies[0].welfare == 0.0);
  CHECK(rows[0].policies[0].infinite());
  CHECK(*rows[0].oracle_welfare == doctest::Approx(0.7));

  const std::vector<CdfRow> cdf = {{0.3, PolicyKind::kOpa, 1.5},
                                   {0.3, PolicyKind::kOpa, std::numeric_limits<double>::infinity()},
                                   {0.3, PolicyKind::kOpa, 2.5}};
  CHECK(mean_ratio(cdf, 0.3, PolicyKind::kOpa) == doctest::Approx(2.0));
  CHECK(fraction_below(cdf, 0.3, PolicyKind::kOpa, 2.0) == doctest::Approx(1.0 / 3.0));
  CHECK(std::isnan(mean_ratio(cdf, 0.6, PolicyKind::kOpa)));
}

TEST_CASE("busy slots and congestion capacity") {
  const Bounds b{1.0, 2.0, 1, 2, 0.0};
  const auto inst = make_instance(8, 5.0, std::vector<double>(8, 0.0), b,
                                  {ev(0, 1, 3, 1.0, 1.0, 1.0), ev(1, 2, 4, 2.0, 1.0, 2.0),
                                   ev(2, 6, 7, 1.0, 1.0, 1.0)});
  CHECK(busy_slots(inst) == 4);
  // 0.5 * 4 / 4 = 0.5.
  CHECK(with_congestion(inst, 0.5, 0.25).config.capacity == 0.5);
  // 0.3 * 4 / 4 = 0.3 -> 0.25.
  CHECK(with_congestion(inst, 0.3, 0.25).config.capacity == 0.25);
  // Never below one quantum.
  CHECK(with_congestion(inst, 0.01, 0.25).config.capacity == 0.25);
  CHECK(with_congestion(inst, 0.5, 0.25).requests == inst.requests);
  CHECK_THROWS_AS(with_congestion(inst, 0.0, 0.25), Error);
}

TEST_CASE("congestion_study") {
  GeneratorConfig g = default_generator();
  g.n = 6;
  g.horizon = 4;
  g.bounds.Dmax = 3;
  std::vector<Instance> sources = {generate_synthetic(g, 1), generate_synthetic(g, 2)};
  CongestionConfig cfg;
  cfg.trial.trials = 3;
  cfg.capacity_quantum = 0.25;
  cfg.trial.epsilon = 0.25;
  CHECK(congestion_study(sources, cfg).empty());

  cfg.levels = {0.6, 0.3};
  const auto rows = congestion_study(sources, cfg);
  CHECK(rows.size() == 2 * 2 * 3 * all_policies().size());
  for (double level : cfg.levels) {
    for (PolicyKind p : all_policies()) {
      double prev = 0.0;
      int n = 0;
      for (const auto& r : rows) {
        if (r.level != level || r.policy != p) continue;
        CHECK(r.ratio >= prev);
        CHECK(r.ratio >= 1.0 - 1e-9);
        prev = r.ratio;
        ++n;
      }
      CHECK(n == 6);
      const double f = fraction_below(rows, level, p, 2.0);
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
    }
  }
  cfg.levels = {1.5};
  CHECK_THROWS_AS(congestion_study(sources, cfg), Error);
}

TEST_CASE("parameter_sweep rows") {
  SweepConfig cfg;
  cfg.axis = SweepAxis::kRho;
  cfg.grid = {2.0, 4.0, 8.0};
  cfg.generator = default_generator();
  cfg.generator.n = 6;
  cfg.generator.horizon = 6;
  cfg.instances = 2;
  cfg.trial.trials = 2;
  cfg.trial.policies = {PolicyKind::kOpa, PolicyKind::kUboa};
  const auto rows = parameter_sweep(cfg);
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) {
    CHECK(r.skipped_reason.empty());
    CHECK(r.n_trials + r.n_inf == 4);
    if (r.mean_ratio) CHECK(*r.mean_ratio >= 1.0 - 1e-9);
  }

  // alpha = 1 + 2 ln theta along the rho axis (Dmax / Dmin = 2, pmax = 0.5).
  for (double rho : cfg.grid) {
    Bounds b = cfg.generator.bounds;
    b.U = rho * b.L;
    const auto p = make_params(b, StationConfig{1, 1.0, {0.0}});
    CHECK(p.theta == doctest::Approx(rho * 2.0 / 0.5));
    CHECK(p.alpha == doctest::Approx(1.0 + 2.0 * std::log(rho * 4.0)));
  }

  SweepConfig pm = cfg;
  pm.axis = SweepAxis::kPmax;
  pm.grid = {0.2, 0.96};
  const auto prow = parameter_sweep(pm);
  REQUIRE(prow.size() == 4);
  CHECK(prow[0].skipped_reason.empty());
  CHECK_FALSE(prow[2].mean_ratio.has_value());
  CHECK_FALSE(prow[2].skipped_reason.empty());

  // (U/L)(Dmax/Dmin) < 2 is skipped, not fatal.
  SweepConfig low = cfg;
  low.grid = {0.75};
  const auto lrow = parameter_sweep(low);
  REQUIRE(lrow.size() == 2);
  CHECK_FALSE(lrow[0].mean_ratio.has_value());
  CHECK_FALSE(lrow[0].skipped_reason.empty());
}

TEST_CASE("CSV schemas") {
  TrialResult r;
  r.instance_id = "day3";
  r.trial = 1;
  r.oracle_welfare = 4.0;
  r.classification = Classification::kCapacityFree;
  r.certified = false;
  r.policies = {{PolicyKind::kOpa, 2.0, 2.0}, {PolicyKind::kUboa, 0.0, std::numeric_limits<double>::infinity()}};
  std::ostringstream trial;
  write_trial_csv(trial, {r});
  const auto tl = lines(trial.str());
  REQUIRE(tl.size() == 3);
  CHECK(tl[0] == "instance_id,policy,welfare,oracle_welfare,ratio,classification,certified");
  CHECK(tl[1] == "day3-t1,opa,2,4,2,CAPACITY_FREE,false");
  CHECK(tl[2] == "day3-t1,uboa,0,4,inf,CAPACITY_FREE,false");

  std::ostringstream cdf;
  write_cdf_csv(cdf, {{0.3, PolicyKind::kPboa, 1.25}});
  CHECK(lines(cdf.str()) == std::vector<std::string>{"level,policy,ratio", "0.3,pboa,1.25"});

  std::ostringstream sweep;
  write_sweep_csv(sweep, {{SweepAxis::kDelta, 2.0, PolicyKind::kOmmp, 1.5, 8, 1, ""},
                          {SweepAxis::kDelta, 3.0, PolicyKind::kOmmp, std::nullopt, 0, 0, "x"}});
  const auto sl = lines(sweep.str());
  CHECK(sl[0] == "axis,value,policy,mean_ratio,n_trials,n_inf");
  CHECK(sl[1] == "delta,2,ommp,1.5,8,1");
  CHECK(sl[2] == "delta,3,ommp,nan,0,0");
  for (const auto& l : sl) CHECK(count_fields(l) == 6);
}

TEST_CASE("parallel_for covers every index once") {
  std::vector<int> hits(50, 0);
  parallel_for(50, 4, [&](int i) { hits[static_cast<std::size_t>(i)] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS(parallel_for(5, 2, [](int i) {
    if (i == 3) throw Error(ErrorCode::kInvalidConfig, "boom");
  }));
}
