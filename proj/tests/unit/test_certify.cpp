#include <doctest.h>

#include <cmath>
#include <numbers>

#include "evcharge/certify.hpp"
#include "evcharge/error.hpp"
#include "evcharge/random.hpp"
#include "support.hpp"

using namespace evcharge;
using evtest::ev;
using evtest::make_instance;

namespace {

// theta = 8 with C = 10.
const Bounds kTheta8{1.0, 2.0, 1, 2, 0.5};

Trace trace_of(const Instance& inst) {
  const auto params = make_params(inst.bounds, inst.config);
  return Trace{inst, params, run_opa(inst, params, true).trace};
}

double reference_phi(const PricingParams& p, double pt, double w) {
  if (w < p.beta) return p.bounds.L;
  return (p.bounds.L - pt) * std::exp(p.alpha * w / p.capacity - 1.0) + pt;
}

// Wraps a candidate computed against `w` as a trace event.
TraceEvent event_from(const PricingParams& p, const UtilizationProfile& w,
                      const EVRequest& req) {
  const auto c = schedule_candidate(p, w, req);
  TraceEvent e;
  e.id = req.id;
  e.feasible = c.feasible;
  e.admitted = c.feasible;
  e.mu_hat = c.mu_hat;
  e.capacity_pressed = c.capacity_pressed;
  e.y = c.y;
  e.sigma_hat = c.sigma_hat;
  for (const auto& s : c.y) {
    e.w_before.push_back(w[s.slot]);
    e.w_after.push_back(w[s.slot] + s.energy);
  }
  return e;
}

Instance random_small(Rng& rng, int n, int T, double capacity) {
  GeneratorConfig g;
  g.n = n;
  g.horizon = T;
  g.capacity = capacity;
  g.bounds = Bounds{1.0, rng.uniform(2.0, 6.0), 1, std::min(T, 3), 0.5};
  g.price = PriceModel{0.25, 0.25, static_cast<double>(T), rng.uniform(0.0, 6.0)};
  g.demand = DemandModel{1.0, 0.25};
  return generate_synthetic(g, rng.uniform_int(0, 1 << 30));
}

}  // namespace

TEST_CASE("cr_bound closed form") {
  const auto p8 = make_params(kTheta8, StationConfig{2, 10.0, {0.5, 0.5}});
  const double sqrt_e = std::exp(0.5);
  CHECK(6.0 * sqrt_e == doctest::Approx(9.8923).epsilon(1e-4));
  const double third8 = 3.0 * 8.0 * p8.alpha / std::exp(p8.alpha / 2.0 - 1.0);
  CHECK(third8 == doctest::Approx(25.517).epsilon(1e-4));
  CHECK(cr_bound(p8) == doctest::Approx(third8).epsilon(1e-14));
  CHECK(cr_bound(p8) == doctest::Approx(25.52).epsilon(1e-3));

  const auto p2 = make_params(Bounds{1.0, 2.0, 1, 1, 0.0}, StationConfig{1, 1.0, {0.0}});
  CHECK(cr_bound(p2) == doctest::Approx(11.81).epsilon(1e-3));

  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double U = rng.uniform(1.0, 200.0);
    const int Dmax = static_cast<int>(rng.uniform_int(1, 12));
    const Bounds b{1.0, std::max(U, 2.0), 1, Dmax, rng.uniform(0.0, 0.9)};
    const auto p = make_params(b, StationConfig{1, 5.0, {0.0}});
    CHECK(cr_bound(p) >= 6.0 * sqrt_e);
    CHECK(cr_bound(p) >= p.alpha);
    CHECK(capacity_limited_bound(p) ==
          doctest::Approx(3.0 * sqrt_e * std::max(2.0, 1.0 + 2.0 * std::log(p.theta))));
  }
}

TEST_CASE("classify_trace") {
  const auto light = make_instance(3, 10.0, {0.5, 0.5, 0.5}, kTheta8,
                                   {ev(0, 0, 2, 1.0, 1.0, 2.0), ev(1, 1, 3, 1.5, 1.0, 3.0),
                                    ev(2, 2, 3, 0.5, 1.0, 0.4)});
  const auto t = trace_of(light);
  for (const auto& e : t.events) {
    for (double w : e.w_after) CHECK(w < 5.0);
  }
  CHECK(classify_trace(t) == Classification::kCapacityFree);

  CHECK(classify_trace(trace_of(make_instance(2, 10.0, {0.5, 0.5}, kTheta8, {}))) ==
        Classification::kCapacityFree);

  // Two groups of five meet at slot 5. OPA turns the last two away, so a
  // unit-rate extra EV over slot 5 still fits; one needing 5 units there
  // does not.
  const Bounds wb{1.0, 2.0, 2, 2, 0.0};
  auto fixture = generate_worst_case(10.0, 2, 1.0, wb, 5);
  auto unit = fixture;
  unit.requests.push_back(ev(10, 4, 6, 2.0, 1.0, 4.0));
  const auto ut = trace_of(unit);
  CHECK(ut.events[8].admitted == false);
  CHECK(ut.events[9].admitted == false);
  CHECK(classify_trace(ut) == Classification::kCapacityFree);

  fixture.requests.push_back(ev(10, 4, 6, 10.0, 5.0, 20.0));
  const auto ft = trace_of(fixture);
  CHECK_FALSE(ft.events.back().feasible);
  CHECK(classify_trace(ft) == Classification::kCapacityLimited);

  auto broken = t;
  broken.events.pop_back();
  try {
    classify_trace(broken);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoTrace);
  }
}

TEST_CASE("certificate of a single admitted EV") {
  const auto inst = make_instance(1, 10.0, {0.5}, kTheta8, {ev(0, 0, 1, 3.0, 3.0, 6.0)});
  const auto t = trace_of(inst);
  REQUIRE(t.events[0].admitted);
  const auto cert = build_certificate(t, t.params);
  const double phi3 = reference_phi(t.params, 0.5, 3.0);
  CHECK(cert.mu_bar[0] == doctest::Approx(phi3).epsilon(1e-12));
  CHECK(cert.sigma_bar[0][0] == 0.0);
  CHECK(cert.eta_bar[0] == doctest::Approx(6.0 - 3.0 * phi3).epsilon(1e-12));
  CHECK(cert.lambda_bar[0] == doctest::Approx(phi3 - 0.5).epsilon(1e-12));
  CHECK(cert.k_index == 0);

  const auto rep = check_dual_feasibility(cert, inst, t);
  CHECK(rep.ok());

  auto tampered = cert;
  tampered.mu_bar[0] += 1.0;
  const auto bad = check_dual_feasibility(tampered, inst, t);
  CHECK_FALSE(bad.slot_constraint.ok);
  CHECK(bad.slot_constraint.worst_margin == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE_FALSE(bad.slot_constraint.examples.empty());
  CHECK(bad.slot_constraint.examples[0].find("EV#0 slot 0") != std::string::npos);
}

TEST_CASE("certificate indicator and rejected EVs") {
  const auto inst = make_instance(2, 10.0, {0.5, 0.2}, kTheta8,
                                  {ev(0, 0, 2, 1.0, 1.0, 1.5), ev(1, 0, 2, 1.0, 1.0, 0.9)});
  const auto t = trace_of(inst);
  REQUIRE(t.events[0].admitted);
  REQUIRE_FALSE(t.events[1].admitted);
  const auto cert = build_certificate(t, t.params);
  CHECK(cert.lambda_bar == std::vector<double>{0.0, 0.0});
  CHECK(cert.k_index == -1);
  CHECK(cert.eta_bar[1] == 0.0);
  CHECK(cert.sigma_bar[1] == t.events[1].sigma_hat);
  CHECK(cert.mu_bar[1] == 1.0);

  // Both slots end below beta, so lambda + p stays under L on the slots EV 0
  // used and the slot constraint is short by L - p_t.
  const auto rep = check_dual_feasibility(cert, inst, t);
  CHECK(rep.nonnegativity.ok);
  CHECK(rep.value_constraint.ok);
  CHECK_FALSE(rep.slot_constraint.ok);
  CHECK(rep.slot_constraint.worst_margin == doctest::Approx(1.0 - 0.2));
}

TEST_CASE("rejected EV keeps the candidate sigma") {
  // EV 0 fills slot 1 to 8, so EV 1's candidate is rate capped on slot 0.
  const auto inst = make_instance(2, 10.0, {0.0, 0.5}, kTheta8,
                                  {ev(0, 1, 2, 8.0, 8.0, 1000.0), ev(1, 0, 2, 1.6, 1.0, 1.0)});
  const auto t = trace_of(inst);
  REQUIRE(t.events[0].admitted);
  REQUIRE(t.events[1].feasible);
  REQUIRE_FALSE(t.events[1].admitted);
  REQUIRE(t.events[1].sigma_hat[0] > 0.0);
  REQUIRE(t.events[1].price.has_value());
  const auto cert = build_certificate(t, t.params);
  // Recomputed from the recorded post-utilization, so equal up to rounding.
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(cert.sigma_bar[1][i] == doctest::Approx(t.events[1].sigma_hat[i]).epsilon(1e-9));
  }
  CHECK(cert.mu_bar[1] == doctest::Approx(t.events[1].mu_hat).epsilon(1e-9));
  CHECK(cert.eta_bar[1] == 0.0);
  // v - mu E + sum sigma R is v minus the posted price, negative on rejection.
  const double lhs = 1.0 - cert.mu_bar[1] * 1.6 + cert.sigma_bar[1][0] * 1.0 +
                     cert.sigma_bar[1][1] * 1.0;
  CHECK(lhs == doctest::Approx(1.0 - *t.events[1].price).epsilon(1e-9));
  CHECK(check_dual_feasibility(cert, inst, t).value_constraint.ok);
}

TEST_CASE("empty trace passes vacuously") {
  const auto inst = make_instance(2, 10.0, {0.5, 0.5}, kTheta8, {});
  const auto t = trace_of(inst);
  const auto cert = build_certificate(t, t.params);
  CHECK(check_dual_feasibility(cert, inst, t).ok());
  const auto pd = check_pd_inequalities(t, t.params);
  CHECK(pd.ok());
  CHECK(pd.degenerate_k);
  CHECK(pd.primal == 0.0);
  CHECK(pd.dual == 0.0);
  CHECK(certify_trace(t).passed());
}

TEST_CASE("KKT of a forced single-slot allocation") {
  const auto p = make_params(kTheta8, StationConfig{3, 10.0, {0.5, 0.5, 0.5}});
  const UtilizationProfile w({0.0, 2.5, 0.0}, 10.0);
  const auto req = ev(0, 1, 2, 1.0, 1.0, 2.0);
  const auto e = event_from(p, w, req);
  CHECK(e.sigma_hat[0] == 0.0);
  CHECK(e.mu_hat == doctest::Approx(reference_phi(p, 0.5, 3.5)).epsilon(1e-12));
  const auto rep = check_kkt(e, req, p);
  CHECK(rep.ok());
  CHECK(rep.stationarity.worst_margin <= 1e-12);
}

TEST_CASE("KKT identity on the two-slot example") {
  const auto p = make_params(kTheta8, StationConfig{3, 10.0, {0.5, 0.5, 0.5}});
  const UtilizationProfile w({0.0, 3.0, 5.0}, 10.0);
  const auto req = ev(0, 1, 3, 1.0, 1.0, 5.0);
  const auto e = event_from(p, w, req);
  const double phi4 = reference_phi(p, 0.5, 4.0);
  CHECK(phi4 == doctest::Approx(1.9485).epsilon(1e-4));
  // 1 * 1.9485 == 1.9485 * 1 - 0.
  double lhs = 0.0, sigma_r = 0.0;
  for (std::size_t i = 0; i < e.y.size(); ++i) {
    lhs += e.y[i].energy * reference_phi(p, 0.5, w[e.y[i].slot] + e.y[i].energy);
    sigma_r += e.sigma_hat[i] * req.rate;
  }
  CHECK(lhs == doctest::Approx(phi4).epsilon(1e-9));
  CHECK(std::fabs(lhs - (e.mu_hat * req.energy - sigma_r)) <= 1e-7);
  const auto rep = check_kkt(e, req, p);
  CHECK(rep.ok());
  CHECK(rep.identity.worst_margin <= 1e-7);
}

TEST_CASE("KKT with a rate-capped slot") {
  const auto p = make_params(kTheta8, StationConfig{2, 10.0, {0.0, 0.5}});
  const UtilizationProfile w({2.0, 8.0}, 10.0);
  const auto req = ev(0, 0, 2, 1.6, 1.0, 5.0);
  const auto e = event_from(p, w, req);
  REQUIRE(e.y[0].energy == doctest::Approx(1.0));
  CHECK(e.sigma_hat[0] == doctest::Approx(e.mu_hat - reference_phi(p, 0.0, 3.0)).epsilon(1e-9));
  CHECK(e.sigma_hat[0] > 0.0);
  CHECK(check_kkt(e, req, p).ok());

  // A sigma on a slot below its rate cap breaks complementary slackness.
  auto bad = e;
  bad.sigma_hat[1] = 0.5;
  const auto rep = check_kkt(bad, req, p);
  CHECK_FALSE(rep.slackness.ok);
  CHECK_FALSE(rep.stationarity.ok);
}

TEST_CASE("KKT holds on every event of random OPA traces") {
  Rng rng(17);
  for (int i = 0; i < 40; ++i) {
    const auto inst = random_small(rng, 15, 6, 0.25 * static_cast<double>(rng.uniform_int(8, 32)));
    const auto t = trace_of(inst);
    for (std::size_t n = 0; n < t.events.size(); ++n) {
      CHECK(check_kkt(t.events[n], inst.requests[n], t.params).ok());
    }
    CHECK(check_trace_consistency(t).ok);
  }
}

TEST_CASE("primal-dual inequalities reject capacity-limited traces") {
  const Bounds wb{1.0, 2.0, 2, 2, 0.0};
  auto fixture = generate_worst_case(10.0, 2, 1.0, wb, 5);
  fixture.requests.push_back(ev(10, 4, 6, 10.0, 5.0, 20.0));
  const auto t = trace_of(fixture);
  try {
    check_pd_inequalities(t, t.params);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kWrongClassification);
  }
  const auto rep = certify_trace(t);
  CHECK(rep.classification == Classification::kCapacityLimited);
  CHECK_FALSE(rep.pd_asserted);
}

TEST_CASE("halving alpha breaks the incremental inequality on some instance") {
  // Grid search over small capacity-free instances for one that passes with
  // alpha and fails with alpha / 2.
  Rng rng(5);
  bool found = false;
  for (int i = 0; i < 400 && !found; ++i) {
    const auto inst = random_small(rng, static_cast<int>(rng.uniform_int(2, 8)), 3,
                                   0.25 * static_cast<double>(rng.uniform_int(4, 16)));
    const auto t = trace_of(inst);
    if (classify_trace(t) != Classification::kCapacityFree) continue;
    const auto full = check_pd_inequalities(t, t.params);
    if (!full.ok() || full.degenerate_k) continue;
    const auto half = check_pd_inequalities(t, t.params, t.params.alpha / 2.0);
    if (!half.incremental.ok) {
      found = true;
      CHECK(half.incremental.violations > 0);
      CHECK(half.incremental.worst_margin > 0.0);
    }
  }
  CHECK(found);
}

TEST_CASE("certificates are pure") {
  Rng rng(23);
  for (int i = 0; i < 10; ++i) {
    const auto t = trace_of(random_small(rng, 12, 5, 3.0));
    CHECK(build_certificate(t, t.params) == build_certificate(t, t.params));
  }
}

TEST_CASE("consistency check catches a tampered trace") {
  const auto inst = make_instance(2, 10.0, {0.5, 0.2}, kTheta8,
                                  {ev(0, 0, 2, 1.0, 1.0, 1.5), ev(1, 0, 2, 1.0, 1.0, 0.9)});
  const auto t = trace_of(inst);
  CHECK(check_trace_consistency(t).ok);

  auto flipped = t;
  flipped.events[1].admitted = true;
  CHECK_FALSE(check_trace_consistency(flipped).ok);
  CHECK_FALSE(certify_trace(flipped).passed());

  auto repriced = t;
  *repriced.events[0].price += 0.25;
  const auto rep = check_trace_consistency(repriced);
  CHECK_FALSE(rep.ok);
  CHECK(rep.violations >= 1);
}
