#include <doctest.h>

#include <cmath>

#include "evcharge/error.hpp"
#include "evcharge/pricing.hpp"
#include "support.hpp"

using namespace evcharge;

namespace {

// L = 1, U = 2, Dmin = 1, Dmax = 2, pmax = 0.5, C = 10: theta = 8.
PricingParams theta8(std::vector<double> prices = {0.5, 0.5}) {
  return make_params(Bounds{1.0, 2.0, 1, 2, 0.5},
                     StationConfig{static_cast<int>(prices.size()), 10.0, prices});
}

// Price curve written out independently of the library.
double reference_phi(double L, double p, double alpha, double C, double w) {
  if (w < C / alpha) return L;
  return (L - p) / std::exp(1.0) * std::exp(alpha * w / C) + p;
}

}  // namespace

TEST_CASE("make_params closed forms") {
  const auto p = theta8();
  CHECK(p.theta == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(p.alpha == doctest::Approx(1.0 + 2.0 * std::log(8.0)).epsilon(1e-15));
  CHECK(p.alpha == doctest::Approx(5.1589).epsilon(1e-4));
  CHECK(p.beta == doctest::Approx(1.9384).epsilon(1e-4));

  const auto q = make_params(Bounds{1.0, 2.0, 1, 1, 0.0}, StationConfig{1, 1.0, {0.0}});
  CHECK(q.theta == doctest::Approx(2.0));
  CHECK(q.alpha == doctest::Approx(2.3863).epsilon(1e-4));
}

TEST_CASE("make_params errors") {
  try {
    make_params(Bounds{1.0, 2.0, 1, 2, 0.5}, StationConfig{2, 10.0, {0.6, 0.1}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPriceExceedsPmax);
  }
  try {
    make_params(Bounds{1.0, 1.5, 1, 1, 0.0}, StationConfig{1, 10.0, {0.0}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTheoremPrecondition);
  }
}

TEST_CASE("phi segments") {
  const auto p = theta8();
  CHECK(phi(p, 0, 0.0).value == 1.0);
  CHECK(phi(p, 0, p.beta * 0.999).value == 1.0);
  // e^{alpha - 1} = theta^2.
  CHECK(phi(p, 0, 10.0).value == doctest::Approx(32.5).epsilon(1e-12));
  CHECK_FALSE(phi(p, 0, 10.001).finite);
  CHECK(phi(p, 0, 10.0).finite);
  for (double w : {2.0, 3.7, 5.0, 9.99}) {
    CHECK(phi(p, 1, w).value ==
          doctest::Approx(reference_phi(1.0, 0.5, p.alpha, 10.0, w)).epsilon(1e-13));
  }
}

TEST_CASE("phi is continuous at beta and nondecreasing") {
  for (double pt : {0.0, 0.25, 0.5}) {
    const auto p = theta8({pt});
    const double eps = 1e-9 * p.capacity;
    const double left = phi(p, 0, p.beta - eps).value;
    const double right = phi(p, 0, p.beta + eps).value;
    CHECK(std::fabs(left - right) <= 1e-6 * p.bounds.L);
    double prev = 0.0;
    for (int i = 0; i <= 10000; ++i) {
      const double v = phi(p, 0, p.capacity * i / 10000.0).value;
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("boundary price dominates U Dmax / Dmin for every p_t <= pmax") {
  for (double pt : {0.0, 0.1, 0.3, 0.5}) {
    const auto p = theta8({pt});
    const double end = phi(p, 0, p.capacity).value;
    CHECK(end == doctest::Approx((1.0 - pt) * 64.0 + pt));
    CHECK(end >= p.boundary_price());
  }
}

TEST_CASE("phi_inverse") {
  const auto p = theta8();
  CHECK(phi_inverse(p, 0, 1.0) == p.beta);
  CHECK(phi_inverse(p, 0, 32.5) == doctest::Approx(10.0).epsilon(1e-12));
  try {
    phi_inverse(p, 0, 0.99);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPriceBelowL);
  }
  for (int i = 0; i <= 1000; ++i) {
    const double w = p.beta + (p.capacity - p.beta) * i / 1000.0;
    CHECK(std::fabs(phi_inverse(p, 0, phi(p, 0, w).value) - w) <= 1e-9 * p.capacity);
  }
  for (int i = 0; i <= 100; ++i) {
    const double price = 1.0 + 31.5 * i / 100.0;
    CHECK(phi(p, 0, phi_inverse(p, 0, price)).value == doctest::Approx(price).epsilon(1e-9));
  }
}

TEST_CASE("pseudo_cost matches quadrature") {
  const auto p = theta8();
  const auto f = [&](double w) { return reference_phi(1.0, 0.5, p.alpha, 10.0, w); };
  const double full = pseudo_cost(p, 0, p.beta, 10.0);
  CHECK(full == doctest::Approx(evtest::simpson(f, p.beta, 10.0)).epsilon(1e-9));
  CHECK(full == doctest::Approx(65.08).epsilon(1e-3));

  CHECK(pseudo_cost(p, 0, 0.0, 1.5) == doctest::Approx(1.5));
  CHECK(pseudo_cost(p, 0, 3.0, 3.0) == 0.0);
  // Straddling beta.
  CHECK(pseudo_cost(p, 1, 1.0, 4.0) ==
        doctest::Approx(evtest::simpson(f, 1.0, p.beta) + evtest::simpson(f, p.beta, 4.0))
            .epsilon(1e-9));
}

TEST_CASE("pseudo_cost is additive") {
  const auto p = theta8();
  const double pts[] = {0.0, 0.7, 1.9, 2.2, 5.0, 8.8, 10.0};
  for (double a : pts) {
    for (double b : pts) {
      for (double c : pts) {
        if (!(a <= b && b <= c)) continue;
        const double whole = pseudo_cost(p, 0, a, c);
        const double parts = pseudo_cost(p, 0, a, b) + pseudo_cost(p, 0, b, c);
        CHECK(std::fabs(whole - parts) <= 1e-12 * std::max(1.0, whole));
      }
    }
  }
}

TEST_CASE("pseudo_cost refuses utilization above capacity") {
  const auto p = theta8();
  try {
    pseudo_cost(p, 0, 0.0, 10.5);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCapacityExceeded);
  }
}

TEST_CASE("sufficient condition holds for the exponential curve") {
  const auto p = theta8({0.0, 0.2, 0.5, 0.2});
  const auto report = check_sufficient_condition(p, 10000);
  CHECK(report.passed());
  CHECK(report.worst_ode_residual <= kOdeTolerance);
  CHECK(report.worst_end_margin >= 0.0);
}

TEST_CASE("a flat curve fails the boundary condition") {
  const auto p = theta8();
  const FlatPricing flat(p.capacity, p.bounds.L);
  const auto report = check_sufficient_condition(flat, p, 100);
  CHECK_FALSE(report.end_ok);
  CHECK_FALSE(report.passed());
}

TEST_CASE("generic pricing interface agrees with the free functions") {
  const auto p = theta8({0.5, 0.1});
  const ExponentialPricing fn(p);
  for (Slot t : {0, 1}) {
    for (double w : {0.0, 1.0, 2.5, 7.0, 10.0}) {
      CHECK(fn.price(t, w) == phi(p, t, w).value);
      CHECK(fn.integral(t, 0.0, w) == pseudo_cost(p, t, 0.0, w));
    }
  }
  CHECK_FALSE(fn.quote(0, 10.5).finite);
  CHECK(*fn.flat_price() == 1.0);
  CHECK(fn.flat_end(0) == p.beta);
}

TEST_CASE("linear ramp pricing") {
  // U = 2, Dmax/Dmin = 2, p_t = 0.5, C = 10.
  const LinearRampPricing ramp(10.0, {0.5}, 4.0);
  CHECK(ramp.price(0, 0.0) == 0.5);
  CHECK(ramp.price(0, 10.0) == 4.0);
  CHECK(ramp.price(0, 5.0) == doctest::Approx(2.25));
  CHECK(ramp.inverse(0, 2.25) == doctest::Approx(5.0));
  CHECK(ramp.integral(0, 2.0, 6.0) ==
        doctest::Approx(evtest::simpson([&](double w) { return ramp.price(0, w); }, 2.0, 6.0)));
}
