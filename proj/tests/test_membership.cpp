#include "omlet/membership.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "omlet/errors.hpp"
#include "omlet/rng.hpp"

using namespace omlet;

namespace {

Trapezoid trap(double z1, double n1, double n2, double z2) {
  return Trapezoid{z1, n1, n2, z2, false, false, false};
}

Trapezoid random_trapezoid(Rng& rng) {
  double a = rng.uniform(-2.0, 2.0);
  double b = a + rng.uniform(0.0, 1.5);
  double c = b + rng.uniform(0.0, 1.5);
  double d = c + rng.uniform(0.0, 1.5);
  return trap(a, b, c, d);
}

}  // namespace

TEST_CASE("trapezoid evaluation on the reference height range") {
  const Trapezoid height = trap(0.275, 0.4, 0.6, 1.1);
  CHECK(evaluate_trapezoid(height, 0.5) == doctest::Approx(1.0));
  CHECK(evaluate_trapezoid(height, 0.2) == doctest::Approx(0.0));
  CHECK(evaluate_trapezoid(height, 0.3) == doctest::Approx(0.2));
  CHECK(evaluate_trapezoid(height, 0.85) == doctest::Approx(0.5));
  CHECK(evaluate_trapezoid(height, 0.275) == 0.0);
  CHECK(evaluate_trapezoid(height, 1.1) == 0.0);
}

TEST_CASE("degenerate legs jump straight to 1 at the shared point") {
  const Trapezoid t = trap(0.5, 0.5, 0.5, 0.5);
  CHECK(evaluate_trapezoid(t, 0.5) == 1.0);
  CHECK(evaluate_trapezoid(t, 0.4999) == 0.0);
  CHECK(evaluate_trapezoid(t, 0.5001) == 0.0);
}

TEST_CASE("open legs hold membership at 1 beyond the normal point") {
  Trapezoid t = trap(0.0, 0.9, kOpenSentinel, kOpenSentinel);
  t.right_open = true;
  CHECK(evaluate_trapezoid(t, 0.95) == 1.0);
  CHECK(evaluate_trapezoid(t, 500.0) == 1.0);
  CHECK(evaluate_trapezoid(t, 0.45) == doctest::Approx(0.5));
}

TEST_CASE("membership is piecewise linear, 1 on the normal range, monotone on legs") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const Trapezoid t = random_trapezoid(rng);
    std::vector<double> xs;
    for (int i = 0; i < 40; ++i) xs.push_back(rng.uniform(t.z1 - 1.0, t.z2 + 1.0));
    std::sort(xs.begin(), xs.end());
    double previous = 0.0;
    for (double x : xs) {
      const double mu = evaluate_trapezoid(t, x);
      REQUIRE(mu >= 0.0);
      REQUIRE(mu <= 1.0);
      if (x >= t.n1 && x <= t.n2) REQUIRE(mu == 1.0);
      if (x < t.z1 || x > t.z2) REQUIRE(mu == 0.0);
      if (x <= t.n1) {
        REQUIRE(mu >= previous - 1e-12);  // nondecreasing left of n1
        previous = mu;
      }
    }
  }
}

TEST_CASE("least squares line fit") {
  const std::vector<DesiredPoint> exact = {{0, 0, Leg::Left}, {1, 1, Leg::Left}};
  auto fit = fit_line(exact);
  REQUIRE(fit.has_value());
  CHECK(fit->slope == doctest::Approx(1.0));
  CHECK(fit->intercept == doctest::Approx(0.0).epsilon(1e-12));

  const std::vector<DesiredPoint> collinear = {
      {0, 0, Leg::Left}, {1, 1, Leg::Left}, {2, 2, Leg::Left}};
  fit = fit_line(collinear);
  REQUIRE(fit.has_value());
  CHECK(fit->slope == doctest::Approx(1.0));

  const std::vector<DesiredPoint> vertical = {{0, 0, Leg::Left}, {0, 1, Leg::Left}};
  CHECK_FALSE(fit_line(vertical).has_value());
}

TEST_CASE("fit_line minimizes squared residuals against nudged alternatives") {
  Rng rng(7);
  std::vector<DesiredPoint> pts;
  for (int i = 0; i < 12; ++i)
    pts.push_back({rng.uniform(0.0, 2.0), rng.uniform(0.0, 1.0), Leg::Left});
  const auto fit = fit_line(pts);
  REQUIRE(fit.has_value());
  const auto sse = [&](double m, double b) {
    double s = 0.0;
    for (const auto& p : pts) s += (p.y - (m * p.x + b)) * (p.y - (m * p.x + b));
    return s;
  };
  const double best = sse(fit->slope, fit->intercept);
  for (double dm : {-1e-3, 1e-3})
    for (double db : {-1e-3, 1e-3})
      CHECK(best <= sse(fit->slope + dm, fit->intercept + db));
}

TEST_CASE("enforce_shape clamps and restores ordering") {
  CHECK(enforce_shape(trap(0.5, 0.4, 0.6, 1.1), {}) == trap(0.4, 0.4, 0.6, 1.1));

  Limits lim;
  lim.n1_max = 0.41;
  CHECK(enforce_shape(trap(0.2, 0.45, 0.6, 1.1), lim) == trap(0.2, 0.41, 0.6, 1.1));

  const Trapezoid crossed = enforce_shape(trap(0.2, 0.5, 0.45, 1.1), {});
  CHECK(crossed == trap(0.2, 0.475, 0.475, 1.1));
  CHECK(crossed.z1 <= crossed.n1);
  CHECK(crossed.n1 <= crossed.n2);
  CHECK(crossed.n2 <= crossed.z2);
}

TEST_CASE("enforce_shape is idempotent over random inputs") {
  Rng rng(1234);
  for (int trial = 0; trial < 2000; ++trial) {
    Trapezoid t;
    t.z1 = rng.uniform(-2, 2);
    t.n1 = rng.uniform(-2, 2);
    t.n2 = rng.uniform(-2, 2);
    t.z2 = rng.uniform(-2, 2);
    Limits lim;
    if (rng.next_double() < 0.5) lim.n1_max = rng.uniform(-2, 2);
    if (rng.next_double() < 0.5) lim.n2_min = rng.uniform(-2, 2);
    if (rng.next_double() < 0.5) lim.z1_max = rng.uniform(-2, 2);
    if (rng.next_double() < 0.5) lim.z2_min = rng.uniform(-2, 2);
    const Trapezoid once = enforce_shape(t, lim);
    REQUIRE(enforce_shape(once, lim) == once);
    REQUIRE(once.z1 <= once.n1);
    REQUIRE(once.n1 <= once.n2);
    REQUIRE(once.n2 <= once.z2);
  }
}

TEST_CASE("initialization with perfect points pins the normal range") {
  const std::vector<DesiredPoint> pts = {{0.41, 1.0, Leg::Normal},
                                         {0.58, 1.0, Leg::Normal},
                                         {0.30, 0.4, Leg::Normal},
                                         {0.70, 0.5, Leg::Normal}};
  const auto init = init_from_points(pts, 50);
  CHECK(init.trapezoid.n1 == doctest::Approx(0.41));
  CHECK(init.trapezoid.n2 == doctest::Approx(0.58));
  // Left leg through (0.41, 1) and (0.30, 0.4); right leg through (0.58, 1)
  // and (0.70, 0.5).
  CHECK(init.trapezoid.z1 == doctest::Approx(0.41 - 0.11 / 0.6));
  CHECK(init.trapezoid.z2 == doctest::Approx(0.58 + 0.12 / 0.5));
  CHECK(*init.limits.n1_max == doctest::Approx(0.41));
  CHECK(*init.limits.n2_min == doctest::Approx(0.58));
  CHECK(*init.limits.z1_max == doctest::Approx(0.30));
  CHECK(*init.limits.z2_min == doctest::Approx(0.70));
  CHECK_FALSE(init.trapezoid.left_open);
  CHECK_FALSE(init.trapezoid.right_open);
}

TEST_CASE("initialization from a single perfect point opens both legs") {
  const std::vector<DesiredPoint> pts = {{0.5, 1.0, Leg::Normal}};
  const auto init = init_from_points(pts, 50);
  CHECK(init.trapezoid.left_open);
  CHECK(init.trapezoid.right_open);
  CHECK(init.trapezoid.z1 == -kOpenSentinel);
  CHECK(init.trapezoid.n1 == -kOpenSentinel);
  CHECK(init.trapezoid.n2 == kOpenSentinel);
  CHECK(init.trapezoid.z2 == kOpenSentinel);
}

TEST_CASE("initialization without perfect points matches a brute-force grid oracle") {
  // Highest desired points at x = 0.4 and 0.6 with y = 0.8.
  const std::vector<DesiredPoint> pts = {
      {0.40, 0.8, Leg::Normal}, {0.60, 0.8, Leg::Normal},
      {0.20, 0.3, Leg::Normal}, {0.47, 0.75, Leg::Normal},
      {0.80, 0.25, Leg::Normal}, {0.55, 0.7, Leg::Normal}};
  const int steps = 50;
  const auto init = init_from_points(pts, steps);

  // Independent oracle: rebuild every candidate on the same grid.
  const double lo = 0.40, hi = 0.60;
  double best_err = 1e100;
  for (int i = 0; i <= steps; ++i) {
    for (int j = i; j <= steps; ++j) {
      Trapezoid cand;
      cand.n1 = lo + (hi - lo) * i / steps;
      cand.n2 = lo + (hi - lo) * j / steps;
      cand.z1 = cand.n1 - (cand.n1 - 0.20) / (1.0 - 0.3);
      cand.z2 = cand.n2 + (0.80 - cand.n2) / (1.0 - 0.25);
      double err = 0.0;
      for (const auto& p : pts) err += std::fabs(p.y - evaluate_trapezoid(cand, p.x));
      best_err = std::min(best_err, err);
    }
  }
  double returned_err = 0.0;
  for (const auto& p : pts)
    returned_err += std::fabs(p.y - evaluate_trapezoid(init.trapezoid, p.x));
  CHECK(returned_err == doctest::Approx(best_err).epsilon(1e-12));
  CHECK(init.trapezoid.n1 >= 0.40);
  CHECK(init.trapezoid.n2 <= 0.60);
  CHECK_FALSE(init.limits.n1_max.has_value());
  CHECK(*init.limits.z1_max == doctest::Approx(0.20));
}

TEST_CASE("init_from_points rejects an empty point set") {
  CHECK_THROWS_AS(init_from_points({}, 50), EmptyPointSet);
}

TEST_CASE("leg update follows the fitted line") {
  // Points exactly on y = 4x - 0.6: z1 lands on the zero crossing 0.15 and
  // n1 moves halfway toward the y = 1 crossing 0.4.
  const Trapezoid t = trap(0.1, 0.42, 0.6, 1.1);
  const std::vector<DesiredPoint> left = {
      {0.2, 0.2, Leg::Left}, {0.25, 0.4, Leg::Left}, {0.3, 0.6, Leg::Left}};
  const Trapezoid out = update_legs(t, {}, left, {}, 0.05);
  CHECK(out.z1 == doctest::Approx(0.15));
  CHECK(out.n1 == doctest::Approx(0.41));
  CHECK(out.n2 == 0.6);
  CHECK(out.z2 == 1.1);
}

TEST_CASE("single left point fits through the normal anchor") {
  const Trapezoid t = trap(0.0, 0.5, 0.6, 1.1);
  const std::vector<DesiredPoint> left = {{0.3, 0.5, Leg::Left}};
  // Line through (0.5, 1) and (0.3, 0.5): slope 2.5, zero crossing at 0.1,
  // unit crossing at 0.5.
  const Trapezoid out = update_legs(t, {}, left, {}, 0.05);
  CHECK(out.z1 == doctest::Approx(0.1));
  CHECK(out.n1 == doctest::Approx(0.5));
}

TEST_CASE("wrong-sign slope moves the normal point outward, then opens the leg") {
  Limits lim;
  lim.z1_max = 0.25;  // observed data minimum
  lim.z2_min = 1.0;
  const Trapezoid t = trap(0.1, 0.5, 0.6, 1.1);
  const std::vector<DesiredPoint> left = {{0.3, 0.9, Leg::Left},
                                          {0.4, 0.5, Leg::Left}};
  const Trapezoid moved = update_legs(t, lim, left, {}, 0.05);
  CHECK_FALSE(moved.left_open);
  CHECK(moved.n1 == doctest::Approx(0.3 - 0.01 * 0.75));
  CHECK(moved.n1 < 0.5);

  // Extreme point at the observed minimum: moving past it leaves the data.
  const std::vector<DesiredPoint> at_edge = {{0.25, 0.9, Leg::Left},
                                             {0.4, 0.5, Leg::Left}};
  const Trapezoid opened = update_legs(t, lim, at_edge, {}, 0.05);
  CHECK(opened.left_open);
  CHECK(opened.z1 == -kOpenSentinel);
  CHECK(opened.n1 == -kOpenSentinel);
}

TEST_CASE("legs with no points stay put and frozen trapezoids refuse updates") {
  const Trapezoid t = trap(0.1, 0.4, 0.6, 1.1);
  CHECK(update_legs(t, {}, {}, {}, 0.05) == t);

  Trapezoid frozen = t;
  frozen.frozen = true;
  const std::vector<DesiredPoint> left = {{0.2, 0.5, Leg::Left}};
  CHECK_THROWS_AS(update_legs(frozen, {}, left, {}, 0.05), FrozenTrapezoid);
}

TEST_CASE("updates never violate limits and open legs never close") {
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    Trapezoid t = random_trapezoid(rng);
    Limits lim;
    lim.n1_max = t.n1 + rng.uniform(0.0, 0.2);
    lim.n2_min = t.n2 - rng.uniform(0.0, 0.2);
    lim.z1_max = t.z1 + rng.uniform(0.0, 0.1);
    lim.z2_min = t.z2 - rng.uniform(0.0, 0.1);
    bool was_left_open = false, was_right_open = false;
    for (int step = 0; step < 20; ++step) {
      std::vector<DesiredPoint> left, right;
      const int n_left = static_cast<int>(rng.next_u64() % 4);
      const int n_right = static_cast<int>(rng.next_u64() % 4);
      for (int i = 0; i < n_left; ++i)
        left.push_back({rng.uniform(t.z1 - 0.5, t.n1), rng.next_double(), Leg::Left});
      for (int i = 0; i < n_right; ++i)
        right.push_back({rng.uniform(t.n2, t.z2 + 0.5), rng.next_double(), Leg::Right});
      t = update_legs(t, lim, left, right, 0.05);
      REQUIRE(t.z1 <= t.n1);
      REQUIRE(t.n1 <= t.n2);
      REQUIRE(t.n2 <= t.z2);
      if (!t.left_open) {
        REQUIRE(t.n1 <= *lim.n1_max + 1e-12);
        REQUIRE(t.z1 <= *lim.z1_max + 1e-12);
      }
      if (!t.right_open) {
        REQUIRE(t.n2 >= *lim.n2_min - 1e-12);
        REQUIRE(t.z2 >= *lim.z2_min - 1e-12);
      }
      if (was_left_open) REQUIRE(t.left_open);
      if (was_right_open) REQUIRE(t.right_open);
      was_left_open = t.left_open;
      was_right_open = t.right_open;
    }
  }
}
