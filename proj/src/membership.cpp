#include "omlet/membership.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "omlet/errors.hpp"

namespace omlet {

double evaluate_trapezoid(const Trapezoid& t, double x) {
  if (x >= t.n1 && x <= t.n2) return 1.0;
  if (x <= t.z1 || x >= t.z2) return 0.0;
  if (x < t.n1) return (x - t.z1) / (t.n1 - t.z1);
  return (t.z2 - x) / (t.z2 - t.n2);
}

Leg classify_leg(const Trapezoid& t, double x) {
  if (x < t.n1) return Leg::Left;
  if (x > t.n2) return Leg::Right;
  return Leg::Normal;
}

std::optional<LineFit> fit_line(std::span<const DesiredPoint> points) {
  const auto n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    sx += p.x;
    sy += p.y;
    sxx += p.x * p.x;
    sxy += p.x * p.y;
  }
  const double denom = n * sxx - sx * sx;
  // Scale-aware degeneracy test: all x equal up to rounding.
  if (points.size() < 2 ||
      denom <= std::max(sxx, sx * sx) * 1e-14) {
    return std::nullopt;
  }
  LineFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

Trapezoid enforce_shape(Trapezoid t, const Limits& limits) {
  if (limits.n1_max) t.n1 = std::min(t.n1, *limits.n1_max);
  if (limits.n2_min) t.n2 = std::max(t.n2, *limits.n2_min);
  if (t.n1 > t.n2) t.n1 = t.n2 = 0.5 * (t.n1 + t.n2);
  if (limits.z1_max) t.z1 = std::min(t.z1, *limits.z1_max);
  if (limits.z2_min) t.z2 = std::max(t.z2, *limits.z2_min);
  t.z1 = std::min(t.z1, t.n1);
  t.z2 = std::max(t.z2, t.n2);
  return t;
}

namespace {

// x-intercept (y = 0) of the left/right leg line through (n, 1) and the
// given point. Valid only when the point's y differs from 1.
double leg_zero_from_anchor(double n, double px, double py) {
  return n - (n - px) / (1.0 - py);
}

struct Extremes {
  const DesiredPoint* min_x = nullptr;
  const DesiredPoint* max_x = nullptr;
};

Extremes find_extremes(std::span<const DesiredPoint> points) {
  Extremes e;
  for (const auto& p : points) {
    if (!e.min_x || p.x < e.min_x->x) e.min_x = &p;
    if (!e.max_x || p.x > e.max_x->x) e.max_x = &p;
  }
  return e;
}

double grid_error(const Trapezoid& t, std::span<const DesiredPoint> points) {
  double err = 0.0;
  for (const auto& p : points) err += std::fabs(p.y - evaluate_trapezoid(t, p.x));
  return err;
}

}  // namespace

InitResult init_from_points(std::span<const DesiredPoint> points,
                            int grid_steps) {
  if (points.empty()) throw EmptyPointSet();
  Limits limits;
  const Extremes ext = find_extremes(points);
  limits.z1_max = ext.min_x->x;
  limits.z2_min = ext.max_x->x;

  // Perfect points pin a segment of the normal range.
  constexpr double kOneTol = 1e-9;
  double ones_min = std::numeric_limits<double>::infinity();
  double ones_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    if (p.y >= 1.0 - kOneTol) {
      ones_min = std::min(ones_min, p.x);
      ones_max = std::max(ones_max, p.x);
    }
  }

  Trapezoid t;
  if (ones_min <= ones_max) {
    t.n1 = ones_min;
    t.n2 = ones_max;
    limits.n1_max = t.n1;
    limits.n2_min = t.n2;
    if (ext.min_x->x < t.n1) {
      t.z1 = leg_zero_from_anchor(t.n1, ext.min_x->x, ext.min_x->y);
    } else {
      t.left_open = true;
      t.z1 = t.n1 = -kOpenSentinel;
    }
    if (ext.max_x->x > t.n2) {
      t.z2 = leg_zero_from_anchor(t.n2, ext.max_x->x, ext.max_x->y);
    } else {
      t.right_open = true;
      t.n2 = t.z2 = kOpenSentinel;
    }
    t = enforce_shape(t, limits);
    return {t, limits};
  }

  // No perfect points: grid-search the normal range between the two
  // highest-y points, keeping the candidate with the lowest sum of absolute
  // membership errors.
  const DesiredPoint* top1 = nullptr;
  const DesiredPoint* top2 = nullptr;
  for (const auto& p : points) {
    if (!top1 || p.y > top1->y) {
      top2 = top1;
      top1 = &p;
    } else if (!top2 || p.y > top2->y) {
      top2 = &p;
    }
  }
  const double lo = std::min(top1->x, top2 ? top2->x : top1->x);
  const double hi = std::max(top1->x, top2 ? top2->x : top1->x);
  const int steps = std::max(grid_steps, 1);

  Trapezoid best;
  double best_err = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    const double n1 = lo + (hi - lo) * i / steps;
    for (int j = i; j <= steps; ++j) {
      const double n2 = lo + (hi - lo) * j / steps;
      Trapezoid cand;
      cand.n1 = n1;
      cand.n2 = n2;
      cand.z1 = ext.min_x->x < n1
                    ? leg_zero_from_anchor(n1, ext.min_x->x, ext.min_x->y)
                    : n1;
      cand.z2 = ext.max_x->x > n2
                    ? leg_zero_from_anchor(n2, ext.max_x->x, ext.max_x->y)
                    : n2;
      const double err = grid_error(cand, points);
      if (err < best_err) {
        best_err = err;
        best = cand;
      }
    }
  }
  best = enforce_shape(best, limits);
  return {best, limits};
}

namespace {

// Span of the observed data, used to size outward moves and to decide when a
// leg has left the data entirely.
double observed_span(const Trapezoid& t, const Limits& limits) {
  double lo = limits.z1_max ? *limits.z1_max
                            : (t.left_open ? t.n2 : t.z1);
  double hi = limits.z2_min ? *limits.z2_min
                            : (t.right_open ? t.n1 : t.z2);
  return std::max(hi - lo, 1e-12);
}

void update_one_leg(Trapezoid& t, const Limits& limits,
                    std::span<const DesiredPoint> pts, bool left,
                    double slope_tol) {
  if (pts.empty()) return;
  if (left ? t.left_open : t.right_open) return;

  const double n_old = left ? t.n1 : t.n2;
  LineFit line;
  const auto fitted = fit_line(pts);
  if (fitted) {
    line = *fitted;
  } else {
    // Single point (or several at one x): line through the normal anchor and
    // the point, with coincident-x points merged at their mean y.
    double y_mean = 0.0;
    for (const auto& p : pts) y_mean += p.y;
    y_mean /= static_cast<double>(pts.size());
    const double px = pts.front().x;
    if (px == n_old) return;
    line.slope = (y_mean - 1.0) / (px - n_old);
    line.intercept = 1.0 - line.slope * n_old;
  }

  const bool slope_ok =
      left ? line.slope >= slope_tol : line.slope <= -slope_tol;
  if (!slope_ok) {
    // Not enough of the leg is visible in the data. Push the normal point
    // just past the extreme desired point; once it would leave the observed
    // data range the leg is declared one-legged.
    const double step = 0.01 * observed_span(t, limits);
    const Extremes ext = find_extremes(pts);
    if (left) {
      const double moved = ext.min_x->x - step;
      if (limits.z1_max && moved < *limits.z1_max) {
        t.left_open = true;
        t.z1 = t.n1 = -kOpenSentinel;
      } else {
        t.n1 = moved;
      }
    } else {
      const double moved = ext.max_x->x + step;
      if (limits.z2_min && moved > *limits.z2_min) {
        t.right_open = true;
        t.n2 = t.z2 = kOpenSentinel;
      } else {
        t.n2 = moved;
      }
    }
    return;
  }

  const double at_zero = -line.intercept / line.slope;
  const double at_one = (1.0 - line.intercept) / line.slope;
  if (left) {
    t.z1 = at_zero;
    t.n1 = 0.5 * (n_old + at_one);
  } else {
    t.z2 = at_zero;
    t.n2 = 0.5 * (n_old + at_one);
  }
}

}  // namespace

Trapezoid update_legs(const Trapezoid& t, const Limits& limits,
                      std::span<const DesiredPoint> left_points,
                      std::span<const DesiredPoint> right_points,
                      double slope_tol) {
  if (t.frozen) throw FrozenTrapezoid();
  Trapezoid out = t;
  update_one_leg(out, limits, left_points, /*left=*/true, slope_tol);
  update_one_leg(out, limits, right_points, /*left=*/false, slope_tol);
  out = enforce_shape(out, limits);
  // Re-assert sentinels: shape fixes must never drag an open side back in.
  if (out.left_open) out.z1 = out.n1 = -kOpenSentinel;
  if (out.right_open) out.n2 = out.z2 = kOpenSentinel;
  return out;
}

}  // namespace omlet
