#pragma once

#include <optional>
#include <span>
#include <vector>

namespace omlet {

/// Parameter value used for the missing side of a one-legged membership
/// function: an open right leg stores n2 = z2 = +kOpenSentinel, an open left
/// leg stores z1 = n1 = -kOpenSentinel.
inline constexpr double kOpenSentinel = 10000.0;

/// Which leg of a trapezoid a desired point falls on, judged against the
/// normal range [n1, n2] at collection time.
enum class Leg { Left, Right, Normal };

/// Trapezoidal fuzzy membership function over one physical range.
///
/// Shape invariant: z1 <= n1 <= n2 <= z2. Membership is 0 outside (z1, z2),
/// 1 on [n1, n2] and linear on the two legs.
struct Trapezoid {
  double z1 = 0.0;  ///< first zero point
  double n1 = 0.0;  ///< first normal point
  double n2 = 0.0;  ///< second normal point
  double z2 = 0.0;  ///< second zero point
  bool left_open = false;
  bool right_open = false;
  bool frozen = false;  ///< no further training updates permitted

  bool operator==(const Trapezoid&) const = default;
};

/// Bounds on range parameters established at initialization. Updates may
/// never push n1 above n1_max, n2 below n2_min, z1 above z1_max or z2 below
/// z2_min. z1_max / z2_min double as the observed data extremes.
struct Limits {
  std::optional<double> n1_max;
  std::optional<double> n2_min;
  std::optional<double> z1_max;
  std::optional<double> z2_min;

  bool operator==(const Limits&) const = default;
};

/// An (x, y) pair deposited at a membership function by back-propagation,
/// tagged with the leg it belonged to when collected.
struct DesiredPoint {
  double x = 0.0;
  double y = 0.0;  ///< desired membership in [0, 1]
  Leg leg = Leg::Normal;
};

/// Membership value of x under t. Total over the reals; a degenerate leg
/// (z == n) evaluates to 1 exactly at the shared point.
double evaluate_trapezoid(const Trapezoid& t, double x);

/// Leg::Left iff x < n1, Leg::Right iff x > n2, else Leg::Normal.
Leg classify_leg(const Trapezoid& t, double x);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least-squares line through the points. Returns nullopt when all
/// x values coincide (degenerate fit, caller falls back to the single-point
/// rule).
std::optional<LineFit> fit_line(std::span<const DesiredPoint> points);

struct InitResult {
  Trapezoid trapezoid;
  Limits limits;
};

/// Initial trapezoid estimate from the desired points of the first epoch.
///
/// With y = 1 points present the normal range is pinned between them and the
/// legs pass through the extreme points; a side with no points beyond the
/// normal range is opened (one-legged). Without y = 1 points a best-fit
/// normal range is grid-searched between the two highest-y points,
/// minimizing the sum of absolute membership errors.
InitResult init_from_points(std::span<const DesiredPoint> points,
                            int grid_steps);

/// Clamp parameters to their limits, then restore z1 <= n1 <= n2 <= z2
/// (crossed normal points collapse to their midpoint). Idempotent.
Trapezoid enforce_shape(Trapezoid t, const Limits& limits);

/// Candidate trapezoid after least-squares leg adjustment.
///
/// Per leg with points: the new zero point is the fitted line's x-intercept
/// and the new normal point moves halfway toward the line's crossing of
/// y = 1. A fit with the wrong slope sign or flatter than slope_tol instead
/// moves the normal point just past the leg's extreme point, opening and
/// freezing the leg once it would leave the observed data range. Legs with
/// no points are unchanged. Throws FrozenTrapezoid if t.frozen.
Trapezoid update_legs(const Trapezoid& t, const Limits& limits,
                      std::span<const DesiredPoint> left_points,
                      std::span<const DesiredPoint> right_points,
                      double slope_tol);

}  // namespace omlet
