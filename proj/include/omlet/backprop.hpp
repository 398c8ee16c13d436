#pragma once

#include <span>
#include <string>
#include <vector>

#include "omlet/example.hpp"
#include "omlet/membership.hpp"
#include "omlet/model.hpp"
#include "omlet/tree.hpp"

namespace omlet {

/// A desired point deposited at one range leaf during back-propagation.
struct PropagationRecord {
  std::string range_id;
  DesiredPoint point;
};

/// Desired inputs of a PAND node given its actual inputs and a desired
/// output, before clamping into [0, 1].
///
/// For two or three inputs all desireds share one additive offset t with
/// prod(a_i + t) = desired; larger arities split recursively into two
/// groups whose products act as pseudo-actuals. Recombining the raw outputs
/// through pand reproduces the desired output to high precision. A desired
/// of 0 drives only the minimum actual to 0.
std::vector<double> pand_desired_raw(std::span<const double> actuals,
                                     double desired);

/// pand_desired_raw with every output clamped into [0, 1].
std::vector<double> pand_desired(std::span<const double> actuals,
                                 double desired);

/// The unique d with por(known, d) = desired, clamped into [0, 1].
/// Throws SaturatedParent when known == 1 (every d satisfies the equation).
double por_desired(double known, double desired);

struct CollectOptions {
  double lr = 0.15;       ///< fraction of the root error propagated
  bool init_mode = false; ///< treat the target level's leaves as actual 0
  double gate_t = 0.0;
};

/// Propagate an example's desired measure down its proof tree and collect
/// one desired point per learnable range leaf.
///
/// Actual node values are computed bottom-up; the effective root desired is
/// actual + lr * (goal - actual). POR parent branches belong to frozen,
/// already-learned levels: their actual is taken as correct, the full
/// residual error goes to the subcategory branch, and nothing is emitted
/// beneath them. Binary leaves absorb no error. Returns nothing when a
/// necessary binary property fails.
std::vector<PropagationRecord> collect_points(const ProofTree& tree,
                                              const Model& model,
                                              const ExampleRecord& ex,
                                              const CollectOptions& options);

}  // namespace omlet
