#include "omlet/backprop.hpp"

#include <algorithm>
#include <cmath>

#include "omlet/errors.hpp"

namespace omlet {

namespace {

double product_at(std::span<const double> actuals, double offset) {
  double p = 1.0;
  for (double a : actuals) p *= (a + offset);
  return p;
}

// Common offset t with (a1 + t)(a2 + t) = desired; the larger quadratic
// root, which keeps both factors positive for desired > 0.
double solve_offset_pair(double a1, double a2, double desired) {
  const double diff = a1 - a2;
  return 0.5 * (-(a1 + a2) + std::sqrt(diff * diff + 4.0 * desired));
}

// Common offset for up to three inputs, by bisection on the strictly
// increasing product. The bracket starts at [-min a, 1 - max a] and grows
// upward when the desired output needs raw desireds above 1 (they are
// clamped later; the pre-clamp roundtrip must still hold).
double solve_offset(std::span<const double> actuals, double desired) {
  if (actuals.size() == 1) return desired - actuals[0];
  if (actuals.size() == 2)
    return solve_offset_pair(actuals[0], actuals[1], desired);

  double lo = -*std::min_element(actuals.begin(), actuals.end());
  double hi = 1.0 - *std::max_element(actuals.begin(), actuals.end());
  while (product_at(actuals, hi) < desired) hi += 0.5;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (product_at(actuals, mid) < desired)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> pand_desired_raw(std::span<const double> actuals,
                                     double desired) {
  std::vector<double> out(actuals.begin(), actuals.end());
  if (out.empty()) throw EmptyInput("pand_desired over an empty input list");

  if (desired <= 0.0) {
    // No positive product target exists; silence the weakest input only.
    auto weakest = std::min_element(out.begin(), out.end());
    *weakest = 0.0;
    return out;
  }
  if (desired == 1.0) {
    // A product of values in [0, 1] reaches 1 only when every factor is 1;
    // a perfect example demands 1 of every leaf.
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }

  const std::size_t k = out.size();
  if (k <= 3) {
    const double t = solve_offset(actuals, desired);
    for (double& d : out) d += t;
    return out;
  }

  // Recursive grouping: the first ceil(k/2) inputs versus the rest, each
  // group's product acting as a pseudo-actual.
  const std::size_t half = (k + 1) / 2;
  const auto group1 = actuals.first(half);
  const auto group2 = actuals.subspan(half);
  const double p1 = product_at(group1, 0.0);
  const double p2 = product_at(group2, 0.0);
  const double t = solve_offset_pair(p1, p2, desired);
  const auto d1 = pand_desired_raw(group1, p1 + t);
  const auto d2 = pand_desired_raw(group2, p2 + t);
  std::copy(d1.begin(), d1.end(), out.begin());
  std::copy(d2.begin(), d2.end(), out.begin() + static_cast<long>(half));
  return out;
}

std::vector<double> pand_desired(std::span<const double> actuals,
                                 double desired) {
  auto out = pand_desired_raw(actuals, desired);
  for (double& d : out) d = std::clamp(d, 0.0, 1.0);
  return out;
}

double por_desired(double known, double desired) {
  if (known >= 1.0) throw SaturatedParent();
  return std::clamp((desired - known) / (1.0 - known), 0.0, 1.0);
}

namespace {

// evaluate_nodes with the initialization twist: leaves of the target level
// are taken as actual 0 (and need no trained trapezoid yet).
std::vector<double> actual_values(const ProofTree& tree, const Model& model,
                                  const ExampleRecord& ex,
                                  const CollectOptions& opt,
                                  bool& binary_failed) {
  std::vector<double> values(tree.nodes.size(), 0.0);
  const auto eval = [&](auto&& self, int idx) -> double {
    const auto& node = tree.nodes[idx];
    double v = 0.0;
    switch (node.kind) {
      case ProofTree::Kind::RangeLeaf: {
        const auto it = ex.measurements.find(node.id);
        if (it == ex.measurements.end()) throw MissingMeasurement(node.id);
        if (opt.init_mode && node.level == tree.target_level) {
          v = 0.0;
        } else {
          const Model::Entry* entry = model.find(node.id);
          if (!entry || !entry->trained) throw PartialModel(node.id);
          v = evaluate_trapezoid(entry->trapezoid, it->second);
        }
        break;
      }
      case ProofTree::Kind::BinaryLeaf: {
        const auto it = ex.binaries.find(node.id);
        if (it == ex.binaries.end()) throw MissingMeasurement(node.id);
        v = it->second ? 1.0 : 0.0;
        if (!it->second) binary_failed = true;
        break;
      }
      case ProofTree::Kind::Pand: {
        v = 1.0;
        for (int c : node.children) v *= self(self, c);
        break;
      }
      case ProofTree::Kind::Por: {
        const double parent = self(self, node.children[0]);
        const double subtree = self(self, node.children[1]);
        v = subtree > opt.gate_t ? por(subtree, parent) : 0.0;
        break;
      }
    }
    values[idx] = v;
    return v;
  };
  eval(eval, tree.root);
  return values;
}

}  // namespace

std::vector<PropagationRecord> collect_points(const ProofTree& tree,
                                              const Model& model,
                                              const ExampleRecord& ex,
                                              const CollectOptions& opt) {
  bool binary_failed = false;
  const auto values = actual_values(tree, model, ex, opt, binary_failed);
  if (binary_failed) return {};  // not a member of the category; no signal

  std::vector<PropagationRecord> records;
  const double actual_root = values[tree.root];
  const double effective_desired =
      actual_root + opt.lr * (ex.desired - actual_root);

  const auto descend = [&](auto&& self, int idx, double desired) -> void {
    const auto& node = tree.nodes[idx];
    switch (node.kind) {
      case ProofTree::Kind::RangeLeaf: {
        PropagationRecord rec;
        rec.range_id = node.id;
        rec.point.x = ex.measurements.at(node.id);
        rec.point.y = std::clamp(desired, 0.0, 1.0);
        if (opt.init_mode) {
          rec.point.leg = Leg::Normal;
        } else {
          rec.point.leg =
              classify_leg(model.find(node.id)->trapezoid, rec.point.x);
        }
        records.push_back(std::move(rec));
        break;
      }
      case ProofTree::Kind::BinaryLeaf:
        break;
      case ProofTree::Kind::Por: {
        // The parent branch is an already-learned level: its actual is taken
        // as correct and the whole residual goes to the subcategory branch.
        const double known = values[node.children[0]];
        const int sub = node.children[1];
        const double sub_desired =
            known >= 1.0 ? values[sub] : por_desired(known, desired);
        self(self, sub, sub_desired);
        break;
      }
      case ProofTree::Kind::Pand: {
        std::vector<int> learnable;
        std::vector<double> actuals;
        for (int c : node.children) {
          if (tree.nodes[c].kind == ProofTree::Kind::BinaryLeaf) continue;
          learnable.push_back(c);
          actuals.push_back(values[c]);
        }
        if (learnable.empty()) break;
        const auto desireds = pand_desired_raw(actuals, desired);
        for (std::size_t i = 0; i < learnable.size(); ++i)
          self(self, learnable[i], desireds[i]);
        break;
      }
    }
  };
  descend(descend, tree.root, effective_desired);
  return records;
}

}  // namespace omlet
