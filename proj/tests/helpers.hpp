#pragma once

#include <string>
#include <vector>

#include "omlet/example.hpp"
#include "omlet/model.hpp"
#include "omlet/tree.hpp"

namespace omlet::test {

/// Chair-style three-level hierarchy under a property-less root category.
inline DefinitionTree chair_defs() {
  DefinitionTree defs;
  defs.categories.push_back({"chair", std::nullopt, {}, {}});
  defs.categories.push_back(
      {"conventional_chair",
       "chair",
       {"provides_stable_support"},
       {{"provides_sittable_surface",
         {{"area", "m2"}, {"contiguous_surface", ""}, {"height", "m"}}}}});
  defs.categories.push_back(
      {"straightback_chair",
       "conventional_chair",
       {},
       {{"provides_back_support", {{"back_height", "m"}, {"back_angle", "deg"}}}}});
  defs.categories.push_back(
      {"armchair",
       "straightback_chair",
       {},
       {{"provides_arm_support", {{"arm_height", "m"}, {"arm_width", "m"}}}}});
  return defs;
}

/// Identity trapezoid (0, 1, 1, 1): membership of x in (0, 1] is x itself,
/// which makes exact leaf values trivial to stage in tests.
inline Trapezoid identity_trapezoid() { return Trapezoid{0.0, 1.0, 1.0, 1.0}; }

/// Model mapping every given range to the identity trapezoid.
inline Model identity_model(const std::vector<std::string>& range_ids) {
  Model model;
  for (const auto& rid : range_ids)
    model.entries.push_back({rid, identity_trapezoid(), Limits{}, true});
  return model;
}

/// Conventional-chair example with leaf memberships equal to the given
/// measurements under the identity model.
inline ExampleRecord conventional_example(const std::string& id, double area,
                                          double surface, double height,
                                          double desired) {
  ExampleRecord ex;
  ex.id = id;
  ex.category = "conventional_chair";
  ex.desired = desired;
  ex.measurements = {{"area", area},
                     {"contiguous_surface", surface},
                     {"height", height}};
  ex.binaries = {{"provides_stable_support", true}};
  return ex;
}

}  // namespace omlet::test
