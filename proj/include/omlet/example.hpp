#pragma once

#include <map>
#include <string>

namespace omlet {

/// One labeled training or test object: per-range physical measurements,
/// per-binary-primitive pass/fail bits, and the desired overall evaluation
/// measure (always in (0, 1]; an object with measure 0 is not an example).
struct ExampleRecord {
  std::string id;
  std::string category;
  double desired = 0.0;
  std::map<std::string, double> measurements;  ///< range id -> value
  std::map<std::string, bool> binaries;        ///< prop id -> satisfied
};

}  // namespace omlet
