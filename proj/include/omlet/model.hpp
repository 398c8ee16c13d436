#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "omlet/membership.hpp"

namespace omlet {

/// The learnable state of the system: one trapezoid (plus its limits) per
/// declared range, kept in definition order so training and serialization
/// are deterministic.
struct Model {
  struct Entry {
    std::string id;
    Trapezoid trapezoid;
    Limits limits;
    bool trained = false;
  };

  std::vector<Entry> entries;
  /// Free-form key=value provenance carried through serialization.
  std::vector<std::pair<std::string, std::string>> provenance;

  Entry* find(std::string_view id) {
    for (auto& e : entries)
      if (e.id == id) return &e;
    return nullptr;
  }
  const Entry* find(std::string_view id) const {
    for (const auto& e : entries)
      if (e.id == id) return &e;
    return nullptr;
  }
};

}  // namespace omlet
