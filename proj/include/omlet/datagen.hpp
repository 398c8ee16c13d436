#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "omlet/example.hpp"
#include "omlet/model.hpp"
#include "omlet/tree.hpp"

namespace omlet {

/// A desired-measure histogram target: `count` examples whose measure falls
/// in [lo, lo + 0.1) — the top bin starting at 0.9 also includes 1.0.
struct HistogramBin {
  double lo = 0.0;
  int count = 0;
};

struct GenSpec {
  std::string category;
  int count = 0;
  double p_normal = 0.8;  ///< probability a measurement lands in [n1, n2]
  std::uint64_t seed = 0;
  /// Keep only examples with desired >= min / desired < max.
  std::optional<double> min_desired;
  std::optional<double> max_desired;
  /// When non-empty, rejection-sample until every bin quota is met
  /// (count is ignored; the total is the sum of bin counts).
  std::vector<HistogramBin> target_histogram;
  /// Attempts allowed per requested example before HistogramInfeasible.
  int resample_cap = 2000;
};

/// Synthesize labeled examples from a ground-truth model: each range draws
/// inside its normal range with probability p_normal and uniformly on a leg
/// otherwise (never at a zero point, so the desired measure stays positive);
/// binaries all pass; the desired measure is the truth model's own
/// evaluation. Deterministic given the seed.
/// Throws UnknownCategory / PartialModel / HistogramInfeasible.
std::vector<ExampleRecord> generate(const DefinitionTree& defs,
                                    const Model& truth, const GenSpec& spec);

}  // namespace omlet
