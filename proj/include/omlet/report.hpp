#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "omlet/example.hpp"
#include "omlet/model.hpp"
#include "omlet/trainer.hpp"
#include "omlet/tree.hpp"

namespace omlet {

/// One scored example. Own-level columns report the pre-POR error of a
/// subcategory's additional functional properties, which is not directly
/// comparable to the overall-measure error; for level-1 categories the two
/// coincide.
struct EvalRow {
  std::string id;
  std::string category;
  double desired = 0.0;
  double actual = 0.0;
  double abs_error = 0.0;
  double own_desired = 0.0;
  double own_actual = 0.0;
  double own_abs_error = 0.0;
};

struct CategoryStats {
  int count = 0;
  double mean_abs_error = 0.0;
  double mean_own_abs_error = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double average_error = 0.0;
  double average_own_error = 0.0;
  std::map<std::string, CategoryStats> per_category;
  std::array<int, 10> desired_histogram{};  ///< 0.1-wide bins, top bin closed
};

/// Score examples against a trained model.
/// Throws PartialModel / EmptyInput.
EvalReport evaluate_examples(const DefinitionTree& defs, const Model& model,
                             std::span<const ExampleRecord> examples,
                             double gate_t);

/// Leave-one-out protocol: N full train/eval cycles, one per held-out
/// example; the report's rows are the held-out scores in example order.
/// threads <= 0 picks a sensible default. Throws NoExamplesForLevel when a
/// level has fewer than two examples.
EvalReport leave_one_out(const DefinitionTree& defs,
                         std::span<const ExampleRecord> examples,
                         const TrainConfig& config, int threads);

struct PartitionPoint {
  int train_size = 0;
  double mean_error = 0.0;
  double std_error = 0.0;
};

/// Random-partition learning curve: per requested training size, 10 seeded
/// random train/test splits; reports mean and sample standard deviation of
/// the per-split mean test errors. Throws SizeTooLarge.
std::vector<PartitionPoint> partition_sweep(
    const DefinitionTree& defs, std::span<const ExampleRecord> examples,
    std::span<const int> sizes, const TrainConfig& config, int threads);

std::string eval_report_csv(const EvalReport& report);
std::string trace_csv(std::span<const LevelTrace> traces);
std::string partition_csv(std::span<const PartitionPoint> points);

}  // namespace omlet
