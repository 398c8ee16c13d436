#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "omlet/example.hpp"
#include "omlet/model.hpp"
#include "omlet/tree.hpp"

namespace omlet {

struct TrainConfig {
  int epochs_per_level = 1000;
  double lr = 0.15;
  /// An epoch improving total error by less than this arms one escape epoch
  /// in which worsening leg changes are accepted.
  double escape_threshold = 1e-4;
  double slope_tol = 0.05;
  int grid_steps = 50;
  double gate_t = 0.0;
  std::uint64_t rng_seed = 0;
  /// Leave levels without examples untrained (with a warning) instead of
  /// failing. Descendant categories of an untrained level are skipped too.
  bool skip_levels_without_examples = false;
};

struct EpochRow {
  int epoch = 0;
  double total_error = 0.0;
  bool allow_worsening = false;
};

struct LevelTrace {
  int level = 0;
  double best_error = 0.0;
  std::vector<EpochRow> epochs;  ///< epoch 0 is the post-initialization state
};

struct TrainResult {
  Model model;
  std::vector<LevelTrace> traces;
  std::vector<std::string> untrained_ranges;
  std::vector<std::string> warnings;
};

/// Drives the one-disjunct-per-lesson curriculum over a definition tree:
/// levels are trained in ascending order, each lesson initializing its
/// ranges from zero-actual propagation, running adjustment epochs with
/// accept-or-revert leg updates, then restoring the best model seen and
/// freezing it.
class Trainer {
 public:
  Trainer(const DefinitionTree& defs, TrainConfig config);

  /// Zero-actual propagation over the lesson's examples followed by
  /// init_from_points per range of this level. Throws NoExamplesForLevel.
  void initialize_level(int level, std::span<const ExampleRecord> lesson);

  /// One training epoch: collect lr-scaled desired points, then try each
  /// leg's least-squares candidate in deterministic order, keeping changes
  /// that do not increase total error (or any change if allow_worsening).
  /// Returns the total error after the epoch's updates.
  double run_epoch(int level, std::span<const ExampleRecord> lesson,
                   bool allow_worsening);

  /// Full lesson for one level: initialization, epochs_per_level epochs with
  /// the local-minima escape rule, best-model restoration and freezing.
  LevelTrace train_level(int level, std::span<const ExampleRecord> lesson);

  /// All levels in ascending order, each category's examples training only
  /// their own level. Throws NoExamplesForLevel / CyclicDefinition.
  TrainResult train_all(std::span<const ExampleRecord> examples);

  /// Sum over the lesson of |desired - actual overall measure|.
  double total_error(std::span<const ExampleRecord> lesson) const;

  const Model& model() const { return model_; }
  Model& mutable_model() { return model_; }
  const LevelMap& levels() const { return levels_; }
  const ProofTree& tree_for(const std::string& category) const;
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  const DefinitionTree* defs_;
  TrainConfig cfg_;
  LevelMap levels_;
  Model model_;
  std::map<std::string, ProofTree> trees_;
  std::map<int, std::vector<std::string>> ranges_by_level_;
  std::vector<std::string> warnings_;
};

/// Convenience wrapper: construct a Trainer and train every level.
TrainResult train_all(const DefinitionTree& defs,
                      std::span<const ExampleRecord> examples,
                      const TrainConfig& config);

}  // namespace omlet
