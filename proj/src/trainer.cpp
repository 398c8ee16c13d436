#include "omlet/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "omlet/backprop.hpp"
#include "omlet/errors.hpp"

namespace omlet {

Trainer::Trainer(const DefinitionTree& defs, TrainConfig config)
    : defs_(&defs), cfg_(std::move(config)), levels_(assign_levels(defs)) {
  for (const auto& cat : defs.categories) {
    const auto it = levels_.level_of.find(cat.name);
    if (it == levels_.level_of.end()) continue;  // control structure only
    trees_.emplace(cat.name, build_proof_tree(defs, cat.name));
    for (const auto& rid : DefinitionTree::ranges_of(cat)) {
      model_.entries.push_back({rid, Trapezoid{}, Limits{}, false});
      ranges_by_level_[it->second].push_back(rid);
    }
  }
}

const ProofTree& Trainer::tree_for(const std::string& category) const {
  const auto it = trees_.find(category);
  if (it == trees_.end()) throw UnknownCategory(category);
  return it->second;
}

double Trainer::total_error(std::span<const ExampleRecord> lesson) const {
  double err = 0.0;
  for (const auto& ex : lesson)
    err += std::fabs(ex.desired -
                     evaluate(tree_for(ex.category), model_, ex, cfg_.gate_t));
  return err;
}

void Trainer::initialize_level(int level,
                               std::span<const ExampleRecord> lesson) {
  if (lesson.empty()) throw NoExamplesForLevel(level);
  std::map<std::string, std::vector<DesiredPoint>> pools;
  CollectOptions opt;
  opt.lr = 1.0;
  opt.init_mode = true;
  opt.gate_t = cfg_.gate_t;
  std::size_t usable = 0;
  for (const auto& ex : lesson) {
    const auto records = collect_points(tree_for(ex.category), model_, ex, opt);
    if (records.empty()) continue;  // failed a necessary binary property
    ++usable;
    for (const auto& rec : records) pools[rec.range_id].push_back(rec.point);
  }
  if (usable == 0) throw NoExamplesForLevel(level);

  for (const auto& rid : ranges_by_level_[level]) {
    const auto it = pools.find(rid);
    if (it == pools.end()) continue;  // no examples touch this range
    const auto init = init_from_points(it->second, cfg_.grid_steps);
    Model::Entry* entry = model_.find(rid);
    entry->trapezoid = init.trapezoid;
    entry->limits = init.limits;
    entry->trained = true;
  }
}

double Trainer::run_epoch(int level, std::span<const ExampleRecord> lesson,
                          bool allow_worsening) {
  // Phase 1: evaluate every example against the epoch-start model and
  // collect lr-scaled desired points per range and leg. Buffers never
  // persist across epochs.
  std::map<std::string, std::pair<std::vector<DesiredPoint>,
                                  std::vector<DesiredPoint>>>
      buckets;
  CollectOptions opt;
  opt.lr = cfg_.lr;
  opt.gate_t = cfg_.gate_t;
  double current_error = 0.0;
  for (const auto& ex : lesson) {
    const ProofTree& tree = tree_for(ex.category);
    current_error += std::fabs(ex.desired - evaluate(tree, model_, ex, cfg_.gate_t));
    for (const auto& rec : collect_points(tree, model_, ex, opt)) {
      auto& [left, right] = buckets[rec.range_id];
      if (rec.point.leg == Leg::Left) left.push_back(rec.point);
      else if (rec.point.leg == Leg::Right) right.push_back(rec.point);
      // Normal points never take part in leg fitting.
    }
  }

  // Phase 2: per range in definition order, left leg then right leg. Each
  // candidate is re-scored over the whole lesson; accepted changes stay
  // visible to later candidates.
  for (const auto& rid : ranges_by_level_[level]) {
    Model::Entry* entry = model_.find(rid);
    if (!entry->trained || entry->trapezoid.frozen) continue;
    const auto bucket = buckets.find(rid);
    if (bucket == buckets.end()) continue;
    const auto& [left, right] = bucket->second;
    for (int side = 0; side < 2; ++side) {
      const auto& pts = side == 0 ? left : right;
      if (pts.empty()) continue;
      const Trapezoid candidate = update_legs(
          entry->trapezoid, entry->limits, side == 0 ? pts : std::span<const DesiredPoint>{},
          side == 0 ? std::span<const DesiredPoint>{} : pts, cfg_.slope_tol);
      if (candidate == entry->trapezoid) continue;
      const Trapezoid previous = entry->trapezoid;
      entry->trapezoid = candidate;
      const double candidate_error = total_error(lesson);
      if (candidate_error <= current_error || allow_worsening)
        current_error = candidate_error;
      else
        entry->trapezoid = previous;
    }
  }
  return current_error;
}

LevelTrace Trainer::train_level(int level,
                                std::span<const ExampleRecord> lesson) {
  initialize_level(level, lesson);

  LevelTrace trace;
  trace.level = level;

  const auto& level_ranges = ranges_by_level_[level];
  const auto snapshot = [&] {
    std::vector<Model::Entry> snap;
    for (const auto& rid : level_ranges) {
      const Model::Entry* entry = model_.find(rid);
      if (entry->trained) snap.push_back(*entry);
    }
    return snap;
  };

  double error = total_error(lesson);
  trace.epochs.push_back({0, error, false});
  double best_error = error;
  auto best = snapshot();

  bool allow_worsening = false;
  double previous = error;
  for (int epoch = 1; epoch <= cfg_.epochs_per_level; ++epoch) {
    error = run_epoch(level, lesson, allow_worsening);
    trace.epochs.push_back({epoch, error, allow_worsening});
    if (error < best_error) {
      best_error = error;
      best = snapshot();
    }
    allow_worsening = (previous - error) < cfg_.escape_threshold;
    previous = error;
  }

  // Restore the best parameters seen during the lesson and freeze them for
  // all subsequent lessons.
  for (auto& entry : best) {
    entry.trapezoid.frozen = true;
    *model_.find(entry.id) = entry;
  }
  trace.best_error = best_error;
  return trace;
}

TrainResult Trainer::train_all(std::span<const ExampleRecord> examples) {
  std::map<int, std::vector<ExampleRecord>> lessons;
  for (const auto& ex : examples) {
    const auto it = levels_.level_of.find(ex.category);
    if (it == levels_.level_of.end()) throw UnknownCategory(ex.category);
    lessons[it->second].push_back(ex);
  }

  // An example can only train once every range of its strict ancestors is
  // trained (parent branches must evaluate); with lessons in ascending level
  // order that is decided by the time its level comes up.
  const auto ancestors_trained = [&](const std::string& category) {
    const auto chain = defs_->ancestry(category);
    for (std::size_t i = 0; i + 1 < chain.size(); ++i)
      for (const auto& rid : DefinitionTree::ranges_of(*chain[i]))
        if (!model_.find(rid)->trained) return false;
    return true;
  };

  TrainResult result;
  for (const auto& [level, level_ranges] : ranges_by_level_) {
    std::vector<ExampleRecord> lesson;
    for (auto& ex : lessons[level]) {
      if (ancestors_trained(ex.category))
        lesson.push_back(std::move(ex));
      else
        warnings_.push_back("example '" + ex.id +
                            "' skipped: ancestor ranges untrained");
    }

    if (lesson.empty()) {
      if (!cfg_.skip_levels_without_examples) throw NoExamplesForLevel(level);
      warnings_.push_back("level " + std::to_string(level) +
                          " skipped: no examples; its ranges stay untrained");
      continue;
    }

    for (const auto& cat : defs_->categories) {
      const auto it = levels_.level_of.find(cat.name);
      if (it == levels_.level_of.end() || it->second != level) continue;
      const bool has_example =
          std::any_of(lesson.begin(), lesson.end(), [&](const ExampleRecord& e) {
            return e.category == cat.name;
          });
      if (!has_example && !DefinitionTree::ranges_of(cat).empty())
        warnings_.push_back("category '" + cat.name +
                            "' has no examples; its ranges stay untrained");
    }

    result.traces.push_back(train_level(level, lesson));
  }

  for (const auto& entry : model_.entries)
    if (!entry.trained) result.untrained_ranges.push_back(entry.id);
  result.model = model_;
  result.warnings = warnings_;
  return result;
}

TrainResult train_all(const DefinitionTree& defs,
                      std::span<const ExampleRecord> examples,
                      const TrainConfig& config) {
  Trainer trainer(defs, config);
  return trainer.train_all(examples);
}

}  // namespace omlet
