#include "omlet/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "omlet/backprop.hpp"
#include "omlet/errors.hpp"
#include "omlet/rng.hpp"
#include "omlet/rulebase.hpp"

namespace omlet {

namespace {

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
  std::size_t workers = threads > 0
                            ? static_cast<std::size_t>(threads)
                            : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

EvalRow score_example(const ProofTree& tree, const Model& model,
                      const ExampleRecord& ex, double gate_t) {
  const auto values = evaluate_nodes(tree, model, ex, gate_t);
  EvalRow row;
  row.id = ex.id;
  row.category = ex.category;
  row.desired = ex.desired;
  row.actual = values[tree.root];
  row.abs_error = std::fabs(row.desired - row.actual);
  const auto& root = tree.nodes[tree.root];
  if (root.kind == ProofTree::Kind::Por) {
    const double parent = values[root.children[0]];
    row.own_actual = values[root.children[1]];
    row.own_desired =
        parent >= 1.0 ? row.own_actual : por_desired(parent, ex.desired);
  } else {
    row.own_actual = row.actual;
    row.own_desired = row.desired;
  }
  row.own_abs_error = std::fabs(row.own_desired - row.own_actual);
  return row;
}

}  // namespace

EvalReport evaluate_examples(const DefinitionTree& defs, const Model& model,
                             std::span<const ExampleRecord> examples,
                             double gate_t) {
  if (examples.empty())
    throw EmptyInput("no examples to evaluate; average error is undefined");
  std::map<std::string, ProofTree> trees;
  EvalReport report;
  for (const auto& ex : examples) {
    auto it = trees.find(ex.category);
    if (it == trees.end())
      it = trees.emplace(ex.category, build_proof_tree(defs, ex.category)).first;
    report.rows.push_back(score_example(it->second, model, ex, gate_t));
    const EvalRow& row = report.rows.back();
    report.average_error += row.abs_error;
    report.average_own_error += row.own_abs_error;
    auto& stats = report.per_category[ex.category];
    ++stats.count;
    stats.mean_abs_error += row.abs_error;
    stats.mean_own_abs_error += row.own_abs_error;
    ++report.desired_histogram[std::min(static_cast<int>(ex.desired * 10.0), 9)];
  }
  const auto n = static_cast<double>(report.rows.size());
  report.average_error /= n;
  report.average_own_error /= n;
  for (auto& [_, stats] : report.per_category) {
    stats.mean_abs_error /= stats.count;
    stats.mean_own_abs_error /= stats.count;
  }
  return report;
}

EvalReport leave_one_out(const DefinitionTree& defs,
                         std::span<const ExampleRecord> examples,
                         const TrainConfig& config, int threads) {
  const LevelMap levels = assign_levels(defs);
  std::map<int, int> per_level;
  for (const auto& ex : examples) {
    const auto it = levels.level_of.find(ex.category);
    if (it == levels.level_of.end()) throw UnknownCategory(ex.category);
    ++per_level[it->second];
  }
  for (const auto& [level, count] : per_level)
    if (count < 2) throw NoExamplesForLevel(level);

  std::vector<EvalRow> rows(examples.size());
  parallel_for(examples.size(), threads, [&](std::size_t i) {
    std::vector<ExampleRecord> fold;
    fold.reserve(examples.size() - 1);
    for (std::size_t j = 0; j < examples.size(); ++j)
      if (j != i) fold.push_back(examples[j]);
    // The held-out example must never reach any training phase.
    for (const auto& ex : fold)
      if (ex.id == examples[i].id)
        throw Error("leave-one-out leak: '" + ex.id + "' in training fold");
    const TrainResult trained = train_all(defs, fold, config);
    rows[i] = score_example(build_proof_tree(defs, examples[i].category),
                            trained.model, examples[i], config.gate_t);
  });

  EvalReport report;
  for (auto& row : rows) {
    report.average_error += row.abs_error;
    report.average_own_error += row.own_abs_error;
    auto& stats = report.per_category[row.category];
    ++stats.count;
    stats.mean_abs_error += row.abs_error;
    stats.mean_own_abs_error += row.own_abs_error;
    ++report.desired_histogram[std::min(static_cast<int>(row.desired * 10.0), 9)];
    report.rows.push_back(std::move(row));
  }
  const auto n = static_cast<double>(report.rows.size());
  report.average_error /= n;
  report.average_own_error /= n;
  for (auto& [_, stats] : report.per_category) {
    stats.mean_abs_error /= stats.count;
    stats.mean_own_abs_error /= stats.count;
  }
  return report;
}

std::vector<PartitionPoint> partition_sweep(
    const DefinitionTree& defs, std::span<const ExampleRecord> examples,
    std::span<const int> sizes, const TrainConfig& config, int threads) {
  constexpr int kPartitions = 10;
  const int n = static_cast<int>(examples.size());
  for (int size : sizes)
    if (size <= 0 || size >= n) throw SizeTooLarge(size, n);

  std::vector<PartitionPoint> points(sizes.size());
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const int size = sizes[s];
    std::array<double, kPartitions> fold_errors{};
    parallel_for(kPartitions, threads, [&](std::size_t part) {
      // Seeded Fisher-Yates pick of the training subset.
      Rng rng(Rng::mix(config.rng_seed,
                       static_cast<std::uint64_t>(size) * 1000003ULL + part));
      std::vector<int> order(examples.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      for (std::size_t i = order.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
        std::swap(order[i], order[j]);
      }
      std::vector<ExampleRecord> train_set, test_set;
      std::set<std::string> train_ids;
      for (int idx = 0; idx < n; ++idx) {
        if (idx < size) {
          train_set.push_back(examples[order[idx]]);
          train_ids.insert(examples[order[idx]].id);
        } else {
          test_set.push_back(examples[order[idx]]);
        }
      }
      for (const auto& ex : test_set)
        if (train_ids.count(ex.id))
          throw Error("partition leak: '" + ex.id + "' in both sets");
      const TrainResult trained = train_all(defs, train_set, config);
      fold_errors[part] =
          evaluate_examples(defs, trained.model, test_set, config.gate_t)
              .average_error;
    });
    double mean = 0.0;
    for (double e : fold_errors) mean += e;
    mean /= kPartitions;
    double var = 0.0;
    for (double e : fold_errors) var += (e - mean) * (e - mean);
    points[s] = {size, mean, std::sqrt(var / (kPartitions - 1))};
  }
  return points;
}

std::string eval_report_csv(const EvalReport& report) {
  std::string out =
      "id,category,desired,actual,abs_error,own_desired,own_actual,"
      "own_abs_error\n";
  for (const auto& r : report.rows) {
    out += r.id + "," + r.category + "," + format_double(r.desired) + "," +
           format_double(r.actual) + "," + format_double(r.abs_error) + "," +
           format_double(r.own_desired) + "," + format_double(r.own_actual) +
           "," + format_double(r.own_abs_error) + "\n";
  }
  out += "# average_error=" + format_double(report.average_error) + "\n";
  out += "# average_own_error=" + format_double(report.average_own_error) + "\n";
  for (const auto& [name, stats] : report.per_category)
    out += "# category " + name + " count=" + std::to_string(stats.count) +
           " mean_abs_error=" + format_double(stats.mean_abs_error) +
           " mean_own_abs_error=" + format_double(stats.mean_own_abs_error) +
           "\n";
  out += "# desired_histogram";
  for (int i = 0; i < 10; ++i)
    out += " " + format_double(i / 10.0) + ":" +
           std::to_string(report.desired_histogram[i]);
  out += "\n";
  return out;
}

std::string trace_csv(std::span<const LevelTrace> traces) {
  std::string out = "level,epoch,total_error,allow_worsening\n";
  for (const auto& trace : traces)
    for (const auto& row : trace.epochs)
      out += std::to_string(trace.level) + "," + std::to_string(row.epoch) +
             "," + format_double(row.total_error) + "," +
             (row.allow_worsening ? "1" : "0") + "\n";
  return out;
}

std::string partition_csv(std::span<const PartitionPoint> points) {
  std::string out = "train_size,mean_error,std_error\n";
  for (const auto& p : points)
    out += std::to_string(p.train_size) + "," + format_double(p.mean_error) +
           "," + format_double(p.std_error) + "\n";
  return out;
}

}  // namespace omlet
