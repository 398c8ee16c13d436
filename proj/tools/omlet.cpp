#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "omlet/datagen.hpp"
#include "omlet/errors.hpp"
#include "omlet/report.hpp"
#include "omlet/rulebase.hpp"
#include "omlet/trainer.hpp"

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw omlet::Error("cannot write '" + path + "'");
  out << content;
}

int thread_budget() {
  if (const char* env = std::getenv("OMLET_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;  // auto
}

void add_train_flags(CLI::App* cmd, omlet::TrainConfig& cfg) {
  cmd->add_option("--epochs", cfg.epochs_per_level,
                  "training epochs per learning level");
  cmd->add_option("--lr", cfg.lr, "fraction of the error propagated per epoch");
  cmd->add_option("--gate-t", cfg.gate_t, "subcategory gate threshold T");
  cmd->add_option("--escape-threshold", cfg.escape_threshold,
                  "improvement below which worsening changes are allowed once");
  cmd->add_option("--slope-tol", cfg.slope_tol,
                  "minimum |slope| for a usable leg fit");
  cmd->add_option("--grid-steps", cfg.grid_steps,
                  "grid resolution of the best-fit initial trapezoid search");
  cmd->add_option("--seed", cfg.rng_seed, "random seed for the protocols");
  cmd->add_flag("--skip-empty-levels", cfg.skip_levels_without_examples,
                "leave levels without examples untrained instead of failing");
}

omlet::TrainResult run_training(const std::string& rules_path,
                                const std::string& examples_path,
                                const omlet::TrainConfig& cfg,
                                omlet::DefinitionTree* defs_out = nullptr) {
  const auto defs = omlet::parse_rules(read_file(rules_path));
  const auto examples = omlet::parse_examples(read_file(examples_path), defs);
  if (defs_out) *defs_out = defs;
  return omlet::train_all(defs, examples, cfg);
}

std::string default_trace_path(const std::string& model_path) {
  const auto dot = model_path.rfind('.');
  const std::string stem =
      dot == std::string::npos ? model_path : model_path.substr(0, dot);
  return stem + "_trace.csv";
}

void attach_provenance(omlet::Model& model, const omlet::TrainConfig& cfg,
                       const omlet::TrainResult& result) {
  using omlet::format_double;
  auto& p = model.provenance;
  p.emplace_back("epochs_per_level", std::to_string(cfg.epochs_per_level));
  p.emplace_back("lr", format_double(cfg.lr));
  p.emplace_back("escape_threshold", format_double(cfg.escape_threshold));
  p.emplace_back("slope_tol", format_double(cfg.slope_tol));
  p.emplace_back("grid_steps", std::to_string(cfg.grid_steps));
  p.emplace_back("gate_t", format_double(cfg.gate_t));
  p.emplace_back("seed", std::to_string(cfg.rng_seed));
  for (const auto& trace : result.traces)
    p.emplace_back("best_error.level" + std::to_string(trace.level),
                   format_double(trace.best_error));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "omlet: learns trapezoidal membership functions embedded in an AND/OR "
      "categorization tree from labeled examples, and scores new examples "
      "with the learned tree"};
  app.require_subcommand(1);

  std::string rules_path, examples_path, model_path, out_path, trace_path;
  std::string category, quality, histogram_path, sizes_arg;
  omlet::TrainConfig cfg;
  omlet::GenSpec gen;

  auto* train = app.add_subcommand("train", "learn a model from examples");
  train->add_option("--rules", rules_path, "category definition file")->required();
  train->add_option("--examples", examples_path, "training examples file")->required();
  train->add_option("--out", out_path, "output model file")->required();
  train->add_option("--trace", trace_path, "epoch error trace CSV");
  add_train_flags(train, cfg);

  auto* eval = app.add_subcommand("eval", "score examples against a model");
  eval->add_option("--rules", rules_path, "category definition file")->required();
  eval->add_option("--model", model_path, "trained model file")->required();
  eval->add_option("--examples", examples_path, "examples file")->required();
  eval->add_option("--out", out_path, "report CSV (stdout when omitted)");
  eval->add_option("--gate-t", cfg.gate_t, "subcategory gate threshold T");

  auto* loo = app.add_subcommand("loo", "leave-one-out protocol");
  loo->add_option("--rules", rules_path, "category definition file")->required();
  loo->add_option("--examples", examples_path, "examples file")->required();
  loo->add_option("--out", out_path, "report CSV (stdout when omitted)");
  add_train_flags(loo, cfg);

  auto* part = app.add_subcommand("partition", "random-partition learning curve");
  part->add_option("--rules", rules_path, "category definition file")->required();
  part->add_option("--examples", examples_path, "examples file")->required();
  part->add_option("--sizes", sizes_arg, "comma-separated training set sizes")
      ->required();
  part->add_option("--out", out_path, "curve CSV (stdout when omitted)");
  add_train_flags(part, cfg);

  auto* gen_cmd = app.add_subcommand("gen", "synthesize labeled examples");
  gen_cmd->add_option("--rules", rules_path, "category definition file")->required();
  gen_cmd->add_option("--model", model_path, "ground-truth model file")->required();
  gen_cmd->add_option("--category", category, "category to synthesize")->required();
  gen_cmd->add_option("--n", gen.count, "number of examples")->required();
  gen_cmd->add_option("--p-normal", gen.p_normal,
                      "probability a measurement falls in the normal range");
  gen_cmd->add_option("--seed", gen.seed, "random seed");
  gen_cmd->add_option("--quality", quality,
                      "'good' (desired >= 0.6), 'bad' (desired < 0.6) or lo,hi");
  gen_cmd->add_option("--histogram", histogram_path,
                      "desired-measure histogram file: lines of '<bin_lo> <count>'");
  gen_cmd->add_option("--out", out_path, "output examples file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  const auto emit = [&](const std::string& content) {
    if (out_path.empty())
      std::cout << content;
    else
      write_file(out_path, content);
  };

  try {
    if (*train) {
      omlet::TrainResult result = run_training(rules_path, examples_path, cfg);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      attach_provenance(result.model, cfg, result);
      write_file(out_path, omlet::serialize_model(result.model));
      if (trace_path.empty()) trace_path = default_trace_path(out_path);
      write_file(trace_path, omlet::trace_csv(result.traces));
      for (const auto& trace : result.traces)
        std::cout << "level " << trace.level
                  << " best_error=" << omlet::format_double(trace.best_error)
                  << "\n";
    } else if (*eval) {
      const auto defs = omlet::parse_rules(read_file(rules_path));
      const auto model = omlet::parse_model(read_file(model_path));
      const auto examples = omlet::parse_examples(read_file(examples_path), defs);
      const auto report =
          omlet::evaluate_examples(defs, model, examples, cfg.gate_t);
      emit(omlet::eval_report_csv(report));
      std::cerr << "average_error=" << omlet::format_double(report.average_error)
                << "\n";
    } else if (*loo) {
      const auto defs = omlet::parse_rules(read_file(rules_path));
      const auto examples = omlet::parse_examples(read_file(examples_path), defs);
      const auto report =
          omlet::leave_one_out(defs, examples, cfg, thread_budget());
      emit(omlet::eval_report_csv(report));
      std::cerr << "loo_average_error="
                << omlet::format_double(report.average_error) << "\n";
    } else if (*part) {
      const auto defs = omlet::parse_rules(read_file(rules_path));
      const auto examples = omlet::parse_examples(read_file(examples_path), defs);
      std::vector<int> sizes;
      std::istringstream in(sizes_arg);
      std::string field;
      while (std::getline(in, field, ',')) sizes.push_back(std::stoi(field));
      const auto points =
          omlet::partition_sweep(defs, examples, sizes, cfg, thread_budget());
      emit(omlet::partition_csv(points));
    } else if (*gen_cmd) {
      const auto defs = omlet::parse_rules(read_file(rules_path));
      const auto truth = omlet::parse_model(read_file(model_path));
      gen.category = category;
      if (quality == "bad") {
        gen.max_desired = 0.6;
      } else if (quality == "good") {
        gen.min_desired = 0.6;
      } else if (!quality.empty()) {
        const auto comma = quality.find(',');
        if (comma == std::string::npos)
          throw omlet::Error("--quality expects 'good', 'bad' or lo,hi");
        gen.min_desired = std::stod(quality.substr(0, comma));
        gen.max_desired = std::stod(quality.substr(comma + 1));
      }
      if (!histogram_path.empty()) {
        std::istringstream in(read_file(histogram_path));
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty() || line[0] == '#') continue;
          std::istringstream row(line);
          omlet::HistogramBin bin;
          if (row >> bin.lo >> bin.count) gen.target_histogram.push_back(bin);
        }
      }
      const auto examples = omlet::generate(defs, truth, gen);
      emit(omlet::serialize_examples(examples));
    }
  } catch (const omlet::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const omlet::DesiredOutOfRange& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const omlet::MissingMeasurement& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const omlet::UnknownCategory& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const omlet::CyclicDefinition& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
