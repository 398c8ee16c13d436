#include "omlet/datagen.hpp"

#include <algorithm>
#include <cstdio>

#include "omlet/errors.hpp"
#include "omlet/rng.hpp"

namespace omlet {

namespace {

double draw_measurement(const Trapezoid& t, double p_normal, Rng& rng) {
  const double left_width = t.left_open ? 0.0 : t.n1 - t.z1;
  const double right_width = t.right_open ? 0.0 : t.z2 - t.n2;
  const bool on_legs =
      rng.next_double() >= p_normal && left_width + right_width > 0.0;
  if (!on_legs) return t.n1 == t.n2 ? t.n1 : rng.uniform(t.n1, t.n2);
  // Side chosen proportional to leg width; the open interval keeps the
  // measurement off the zero points.
  if (rng.next_double() < left_width / (left_width + right_width))
    return t.z1 + left_width * rng.next_positive_double();
  return t.z2 - right_width * rng.next_positive_double();
}

int histogram_bin(double desired) {
  return std::min(static_cast<int>(desired * 10.0), 9);
}

}  // namespace

std::vector<ExampleRecord> generate(const DefinitionTree& defs,
                                    const Model& truth, const GenSpec& spec) {
  const ProofTree tree = build_proof_tree(defs, spec.category);
  const auto range_ids = defs.ranges_in_chain(spec.category);
  const auto binary_ids = defs.binaries_in_chain(spec.category);
  for (const auto& rid : range_ids) {
    const Model::Entry* entry = truth.find(rid);
    if (!entry || !entry->trained) throw PartialModel(rid);
  }

  // Bin quotas when a target histogram is requested.
  std::vector<int> quota(10, 0);
  const bool histogram = !spec.target_histogram.empty();
  int total = spec.count;
  if (histogram) {
    total = 0;
    for (const auto& bin : spec.target_histogram) {
      quota[histogram_bin(std::min(bin.lo + 0.05, 0.999))] += bin.count;
      total += bin.count;
    }
  }

  std::vector<ExampleRecord> out;
  out.reserve(static_cast<std::size_t>(total));
  const long max_attempts =
      static_cast<long>(spec.resample_cap) * std::max(total, 1);
  for (long attempt = 0; static_cast<int>(out.size()) < total; ++attempt) {
    if (attempt >= max_attempts) throw HistogramInfeasible();
    Rng rng(Rng::mix(spec.seed, static_cast<std::uint64_t>(attempt)));
    ExampleRecord ex;
    ex.category = spec.category;
    for (const auto& rid : range_ids)
      ex.measurements[rid] =
          draw_measurement(truth.find(rid)->trapezoid, spec.p_normal, rng);
    for (const auto& pid : binary_ids) ex.binaries[pid] = true;
    ex.desired = evaluate(tree, truth, ex, 0.0);

    if (spec.min_desired && ex.desired < *spec.min_desired) continue;
    if (spec.max_desired && ex.desired >= *spec.max_desired) continue;
    if (histogram) {
      int& remaining = quota[histogram_bin(ex.desired)];
      if (remaining == 0) continue;
      --remaining;
    }
    char seq[16];
    std::snprintf(seq, sizeof(seq), "%04zu", out.size() + 1);
    ex.id = spec.category + "_" + seq;
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace omlet
