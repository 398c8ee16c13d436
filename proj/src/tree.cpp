#include "omlet/tree.hpp"

#include <algorithm>
#include <set>

#include "omlet/errors.hpp"

namespace omlet {

const CategoryDef* DefinitionTree::find(std::string_view name) const {
  for (const auto& c : categories)
    if (c.name == name) return &c;
  return nullptr;
}

std::vector<const CategoryDef*> DefinitionTree::ancestry(
    const std::string& category) const {
  const CategoryDef* cat = find(category);
  if (!cat) throw UnknownCategory(category);
  std::vector<const CategoryDef*> chain;
  std::set<std::string> seen;
  while (cat) {
    if (!seen.insert(cat->name).second) throw CyclicDefinition(cat->name);
    chain.push_back(cat);
    if (!cat->parent) break;
    const CategoryDef* parent = find(*cat->parent);
    if (!parent) throw UnknownCategory(*cat->parent);
    cat = parent;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

std::vector<std::string> DefinitionTree::ranges_of(const CategoryDef& cat) {
  std::vector<std::string> out;
  for (const auto& g : cat.groups)
    for (const auto& r : g.ranges) out.push_back(r.id);
  return out;
}

std::vector<std::string> DefinitionTree::ranges_in_chain(
    const std::string& category) const {
  std::vector<std::string> out;
  for (const CategoryDef* c : ancestry(category)) {
    auto own = ranges_of(*c);
    out.insert(out.end(), own.begin(), own.end());
  }
  return out;
}

std::vector<std::string> DefinitionTree::binaries_in_chain(
    const std::string& category) const {
  std::vector<std::string> out;
  for (const CategoryDef* c : ancestry(category))
    out.insert(out.end(), c->binary_props.begin(), c->binary_props.end());
  return out;
}

int LevelMap::max_level() const {
  int m = 0;
  for (const auto& [_, lvl] : level_of) m = std::max(m, lvl);
  return m;
}

LevelMap assign_levels(const DefinitionTree& defs) {
  LevelMap map;
  for (const auto& c : defs.categories) {
    int level = 0;
    for (const CategoryDef* link : defs.ancestry(c.name))
      if (link->has_properties()) ++level;
    if (c.has_properties()) map.level_of[c.name] = level;
  }
  return map;
}

double pand(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("pand over an empty value list");
  double p = 1.0;
  for (double v : values) p *= v;
  return p;
}

double por(double a, double b) { return a + b - a * b; }

ProofTree build_proof_tree(const DefinitionTree& defs,
                           const std::string& category) {
  ProofTree tree;
  tree.category = category;

  // Control-structure categories (no functional properties) contribute no
  // node of their own.
  std::vector<const CategoryDef*> chain;
  for (const CategoryDef* c : defs.ancestry(category))
    if (c->has_properties()) chain.push_back(c);
  if (chain.empty())
    throw Error("category '" + category +
                "' has no functional properties anywhere in its chain");

  int current = -1;
  int level = 0;
  for (const CategoryDef* cat : chain) {
    ++level;
    ProofTree::Node conj;
    conj.kind = ProofTree::Kind::Pand;
    conj.id = cat->name;
    conj.level = level;
    for (const auto& g : cat->groups) {
      for (const auto& r : g.ranges) {
        ProofTree::Node leaf;
        leaf.kind = ProofTree::Kind::RangeLeaf;
        leaf.id = r.id;
        leaf.level = level;
        conj.children.push_back(tree.add(std::move(leaf)));
      }
    }
    for (const auto& b : cat->binary_props) {
      ProofTree::Node leaf;
      leaf.kind = ProofTree::Kind::BinaryLeaf;
      leaf.id = b;
      leaf.level = level;
      conj.children.push_back(tree.add(std::move(leaf)));
    }
    const int conj_idx = tree.add(std::move(conj));
    if (current < 0) {
      current = conj_idx;
    } else {
      ProofTree::Node disj;
      disj.kind = ProofTree::Kind::Por;
      disj.id = cat->name;
      disj.level = level;
      disj.children = {current, conj_idx};
      current = tree.add(std::move(disj));
    }
  }
  tree.root = current;
  tree.target_level = level;
  return tree;
}

std::vector<double> evaluate_nodes(const ProofTree& tree, const Model& model,
                                   const ExampleRecord& ex, double gate_t) {
  std::vector<double> values(tree.nodes.size(), 0.0);
  bool binary_failed = false;

  const auto eval = [&](auto&& self, int idx) -> double {
    const auto& node = tree.nodes[idx];
    double v = 0.0;
    switch (node.kind) {
      case ProofTree::Kind::RangeLeaf: {
        const auto it = ex.measurements.find(node.id);
        if (it == ex.measurements.end()) throw MissingMeasurement(node.id);
        const Model::Entry* entry = model.find(node.id);
        if (!entry || !entry->trained) throw PartialModel(node.id);
        v = evaluate_trapezoid(entry->trapezoid, it->second);
        break;
      }
      case ProofTree::Kind::BinaryLeaf: {
        const auto it = ex.binaries.find(node.id);
        if (it == ex.binaries.end()) throw MissingMeasurement(node.id);
        v = it->second ? 1.0 : 0.0;
        if (!it->second) binary_failed = true;
        break;
      }
      case ProofTree::Kind::Pand: {
        v = 1.0;
        for (int c : node.children) v *= self(self, c);
        break;
      }
      case ProofTree::Kind::Por: {
        const double parent = self(self, node.children[0]);
        const double subtree = self(self, node.children[1]);
        v = subtree > gate_t ? por(subtree, parent) : 0.0;
        break;
      }
    }
    values[idx] = v;
    return v;
  };
  eval(eval, tree.root);

  // A failed necessary property disqualifies the example outright, even when
  // it sits in a POR parent branch.
  if (binary_failed) values[tree.root] = 0.0;
  return values;
}

double evaluate(const ProofTree& tree, const Model& model,
                const ExampleRecord& ex, double gate_t) {
  return evaluate_nodes(tree, model, ex, gate_t)[tree.root];
}

}  // namespace omlet
