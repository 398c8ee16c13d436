#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "omlet/example.hpp"
#include "omlet/model.hpp"

namespace omlet {

struct RangeDecl {
  std::string id;
  std::string unit;  ///< annotation only, never converted
};

/// A named functional property: a group of ranges whose evaluations are
/// conjoined by PAND.
struct FunctionalGroup {
  std::string name;
  std::vector<RangeDecl> ranges;
};

struct CategoryDef {
  std::string name;
  std::optional<std::string> parent;
  std::vector<std::string> binary_props;
  std::vector<FunctionalGroup> groups;

  bool has_properties() const {
    return !binary_props.empty() || !groups.empty();
  }
};

/// The category hierarchy: a forest of categories chained by
/// extends-relations, each declaring binary properties and range groups.
struct DefinitionTree {
  std::vector<CategoryDef> categories;

  const CategoryDef* find(std::string_view name) const;
  /// Root-first extends-chain ending at `category` (inclusive).
  /// Throws UnknownCategory / CyclicDefinition.
  std::vector<const CategoryDef*> ancestry(const std::string& category) const;
  /// Range ids owned by one category, in declaration order.
  static std::vector<std::string> ranges_of(const CategoryDef& cat);
  /// All range ids an example of `category` must measure.
  std::vector<std::string> ranges_in_chain(const std::string& category) const;
  /// All binary prop ids an example of `category` must carry.
  std::vector<std::string> binaries_in_chain(const std::string& category) const;
};

/// Learning level per category. Categories without functional properties
/// anywhere carry no evaluation measure and receive no level; they only
/// provide control structure.
struct LevelMap {
  std::map<std::string, int> level_of;

  int max_level() const;
};

/// Topological level numbering: a propertied category with no propertied
/// ancestor is level 1, each propertied extends-step adds one.
/// Throws CyclicDefinition on malformed input.
LevelMap assign_levels(const DefinitionTree& defs);

/// Executable AND/OR structure for one target category. Nodes live in an
/// arena; PAND nodes take arbitrary arity, POR nodes have exactly the
/// parent branch (index 0) and the subcategory branch (index 1).
struct ProofTree {
  enum class Kind { Pand, Por, RangeLeaf, BinaryLeaf };

  struct Node {
    Kind kind = Kind::Pand;
    std::vector<int> children;
    std::string id;  ///< range/prop id for leaves, category name for Pand
    int level = 0;   ///< learning level owning the node
  };

  std::vector<Node> nodes;
  int root = -1;
  std::string category;
  int target_level = 0;  ///< level of the deepest (target) category

  int add(Node n) {
    nodes.push_back(std::move(n));
    return static_cast<int>(nodes.size()) - 1;
  }
};

/// Probabilistic and: the product of all values. Throws EmptyInput.
double pand(std::span<const double> values);

/// Probabilistic or: a + b - a * b.
double por(double a, double b);

/// Build the proof tree for one category: a PAND over the category's own
/// range and binary leaves, chained onto the parent's tree through a POR
/// node per extends-step. Throws UnknownCategory.
ProofTree build_proof_tree(const DefinitionTree& defs,
                           const std::string& category);

/// Per-node actual values for one example, indexed like tree.nodes. POR
/// nodes apply the subcategory gate (subtree value must exceed gate_t, else
/// the node is 0); a failed binary leaf anywhere forces the root to 0.
/// Throws MissingMeasurement / PartialModel.
std::vector<double> evaluate_nodes(const ProofTree& tree, const Model& model,
                                   const ExampleRecord& ex, double gate_t);

/// Overall evaluation measure: evaluate_nodes(...)[root].
double evaluate(const ProofTree& tree, const Model& model,
                const ExampleRecord& ex, double gate_t);

}  // namespace omlet
