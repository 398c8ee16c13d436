#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "omlet/example.hpp"
#include "omlet/model.hpp"
#include "omlet/tree.hpp"

namespace omlet {

/// Category definition file:
///
///   # comment
///   category <name> [extends <name>]
///     binary <prop_id>
///     group <fp_name> {
///       range <range_id> [unit <string>]
///     }
///   end
///
/// Parents must be defined before use; range ids are globally unique.
/// Throws ParseError / CyclicDefinition with line numbers.
DefinitionTree parse_rules(std::string_view text);
std::string serialize_rules(const DefinitionTree& defs);

/// Example file:
///
///   example <id> category=<name> desired=<real>
///     m <range_id>=<real>
///     b <prop_id>=<0|1>
///
/// Records end at a blank line or the next `example`. Every range and
/// binary property in the category's chain must be present; desired must be
/// in (0, 1]. Throws ParseError / MissingMeasurement / DesiredOutOfRange.
std::vector<ExampleRecord> parse_examples(std::string_view text,
                                          const DefinitionTree& defs);
std::string serialize_examples(std::span<const ExampleRecord> examples);

/// Model file: `key=value` header lines (limits, frozen flags, provenance)
/// followed by one `<RANGE_ID> (<z1> <n1> <n2> <z2>)` line per trained
/// range, open legs carrying the 10000 sentinel. parse_model inverts
/// serialize_model exactly.
std::string serialize_model(const Model& model);
Model parse_model(std::string_view text);

/// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace omlet
