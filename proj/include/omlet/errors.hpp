#pragma once

#include <stdexcept>
#include <string>

namespace omlet {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Syntax or validation failure in one of the text formats.
struct ParseError : Error {
  int line;
  ParseError(int line_number, const std::string& message)
      : Error("line " + std::to_string(line_number) + ": " + message),
        line(line_number) {}
};

struct CyclicDefinition : Error {
  explicit CyclicDefinition(const std::string& category)
      : Error("cyclic extends-chain involving category '" + category + "'") {}
};

struct UnknownCategory : Error {
  explicit UnknownCategory(const std::string& category)
      : Error("unknown category '" + category + "'") {}
};

struct MissingMeasurement : Error {
  explicit MissingMeasurement(const std::string& id)
      : Error("missing measurement or binary value for '" + id + "'") {}
};

struct DesiredOutOfRange : Error {
  explicit DesiredOutOfRange(double value)
      : Error("desired measure " + std::to_string(value) +
              " outside (0, 1]") {}
};

struct EmptyPointSet : Error {
  EmptyPointSet() : Error("cannot initialize a trapezoid from zero points") {}
};

struct EmptyInput : Error {
  explicit EmptyInput(const std::string& what) : Error(what) {}
};

struct FrozenTrapezoid : Error {
  FrozenTrapezoid() : Error("attempted update of a frozen trapezoid") {}
};

struct SaturatedParent : Error {
  SaturatedParent()
      : Error("parent branch measure is 1; desired subtree value is "
              "underdetermined") {}
};

struct NoExamplesForLevel : Error {
  explicit NoExamplesForLevel(int level)
      : Error("no usable training examples for learning level " +
              std::to_string(level)) {}
};

struct PartialModel : Error {
  explicit PartialModel(const std::string& range_id)
      : Error("model has no trained range '" + range_id + "'") {}
};

struct HistogramInfeasible : Error {
  HistogramInfeasible()
      : Error("resample cap exceeded while filling the target histogram") {}
};

struct SizeTooLarge : Error {
  SizeTooLarge(int size, int available)
      : Error("training size " + std::to_string(size) +
              " does not leave a test set (have " +
              std::to_string(available) + " examples)") {}
};

}  // namespace omlet
