#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cbrx {

enum class AttributeKind { numeric, symbolic };
enum class AttributeRole { problem, solution };

struct Range {
  double min = 0.0;
  double max = 0.0;

  double width() const { return max - min; }
  bool operator==(const Range&) const = default;
};

// Schema entry for one case attribute. Numeric attributes carry a range,
// symbolic attributes an ordered list of unique labels.
struct AttributeDescriptor {
  std::string name;
  AttributeKind kind = AttributeKind::numeric;
  Range range;
  std::vector<std::string> symbols;
  AttributeRole role = AttributeRole::problem;

  bool is_problem() const { return role == AttributeRole::problem; }
  std::optional<std::size_t> symbol_index(const std::string& symbol) const;

  bool operator==(const AttributeDescriptor&) const = default;
};

using Schema = std::vector<AttributeDescriptor>;

std::optional<std::size_t> find_attribute(const Schema& schema, const std::string& name);

struct PolynomialMeasure {
  double degree = 2.0;
  bool operator==(const PolynomialMeasure&) const = default;
};

struct StepMeasure {
  double threshold = 0.0;
  bool operator==(const StepMeasure&) const = default;
};

// Similarity lookup indexed by the descriptor's symbol order: matrix[q][c].
struct TableMeasure {
  std::vector<std::vector<double>> matrix;
  bool operator==(const TableMeasure&) const = default;
};

using MeasureVariant = std::variant<PolynomialMeasure, StepMeasure, TableMeasure>;

struct LocalSimilarityMeasure {
  MeasureVariant variant;

  static LocalSimilarityMeasure polynomial(double degree) { return {PolynomialMeasure{degree}}; }
  static LocalSimilarityMeasure step(double threshold) { return {StepMeasure{threshold}}; }
  static LocalSimilarityMeasure table(std::vector<std::vector<double>> matrix) {
    return {TableMeasure{std::move(matrix)}};
  }
  // 1 on the diagonal, 0 elsewhere.
  static LocalSimilarityMeasure identity_table(std::size_t symbols);

  const char* type_name() const;
  bool applies_to(AttributeKind kind) const;

  bool operator==(const LocalSimilarityMeasure&) const = default;
};

enum class AmalgamationMode { weighted_sum };

struct AmalgamationFunction {
  AmalgamationMode mode = AmalgamationMode::weighted_sum;
  std::map<std::string, double> weights;

  bool operator==(const AmalgamationFunction&) const = default;
};

struct Missing {
  bool operator==(const Missing&) const = default;
};

// An attribute value: missing, a real number, or a symbol label.
using Value = std::variant<Missing, double, std::string>;

inline bool is_missing(const Value& v) { return std::holds_alternative<Missing>(v); }

// Text form of a value, used for solution labels: symbols verbatim, numbers in
// shortest round-trip form, missing as an empty string.
std::string to_label(const Value& v);

// Values are stored positionally, aligned with the schema the case belongs to.
struct Case {
  std::string id;
  std::vector<Value> values;

  bool operator==(const Case&) const = default;
};

struct SimilarityModel {
  Schema schema;
  std::map<std::string, LocalSimilarityMeasure> measures;
  AmalgamationFunction amalgamation;
  std::uint64_t version = 0;

  bool operator==(const SimilarityModel&) const = default;
};

struct CaseBase {
  std::string name;
  Schema schema;
  std::vector<Case> cases;

  bool operator==(const CaseBase&) const = default;
};

}  // namespace cbrx
