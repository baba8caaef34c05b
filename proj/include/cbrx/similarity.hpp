#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cbrx/errors.hpp"
#include "cbrx/model.hpp"

namespace cbrx {

// Similarity of one attribute value pair in [0,1]; std::nullopt when either
// side is missing. Throws ValidationError when the measure does not fit the
// descriptor kind and SchemaError when a value does not fit the descriptor.
std::optional<double> local_similarity(const LocalSimilarityMeasure& measure,
                                       const AttributeDescriptor& descriptor, const Value& q,
                                       const Value& c);

struct GlobalScore {
  double score = 0.0;
  // Set when no problem attribute had a resolvable local similarity with
  // positive weight; score is 0 in that case.
  bool no_overlap = false;
};

// Per-attribute evaluation plan built once per model snapshot. Holds
// references into the model, which must outlive the plan.
class ScoringPlan {
 public:
  struct Term {
    std::size_t index;  // position in the schema
    const AttributeDescriptor* descriptor;
    const LocalSimilarityMeasure* measure;
    double weight;
  };

  // Throws ValidationError with the violation list if the model is invalid.
  explicit ScoringPlan(const SimilarityModel& model);

  const std::vector<Term>& terms() const { return terms_; }
  const SimilarityModel& model() const { return *model_; }

  std::optional<double> local(const Term& term, const Case& query, const Case& c) const {
    return local_similarity(*term.measure, *term.descriptor, query.values[term.index],
                            c.values[term.index]);
  }

  // Assumes both cases were checked with check_case against the model schema.
  GlobalScore score(const Case& query, const Case& c) const;

 private:
  const SimilarityModel* model_;
  std::vector<Term> terms_;
};

// Weight-normalized weighted sum over the resolvable problem attributes.
GlobalScore global_similarity(const SimilarityModel& model, const Case& query, const Case& c);

// Empty iff every model invariant holds.
std::vector<Violation> validate_model(const SimilarityModel& model);

// Conformance of a case against a schema: arity, value kinds, symbol sets.
// Numeric values outside the descriptor range are allowed.
std::vector<Violation> check_case(const Schema& schema, const Case& c);

// Names, kinds and roles must agree position by position.
std::vector<Violation> check_schema_compatible(const Schema& model_schema, const Schema& other);

// Throwing wrappers used on the evaluation paths.
void require_valid(const SimilarityModel& model);
void require_case(const Schema& schema, const Case& c, const char* what);
void require_compatible(const Schema& model_schema, const Schema& other);

struct DefaultModelOptions {
  double degree = 2.0;
  double weight = 1.0;
};

// Starter model over a schema: polynomial measures on numeric attributes with
// a proper range, exact-match step on degenerate ranges, identity tables on
// symbolic attributes, uniform weights.
SimilarityModel make_default_model(const Schema& schema, DefaultModelOptions options = {});

// Copy-on-write edits. Each returns a new snapshot with version + 1 and leaves
// the input untouched. Validation is left to the caller.
SimilarityModel with_measure(const SimilarityModel& model, const std::string& attribute,
                             LocalSimilarityMeasure measure);
SimilarityModel with_weights(const SimilarityModel& model, std::map<std::string, double> weights);
SimilarityModel with_range(const SimilarityModel& model, const std::string& attribute, Range range);

}  // namespace cbrx
