#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cbrx/errors.hpp"
#include "cbrx/evaluation.hpp"
#include "cbrx/ingestion.hpp"
#include "cbrx/model.hpp"
#include "cbrx/retrieval.hpp"
#include "cbrx/viz.hpp"

// JSON documents shared by the CLI, the HTTP service and files on disk.
// Keys are emitted in a fixed order and every document starts with a
// "document" tag naming its type. Doubles use the shortest round-trip form,
// so serialize(parse(serialize(x))) == serialize(x).
namespace cbrx::doc {

using Json = nlohmann::ordered_json;

inline constexpr const char* kModel = "similarity-model";
inline constexpr const char* kCaseBase = "case-base";
inline constexpr const char* kQuery = "query";
inline constexpr const char* kResult = "retrieval-result";
inline constexpr const char* kExplanation = "explanation";
inline constexpr const char* kSummary = "distribution-summary";
inline constexpr const char* kSuggestion = "measure-suggestion";
inline constexpr const char* kReport = "evaluation-report";
inline constexpr const char* kChartSet = "decomposition-chart-set";
inline constexpr const char* kCurve = "measure-preview";
inline constexpr const char* kViolations = "violations";

// Two-space indented text with a trailing newline.
std::string serialize(const Json& j);
// Throws ValidationError on malformed JSON.
Json parse(std::string_view text);
Json read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// The "document" tag, or an empty string.
std::string document_type(const Json& j);

Json to_json(const Violation& v);
Json violations_to_json(const std::vector<Violation>& violations);

Json measure_to_json(const LocalSimilarityMeasure& m);
LocalSimilarityMeasure measure_from_json(const Json& j);

Json schema_to_json(const Schema& schema);
Schema schema_from_json(const Json& j);

Json model_to_json(const SimilarityModel& model);
// Structural parsing only; invariants are checked by validate_model.
SimilarityModel model_from_json(const Json& j);

Json value_to_json(const Value& v);

// {"id": ..., "values": {name: value}} in schema order.
Json case_to_json(const Schema& schema, const Case& c);
// With allow_partial, absent attributes become Missing (queries); otherwise
// every schema attribute must be present. Unknown attributes are rejected.
Case case_from_json(const Schema& schema, const Json& j, bool allow_partial);

Json casebase_to_json(const CaseBase& base);
CaseBase casebase_from_json(const Json& j);

Json explanation_to_json(const Explanation& e);
Explanation explanation_from_json(const Json& j);

Json result_to_json(const RetrievalResult& r, bool with_explanations = true);
RetrievalResult result_from_json(const Json& j);

Json summary_to_json(const DistributionSummary& s);
DistributionSummary summary_from_json(const Json& j);

Json suggestion_to_json(const SuggestedMeasure& s);

Json report_to_json(const EvaluationReport& r);

Json chart_set_to_json(const DecompositionChartSet& c);
DecompositionChartSet chart_set_from_json(const Json& j);

Json curve_to_json(const MeasureCurve& c);

}  // namespace cbrx::doc
