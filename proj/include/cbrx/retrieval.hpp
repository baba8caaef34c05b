#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbrx/model.hpp"
#include "cbrx/similarity.hpp"

namespace cbrx {

struct ExplanationRow {
  std::string attribute;
  std::optional<double> local_similarity;  // nullopt: missing on either side
  double weight_raw = 0.0;
  double weight_normalized = 0.0;  // 0 for missing rows
  double contribution = 0.0;       // weight_normalized * local_similarity

  bool missing() const { return !local_similarity.has_value(); }
  bool operator==(const ExplanationRow&) const = default;
};

// Per-attribute decomposition of one global score. Rows follow schema order
// and cover every problem attribute. Missing rows are kept for display but
// excluded from both sums.
struct Explanation {
  std::vector<ExplanationRow> rows;
  double score = 0.0;
  bool no_overlap = false;

  double contribution_sum() const;
  double normalized_weight_sum() const;
  bool operator==(const Explanation&) const = default;
};

struct RetrievalEntry {
  std::string case_id;
  double score = 0.0;
  bool no_overlap = false;
  Explanation explanation;

  bool operator==(const RetrievalEntry&) const = default;
};

struct RetrievalResult {
  // Attribute names of the query values, schema order.
  std::vector<std::string> attributes;
  Case query;
  std::uint64_t model_version = 0;
  std::size_t k = 0;
  std::vector<RetrievalEntry> entries;

  bool operator==(const RetrievalResult&) const = default;
};

enum class Execution { serial, parallel };

// Decomposition of global_similarity(model, query, c).
Explanation explain(const SimilarityModel& model, const Case& query, const Case& c);
Explanation explain(const ScoringPlan& plan, const Case& query, const Case& c);

// Scores every case, orders by score descending then case id ascending
// (scores within kernels::kRankScale resolution count as equal), keeps
// the first k and attaches explanations to those. An empty base yields an
// empty result. Both execution modes produce identical results.
RetrievalResult retrieve(const SimilarityModel& model, const CaseBase& base, const Case& query,
                         std::size_t k, Execution execution = Execution::parallel);

// Same as retrieve without explanations on the entries; used by the classifier.
std::vector<RetrievalEntry> rank_cases(const ScoringPlan& plan, const std::vector<Case>& cases,
                                       const Case& query, std::size_t k,
                                       Execution execution = Execution::serial);

}  // namespace cbrx
