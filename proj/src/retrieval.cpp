#include "cbrx/retrieval.hpp"

#include <set>

#include "cbrx/kernels.hpp"

namespace cbrx {

double Explanation::contribution_sum() const {
  double sum = 0.0;
  for (const auto& r : rows) {
    if (!r.missing()) sum += r.contribution;
  }
  return sum;
}

double Explanation::normalized_weight_sum() const {
  double sum = 0.0;
  for (const auto& r : rows) {
    if (!r.missing()) sum += r.weight_normalized;
  }
  return sum;
}

Explanation explain(const ScoringPlan& plan, const Case& query, const Case& c) {
  Explanation out;
  out.rows.reserve(plan.terms().size());

  double total = 0.0;
  for (const auto& t : plan.terms()) {
    ExplanationRow row;
    row.attribute = t.descriptor->name;
    row.local_similarity = plan.local(t, query, c);
    row.weight_raw = t.weight;
    if (row.local_similarity) total += t.weight;
    out.rows.push_back(std::move(row));
  }

  if (!(total > 0.0)) {
    out.no_overlap = true;
    return out;
  }
  for (auto& row : out.rows) {
    if (row.missing()) continue;
    row.weight_normalized = row.weight_raw / total;
    row.contribution = row.weight_normalized * *row.local_similarity;
  }
  out.score = plan.score(query, c).score;
  return out;
}

Explanation explain(const SimilarityModel& model, const Case& query, const Case& c) {
  ScoringPlan plan(model);
  require_case(model.schema, query, "query");
  require_case(model.schema, c, "case");
  return explain(plan, query, c);
}

namespace {

struct Ranked {
  std::vector<std::size_t> order;
  std::vector<GlobalScore> scores;
};

Ranked score_and_rank(const ScoringPlan& plan, const std::vector<Case>& cases, const Case& query,
                      std::size_t k, Execution execution) {
  Ranked r;
  r.scores.resize(cases.size());
  if (execution == Execution::parallel) {
    kernels::score_cases_omp(plan, query, cases, r.scores);
  } else {
    kernels::score_cases_serial(plan, query, cases, r.scores);
  }
  r.order = kernels::top_k(cases, r.scores, k);
  return r;
}

RetrievalEntry make_entry(const Case& c, const GlobalScore& s) {
  RetrievalEntry e;
  e.case_id = c.id;
  e.score = s.score;
  e.no_overlap = s.no_overlap;
  return e;
}

}  // namespace

std::vector<RetrievalEntry> rank_cases(const ScoringPlan& plan, const std::vector<Case>& cases,
                                       const Case& query, std::size_t k, Execution execution) {
  Ranked r = score_and_rank(plan, cases, query, k, execution);
  std::vector<RetrievalEntry> entries;
  entries.reserve(r.order.size());
  for (std::size_t idx : r.order) entries.push_back(make_entry(cases[idx], r.scores[idx]));
  return entries;
}

RetrievalResult retrieve(const SimilarityModel& model, const CaseBase& base, const Case& query,
                         std::size_t k, Execution execution) {
  if (k == 0) throw ValidationError("k must be at least 1", {{"", "invalid-parameter", "k must be >= 1"}});
  ScoringPlan plan(model);
  require_compatible(model.schema, base.schema);
  require_case(model.schema, query, "query");
  std::set<std::string> ids;
  for (const auto& c : base.cases) {
    require_case(model.schema, c, "case");
    if (!ids.insert(c.id).second) {
      throw ValidationError("duplicate case id '" + c.id + "'", {{"", "duplicate-id", "case id " + c.id}});
    }
  }

  RetrievalResult result;
  for (const auto& d : model.schema) result.attributes.push_back(d.name);
  result.query = query;
  result.model_version = model.version;
  result.k = k;

  Ranked r = score_and_rank(plan, base.cases, query, k, execution);
  result.entries.reserve(r.order.size());
  for (std::size_t idx : r.order) {
    RetrievalEntry e = make_entry(base.cases[idx], r.scores[idx]);
    e.explanation = explain(plan, query, base.cases[idx]);
    result.entries.push_back(std::move(e));
  }
  return result;
}

}  // namespace cbrx
