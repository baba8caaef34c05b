#include "cbrx/evaluation.hpp"

#include <cmath>
#include <exception>
#include <map>
#include <random>
#include <set>

#include "cbrx/errors.hpp"
#include "cbrx/kernels.hpp"

namespace cbrx {

namespace {

std::size_t solution_index(const Schema& schema) {
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (!schema[j].is_problem()) return j;
  }
  throw ValidationError("case base has no solution attribute",
                        {{"", "no-solution-attribute", "classification needs a solution attribute"}});
}

std::vector<std::string> case_labels(const CaseBase& base, std::size_t sol) {
  std::vector<std::string> labels;
  labels.reserve(base.cases.size());
  for (const auto& c : base.cases) {
    if (is_missing(c.values[sol])) {
      throw ValidationError("case '" + c.id + "' has no solution value",
                            {{base.schema[sol].name, "missing-solution", "case " + c.id}});
    }
    labels.push_back(to_label(c.values[sol]));
  }
  return labels;
}

// Votes in rank order; on a tie the label seen first wins.
std::string vote(const std::vector<std::size_t>& ranked, const std::vector<std::string>& labels) {
  std::map<std::string, std::size_t> counts;
  for (std::size_t idx : ranked) ++counts[labels[idx]];
  std::size_t best = 0;
  for (const auto& [label, n] : counts) best = std::max(best, n);
  for (std::size_t idx : ranked) {
    if (counts[labels[idx]] == best) return labels[idx];
  }
  return {};
}

std::string predict(const ScoringPlan& plan, const std::vector<Case>& cases,
                    const std::vector<std::string>& labels, const Case& query, std::size_t k) {
  if (cases.empty()) throw NoPredictionError("cannot classify against an empty case base");
  std::vector<GlobalScore> scores(cases.size());
  kernels::score_cases_serial(plan, query, cases, scores);
  return vote(kernels::top_k(cases, scores, k), labels);
}

void check_base(const SimilarityModel& model, const CaseBase& base) {
  require_compatible(model.schema, base.schema);
  std::set<std::string> ids;
  for (const auto& c : base.cases) {
    require_case(model.schema, c, "case");
    if (!ids.insert(c.id).second) {
      throw ValidationError("duplicate case id '" + c.id + "'", {{"", "duplicate-id", "case id " + c.id}});
    }
  }
}

}  // namespace

std::string classify(const SimilarityModel& model, const CaseBase& base, const Case& query, std::size_t k) {
  if (k == 0) throw ValidationError("k must be at least 1", {{"", "invalid-parameter", "k must be >= 1"}});
  ScoringPlan plan(model);
  if (base.cases.empty()) throw NoPredictionError("cannot classify against an empty case base");
  check_base(model, base);
  require_case(model.schema, query, "query");
  const auto labels = case_labels(base, solution_index(base.schema));
  return predict(plan, base.cases, labels, query, k);
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t folds, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Modulo reduction keeps the permutation identical across standard libraries.
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }

  std::vector<std::vector<std::size_t>> out(folds);
  const std::size_t base = folds ? n / folds : 0;
  const std::size_t extra = folds ? n % folds : 0;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                  order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return out;
}

EvaluationReport cross_validate(const SimilarityModel& model, const CaseBase& base, std::size_t k,
                                std::size_t folds, std::uint64_t seed, Execution execution) {
  if (k == 0) throw ValidationError("k must be at least 1", {{"", "invalid-parameter", "k must be >= 1"}});
  if (folds < 2) throw ValidationError("at least two folds are required", {{"", "invalid-parameter", "folds >= 2"}});
  if (base.cases.size() < folds) {
    throw ValidationError("case base has fewer cases than folds",
                          {{"", "too-few-cases", std::to_string(base.cases.size()) + " cases for " +
                                                     std::to_string(folds) + " folds"}});
  }
  ScoringPlan plan(model);
  check_base(model, base);
  const std::size_t sol = solution_index(base.schema);
  const auto labels = case_labels(base, sol);
  const auto partition = make_folds(base.cases.size(), folds, seed);

  // predictions[i] for case i, filled by whichever fold holds it out.
  std::vector<std::string> predictions(base.cases.size());
  std::exception_ptr failure;
  const auto nfolds = static_cast<std::ptrdiff_t>(folds);

#pragma omp parallel for schedule(dynamic) if (execution == Execution::parallel)
  for (std::ptrdiff_t f = 0; f < nfolds; ++f) {
    try {
      const auto& test = partition[static_cast<std::size_t>(f)];
      std::vector<bool> held_out(base.cases.size(), false);
      for (std::size_t i : test) held_out[i] = true;

      std::vector<Case> train;
      std::vector<std::string> train_labels;
      train.reserve(base.cases.size() - test.size());
      train_labels.reserve(base.cases.size() - test.size());
      for (std::size_t i = 0; i < base.cases.size(); ++i) {
        if (held_out[i]) continue;
        train.push_back(base.cases[i]);
        train_labels.push_back(labels[i]);
      }
      for (std::size_t i : test) predictions[i] = predict(plan, train, train_labels, base.cases[i], k);
    } catch (...) {
#pragma omp critical(cbrx_cv_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  EvaluationReport report;
  report.folds = folds;
  report.k = k;
  report.model_version = model.version;
  report.seed = seed;

  double sum = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    FoldResult fr;
    fr.index = f;
    fr.test_size = partition[f].size();
    for (std::size_t i : partition[f]) {
      if (predictions[i] == labels[i]) {
        ++fr.correct;
      } else {
        ++fr.incorrect;
      }
    }
    fr.accuracy = static_cast<double>(fr.correct) / static_cast<double>(fr.test_size);
    sum += fr.accuracy;
    report.fold_results.push_back(fr);
  }
  report.mean_accuracy = sum / static_cast<double>(folds);
  double sq = 0.0;
  for (const auto& fr : report.fold_results) {
    sq += (fr.accuracy - report.mean_accuracy) * (fr.accuracy - report.mean_accuracy);
  }
  report.stddev = std::sqrt(sq / static_cast<double>(folds));

  std::vector<std::string> label_order;
  const auto& sd = base.schema[sol];
  if (sd.kind == AttributeKind::symbolic) {
    label_order = sd.symbols;
  } else {
    std::set<double> distinct;
    for (const auto& c : base.cases) distinct.insert(std::get<double>(c.values[sol]));
    for (double x : distinct) label_order.push_back(to_label(Value{x}));
  }
  for (const auto& label : label_order) {
    LabelConfusion lc;
    lc.label = label;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool actual = labels[i] == label;
      const bool predicted = predictions[i] == label;
      if (actual && predicted) ++lc.true_positives;
      else if (!actual && predicted) ++lc.false_positives;
      else if (actual) ++lc.false_negatives;
      else ++lc.true_negatives;
    }
    report.confusion.push_back(lc);
  }
  return report;
}

}  // namespace cbrx
