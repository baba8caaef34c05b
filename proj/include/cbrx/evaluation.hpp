#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cbrx/model.hpp"
#include "cbrx/retrieval.hpp"

namespace cbrx {

inline constexpr std::size_t kDefaultNeighbors = 5;
inline constexpr std::size_t kDefaultFolds = 10;
inline constexpr std::uint64_t kDefaultSeed = 42;

// Majority vote over the solution labels of the k most similar cases. A tied
// vote goes to the tied label whose best case ranks highest, which is the
// label of the most similar case whenever that label is among the tied ones.
// Throws NoPredictionError on an empty base.
std::string classify(const SimilarityModel& model, const CaseBase& base, const Case& query, std::size_t k);

struct FoldResult {
  std::size_t index = 0;
  std::size_t test_size = 0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  double accuracy = 0.0;

  bool operator==(const FoldResult&) const = default;
};

// One-vs-rest counts for one solution label, summed over all folds.
struct LabelConfusion {
  std::string label;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t true_negatives = 0;

  bool operator==(const LabelConfusion&) const = default;
};

struct EvaluationReport {
  std::size_t folds = 0;
  std::vector<FoldResult> fold_results;
  double mean_accuracy = 0.0;
  double stddev = 0.0;  // population standard deviation over folds
  std::size_t k = 0;
  std::uint64_t model_version = 0;
  std::vector<LabelConfusion> confusion;
  std::uint64_t seed = 0;

  bool operator==(const EvaluationReport&) const = default;
};

// Seeded Fisher-Yates shuffle of 0..n-1 cut into `folds` contiguous slices;
// the first n % folds slices are one element longer.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t folds, std::uint64_t seed);

// Each fold is classified once against the remaining cases. Folds run
// concurrently under `execution`; the report does not depend on it.
EvaluationReport cross_validate(const SimilarityModel& model, const CaseBase& base, std::size_t k,
                                std::size_t folds, std::uint64_t seed,
                                Execution execution = Execution::parallel);

}  // namespace cbrx
