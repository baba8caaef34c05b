#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cbrx/model.hpp"
#include "cbrx/similarity.hpp"

// Scoring and ranking kernels. The serial versions are the reference
// implementation; the OpenMP versions must agree with them bit for bit.
namespace cbrx::kernels {

// out[i] = plan.score(query, cases[i]). out.size() must equal cases.size().
void score_cases_serial(const ScoringPlan& plan, const Case& query, std::span<const Case> cases,
                        std::span<GlobalScore> out);
void score_cases_omp(const ScoringPlan& plan, const Case& query, std::span<const Case> cases,
                     std::span<GlobalScore> out);

// Ranking compares scores at 1e-9 resolution: closer scores are ties and
// fall back to case id order. Without this, rounding noise (for instance
// from rescaled weights) could swap cases whose scores are equal in exact
// arithmetic.
inline constexpr double kRankScale = 1e9;
std::int64_t rank_key(double score);

// Indices of the k best cases: rank key descending, ties by ascending case id.
std::vector<std::size_t> top_k(std::span<const Case> cases, std::span<const GlobalScore> scores,
                               std::size_t k);

// Number of threads the OpenMP kernels will use; 1 when built without OpenMP.
int max_threads();

}  // namespace cbrx::kernels
