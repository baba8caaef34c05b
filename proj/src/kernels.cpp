#include "cbrx/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <exception>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cbrx::kernels {

void score_cases_serial(const ScoringPlan& plan, const Case& query, std::span<const Case> cases,
                        std::span<GlobalScore> out) {
  assert(out.size() == cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) out[i] = plan.score(query, cases[i]);
}

void score_cases_omp(const ScoringPlan& plan, const Case& query, std::span<const Case> cases,
                     std::span<GlobalScore> out) {
  assert(out.size() == cases.size());
  const auto n = static_cast<std::ptrdiff_t>(cases.size());
  std::exception_ptr failure;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = plan.score(query, cases[i]);
    } catch (...) {
#pragma omp critical(cbrx_kernel_failure)
      if (!failure) failure = std::current_exception();
    }
  }

  if (failure) std::rethrow_exception(failure);
}

std::vector<std::size_t> top_k(std::span<const Case> cases, std::span<const GlobalScore> scores,
                               std::size_t k) {
  std::vector<std::size_t> order(cases.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  k = std::min(k, order.size());

  std::vector<std::int64_t> keys(cases.size());
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = rank_key(scores[i].score);
  auto before = [&](std::size_t a, std::size_t b) {
    if (keys[a] != keys[b]) return keys[a] > keys[b];
    return cases[a].id < cases[b].id;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), before);
  order.resize(k);
  return order;
}

std::int64_t rank_key(double score) { return std::llround(score * kRankScale); }

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace cbrx::kernels
