// Serial reference kernel vs the OpenMP kernel, plus whole retrievals and a
// cross-validation run on the Pima fixture.

#include <benchmark/benchmark.h>

#include "cbrx/evaluation.hpp"
#include "cbrx/ingestion.hpp"
#include "cbrx/kernels.hpp"
#include "cbrx/retrieval.hpp"
#include "cbrx/similarity.hpp"
#include "support/generators.hpp"

namespace {

using namespace cbrx;

struct Workload {
  SimilarityModel model;
  CaseBase base;
  Case query;
};

Workload synthetic(std::size_t n) {
  testing::Rng rng(n);
  testing::GenOptions opt;
  opt.max_attributes = 8;
  Schema schema;
  do {
    schema = testing::random_schema(rng, opt);
  } while (schema.size() < 6);
  Workload w;
  w.model = testing::random_model(rng, schema);
  w.base = testing::random_casebase(rng, schema, n, opt);
  w.query = testing::random_case(rng, schema, "q", opt);
  return w;
}

void BM_ScoreSerial(benchmark::State& state) {
  auto w = synthetic(static_cast<std::size_t>(state.range(0)));
  ScoringPlan plan(w.model);
  std::vector<GlobalScore> out(w.base.cases.size());
  for (auto _ : state) {
    kernels::score_cases_serial(plan, w.query, w.base.cases, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreOmp(benchmark::State& state) {
  auto w = synthetic(static_cast<std::size_t>(state.range(0)));
  ScoringPlan plan(w.model);
  std::vector<GlobalScore> out(w.base.cases.size());
  for (auto _ : state) {
    kernels::score_cases_omp(plan, w.query, w.base.cases, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = kernels::max_threads();
}

void BM_Retrieve(benchmark::State& state) {
  auto w = synthetic(static_cast<std::size_t>(state.range(0)));
  const auto exec = state.range(1) ? Execution::parallel : Execution::serial;
  for (auto _ : state) benchmark::DoNotOptimize(retrieve(w.model, w.base, w.query, 10, exec));
}

void BM_PimaCrossValidation(benchmark::State& state) {
  CsvOptions o;
  o.solution_column = "Outcome";
  o.zero_missing_columns = kPimaZeroMissingColumns;
  auto base = load_csv_file(std::string(CBRX_DATA_DIR) + "/pima-indians-diabetes.csv", o);
  auto model = make_default_model(base.schema, {1.0, 1.0});
  const auto exec = state.range(0) ? Execution::parallel : Execution::serial;
  for (auto _ : state) benchmark::DoNotOptimize(cross_validate(model, base, 5, 10, 42, exec));
}

BENCHMARK(BM_ScoreSerial)->RangeMultiplier(10)->Range(1000, 100000);
BENCHMARK(BM_ScoreOmp)->RangeMultiplier(10)->Range(1000, 100000);
BENCHMARK(BM_Retrieve)->ArgsProduct({{10000, 100000}, {0, 1}});
BENCHMARK(BM_PimaCrossValidation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
