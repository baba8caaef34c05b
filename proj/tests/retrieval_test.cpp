#include <gtest/gtest.h>

#include "cbrx/document.hpp"
#include "cbrx/errors.hpp"
#include "cbrx/kernels.hpp"
#include "cbrx/retrieval.hpp"
#include "cbrx/similarity.hpp"
#include "support/generators.hpp"

namespace cbrx {
namespace {

AttributeDescriptor numeric(std::string name, double lo, double hi) {
  AttributeDescriptor d;
  d.name = std::move(name);
  d.range = {lo, hi};
  return d;
}

SimilarityModel linear_model(Schema schema, std::map<std::string, double> weights) {
  auto m = make_default_model(schema, {1.0, 1.0});
  if (!weights.empty()) m.amalgamation.weights = std::move(weights);
  return m;
}

CaseBase base_of(Schema schema, std::vector<Case> cases) {
  CaseBase b;
  b.name = "t";
  b.schema = std::move(schema);
  b.cases = std::move(cases);
  return b;
}

std::vector<std::string> ids(const RetrievalResult& r) {
  std::vector<std::string> out;
  for (const auto& e : r.entries) out.push_back(e.case_id);
  return out;
}

std::vector<std::string> ids(const std::vector<std::pair<std::string, double>>& ranked) {
  std::vector<std::string> out;
  for (const auto& [id, score] : ranked) out.push_back(id);
  return out;
}

const Schema kAbc = {numeric("A", 0, 1), numeric("B", 0, 1), numeric("C", 0, 1)};

TEST(Explain, HandComputedContributions) {
  auto m = linear_model(kAbc, {{"A", 2}, {"B", 1}, {"C", 1}});
  Case q{"q", {1.0, 1.0, 1.0}};
  Case c{"c", {1.0, 0.5, 0.0}};
  auto e = explain(m, q, c);
  ASSERT_EQ(e.rows.size(), 3u);
  EXPECT_NEAR(e.rows[0].contribution, 0.5, 1e-15);
  EXPECT_NEAR(e.rows[1].contribution, 0.125, 1e-15);
  EXPECT_NEAR(e.rows[2].contribution, 0.0, 1e-15);
  EXPECT_NEAR(e.contribution_sum(), 0.625, 1e-15);
  EXPECT_NEAR(e.score, 0.625, 1e-15);
  EXPECT_EQ(e.rows[0].weight_raw, 2.0);
  EXPECT_NEAR(e.rows[0].weight_normalized, 0.5, 1e-15);
  EXPECT_NEAR(e.normalized_weight_sum(), 1.0, 1e-12);
}

TEST(Explain, IdenticalCaseContributesItsWeights) {
  auto m = linear_model(kAbc, {{"A", 3}, {"B", 1}, {"C", 4}});
  Case q{"q", {0.1, 0.7, 0.3}};
  auto e = explain(m, q, q);
  for (const auto& row : e.rows) {
    EXPECT_EQ(*row.local_similarity, 1.0);
    EXPECT_EQ(row.contribution, row.weight_normalized);
  }
  EXPECT_NEAR(e.contribution_sum(), 1.0, 1e-12);
}

TEST(Explain, MissingRowIsFlaggedAndWeightsRenormalize) {
  auto m = linear_model(kAbc, {{"A", 2}, {"B", 1}, {"C", 1}});
  Case q{"q", {1.0, Missing{}, 1.0}};
  Case c{"c", {1.0, 0.5, 0.0}};
  auto e = explain(m, q, c);
  EXPECT_TRUE(e.rows[1].missing());
  EXPECT_EQ(e.rows[1].weight_raw, 1.0);
  EXPECT_EQ(e.rows[1].weight_normalized, 0.0);
  EXPECT_EQ(e.rows[1].contribution, 0.0);
  EXPECT_NEAR(e.rows[0].weight_normalized, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(e.normalized_weight_sum(), 1.0, 1e-12);
  EXPECT_NEAR(e.contribution_sum(), global_similarity(m, q, c).score, 1e-9);
}

TEST(Explain, NoOverlapHasZeroRows) {
  auto m = linear_model(kAbc, {});
  Case q{"q", {Missing{}, Missing{}, Missing{}}};
  Case c{"c", {1.0, 0.5, 0.0}};
  auto e = explain(m, q, c);
  EXPECT_TRUE(e.no_overlap);
  EXPECT_EQ(e.score, 0.0);
  EXPECT_EQ(e.contribution_sum(), 0.0);
}

TEST(Retrieve, IdenticalCaseRanksFirst) {
  auto m = linear_model(kAbc, {});
  Case q{"q", {0.2, 0.4, 0.6}};
  auto base = base_of(kAbc, {{"c2", {0.9, 0.9, 0.9}}, {"c1", {0.2, 0.4, 0.6}}, {"c3", {0.0, 0.5, 0.5}}});
  auto r = retrieve(m, base, q, 3);
  ASSERT_EQ(r.entries.size(), 3u);
  EXPECT_EQ(r.entries[0].case_id, "c1");
  EXPECT_EQ(r.entries[0].score, 1.0);
}

TEST(Retrieve, HandComputedThreeCaseRanking) {
  // Linear measures over [0,10], equal weights; query (5,5).
  Schema schema = {numeric("x", 0, 10), numeric("y", 0, 10)};
  auto m = linear_model(schema, {});
  Case q{"q", {5.0, 5.0}};
  // c1: (1-0.1 + 1-0.3)/2 = 0.8; c2: (1-0.5 + 1)/2 = 0.75; c3: (1 + 1-0.1)/2 = 0.95
  auto base = base_of(schema, {{"c1", {6.0, 2.0}}, {"c2", {0.0, 5.0}}, {"c3", {5.0, 4.0}}});
  auto r = retrieve(m, base, q, 3);
  EXPECT_EQ(ids(r), (std::vector<std::string>{"c3", "c1", "c2"}));
  EXPECT_NEAR(r.entries[0].score, 0.95, 1e-15);
  EXPECT_NEAR(r.entries[1].score, 0.8, 1e-15);
  EXPECT_NEAR(r.entries[2].score, 0.75, 1e-15);
}

TEST(Retrieve, TiesBreakByAscendingId) {
  Schema schema = {numeric("x", 0, 10)};
  auto m = linear_model(schema, {});
  Case q{"q", {5.0}};
  auto base = base_of(schema, {{"b", {4.0}}, {"c", {6.0}}, {"a", {6.0}}, {"10", {4.0}}});
  auto r = retrieve(m, base, q, 4);
  EXPECT_EQ(ids(r), (std::vector<std::string>{"10", "a", "b", "c"}));
}

TEST(Retrieve, KLargerThanBaseReturnsAll) {
  auto m = linear_model(kAbc, {});
  Case q{"q", {0.5, 0.5, 0.5}};
  auto base = base_of(kAbc, {{"x", {0.1, 0.1, 0.1}}, {"y", {0.5, 0.5, 0.4}}});
  auto r = retrieve(m, base, q, 50);
  EXPECT_EQ(ids(r), (std::vector<std::string>{"y", "x"}));
  EXPECT_EQ(r.k, 50u);
}

TEST(Retrieve, EmptyBaseGivesEmptyResult) {
  auto m = linear_model(kAbc, {});
  auto r = retrieve(m, base_of(kAbc, {}), Case{"q", {0.5, 0.5, 0.5}}, 3);
  EXPECT_TRUE(r.entries.empty());
}

TEST(Retrieve, ErrorPaths) {
  auto m = linear_model(kAbc, {});
  Case q{"q", {0.5, 0.5, 0.5}};
  auto base = base_of(kAbc, {{"x", {0.1, 0.1, 0.1}}});
  EXPECT_THROW(retrieve(m, base, q, 0), ValidationError);
  EXPECT_THROW(retrieve(m, base, Case{"q", {0.5}}, 1), ValidationError);
  auto other = base_of({numeric("A", 0, 1), numeric("Z", 0, 1), numeric("C", 0, 1)}, {});
  EXPECT_THROW(retrieve(m, other, q, 1), ValidationError);
  auto dup = base_of(kAbc, {{"x", {0.1, 0.1, 0.1}}, {"x", {0.2, 0.1, 0.1}}});
  EXPECT_THROW(retrieve(m, dup, q, 1), ValidationError);
  auto broken = m;
  broken.measures.erase("B");
  EXPECT_THROW(retrieve(broken, base, q, 1), ValidationError);
}

TEST(Retrieve, CarriesModelVersionAndQuery) {
  auto m = linear_model(kAbc, {});
  m.version = 17;
  Case q{"probe", {0.5, Missing{}, 0.5}};
  auto r = retrieve(m, base_of(kAbc, {{"x", {0.1, 0.1, 0.1}}}), q, 1);
  EXPECT_EQ(r.model_version, 17u);
  EXPECT_EQ(r.query, q);
  EXPECT_EQ(r.attributes, (std::vector<std::string>{"A", "B", "C"}));
}

// ---- properties ---------------------------------------------------------------

class RetrievalProperties : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RetrievalProperties, MatchesBruteForceOracle) {
  testing::Rng rng(GetParam());
  for (int round = 0; round < 30; ++round) {
    Schema schema = testing::random_schema(rng);
    auto model = testing::random_model(rng, schema);
    auto base = testing::random_casebase(rng, schema, rng.between(0, 120));
    auto q = testing::random_case(rng, schema, "q");
    auto r = retrieve(model, base, q, std::max<std::size_t>(base.cases.size(), 1));
    auto expected = testing::oracle_ranking(model, base, q);
    ASSERT_EQ(ids(r), ids(expected));
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(r.entries[i].score, expected[i].second);
  }
}

TEST_P(RetrievalProperties, DecompositionIdentity) {
  testing::Rng rng(GetParam());
  for (int round = 0; round < 30; ++round) {
    Schema schema = testing::random_schema(rng);
    auto model = testing::random_model(rng, schema);
    auto base = testing::random_casebase(rng, schema, rng.between(1, 40));
    auto q = testing::random_case(rng, schema, "q");
    auto r = retrieve(model, base, q, rng.between(1, 10));
    for (const auto& e : r.entries) {
      EXPECT_NEAR(e.explanation.contribution_sum(), e.score, 1e-9);
      EXPECT_EQ(e.explanation.score, e.score);
      if (!e.no_overlap) EXPECT_NEAR(e.explanation.normalized_weight_sum(), 1.0, 1e-12);
      for (const auto& row : e.explanation.rows) {
        EXPECT_GE(row.weight_normalized, 0.0);
        EXPECT_LE(row.weight_normalized, 1.0);
      }
    }
  }
}

TEST_P(RetrievalProperties, TruncationIsPrefix) {
  testing::Rng rng(GetParam());
  for (int round = 0; round < 30; ++round) {
    Schema schema = testing::random_schema(rng);
    auto model = testing::random_model(rng, schema);
    auto base = testing::random_casebase(rng, schema, rng.between(1, 60));
    auto q = testing::random_case(rng, schema, "q");
    auto full = retrieve(model, base, q, base.cases.size());
    const std::size_t k = rng.between(1, base.cases.size());
    auto cut = retrieve(model, base, q, k);
    ASSERT_EQ(cut.entries.size(), k);
    for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(cut.entries[i], full.entries[i]);
  }
}

TEST_P(RetrievalProperties, RankingInvariantUnderWeightScaling) {
  testing::Rng rng(GetParam());
  for (int round = 0; round < 30; ++round) {
    Schema schema = testing::random_schema(rng);
    auto model = testing::random_model(rng, schema);
    auto base = testing::random_casebase(rng, schema, rng.between(1, 80));
    auto q = testing::random_case(rng, schema, "q");
    auto reference = ids(retrieve(model, base, q, base.cases.size()));
    for (double lambda : {0.01, 3.0, 1000.0}) {
      EXPECT_EQ(ids(retrieve(testing::scale_weights(model, lambda), base, q, base.cases.size())), reference);
    }
  }
}

TEST_P(RetrievalProperties, SerialAndParallelAgree) {
  testing::Rng rng(GetParam());
  for (int round = 0; round < 20; ++round) {
    Schema schema = testing::random_schema(rng);
    auto model = testing::random_model(rng, schema);
    auto base = testing::random_casebase(rng, schema, rng.between(0, 300));
    auto q = testing::random_case(rng, schema, "q");
    const std::size_t k = rng.between(1, 20);
    auto a = retrieve(model, base, q, k, Execution::serial);
    auto b = retrieve(model, base, q, k, Execution::parallel);
    EXPECT_EQ(a, b);
    EXPECT_EQ(doc::serialize(doc::result_to_json(a)), doc::serialize(doc::result_to_json(b)));
  }
}

TEST_P(RetrievalProperties, KernelsAgreeBitForBit) {
  testing::Rng rng(GetParam());
  Schema schema = testing::random_schema(rng);
  auto model = testing::random_model(rng, schema);
  auto base = testing::random_casebase(rng, schema, 500);
  auto q = testing::random_case(rng, schema, "q");
  ScoringPlan plan(model);
  std::vector<GlobalScore> serial(base.cases.size()), parallel(base.cases.size());
  kernels::score_cases_serial(plan, q, base.cases, serial);
  kernels::score_cases_omp(plan, q, base.cases, parallel);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].score, parallel[i].score);
    EXPECT_EQ(serial[i].no_overlap, parallel[i].no_overlap);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RetrievalProperties, ::testing::Values(3u, 11u, 4242u));

TEST(Kernels, OmpKernelPropagatesErrors) {
  auto m = linear_model({AttributeDescriptor{"s", AttributeKind::symbolic, {}, {"a"}, AttributeRole::problem}}, {});
  ScoringPlan plan(m);
  std::vector<Case> cases = {{"x", {std::string("a")}}, {"y", {std::string("zzz")}}};
  std::vector<GlobalScore> out(2);
  EXPECT_THROW(kernels::score_cases_omp(plan, Case{"q", {std::string("a")}}, cases, out), SchemaError);
  EXPECT_THROW(kernels::score_cases_serial(plan, Case{"q", {std::string("a")}}, cases, out), SchemaError);
}

TEST(Kernels, TopKOrdersByScoreThenId) {
  std::vector<Case> cases = {{"b", {}}, {"a", {}}, {"c", {}}, {"d", {}}};
  std::vector<GlobalScore> scores = {{0.5, false}, {0.5, false}, {0.9, false}, {0.1, false}};
  EXPECT_EQ(kernels::top_k(cases, scores, 3), (std::vector<std::size_t>{2, 1, 0}));
  EXPECT_EQ(kernels::top_k(cases, scores, 10).size(), 4u);
  EXPECT_GE(kernels::max_threads(), 1);
}

}  // namespace
}  // namespace cbrx
