#include <gtest/gtest.h>

#include "cbrx/document.hpp"
#include "cbrx/errors.hpp"
#include "cbrx/ingestion.hpp"
#include "cbrx/similarity.hpp"
#include "cbrx/viz.hpp"
#include "support/generators.hpp"

namespace cbrx {
namespace {

AttributeDescriptor numeric(std::string name, double lo, double hi) {
  AttributeDescriptor d;
  d.name = std::move(name);
  d.range = {lo, hi};
  return d;
}

struct Fixture {
  SimilarityModel model;
  CaseBase base;
};

// Ten cases over three linear attributes; case "c07" is the query itself.
Fixture ten_cases() {
  Fixture f;
  Schema schema = {numeric("A", 0, 1), numeric("B", 0, 1), numeric("C", 0, 1)};
  f.model = make_default_model(schema, {1.0, 1.0});
  f.model.amalgamation.weights = {{"A", 2}, {"B", 1}, {"C", 1}};
  f.base.name = "ten";
  f.base.schema = schema;
  for (int i = 0; i < 10; ++i) {
    const double v = i / 10.0;
    f.base.cases.push_back({"c0" + std::to_string(i), {v, 1.0 - v, Value(i == 4 ? Value(Missing{}) : Value(v / 2))}});
  }
  return f;
}

const Case kQuery{"q", {0.7, 0.3, 0.35}};

TEST(ChartSet, TopThreeStructure) {
  auto f = ten_cases();
  auto result = retrieve(f.model, f.base, kQuery, 10);
  auto charts = build_chart_set(result, 3);
  ASSERT_EQ(charts.rows.size(), 3u);
  EXPECT_EQ(charts.attributes, (std::vector<std::string>{"A", "B", "C"}));
  EXPECT_EQ(charts.query_id, "q");
  for (std::size_t r = 0; r < 3; ++r) {
    const auto& row = charts.rows[r];
    EXPECT_EQ(row.rank, r + 1);
    EXPECT_EQ(row.case_id, result.entries[r].case_id);
    ASSERT_EQ(row.panels.size(), 3u);
    EXPECT_EQ(row.panels[0].name, kPanelWeightedSimilarity);
    EXPECT_EQ(row.panels[1].name, kPanelLocalSimilarity);
    EXPECT_EQ(row.panels[2].name, kPanelWeight);
    for (const auto& p : row.panels) EXPECT_EQ(p.values.size(), charts.attributes.size());
  }
  EXPECT_EQ(charts.rows[0].case_id, "c07");
  EXPECT_GE(charts.rows[0].score, charts.rows[1].score);
  EXPECT_GE(charts.rows[1].score, charts.rows[2].score);
}

TEST(ChartSet, IdenticalCaseRow) {
  auto f = ten_cases();
  auto charts = build_chart_set(retrieve(f.model, f.base, kQuery, 10), 1);
  const auto& row = charts.rows[0];
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(*row.panels[1].values[i], 1.0);
    EXPECT_EQ(*row.panels[0].values[i], *row.panels[2].values[i]);
  }
  EXPECT_EQ(row.panels[2].raw, (std::vector<double>{2, 1, 1}));
}

TEST(ChartSet, LeftPanelSumsToScore) {
  testing::Rng rng(13);
  for (int round = 0; round < 50; ++round) {
    Schema schema = testing::random_schema(rng);
    auto model = testing::random_model(rng, schema);
    auto base = testing::random_casebase(rng, schema, rng.between(1, 30));
    auto q = testing::random_case(rng, schema, "q");
    auto result = retrieve(model, base, q, base.cases.size());
    auto charts = build_chart_set(result, rng.between(1, base.cases.size()));
    for (const auto& row : charts.rows) {
      const Case& c = *std::find_if(base.cases.begin(), base.cases.end(),
                                    [&](const Case& x) { return x.id == row.case_id; });
      double sum = 0;
      for (const auto& v : row.panels[0].values) sum += v.value_or(0.0);
      EXPECT_NEAR(sum, explain(model, q, c).score, 1e-9);
      for (const auto& p : row.panels) {
        for (const auto& v : p.values) {
          if (v) EXPECT_TRUE(*v >= 0.0 && *v <= 1.0);
        }
      }
    }
    EXPECT_EQ(build_chart_set(result, charts.rows.size()), charts);
  }
}

TEST(ChartSet, MissingAttributeIsNullInEveryPanel) {
  auto f = ten_cases();
  auto result = retrieve(f.model, f.base, kQuery, 10);
  std::size_t pos = 0;
  while (result.entries[pos].case_id != "c04") ++pos;
  auto charts = build_chart_set(result, pos + 1);
  const auto& row = charts.rows[pos];
  EXPECT_FALSE(row.panels[0].values[2]);
  EXPECT_FALSE(row.panels[1].values[2]);
  EXPECT_FALSE(row.panels[2].values[2]);
  EXPECT_EQ(row.panels[2].raw[2], 1.0);
}

TEST(ChartSet, Errors) {
  auto f = ten_cases();
  auto result = retrieve(f.model, f.base, kQuery, 2);
  EXPECT_THROW(build_chart_set(result, 3), ValidationError);
  EXPECT_THROW(build_chart_set(result, 0), ValidationError);
  RetrievalResult empty;
  EXPECT_THROW(build_chart_set(empty, 1), ValidationError);
}

TEST(Render, TextRoundsToTwoDecimals) {
  Schema schema = {numeric("A", 0, 1), numeric("B", 0, 1), numeric("C", 0, 1)};
  auto m = make_default_model(schema, {1.0, 1.0});
  m.amalgamation.weights = {{"A", 2}, {"B", 1}, {"C", 1}};
  CaseBase base{"one", schema, {{"c", {1.0, 0.5, 0.0}}}};
  auto result = retrieve(m, base, Case{"q", {1.0, 1.0, 1.0}}, 1);
  ASSERT_NEAR(result.entries[0].score, 0.625, 1e-15);
  auto text = render_charts(build_chart_set(result, 1), ChartFormat::text);
  EXPECT_NE(text.find("score 0.62"), std::string::npos) << text;
  EXPECT_NE(text.find("0.12"), std::string::npos);
  auto svg = render_charts(build_chart_set(result, 1), ChartFormat::svg);
  EXPECT_NE(svg.find("0.62"), std::string::npos);
}

TEST(Render, Deterministic) {
  auto f = ten_cases();
  auto charts = build_chart_set(retrieve(f.model, f.base, kQuery, 10), 3);
  for (auto fmt : {ChartFormat::text, ChartFormat::svg}) {
    EXPECT_EQ(render_charts(charts, fmt), render_charts(charts, fmt));
  }
  auto svg = render_charts(charts, ChartFormat::svg);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_EQ(svg.substr(svg.size() - 7), "</svg>\n");
}

TEST(Render, DistinctChartSetsRenderDifferently) {
  auto f = ten_cases();
  auto a = build_chart_set(retrieve(f.model, f.base, kQuery, 10), 3);
  auto b = build_chart_set(retrieve(f.model, f.base, Case{"q", {0.1, 0.9, 0.05}}, 10), 3);
  ASSERT_NE(a, b);
  EXPECT_NE(render_charts(a, ChartFormat::text), render_charts(b, ChartFormat::text));
  EXPECT_NE(render_charts(a, ChartFormat::svg), render_charts(b, ChartFormat::svg));
}

TEST(Render, EmptySummaryHasNoDataMarker) {
  DistributionSummary empty;
  empty.attribute = "Insulin";
  EXPECT_NE(render_charts(empty, ChartFormat::text).find("no data"), std::string::npos);
  auto svg = render_charts(empty, ChartFormat::svg);
  EXPECT_NE(svg.find("no data"), std::string::npos);
  EXPECT_NE(svg.find("class=\"no-data\""), std::string::npos);
}

TEST(Render, HistogramIncludesEveryBin) {
  CaseBase base;
  base.schema = {numeric("v", 1, 4)};
  for (int i = 1; i <= 4; ++i) base.cases.push_back({std::to_string(i), {double(i)}});
  auto s = summarize(base, "v", 2);
  auto text = render_charts(s, ChartFormat::text);
  EXPECT_NE(text.find("1.00"), std::string::npos);
  EXPECT_NE(text.find("2.50"), std::string::npos);
  auto svg = render_charts(s, ChartFormat::svg);
  EXPECT_EQ(svg, render_charts(s, ChartFormat::svg));
}

TEST(Render, UnsupportedFormat) {
  EXPECT_EQ(parse_chart_format("svg"), ChartFormat::svg);
  EXPECT_EQ(parse_chart_format("text"), ChartFormat::text);
  EXPECT_THROW(parse_chart_format("png"), ValidationError);
}

TEST(Preview, LinearCurveAroundMidpoint) {
  auto d = numeric("x", 0, 10);
  auto curve = measure_preview(LocalSimilarityMeasure::polynomial(1), d, 5);
  EXPECT_EQ(curve.reference, 5.0);
  ASSERT_EQ(curve.points.size(), 5u);
  const double values[] = {0, 2.5, 5, 7.5, 10};
  // 1 - |x - 5| / 10
  const double sims[] = {0.5, 0.75, 1.0, 0.75, 0.5};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(curve.points[i].value, values[i]);
    EXPECT_NEAR(curve.points[i].similarity, sims[i], 1e-15);
  }
}

TEST(Preview, EndpointsAndBounds) {
  auto d = numeric("Age", 21, 81);
  auto two = measure_preview(LocalSimilarityMeasure::polynomial(2), d, 2);
  ASSERT_EQ(two.points.size(), 2u);
  EXPECT_EQ(two.points[0].value, 21.0);
  EXPECT_EQ(two.points[1].value, 81.0);
  auto many = measure_preview(LocalSimilarityMeasure::polynomial(3.5), d, 97, 30.0);
  EXPECT_EQ(many.points.back().value, 81.0);
  for (std::size_t i = 0; i < many.points.size(); ++i) {
    EXPECT_GE(many.points[i].similarity, 0.0);
    EXPECT_LE(many.points[i].similarity, 1.0);
    if (i) EXPECT_LT(many.points[i - 1].value, many.points[i].value);
  }
}

TEST(Preview, Errors) {
  auto d = numeric("x", 0, 10);
  EXPECT_THROW(measure_preview(LocalSimilarityMeasure::polynomial(1), d, 1), ValidationError);
  AttributeDescriptor s;
  s.name = "s";
  s.kind = AttributeKind::symbolic;
  s.symbols = {"a"};
  EXPECT_THROW(measure_preview(LocalSimilarityMeasure::identity_table(1), s, 10), UnsupportedError);
}

TEST(Preview, CurveRendersInBothFormats) {
  auto curve = measure_preview(LocalSimilarityMeasure::polynomial(2), numeric("Age", 21, 81), 11);
  EXPECT_NE(render_charts(curve, ChartFormat::text).find("1.00"), std::string::npos);
  EXPECT_NE(render_charts(curve, ChartFormat::svg).find("<polyline"), std::string::npos);
}

}  // namespace
}  // namespace cbrx
