#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbrx/ingestion.hpp"
#include "cbrx/model.hpp"
#include "cbrx/retrieval.hpp"

namespace cbrx {

inline constexpr const char* kPanelWeightedSimilarity = "weighted_similarity";
inline constexpr const char* kPanelLocalSimilarity = "local_similarity";
inline constexpr const char* kPanelWeight = "weight";

// One bar chart over the shared attribute axis. nullopt marks an attribute
// that was missing in the comparison.
struct ChartPanel {
  std::string name;
  std::vector<std::optional<double>> values;
  std::vector<double> raw;  // weight panel only: the engineer's raw weights

  bool operator==(const ChartPanel&) const = default;
};

// One retrieved case: weighted contributions, local similarities, weights.
struct DecompositionRow {
  std::size_t rank = 0;  // 1 = most similar
  std::string case_id;
  double score = 0.0;
  std::vector<ChartPanel> panels;

  bool operator==(const DecompositionRow&) const = default;
};

struct DecompositionChartSet {
  std::vector<std::string> attributes;
  std::uint64_t model_version = 0;
  std::string query_id;
  std::vector<DecompositionRow> rows;

  bool operator==(const DecompositionChartSet&) const = default;
};

// Copies the first `top` entries' explanations into chart rows, rank order.
DecompositionChartSet build_chart_set(const RetrievalResult& result, std::size_t top);

struct CurvePoint {
  double value = 0.0;
  double similarity = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

struct MeasureCurve {
  std::string attribute;
  std::string measure_type;
  double reference = 0.0;
  Range range;
  std::vector<CurvePoint> points;

  bool operator==(const MeasureCurve&) const = default;
};

// Similarity of `samples` evenly spaced values over the descriptor range
// against a reference value (the range midpoint unless given).
MeasureCurve measure_preview(const LocalSimilarityMeasure& measure, const AttributeDescriptor& descriptor,
                             std::size_t samples, std::optional<double> reference = std::nullopt);

enum class ChartFormat { svg, text };

// Throws ValidationError for anything but "svg" or "text".
ChartFormat parse_chart_format(std::string_view name);

// Rendering is deterministic: fixed element order, no timestamps, values
// labelled with two decimals.
std::string render_charts(const DecompositionChartSet& charts, ChartFormat format);
std::string render_charts(const DistributionSummary& summary, ChartFormat format);
std::string render_charts(const MeasureCurve& curve, ChartFormat format);

}  // namespace cbrx
