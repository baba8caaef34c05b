#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cbrx/model.hpp"
#include "cbrx/similarity.hpp"

namespace cbrx {

inline constexpr std::size_t kDefaultBins = 20;
inline constexpr double kDefaultSuggestionDegree = 2.0;

// Columns whose zero readings are physiologically impossible in the Pima
// diabetes data and stand for "not measured".
inline const std::vector<std::string> kPimaZeroMissingColumns = {"Glucose", "BloodPressure",
                                                                 "SkinThickness", "Insulin", "BMI"};

struct CsvOptions {
  std::string name = "casebase";
  // Columns without a hint are numeric if their first non-empty cell parses
  // as a number, symbolic otherwise.
  std::map<std::string, AttributeKind> kind_hints;
  // Gets role=solution. Symbolic unless hinted otherwise. Empty: no solution.
  std::string solution_column;
  std::vector<std::string> zero_missing_columns;
  bool zero_as_missing = true;
};

// Comma-delimited text with a header row. Cases get sequential zero-padded
// ids ("001", "002", ...). Numeric ranges are the observed extremes after
// zero-to-missing conversion. Throws IngestionError on malformed input.
CaseBase load_csv(std::istream& in, const CsvOptions& options);
CaseBase load_csv_file(const std::filesystem::path& path, const CsvOptions& options);

// Replaces numeric zeros in the named columns by Missing and refreshes the
// numeric ranges. Idempotent.
void convert_zero_to_missing(CaseBase& base, const std::vector<std::string>& columns);

// Sets every numeric descriptor range to the observed [min, max]; columns
// without values get [0, 0].
void refresh_ranges(CaseBase& base);

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;

  bool operator==(const HistogramBin&) const = default;
};

struct GroupHistogram {
  std::string label;  // solution value
  std::vector<HistogramBin> bins;

  bool operator==(const GroupHistogram&) const = default;
};

struct CategoryCount {
  std::string label;
  std::size_t count = 0;

  bool operator==(const CategoryCount&) const = default;
};

// Value distribution of one attribute. For numeric attributes the bins tile
// [min, max] with equal widths (last bin closed); a constant column gets a
// single bin. Symbolic attributes get per-symbol counts instead.
struct DistributionSummary {
  std::string attribute;
  AttributeKind kind = AttributeKind::numeric;
  std::size_t count = 0;  // non-missing values
  std::size_t missing = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  std::vector<HistogramBin> bins;
  std::vector<CategoryCount> categories;
  std::string group_attribute;  // empty unless grouped by solution
  std::vector<GroupHistogram> groups;

  std::size_t total() const { return count + missing; }
  bool empty() const { return count == 0; }
  bool operator==(const DistributionSummary&) const = default;
};

DistributionSummary summarize(const CaseBase& base, const std::string& attribute,
                              std::size_t bins = kDefaultBins, bool group_by_solution = false);

struct SuggestedMeasure {
  std::string attribute;
  LocalSimilarityMeasure measure;
  Range range;
};

// Polynomial starter measure over the summary's observed range; an exact
// match step when the range is degenerate. Throws UnsupportedError for
// symbolic summaries.
SuggestedMeasure suggest_measure(const DistributionSummary& summary,
                                 double degree = kDefaultSuggestionDegree);

// Installs a suggestion into a model copy (measure and range), version + 1.
SimilarityModel install_suggestion(const SimilarityModel& model, const SuggestedMeasure& suggestion);

}  // namespace cbrx
