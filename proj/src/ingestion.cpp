#include "cbrx/ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <set>

#include "cbrx/errors.hpp"
#include "cbrx/text.hpp"

namespace cbrx {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one record; double quotes protect commas, "" escapes a quote.
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.emplace_back(trim(cur));
  return fields;
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

}  // namespace

CaseBase load_csv(std::istream& in, const CsvOptions& options) {
  std::string line;
  std::size_t line_no = 0;

  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!is_blank(line)) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw IngestionError("input is empty: expected a header row");

  const std::vector<std::string> header = split_record(line);
  std::set<std::string> seen;
  for (const auto& h : header) {
    if (h.empty()) throw IngestionError("header has an empty column name");
    if (!seen.insert(h).second) throw IngestionError("duplicate column name '" + h + "' in header");
  }
  if (!options.solution_column.empty() && !seen.count(options.solution_column)) {
    throw IngestionError("solution column '" + options.solution_column + "' not found in header");
  }
  for (const auto& [name, kind] : options.kind_hints) {
    if (!seen.count(name)) throw IngestionError("kind hint for unknown column '" + name + "'");
  }

  struct RawRow {
    std::size_t line;
    std::vector<std::string> cells;
  };
  std::vector<RawRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    auto cells = split_record(line);
    if (cells.size() != header.size()) {
      throw IngestionError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(cells.size()));
    }
    rows.push_back({line_no, std::move(cells)});
  }

  CaseBase base;
  base.name = options.name;
  const std::size_t ncol = header.size();
  for (std::size_t j = 0; j < ncol; ++j) {
    AttributeDescriptor d;
    d.name = header[j];
    d.role = header[j] == options.solution_column ? AttributeRole::solution : AttributeRole::problem;
    if (auto it = options.kind_hints.find(d.name); it != options.kind_hints.end()) {
      d.kind = it->second;
    } else if (d.role == AttributeRole::solution) {
      d.kind = AttributeKind::symbolic;
    } else {
      d.kind = AttributeKind::numeric;
      for (const auto& r : rows) {
        if (r.cells[j].empty()) continue;
        if (!parse_number(r.cells[j])) d.kind = AttributeKind::symbolic;
        break;
      }
    }
    base.schema.push_back(std::move(d));
  }

  const int width = static_cast<int>(std::to_string(std::max<std::size_t>(rows.size(), 1)).size());
  std::vector<std::set<std::string>> symbols(ncol);
  base.cases.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Case c;
    c.id = zero_padded(i + 1, width);
    c.values.reserve(ncol);
    for (std::size_t j = 0; j < ncol; ++j) {
      const std::string& cell = rows[i].cells[j];
      if (cell.empty()) {
        c.values.emplace_back(Missing{});
      } else if (base.schema[j].kind == AttributeKind::numeric) {
        auto x = parse_number(cell);
        if (!x) {
          throw IngestionError("row " + std::to_string(i + 1) + " (line " + std::to_string(rows[i].line) +
                               "), column '" + header[j] + "': cannot parse '" + cell + "' as a number");
        }
        c.values.emplace_back(*x);
      } else {
        symbols[j].insert(cell);
        c.values.emplace_back(cell);
      }
    }
    base.cases.push_back(std::move(c));
  }
  for (std::size_t j = 0; j < ncol; ++j) {
    if (base.schema[j].kind == AttributeKind::symbolic) {
      base.schema[j].symbols.assign(symbols[j].begin(), symbols[j].end());
    }
  }

  if (options.zero_as_missing) {
    for (const auto& col : options.zero_missing_columns) {
      if (!find_attribute(base.schema, col)) {
        throw IngestionError("zero-as-missing column '" + col + "' not found in header");
      }
    }
    convert_zero_to_missing(base, options.zero_missing_columns);
  } else {
    refresh_ranges(base);
  }
  return base;
}

CaseBase load_csv_file(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open '" + path.string() + "'");
  return load_csv(in, options);
}

void convert_zero_to_missing(CaseBase& base, const std::vector<std::string>& columns) {
  for (const auto& col : columns) {
    auto idx = find_attribute(base.schema, col);
    if (!idx || base.schema[*idx].kind != AttributeKind::numeric) continue;
    for (auto& c : base.cases) {
      Value& v = c.values[*idx];
      if (const double* x = std::get_if<double>(&v); x && *x == 0.0) v = Missing{};
    }
  }
  refresh_ranges(base);
}

void refresh_ranges(CaseBase& base) {
  for (std::size_t j = 0; j < base.schema.size(); ++j) {
    auto& d = base.schema[j];
    if (d.kind != AttributeKind::numeric) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& c : base.cases) {
      if (const double* x = std::get_if<double>(&c.values[j])) {
        lo = std::min(lo, *x);
        hi = std::max(hi, *x);
      }
    }
    d.range = lo <= hi ? Range{lo, hi} : Range{0.0, 0.0};
  }
}

namespace {

std::vector<HistogramBin> make_bins(double lo, double hi, std::size_t bins) {
  if (!(hi > lo)) return {{lo, hi, 0}};
  std::vector<HistogramBin> out(bins);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i].lower = lo + width * static_cast<double>(i);
    out[i].upper = i + 1 == bins ? hi : lo + width * static_cast<double>(i + 1);
  }
  return out;
}

// Half-open bins except the last, which is closed at max.
std::size_t bin_of(const std::vector<HistogramBin>& bins, double x) {
  const std::size_t n = bins.size();
  if (n == 1) return 0;
  const double lo = bins.front().lower;
  const double width = (bins.back().upper - lo) / static_cast<double>(n);
  auto i = static_cast<std::ptrdiff_t>(std::floor((x - lo) / width));
  i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1);
  auto idx = static_cast<std::size_t>(i);
  while (idx > 0 && x < bins[idx].lower) --idx;
  while (idx + 1 < n && x >= bins[idx + 1].lower) ++idx;
  return idx;
}

}  // namespace

DistributionSummary summarize(const CaseBase& base, const std::string& attribute, std::size_t bins,
                              bool group_by_solution) {
  auto idx = find_attribute(base.schema, attribute);
  if (!idx) {
    throw ValidationError("unknown attribute '" + attribute + "'",
                          {{attribute, "unknown-attribute", "not part of the case base schema"}});
  }
  if (bins == 0) throw ValidationError("bins must be at least 1", {{attribute, "invalid-parameter", "bins >= 1"}});

  const auto& d = base.schema[*idx];
  DistributionSummary s;
  s.attribute = attribute;
  s.kind = d.kind;

  std::optional<std::size_t> solution;
  if (group_by_solution) {
    for (std::size_t j = 0; j < base.schema.size(); ++j) {
      if (!base.schema[j].is_problem()) {
        solution = j;
        break;
      }
    }
    if (!solution) {
      throw ValidationError("case base has no solution attribute to group by",
                            {{attribute, "no-solution-attribute", "grouping requires a solution attribute"}});
    }
    s.group_attribute = base.schema[*solution].name;
  }

  if (d.kind == AttributeKind::symbolic) {
    std::map<std::string, std::size_t> counts;
    for (const auto& sym : d.symbols) counts[sym] = 0;
    for (const auto& c : base.cases) {
      const Value& v = c.values[*idx];
      if (is_missing(v)) {
        ++s.missing;
      } else {
        ++s.count;
        ++counts[to_label(v)];
      }
    }
    for (const auto& sym : d.symbols) s.categories.push_back({sym, counts[sym]});
    for (const auto& [label, n] : counts) {
      if (!d.symbol_index(label)) s.categories.push_back({label, n});
    }
    return s;
  }

  std::vector<double> xs;
  xs.reserve(base.cases.size());
  for (const auto& c : base.cases) {
    if (const double* x = std::get_if<double>(&c.values[*idx])) {
      xs.push_back(*x);
    } else {
      ++s.missing;
    }
  }
  s.count = xs.size();
  if (xs.empty()) return s;

  auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  s.min = *lo;
  s.max = *hi;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(xs.size()));

  s.bins = make_bins(s.min, s.max, bins);
  for (double x : xs) ++s.bins[bin_of(s.bins, x)].count;

  if (solution) {
    const auto& sd = base.schema[*solution];
    std::vector<std::string> labels;
    if (sd.kind == AttributeKind::symbolic) {
      labels = sd.symbols;
    } else {
      std::set<double> distinct;
      for (const auto& c : base.cases) {
        if (const double* x = std::get_if<double>(&c.values[*solution])) distinct.insert(*x);
      }
      for (double x : distinct) labels.push_back(format_number(x));
    }
    for (const auto& label : labels) {
      GroupHistogram g{label, s.bins};
      for (auto& b : g.bins) b.count = 0;
      s.groups.push_back(std::move(g));
    }
    for (const auto& c : base.cases) {
      const Value& v = c.values[*idx];
      const Value& sv = c.values[*solution];
      if (is_missing(v) || is_missing(sv)) continue;
      const std::string label = to_label(sv);
      for (auto& g : s.groups) {
        if (g.label == label) {
          ++g.bins[bin_of(g.bins, std::get<double>(v))].count;
          break;
        }
      }
    }
  }
  return s;
}

SuggestedMeasure suggest_measure(const DistributionSummary& summary, double degree) {
  if (summary.kind != AttributeKind::numeric) {
    throw UnsupportedError("no measure suggestion for symbolic attribute '" + summary.attribute + "'");
  }
  SuggestedMeasure out;
  out.attribute = summary.attribute;
  out.range = {summary.min, summary.max};
  if (summary.max > summary.min) {
    out.measure = LocalSimilarityMeasure::polynomial(degree);
  } else {
    out.measure = LocalSimilarityMeasure::step(0.0);
  }
  return out;
}

SimilarityModel install_suggestion(const SimilarityModel& model, const SuggestedMeasure& suggestion) {
  SimilarityModel next = with_range(model, suggestion.attribute, suggestion.range);
  next.measures.insert_or_assign(suggestion.attribute, suggestion.measure);
  return next;
}

}  // namespace cbrx
