#include "cbrx/viz.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cbrx/errors.hpp"
#include "cbrx/similarity.hpp"
#include "cbrx/text.hpp"

namespace cbrx {

DecompositionChartSet build_chart_set(const RetrievalResult& result, std::size_t top) {
  if (result.entries.empty()) {
    throw ValidationError("retrieval result has no entries", {{"", "empty-result", "nothing to chart"}});
  }
  if (top == 0 || top > result.entries.size()) {
    throw ValidationError("top must be between 1 and " + std::to_string(result.entries.size()),
                          {{"", "invalid-parameter", "top=" + std::to_string(top)}});
  }

  DecompositionChartSet charts;
  charts.model_version = result.model_version;
  charts.query_id = result.query.id;
  for (const auto& row : result.entries.front().explanation.rows) charts.attributes.push_back(row.attribute);
  if (charts.attributes.empty()) {
    throw ValidationError("retrieval result carries no explanations",
                          {{"", "missing-explanation", "retrieve with explanations to build charts"}});
  }

  for (std::size_t r = 0; r < top; ++r) {
    const auto& entry = result.entries[r];
    const auto& rows = entry.explanation.rows;
    if (rows.size() != charts.attributes.size()) {
      throw ValidationError("explanations disagree on the attribute axis",
                            {{"", "axis-mismatch", "entry " + entry.case_id}});
    }
    DecompositionRow out;
    out.rank = r + 1;
    out.case_id = entry.case_id;
    out.score = entry.score;
    ChartPanel weighted{kPanelWeightedSimilarity, {}, {}};
    ChartPanel local{kPanelLocalSimilarity, {}, {}};
    ChartPanel weight{kPanelWeight, {}, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& er = rows[i];
      if (er.attribute != charts.attributes[i]) {
        throw ValidationError("explanations disagree on the attribute axis",
                              {{er.attribute, "axis-mismatch", "entry " + entry.case_id}});
      }
      weighted.values.push_back(er.missing() ? std::nullopt : std::optional<double>(er.contribution));
      local.values.push_back(er.local_similarity);
      weight.values.push_back(er.missing() ? std::nullopt : std::optional<double>(er.weight_normalized));
      weight.raw.push_back(er.weight_raw);
    }
    out.panels = {std::move(weighted), std::move(local), std::move(weight)};
    charts.rows.push_back(std::move(out));
  }
  return charts;
}

MeasureCurve measure_preview(const LocalSimilarityMeasure& measure, const AttributeDescriptor& descriptor,
                             std::size_t samples, std::optional<double> reference) {
  if (descriptor.kind != AttributeKind::numeric || !measure.applies_to(AttributeKind::numeric)) {
    throw UnsupportedError("preview needs a numeric measure on a numeric attribute");
  }
  if (samples < 2) {
    throw ValidationError("samples must be at least 2", {{descriptor.name, "invalid-parameter", "samples >= 2"}});
  }
  MeasureCurve curve;
  curve.attribute = descriptor.name;
  curve.measure_type = measure.type_name();
  curve.range = descriptor.range;
  curve.reference = reference.value_or(descriptor.range.min + descriptor.range.width() / 2.0);

  const double step = descriptor.range.width() / static_cast<double>(samples - 1);
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = i + 1 == samples ? descriptor.range.max : descriptor.range.min + step * static_cast<double>(i);
    const double sim = *local_similarity(measure, descriptor, Value{curve.reference}, Value{x});
    curve.points.push_back({x, sim});
  }
  return curve;
}

ChartFormat parse_chart_format(std::string_view name) {
  if (name == "svg") return ChartFormat::svg;
  if (name == "text") return ChartFormat::text;
  throw ValidationError("unsupported chart format '" + std::string(name) + "'",
                        {{"", "unsupported-format", "expected svg or text"}});
}

namespace {

constexpr int kTextBarWidth = 20;

std::string text_bar(double fraction) {
  fraction = std::clamp(fraction, 0.0, 1.0);
  const int filled = static_cast<int>(std::lround(fraction * kTextBarWidth));
  return "|" + std::string(static_cast<std::size_t>(filled), '#') +
         std::string(static_cast<std::size_t>(kTextBarWidth - filled), ' ') + "|";
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string px(double v) { return fixed(v, 1); }

const char* panel_title(const std::string& name) {
  if (name == kPanelWeightedSimilarity) return "weighted similarity";
  if (name == kPanelLocalSimilarity) return "local similarity";
  return "weight";
}

class Svg {
 public:
  Svg(double width, double height) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width) << "\" height=\"" << px(height)
         << "\" viewBox=\"0 0 " << px(width) << ' ' << px(height) << "\" font-family=\"sans-serif\">\n";
    out_ << "<rect x=\"0\" y=\"0\" width=\"" << px(width) << "\" height=\"" << px(height) << "\" fill=\"white\"/>\n";
  }

  void text(double x, double y, std::string_view s, double size = 11, const char* anchor = "start",
            const char* weight = "normal") {
    out_ << "<text x=\"" << px(x) << "\" y=\"" << px(y) << "\" font-size=\"" << px(size) << "\" text-anchor=\""
         << anchor << "\" font-weight=\"" << weight << "\">" << xml_escape(s) << "</text>\n";
  }

  void rect(double x, double y, double w, double h, const char* fill, const char* cls = nullptr) {
    out_ << "<rect";
    if (cls) out_ << " class=\"" << cls << '"';
    out_ << " x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(w) << "\" height=\"" << px(h)
         << "\" fill=\"" << fill << "\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const char* stroke = "#444444") {
    out_ << "<line x1=\"" << px(x1) << "\" y1=\"" << px(y1) << "\" x2=\"" << px(x2) << "\" y2=\"" << px(y2)
         << "\" stroke=\"" << stroke << "\" stroke-width=\"1\"/>\n";
  }

  void raw(std::string_view s) { out_ << s; }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

std::string render_text(const DecompositionChartSet& charts) {
  std::ostringstream out;
  out << "decomposition  query " << charts.query_id << "  model version " << charts.model_version << '\n';
  std::size_t label_width = 0;
  for (const auto& a : charts.attributes) label_width = std::max(label_width, a.size());
  label_width += 2;

  for (const auto& row : charts.rows) {
    out << '\n' << "#" << row.rank << "  case " << row.case_id << "  score " << fixed(row.score, 2) << '\n';
    for (const auto& panel : row.panels) {
      out << "  [" << panel_title(panel.name) << "]\n";
      for (std::size_t i = 0; i < charts.attributes.size(); ++i) {
        out << "    " << pad(charts.attributes[i], label_width);
        const auto& v = panel.values[i];
        if (v) {
          out << text_bar(*v) << ' ' << fixed(*v, 2);
        } else {
          out << text_bar(0.0) << " missing";
        }
        if (!panel.raw.empty()) out << "  (raw " << fixed(panel.raw[i], 2) << ')';
        out << '\n';
      }
    }
  }
  return out.str();
}

std::string render_svg(const DecompositionChartSet& charts) {
  constexpr double kLabel = 130, kBars = 150, kValue = 40, kGap = 20;
  constexpr double kPanel = kLabel + kBars + kValue + kGap;
  constexpr double kBarH = 12, kPitch = 16, kHeader = 40, kTop = 30;
  const double n = static_cast<double>(charts.attributes.size());
  const double row_h = kHeader + n * kPitch + 10;
  const double width = 3 * kPanel + 20;
  const double height = kTop + row_h * static_cast<double>(charts.rows.size()) + 10;

  Svg svg(width, height);
  svg.text(10, 20, "decomposition for query " + charts.query_id + " (model version " +
                       std::to_string(charts.model_version) + ")", 13, "start", "bold");
  static const char* fills[] = {"#4c72b0", "#55a868", "#c44e52"};

  for (std::size_t r = 0; r < charts.rows.size(); ++r) {
    const auto& row = charts.rows[r];
    const double y0 = kTop + row_h * static_cast<double>(r);
    svg.raw("<g class=\"row\" data-rank=\"" + std::to_string(row.rank) + "\" data-case=\"" +
            xml_escape(row.case_id) + "\">\n");
    svg.text(10, y0 + 16, "#" + std::to_string(row.rank) + " case " + row.case_id + "  score " + fixed(row.score, 2),
             12, "start", "bold");
    for (std::size_t p = 0; p < row.panels.size(); ++p) {
      const auto& panel = row.panels[p];
      const double x0 = 10 + kPanel * static_cast<double>(p);
      svg.text(x0 + kLabel, y0 + 32, panel_title(panel.name), 11, "start", "bold");
      svg.line(x0 + kLabel, y0 + kHeader - 4, x0 + kLabel, y0 + kHeader + n * kPitch);
      for (std::size_t i = 0; i < charts.attributes.size(); ++i) {
        const double y = y0 + kHeader + kPitch * static_cast<double>(i);
        svg.text(x0 + kLabel - 6, y + 10, charts.attributes[i], 10, "end");
        const auto& v = panel.values[i];
        if (v) {
          svg.rect(x0 + kLabel, y, kBars * std::clamp(*v, 0.0, 1.0), kBarH, fills[p % 3], "bar");
          svg.text(x0 + kLabel + kBars + 4, y + 10, fixed(*v, 2), 10);
        } else {
          svg.text(x0 + kLabel + kBars + 4, y + 10, "missing", 10);
        }
      }
    }
    svg.raw("</g>\n");
  }
  return svg.finish();
}

void histogram_text(std::ostringstream& out, const std::vector<HistogramBin>& bins) {
  std::size_t peak = 0;
  for (const auto& b : bins) peak = std::max(peak, b.count);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const auto& b = bins[i];
    const char close = i + 1 == bins.size() ? ']' : ')';
    out << "    [" << fixed(b.lower, 2) << ", " << fixed(b.upper, 2) << close << ' '
        << text_bar(peak ? static_cast<double>(b.count) / static_cast<double>(peak) : 0.0) << ' ' << b.count << '\n';
  }
}

std::string render_text(const DistributionSummary& s) {
  std::ostringstream out;
  out << "distribution  " << s.attribute << '\n';
  if (s.empty()) {
    out << "  no data  (missing " << s.missing << ")\n";
    return out.str();
  }
  out << "  count " << s.count << "  missing " << s.missing;
  if (s.kind == AttributeKind::numeric) {
    out << "  min " << fixed(s.min, 2) << "  max " << fixed(s.max, 2) << "  mean " << fixed(s.mean, 2)
        << "  stddev " << fixed(s.stddev, 2) << '\n';
    out << "  [all]\n";
    histogram_text(out, s.bins);
    for (const auto& g : s.groups) {
      out << "  [" << s.group_attribute << " = " << g.label << "]\n";
      histogram_text(out, g.bins);
    }
  } else {
    out << '\n';
    std::size_t peak = 0;
    for (const auto& c : s.categories) peak = std::max(peak, c.count);
    for (const auto& c : s.categories) {
      out << "    " << pad(c.label, 16)
          << text_bar(peak ? static_cast<double>(c.count) / static_cast<double>(peak) : 0.0) << ' ' << c.count << '\n';
    }
  }
  return out.str();
}

void histogram_svg(Svg& svg, double x0, double y0, double w, double h, const std::string& title,
                   const std::vector<HistogramBin>& bins) {
  svg.text(x0, y0 - 6, title, 11, "start", "bold");
  svg.line(x0, y0 + h, x0 + w, y0 + h);
  std::size_t peak = 0;
  for (const auto& b : bins) peak = std::max(peak, b.count);
  const double bw = w / static_cast<double>(bins.size());
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const double bh = peak ? h * static_cast<double>(bins[i].count) / static_cast<double>(peak) : 0.0;
    svg.rect(x0 + bw * static_cast<double>(i) + 1, y0 + h - bh, std::max(bw - 2, 1.0), bh, "#4c72b0", "bar");
  }
  svg.text(x0, y0 + h + 14, fixed(bins.front().lower, 2), 10, "start");
  svg.text(x0 + w, y0 + h + 14, fixed(bins.back().upper, 2), 10, "end");
  svg.text(x0 - 4, y0 + 8, std::to_string(peak), 10, "end");
}

std::string render_svg(const DistributionSummary& s) {
  constexpr double kW = 400, kH = 150, kPitch = 200;
  if (s.empty()) {
    Svg svg(kW + 80, 80);
    svg.text(10, 20, "distribution of " + s.attribute, 13, "start", "bold");
    svg.raw("<text class=\"no-data\" x=\"10.0\" y=\"50.0\" font-size=\"12.0\">no data</text>\n");
    return svg.finish();
  }
  if (s.kind == AttributeKind::symbolic) {
    std::vector<HistogramBin> pseudo;
    for (std::size_t i = 0; i < s.categories.size(); ++i) {
      pseudo.push_back({static_cast<double>(i), static_cast<double>(i + 1), s.categories[i].count});
    }
    Svg svg(kW + 80, kPitch + 40);
    svg.text(10, 20, "distribution of " + s.attribute, 13, "start", "bold");
    histogram_svg(svg, 50, 50, kW, kH, "all", pseudo);
    const double bw = kW / static_cast<double>(s.categories.size());
    for (std::size_t i = 0; i < s.categories.size(); ++i) {
      svg.text(50 + bw * (static_cast<double>(i) + 0.5), 50 + kH + 28, s.categories[i].label, 10, "middle");
    }
    return svg.finish();
  }
  const std::size_t panels = 1 + s.groups.size();
  Svg svg(kW + 80, 40 + kPitch * static_cast<double>(panels));
  svg.text(10, 20, "distribution of " + s.attribute + " (n=" + std::to_string(s.count) + ", missing " +
                       std::to_string(s.missing) + ")", 13, "start", "bold");
  histogram_svg(svg, 50, 50, kW, kH, "all", s.bins);
  for (std::size_t g = 0; g < s.groups.size(); ++g) {
    histogram_svg(svg, 50, 50 + kPitch * static_cast<double>(g + 1), kW, kH,
                  s.group_attribute + " = " + s.groups[g].label, s.groups[g].bins);
  }
  return svg.finish();
}

std::string render_text(const MeasureCurve& c) {
  std::ostringstream out;
  out << "measure preview  " << c.attribute << "  " << c.measure_type << "  reference " << fixed(c.reference, 2)
      << '\n';
  for (const auto& p : c.points) {
    out << "    " << pad(fixed(p.value, 2), 12) << text_bar(p.similarity) << ' ' << fixed(p.similarity, 2) << '\n';
  }
  return out.str();
}

std::string render_svg(const MeasureCurve& c) {
  constexpr double kX = 50, kY = 40, kW = 400, kH = 200;
  Svg svg(kX + kW + 30, kY + kH + 40);
  svg.text(10, 20, c.attribute + " " + c.measure_type + " similarity to " + fixed(c.reference, 2), 13, "start", "bold");
  svg.line(kX, kY + kH, kX + kW, kY + kH);
  svg.line(kX, kY, kX, kY + kH);
  const double span = c.range.width();
  std::string pts;
  for (const auto& p : c.points) {
    const double fx = span > 0 ? (p.value - c.range.min) / span : 0.5;
    if (!pts.empty()) pts += ' ';
    pts += px(kX + kW * fx) + "," + px(kY + kH * (1.0 - p.similarity));
  }
  svg.raw("<polyline class=\"curve\" fill=\"none\" stroke=\"#c44e52\" stroke-width=\"2\" points=\"" + pts + "\"/>\n");
  svg.text(kX, kY + kH + 16, fixed(c.range.min, 2), 10, "start");
  svg.text(kX + kW, kY + kH + 16, fixed(c.range.max, 2), 10, "end");
  svg.text(kX - 4, kY + 8, "1.00", 10, "end");
  svg.text(kX - 4, kY + kH, "0.00", 10, "end");
  return svg.finish();
}

}  // namespace

std::string render_charts(const DecompositionChartSet& charts, ChartFormat format) {
  return format == ChartFormat::svg ? render_svg(charts) : render_text(charts);
}

std::string render_charts(const DistributionSummary& summary, ChartFormat format) {
  return format == ChartFormat::svg ? render_svg(summary) : render_text(summary);
}

std::string render_charts(const MeasureCurve& curve, ChartFormat format) {
  return format == ChartFormat::svg ? render_svg(curve) : render_text(curve);
}

}  // namespace cbrx
