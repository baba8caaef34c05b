#include "cbrx/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cbrx {

namespace {

double numeric_value(const AttributeDescriptor& d, const Value& v) {
  if (const double* x = std::get_if<double>(&v)) return *x;
  throw SchemaError("attribute '" + d.name + "' expects a numeric value",
                    {{d.name, "schema-violation", "expected a numeric value"}});
}

std::size_t symbol_value(const AttributeDescriptor& d, const Value& v) {
  const std::string* s = std::get_if<std::string>(&v);
  if (s == nullptr) {
    throw SchemaError("attribute '" + d.name + "' expects a symbol",
                      {{d.name, "schema-violation", "expected a symbolic value"}});
  }
  auto idx = d.symbol_index(*s);
  if (!idx) {
    throw SchemaError("symbol '" + *s + "' is not defined for attribute '" + d.name + "'",
                      {{d.name, "schema-violation", "unknown symbol '" + *s + "'"}});
  }
  return *idx;
}

// Normalized distance clamped to [0,1]. A degenerate range only
// distinguishes equal from unequal.
double clamped_distance(const Range& r, double q, double c) {
  const double diff = std::fabs(q - c);
  const double width = r.width();
  if (!(width > 0.0)) return diff == 0.0 ? 0.0 : 1.0;
  return std::min(1.0, diff / width);
}

void add(std::vector<Violation>& out, const std::string& attr, std::string rule,
         std::string message) {
  out.push_back({attr, std::move(rule), std::move(message)});
}

}  // namespace

std::optional<double> local_similarity(const LocalSimilarityMeasure& measure,
                                       const AttributeDescriptor& descriptor, const Value& q,
                                       const Value& c) {
  if (!measure.applies_to(descriptor.kind)) {
    throw ValidationError(std::string("measure '") + measure.type_name() +
                              "' cannot be applied to attribute '" + descriptor.name + "'",
                          {{descriptor.name, "incompatible-measure",
                            std::string(measure.type_name()) + " measure on wrong attribute kind"}});
  }
  if (is_missing(q) || is_missing(c)) return std::nullopt;

  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PolynomialMeasure>) {
          const double d =
              clamped_distance(descriptor.range, numeric_value(descriptor, q), numeric_value(descriptor, c));
          return std::pow(1.0 - d, m.degree);
        } else if constexpr (std::is_same_v<M, StepMeasure>) {
          const double diff = std::fabs(numeric_value(descriptor, q) - numeric_value(descriptor, c));
          return diff <= m.threshold ? 1.0 : 0.0;
        } else {
          const std::size_t qi = symbol_value(descriptor, q);
          const std::size_t ci = symbol_value(descriptor, c);
          if (qi >= m.matrix.size() || ci >= m.matrix[qi].size()) {
            throw SchemaError("similarity table for '" + descriptor.name + "' has no entry",
                              {{descriptor.name, "schema-violation", "symbol outside table"}});
          }
          return m.matrix[qi][ci];
        }
      },
      measure.variant);
}

ScoringPlan::ScoringPlan(const SimilarityModel& model) : model_(&model) {
  require_valid(model);
  for (std::size_t i = 0; i < model.schema.size(); ++i) {
    const auto& d = model.schema[i];
    if (!d.is_problem()) continue;
    terms_.push_back({i, &d, &model.measures.at(d.name), model.amalgamation.weights.at(d.name)});
  }
}

GlobalScore ScoringPlan::score(const Case& query, const Case& c) const {
  double weighted = 0.0;
  double total = 0.0;
  for (const Term& t : terms_) {
    auto sim = local(t, query, c);
    if (!sim) continue;
    weighted += t.weight * *sim;
    total += t.weight;
  }
  if (!(total > 0.0)) return {0.0, true};
  return {weighted / total, false};
}

GlobalScore global_similarity(const SimilarityModel& model, const Case& query, const Case& c) {
  ScoringPlan plan(model);
  require_case(model.schema, query, "query");
  require_case(model.schema, c, "case");
  return plan.score(query, c);
}

std::vector<Violation> validate_model(const SimilarityModel& model) {
  std::vector<Violation> out;
  std::set<std::string> names;

  for (const auto& d : model.schema) {
    if (d.name.empty()) add(out, d.name, "empty-name", "attribute name is empty");
    if (!names.insert(d.name).second) add(out, d.name, "duplicate-name", "attribute name is not unique");

    if (d.kind == AttributeKind::numeric) {
      if (!std::isfinite(d.range.min) || !std::isfinite(d.range.max)) {
        add(out, d.name, "range-violation", "range bounds must be finite");
      } else if (d.range.min > d.range.max) {
        add(out, d.name, "range-order", "range min exceeds max");
      }
      if (!d.symbols.empty()) add(out, d.name, "unexpected-symbols", "numeric attribute lists symbols");
    } else {
      if (d.symbols.empty()) add(out, d.name, "empty-symbols", "symbolic attribute has no symbols");
      std::set<std::string> seen(d.symbols.begin(), d.symbols.end());
      if (seen.size() != d.symbols.size()) add(out, d.name, "duplicate-symbol", "symbols are not unique");
    }
  }

  for (const auto& d : model.schema) {
    auto it = model.measures.find(d.name);
    if (!d.is_problem()) {
      if (it != model.measures.end()) add(out, d.name, "unexpected-measure", "solution attribute has a measure");
      continue;
    }
    if (it == model.measures.end()) {
      add(out, d.name, "missing-measure", "no local similarity measure");
      continue;
    }
    const auto& m = it->second;
    if (!m.applies_to(d.kind)) {
      add(out, d.name, "incompatible-measure",
          std::string(m.type_name()) + " measure does not fit the attribute kind");
      continue;
    }
    if (const auto* p = std::get_if<PolynomialMeasure>(&m.variant)) {
      if (!(p->degree > 0.0) || !std::isfinite(p->degree)) {
        add(out, d.name, "invalid-parameter", "polynomial degree must be a positive number");
      }
      if (d.range.min == d.range.max) {
        add(out, d.name, "degenerate-range", "polynomial measure needs min < max");
      }
    } else if (const auto* s = std::get_if<StepMeasure>(&m.variant)) {
      if (!(s->threshold >= 0.0) || !std::isfinite(s->threshold)) {
        add(out, d.name, "invalid-parameter", "step threshold must be a non-negative number");
      }
    } else {
      const auto& t = std::get<TableMeasure>(m.variant);
      const std::size_t n = d.symbols.size();
      bool shape_ok = t.matrix.size() == n;
      for (const auto& row : t.matrix) shape_ok = shape_ok && row.size() == n;
      if (!shape_ok) {
        add(out, d.name, "table-shape", "table must be square over the attribute symbols");
        continue;
      }
      bool in_range = true;
      bool diagonal = true;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double v = t.matrix[i][j];
          if (!(v >= 0.0 && v <= 1.0)) in_range = false;
        }
        if (t.matrix[i][i] != 1.0) diagonal = false;
      }
      if (!in_range) add(out, d.name, "range-violation", "table entries must lie in [0,1]");
      if (!diagonal) add(out, d.name, "table-diagonal", "table diagonal entries must be 1");
    }
  }
  for (const auto& [name, m] : model.measures) {
    if (!find_attribute(model.schema, name)) add(out, name, "unexpected-measure", "measure for unknown attribute");
  }

  bool any_positive = false;
  const auto& weights = model.amalgamation.weights;
  for (const auto& d : model.schema) {
    auto it = weights.find(d.name);
    if (!d.is_problem()) {
      if (it != weights.end()) add(out, d.name, "unexpected-weight", "solution attribute has a weight");
      continue;
    }
    if (it == weights.end()) {
      add(out, d.name, "missing-weight", "no amalgamation weight");
      continue;
    }
    if (!(it->second >= 0.0) || !std::isfinite(it->second)) {
      add(out, d.name, "negative-weight", "weights must be finite and non-negative");
    } else if (it->second > 0.0) {
      any_positive = true;
    }
  }
  for (const auto& [name, w] : weights) {
    if (!find_attribute(model.schema, name)) add(out, name, "unexpected-weight", "weight for unknown attribute");
  }
  if (!any_positive) add(out, "", "no-positive-weight", "at least one weight must be positive");

  return out;
}

std::vector<Violation> check_case(const Schema& schema, const Case& c) {
  std::vector<Violation> out;
  if (c.values.size() != schema.size()) {
    add(out, "", "arity", "case '" + c.id + "' has " + std::to_string(c.values.size()) +
                              " values, schema has " + std::to_string(schema.size()));
    return out;
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& d = schema[i];
    const Value& v = c.values[i];
    if (is_missing(v)) continue;
    if (d.kind == AttributeKind::numeric) {
      const double* x = std::get_if<double>(&v);
      if (x == nullptr) {
        add(out, d.name, "schema-violation", "expected a numeric value");
      } else if (!std::isfinite(*x)) {
        add(out, d.name, "schema-violation", "numeric value is not finite");
      }
    } else {
      const std::string* s = std::get_if<std::string>(&v);
      if (s == nullptr) {
        add(out, d.name, "schema-violation", "expected a symbolic value");
      } else if (!d.symbol_index(*s)) {
        add(out, d.name, "schema-violation", "unknown symbol '" + *s + "'");
      }
    }
  }
  return out;
}

std::vector<Violation> check_schema_compatible(const Schema& model_schema, const Schema& other) {
  std::vector<Violation> out;
  if (model_schema.size() != other.size()) {
    add(out, "", "schema-mismatch",
        "expected " + std::to_string(model_schema.size()) + " attributes, got " + std::to_string(other.size()));
    return out;
  }
  for (std::size_t i = 0; i < other.size(); ++i) {
    const auto& a = model_schema[i];
    const auto& b = other[i];
    if (a.name != b.name) {
      add(out, b.name, "schema-mismatch", "attribute " + std::to_string(i) + " should be '" + a.name + "'");
    } else if (a.kind != b.kind) {
      add(out, b.name, "schema-mismatch", "attribute kind differs from the model");
    } else if (a.role != b.role) {
      add(out, b.name, "schema-mismatch", "attribute role differs from the model");
    }
  }
  return out;
}

void require_valid(const SimilarityModel& model) {
  auto v = validate_model(model);
  if (!v.empty()) throw ValidationError("similarity model is invalid", std::move(v));
}

void require_case(const Schema& schema, const Case& c, const char* what) {
  auto v = check_case(schema, c);
  if (!v.empty()) throw SchemaError(std::string(what) + " does not conform to the schema", std::move(v));
}

void require_compatible(const Schema& model_schema, const Schema& other) {
  auto v = check_schema_compatible(model_schema, other);
  if (!v.empty()) throw SchemaError("case base schema does not match the model", std::move(v));
}

SimilarityModel make_default_model(const Schema& schema, DefaultModelOptions options) {
  SimilarityModel model;
  model.schema = schema;
  for (const auto& d : schema) {
    if (!d.is_problem()) continue;
    if (d.kind == AttributeKind::symbolic) {
      model.measures.emplace(d.name, LocalSimilarityMeasure::identity_table(d.symbols.size()));
    } else if (d.range.width() > 0.0) {
      model.measures.emplace(d.name, LocalSimilarityMeasure::polynomial(options.degree));
    } else {
      model.measures.emplace(d.name, LocalSimilarityMeasure::step(0.0));
    }
    model.amalgamation.weights.emplace(d.name, options.weight);
  }
  return model;
}

SimilarityModel with_measure(const SimilarityModel& model, const std::string& attribute,
                             LocalSimilarityMeasure measure) {
  SimilarityModel next = model;
  next.measures.insert_or_assign(attribute, std::move(measure));
  ++next.version;
  return next;
}

SimilarityModel with_weights(const SimilarityModel& model, std::map<std::string, double> weights) {
  SimilarityModel next = model;
  next.amalgamation.weights = std::move(weights);
  ++next.version;
  return next;
}

SimilarityModel with_range(const SimilarityModel& model, const std::string& attribute, Range range) {
  SimilarityModel next = model;
  auto idx = find_attribute(next.schema, attribute);
  if (!idx) throw NotFoundError("unknown attribute '" + attribute + "'");
  next.schema[*idx].range = range;
  ++next.version;
  return next;
}

}  // namespace cbrx
