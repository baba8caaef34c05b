#include "cbrx/document.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cbrx/text.hpp"

namespace cbrx::doc {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed ") + what + " document: " + e.what(),
                          {{"", "malformed-document", e.what()}});
  }
}

[[noreturn]] void malformed(const std::string& what, const std::string& attr = {}) {
  throw ValidationError("malformed document: " + what, {{attr, "malformed-document", what}});
}

void expect_type(const Json& j, const char* type) {
  const std::string actual = document_type(j);
  if (!actual.empty() && actual != type) malformed(std::string("expected a ") + type + " document, got " + actual);
}

const char* kind_name(AttributeKind k) { return k == AttributeKind::numeric ? "numeric" : "symbolic"; }
const char* role_name(AttributeRole r) { return r == AttributeRole::problem ? "problem" : "solution"; }

AttributeKind kind_from(const std::string& s) {
  if (s == "numeric") return AttributeKind::numeric;
  if (s == "symbolic") return AttributeKind::symbolic;
  malformed("unknown attribute kind '" + s + "'");
}

AttributeRole role_from(const std::string& s) {
  if (s == "problem") return AttributeRole::problem;
  if (s == "solution") return AttributeRole::solution;
  malformed("unknown attribute role '" + s + "'");
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> optional_number_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

Json range_to_json(const Range& r) {
  Json j;
  j["min"] = r.min;
  j["max"] = r.max;
  return j;
}

Range range_from_json(const Json& j) { return {j.at("min").get<double>(), j.at("max").get<double>()}; }

Json bins_to_json(const std::vector<HistogramBin>& bins) {
  Json arr = Json::array();
  for (const auto& b : bins) {
    Json jb;
    jb["lower"] = b.lower;
    jb["upper"] = b.upper;
    jb["count"] = b.count;
    arr.push_back(std::move(jb));
  }
  return arr;
}

std::vector<HistogramBin> bins_from_json(const Json& j) {
  std::vector<HistogramBin> out;
  for (const auto& jb : j) {
    out.push_back({jb.at("lower").get<double>(), jb.at("upper").get<double>(), jb.at("count").get<std::size_t>()});
  }
  return out;
}

// Value without a schema: number, string or null.
Value loose_value(const Json& j) {
  if (j.is_null()) return Missing{};
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  malformed("values must be numbers, strings or null");
}

}  // namespace

std::string serialize(const Json& j) { return j.dump(2) + "\n"; }

Json parse(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what(), {{"", "malformed-document", e.what()}});
  }
}

Json read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string document_type(const Json& j) {
  if (j.is_object()) {
    auto it = j.find("document");
    if (it != j.end() && it->is_string()) return it->get<std::string>();
  }
  return {};
}

Json to_json(const Violation& v) {
  Json j;
  j["attribute"] = v.attribute;
  j["rule"] = v.rule;
  j["message"] = v.message;
  return j;
}

Json violations_to_json(const std::vector<Violation>& violations) {
  Json j;
  j["document"] = kViolations;
  j["valid"] = violations.empty();
  j["violations"] = Json::array();
  for (const auto& v : violations) j["violations"].push_back(to_json(v));
  return j;
}

Json measure_to_json(const LocalSimilarityMeasure& m) {
  Json j;
  j["type"] = m.type_name();
  std::visit(
      [&](const auto& v) {
        using M = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<M, PolynomialMeasure>) {
          j["degree"] = v.degree;
        } else if constexpr (std::is_same_v<M, StepMeasure>) {
          j["threshold"] = v.threshold;
        } else {
          j["matrix"] = v.matrix;
        }
      },
      m.variant);
  return j;
}

LocalSimilarityMeasure measure_from_json(const Json& j) {
  return guarded("measure", [&] {
    const auto type = j.at("type").get<std::string>();
    if (type == "polynomial") return LocalSimilarityMeasure::polynomial(j.at("degree").get<double>());
    if (type == "step") return LocalSimilarityMeasure::step(j.at("threshold").get<double>());
    if (type == "table") return LocalSimilarityMeasure::table(j.at("matrix").get<std::vector<std::vector<double>>>());
    malformed("unknown measure type '" + type + "'");
  });
}

Json schema_to_json(const Schema& schema) {
  Json arr = Json::array();
  for (const auto& d : schema) {
    Json jd;
    jd["name"] = d.name;
    jd["kind"] = kind_name(d.kind);
    jd["role"] = role_name(d.role);
    if (d.kind == AttributeKind::numeric) {
      jd["range"] = range_to_json(d.range);
    } else {
      jd["symbols"] = d.symbols;
    }
    arr.push_back(std::move(jd));
  }
  return arr;
}

Schema schema_from_json(const Json& j) {
  return guarded("schema", [&] {
    Schema schema;
    for (const auto& jd : j) {
      AttributeDescriptor d;
      d.name = jd.at("name").get<std::string>();
      d.kind = kind_from(jd.at("kind").get<std::string>());
      d.role = role_from(jd.value("role", std::string("problem")));
      if (d.kind == AttributeKind::numeric) {
        d.range = range_from_json(jd.at("range"));
      } else {
        d.symbols = jd.at("symbols").get<std::vector<std::string>>();
      }
      schema.push_back(std::move(d));
    }
    return schema;
  });
}

Json model_to_json(const SimilarityModel& model) {
  Json j;
  j["document"] = kModel;
  j["version"] = model.version;
  j["schema"] = schema_to_json(model.schema);

  // Schema order first, then anything the schema does not know about.
  Json measures = Json::object();
  std::set<std::string> done;
  for (const auto& d : model.schema) {
    if (auto it = model.measures.find(d.name); it != model.measures.end()) {
      measures[d.name] = measure_to_json(it->second);
      done.insert(d.name);
    }
  }
  for (const auto& [name, m] : model.measures) {
    if (!done.count(name)) measures[name] = measure_to_json(m);
  }
  j["measures"] = std::move(measures);

  Json weights = Json::object();
  done.clear();
  for (const auto& d : model.schema) {
    if (auto it = model.amalgamation.weights.find(d.name); it != model.amalgamation.weights.end()) {
      weights[d.name] = it->second;
      done.insert(d.name);
    }
  }
  for (const auto& [name, w] : model.amalgamation.weights) {
    if (!done.count(name)) weights[name] = w;
  }
  j["amalgamation"]["mode"] = "weighted_sum";
  j["amalgamation"]["weights"] = std::move(weights);
  return j;
}

SimilarityModel model_from_json(const Json& j) {
  return guarded("model", [&] {
    expect_type(j, kModel);
    SimilarityModel model;
    model.version = j.value("version", std::uint64_t{0});
    model.schema = schema_from_json(j.at("schema"));
    for (const auto& [name, jm] : j.at("measures").items()) model.measures.emplace(name, measure_from_json(jm));
    const auto& amalgamation = j.at("amalgamation");
    const auto mode = amalgamation.value("mode", std::string("weighted_sum"));
    if (mode != "weighted_sum") malformed("unknown amalgamation mode '" + mode + "'");
    for (const auto& [name, w] : amalgamation.at("weights").items()) {
      model.amalgamation.weights.emplace(name, w.get<double>());
    }
    return model;
  });
}

Json value_to_json(const Value& v) {
  if (const auto* x = std::get_if<double>(&v)) return *x;
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return nullptr;
}

Json case_to_json(const Schema& schema, const Case& c) {
  Json j;
  j["id"] = c.id;
  Json values = Json::object();
  for (std::size_t i = 0; i < schema.size() && i < c.values.size(); ++i) values[schema[i].name] = value_to_json(c.values[i]);
  j["values"] = std::move(values);
  return j;
}

Case case_from_json(const Schema& schema, const Json& j, bool allow_partial) {
  return guarded("case", [&] {
    Case c;
    c.id = j.contains("id") ? j.at("id").get<std::string>() : std::string("query");
    const Json& values = j.contains("values") ? j.at("values") : j;
    if (!values.is_object()) malformed("case values must be an object");
    for (const auto& [name, jv] : values.items()) {
      if (&values == &j && (name == "id" || name == "document")) continue;
      if (!find_attribute(schema, name)) {
        throw SchemaError("unknown attribute '" + name + "'", {{name, "schema-violation", "unknown attribute"}});
      }
    }
    c.values.reserve(schema.size());
    for (const auto& d : schema) {
      auto it = values.find(d.name);
      if (it == values.end()) {
        if (!allow_partial) {
          throw SchemaError("case '" + c.id + "' lacks attribute '" + d.name + "'",
                            {{d.name, "schema-violation", "attribute missing from case"}});
        }
        c.values.emplace_back(Missing{});
        continue;
      }
      const Json& jv = *it;
      if (jv.is_null()) {
        c.values.emplace_back(Missing{});
      } else if (d.kind == AttributeKind::numeric) {
        if (jv.is_number()) {
          c.values.emplace_back(jv.get<double>());
        } else if (auto x = jv.is_string() ? parse_number(jv.get<std::string>()) : std::nullopt) {
          c.values.emplace_back(*x);
        } else {
          throw SchemaError("attribute '" + d.name + "' expects a number",
                            {{d.name, "schema-violation", "expected a numeric value"}});
        }
      } else if (jv.is_string()) {
        c.values.emplace_back(jv.get<std::string>());
      } else if (jv.is_number()) {
        c.values.emplace_back(to_label(Value{jv.get<double>()}));
      } else {
        throw SchemaError("attribute '" + d.name + "' expects a symbol",
                          {{d.name, "schema-violation", "expected a symbolic value"}});
      }
    }
    return c;
  });
}

Json casebase_to_json(const CaseBase& base) {
  Json j;
  j["document"] = kCaseBase;
  j["name"] = base.name;
  j["schema"] = schema_to_json(base.schema);
  j["cases"] = Json::array();
  for (const auto& c : base.cases) j["cases"].push_back(case_to_json(base.schema, c));
  return j;
}

CaseBase casebase_from_json(const Json& j) {
  return guarded("case base", [&] {
    expect_type(j, kCaseBase);
    CaseBase base;
    base.name = j.value("name", std::string("casebase"));
    base.schema = schema_from_json(j.at("schema"));
    for (const auto& jc : j.at("cases")) base.cases.push_back(case_from_json(base.schema, jc, false));
    return base;
  });
}

Json explanation_to_json(const Explanation& e) {
  Json j;
  j["score"] = e.score;
  j["noOverlap"] = e.no_overlap;
  j["rows"] = Json::array();
  for (const auto& r : e.rows) {
    Json jr;
    jr["attribute"] = r.attribute;
    jr["localSimilarity"] = optional_number(r.local_similarity);
    jr["missing"] = r.missing();
    jr["weightRaw"] = r.weight_raw;
    jr["weightNormalized"] = r.weight_normalized;
    jr["contribution"] = r.contribution;
    j["rows"].push_back(std::move(jr));
  }
  return j;
}

Explanation explanation_from_json(const Json& j) {
  return guarded("explanation", [&] {
    Explanation e;
    e.score = j.value("score", 0.0);
    e.no_overlap = j.value("noOverlap", false);
    for (const auto& jr : j.at("rows")) {
      ExplanationRow r;
      r.attribute = jr.at("attribute").get<std::string>();
      r.local_similarity = optional_number_from(jr.at("localSimilarity"));
      r.weight_raw = jr.at("weightRaw").get<double>();
      r.weight_normalized = jr.at("weightNormalized").get<double>();
      r.contribution = jr.at("contribution").get<double>();
      e.rows.push_back(std::move(r));
    }
    return e;
  });
}

Json result_to_json(const RetrievalResult& r, bool with_explanations) {
  Json j;
  j["document"] = kResult;
  j["modelVersion"] = r.model_version;
  j["k"] = r.k;
  Json q;
  q["id"] = r.query.id;
  q["values"] = Json::object();
  for (std::size_t i = 0; i < r.attributes.size() && i < r.query.values.size(); ++i) {
    q["values"][r.attributes[i]] = value_to_json(r.query.values[i]);
  }
  j["query"] = std::move(q);
  j["entries"] = Json::array();
  std::size_t rank = 0;
  for (const auto& e : r.entries) {
    Json je;
    je["rank"] = ++rank;
    je["caseId"] = e.case_id;
    je["score"] = e.score;
    je["noOverlap"] = e.no_overlap;
    if (with_explanations) je["explanation"] = explanation_to_json(e.explanation);
    j["entries"].push_back(std::move(je));
  }
  return j;
}

RetrievalResult result_from_json(const Json& j) {
  return guarded("retrieval result", [&] {
    expect_type(j, kResult);
    RetrievalResult r;
    r.model_version = j.at("modelVersion").get<std::uint64_t>();
    r.k = j.at("k").get<std::size_t>();
    const auto& q = j.at("query");
    r.query.id = q.at("id").get<std::string>();
    for (const auto& [name, jv] : q.at("values").items()) {
      r.attributes.push_back(name);
      r.query.values.push_back(loose_value(jv));
    }
    for (const auto& je : j.at("entries")) {
      RetrievalEntry e;
      e.case_id = je.at("caseId").get<std::string>();
      e.score = je.at("score").get<double>();
      e.no_overlap = je.value("noOverlap", false);
      if (je.contains("explanation")) e.explanation = explanation_from_json(je.at("explanation"));
      r.entries.push_back(std::move(e));
    }
    return r;
  });
}

Json summary_to_json(const DistributionSummary& s) {
  Json j;
  j["document"] = kSummary;
  j["attribute"] = s.attribute;
  j["kind"] = kind_name(s.kind);
  j["count"] = s.count;
  j["missing"] = s.missing;
  j["total"] = s.total();
  if (s.kind == AttributeKind::numeric) {
    j["min"] = s.min;
    j["max"] = s.max;
    j["mean"] = s.mean;
    j["stddev"] = s.stddev;
    j["bins"] = bins_to_json(s.bins);
  } else {
    j["categories"] = Json::array();
    for (const auto& c : s.categories) {
      Json jc;
      jc["label"] = c.label;
      jc["count"] = c.count;
      j["categories"].push_back(std::move(jc));
    }
  }
  j["groupBy"] = s.group_attribute.empty() ? Json(nullptr) : Json(s.group_attribute);
  j["groups"] = Json::array();
  for (const auto& g : s.groups) {
    Json jg;
    jg["label"] = g.label;
    jg["bins"] = bins_to_json(g.bins);
    j["groups"].push_back(std::move(jg));
  }
  return j;
}

DistributionSummary summary_from_json(const Json& j) {
  return guarded("summary", [&] {
    expect_type(j, kSummary);
    DistributionSummary s;
    s.attribute = j.at("attribute").get<std::string>();
    s.kind = kind_from(j.at("kind").get<std::string>());
    s.count = j.at("count").get<std::size_t>();
    s.missing = j.at("missing").get<std::size_t>();
    if (s.kind == AttributeKind::numeric) {
      s.min = j.at("min").get<double>();
      s.max = j.at("max").get<double>();
      s.mean = j.at("mean").get<double>();
      s.stddev = j.at("stddev").get<double>();
      s.bins = bins_from_json(j.at("bins"));
    } else {
      for (const auto& jc : j.at("categories")) {
        s.categories.push_back({jc.at("label").get<std::string>(), jc.at("count").get<std::size_t>()});
      }
    }
    if (j.contains("groupBy") && !j.at("groupBy").is_null()) s.group_attribute = j.at("groupBy").get<std::string>();
    if (j.contains("groups")) {
      for (const auto& jg : j.at("groups")) {
        s.groups.push_back({jg.at("label").get<std::string>(), bins_from_json(jg.at("bins"))});
      }
    }
    return s;
  });
}

Json suggestion_to_json(const SuggestedMeasure& s) {
  Json j;
  j["document"] = kSuggestion;
  j["attribute"] = s.attribute;
  j["range"] = range_to_json(s.range);
  j["measure"] = measure_to_json(s.measure);
  return j;
}

Json report_to_json(const EvaluationReport& r) {
  Json j;
  j["document"] = kReport;
  j["modelVersion"] = r.model_version;
  j["k"] = r.k;
  j["folds"] = r.folds;
  j["seed"] = r.seed;
  j["meanAccuracy"] = r.mean_accuracy;
  j["stddev"] = r.stddev;
  j["perFold"] = Json::array();
  for (const auto& f : r.fold_results) {
    Json jf;
    jf["fold"] = f.index;
    jf["testSize"] = f.test_size;
    jf["correct"] = f.correct;
    jf["incorrect"] = f.incorrect;
    jf["accuracy"] = f.accuracy;
    j["perFold"].push_back(std::move(jf));
  }
  j["confusion"] = Json::array();
  for (const auto& c : r.confusion) {
    Json jc;
    jc["label"] = c.label;
    jc["truePositives"] = c.true_positives;
    jc["falsePositives"] = c.false_positives;
    jc["falseNegatives"] = c.false_negatives;
    jc["trueNegatives"] = c.true_negatives;
    j["confusion"].push_back(std::move(jc));
  }
  return j;
}

Json chart_set_to_json(const DecompositionChartSet& c) {
  Json j;
  j["document"] = kChartSet;
  j["modelVersion"] = c.model_version;
  j["queryId"] = c.query_id;
  j["attributes"] = c.attributes;
  j["rows"] = Json::array();
  for (const auto& row : c.rows) {
    Json jr;
    jr["rank"] = row.rank;
    jr["caseId"] = row.case_id;
    jr["score"] = row.score;
    jr["panels"] = Json::array();
    for (const auto& p : row.panels) {
      Json jp;
      jp["name"] = p.name;
      jp["values"] = Json::array();
      for (const auto& v : p.values) jp["values"].push_back(optional_number(v));
      if (!p.raw.empty()) jp["raw"] = p.raw;
      jr["panels"].push_back(std::move(jp));
    }
    j["rows"].push_back(std::move(jr));
  }
  return j;
}

DecompositionChartSet chart_set_from_json(const Json& j) {
  return guarded("chart set", [&] {
    expect_type(j, kChartSet);
    DecompositionChartSet c;
    c.model_version = j.at("modelVersion").get<std::uint64_t>();
    c.query_id = j.at("queryId").get<std::string>();
    c.attributes = j.at("attributes").get<std::vector<std::string>>();
    for (const auto& jr : j.at("rows")) {
      DecompositionRow row;
      row.rank = jr.at("rank").get<std::size_t>();
      row.case_id = jr.at("caseId").get<std::string>();
      row.score = jr.at("score").get<double>();
      for (const auto& jp : jr.at("panels")) {
        ChartPanel p;
        p.name = jp.at("name").get<std::string>();
        for (const auto& v : jp.at("values")) p.values.push_back(optional_number_from(v));
        if (jp.contains("raw")) p.raw = jp.at("raw").get<std::vector<double>>();
        if (p.values.size() != c.attributes.size()) malformed("panel length differs from the attribute axis");
        row.panels.push_back(std::move(p));
      }
      c.rows.push_back(std::move(row));
    }
    return c;
  });
}

Json curve_to_json(const MeasureCurve& c) {
  Json j;
  j["document"] = kCurve;
  j["attribute"] = c.attribute;
  j["measure"] = c.measure_type;
  j["reference"] = c.reference;
  j["range"] = range_to_json(c.range);
  j["points"] = Json::array();
  for (const auto& p : c.points) {
    Json jp;
    jp["value"] = p.value;
    jp["similarity"] = p.similarity;
    j["points"].push_back(std::move(jp));
  }
  return j;
}

}  // namespace cbrx::doc
