#include "cbrx/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cbrx/document.hpp"
#include "cbrx/evaluation.hpp"
#include "cbrx/ingestion.hpp"
#include "cbrx/retrieval.hpp"
#include "cbrx/service.hpp"
#include "cbrx/similarity.hpp"
#include "cbrx/text.hpp"
#include "cbrx/viz.hpp"

namespace cbrx::cli {

namespace {

using doc::Json;

class Io {
 public:
  Io(std::ostream& out, std::ostream& err, std::istream& in) : out(out), err(err), in_(in) {}

  std::string read_text(const std::string& path) {
    if (path == "-") {
      std::ostringstream ss;
      ss << in_.rdbuf();
      return ss.str();
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) throw NotFoundError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }

  Json read_json(const std::string& path) { return doc::parse(read_text(path)); }

  void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
      out << text;
    } else {
      doc::write_file_atomic(path, text);
    }
  }

  std::ostream& out;
  std::ostream& err;

 private:
  std::istream& in_;
};

SimilarityModel load_model(Io& io, const std::string& path) { return doc::model_from_json(io.read_json(path)); }
CaseBase load_casebase(Io& io, const std::string& path) { return doc::casebase_from_json(io.read_json(path)); }

void print_table(std::ostream& out, const EvaluationReport& r, const std::string& label) {
  out << "classifier                 folds  k   mean acc  stddev\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-26s %-6zu %-3zu %-9s %s\n", label.c_str(), r.folds, r.k,
                fixed(r.mean_accuracy, 4).c_str(), fixed(r.stddev, 4).c_str());
  out << line;
  out << "\nfold  test  correct  accuracy\n";
  for (const auto& f : r.fold_results) {
    std::snprintf(line, sizeof line, "%-5zu %-5zu %-8zu %s\n", f.index, f.test_size, f.correct,
                  fixed(f.accuracy, 4).c_str());
    out << line;
  }
}

struct Options {
  // ingest
  std::string csv;
  std::string solution;
  std::vector<std::string> zero_missing;
  bool keep_zeros = false;
  std::vector<std::string> hints;
  std::string name = "casebase";
  std::string out_path;
  std::string model_out;
  double degree = kDefaultSuggestionDegree;
  // shared
  std::string model;
  std::string casebase;
  std::string attribute;
  std::size_t bins = kDefaultBins;
  bool group = false;
  std::string summary;
  bool apply = false;
  std::string query;
  std::size_t k = 0;
  bool explain = false;
  bool serial = false;
  std::string case_id;
  std::size_t folds = kDefaultFolds;
  std::uint64_t seed = kDefaultSeed;
  bool table = false;
  std::string input = "-";
  std::size_t top = 3;
  std::string format = "text";
  std::size_t samples = 50;
  double reference = 0.0;
  std::string project = ".";
  std::string bind = "127.0.0.1:8080";
};

int cmd_ingest(Io& io, const Options& o) {
  CsvOptions options;
  options.name = o.name;
  options.solution_column = o.solution;
  options.zero_missing_columns = o.zero_missing;
  options.zero_as_missing = !o.keep_zeros;
  for (const auto& h : o.hints) {
    auto eq = h.find('=');
    const std::string kind = eq == std::string::npos ? "" : h.substr(eq + 1);
    if (kind != "numeric" && kind != "symbolic") {
      throw ValidationError("hint '" + h + "' must look like column=numeric or column=symbolic",
                            {{"", "invalid-parameter", h}});
    }
    options.kind_hints[h.substr(0, eq)] = kind == "numeric" ? AttributeKind::numeric : AttributeKind::symbolic;
  }
  std::istringstream text(io.read_text(o.csv));
  CaseBase base = load_csv(text, options);

  std::size_t problem = 0;
  for (const auto& d : base.schema) problem += d.is_problem() ? 1 : 0;
  const std::size_t solution = base.schema.size() - problem;
  io.err << "ingested " << base.cases.size() << " cases (" << problem << " problem, " << solution
         << (solution == 1 ? " solution attribute)\n" : " solution attributes)\n");

  if (!o.model_out.empty()) {
    auto model = make_default_model(base.schema, {o.degree, 1.0});
    doc::write_file_atomic(o.model_out, doc::serialize(doc::model_to_json(model)));
  }
  io.emit(doc::serialize(doc::casebase_to_json(base)), o.out_path);
  return kOk;
}

int cmd_summarize(Io& io, const Options& o) {
  auto base = load_casebase(io, o.casebase);
  io.emit(doc::serialize(doc::summary_to_json(summarize(base, o.attribute, o.bins, o.group))), o.out_path);
  return kOk;
}

int cmd_suggest(Io& io, const Options& o) {
  DistributionSummary summary;
  if (!o.summary.empty()) {
    summary = doc::summary_from_json(io.read_json(o.summary));
  } else {
    summary = summarize(load_casebase(io, o.casebase), o.attribute, o.bins, false);
  }
  auto suggestion = suggest_measure(summary, o.degree);
  if (o.apply) {
    auto model = install_suggestion(load_model(io, o.model), suggestion);
    auto violations = validate_model(model);
    if (!violations.empty()) throw ValidationError("model invalid after installing the suggestion", violations);
    io.emit(doc::serialize(doc::model_to_json(model)), o.out_path);
  } else {
    io.emit(doc::serialize(doc::suggestion_to_json(suggestion)), o.out_path);
  }
  return kOk;
}

int cmd_retrieve(Io& io, const Options& o) {
  auto model = load_model(io, o.model);
  auto base = load_casebase(io, o.casebase);
  Case query = doc::case_from_json(model.schema, io.read_json(o.query), true);
  const std::size_t k = o.k == 0 ? base.cases.size() : o.k;
  auto result = retrieve(model, base, query, std::max<std::size_t>(k, 1),
                         o.serial ? Execution::serial : Execution::parallel);
  io.emit(doc::serialize(doc::result_to_json(result, o.explain)), o.out_path);
  return kOk;
}

int cmd_explain(Io& io, const Options& o) {
  auto model = load_model(io, o.model);
  auto base = load_casebase(io, o.casebase);
  Case query = doc::case_from_json(model.schema, io.read_json(o.query), true);
  const Case* target = nullptr;
  for (const auto& c : base.cases) {
    if (c.id == o.case_id) target = &c;
  }
  if (target == nullptr) throw NotFoundError("no case with id '" + o.case_id + "'");
  Json j;
  j["document"] = doc::kExplanation;
  j["modelVersion"] = model.version;
  j["queryId"] = query.id;
  j["caseId"] = target->id;
  const Json body = doc::explanation_to_json(explain(model, query, *target));
  for (const auto& [key, value] : body.items()) j[key] = value;
  io.emit(doc::serialize(j), o.out_path);
  return kOk;
}

int cmd_evaluate(Io& io, const Options& o) {
  auto model = load_model(io, o.model);
  auto base = load_casebase(io, o.casebase);
  const std::size_t k = o.k == 0 ? kDefaultNeighbors : o.k;
  auto report = cross_validate(model, base, k, o.folds, o.seed, o.serial ? Execution::serial : Execution::parallel);
  if (o.table) {
    std::ostringstream ss;
    print_table(ss, report, "CBR weighted-sum kNN");
    io.emit(ss.str(), o.out_path);
  } else {
    io.emit(doc::serialize(doc::report_to_json(report)), o.out_path);
  }
  return kOk;
}

int cmd_chart(Io& io, const Options& o, bool preview, bool reference_given) {
  const bool as_json = o.format == "json";
  const ChartFormat format = as_json ? ChartFormat::text : parse_chart_format(o.format);

  if (preview) {
    auto model = load_model(io, o.model);
    auto idx = find_attribute(model.schema, o.attribute);
    auto it = model.measures.find(o.attribute);
    if (!idx || it == model.measures.end()) throw NotFoundError("no measure for attribute '" + o.attribute + "'");
    auto curve = measure_preview(it->second, model.schema[*idx], o.samples,
                                 reference_given ? std::optional<double>(o.reference) : std::nullopt);
    io.emit(as_json ? doc::serialize(doc::curve_to_json(curve)) : render_charts(curve, format), o.out_path);
    return kOk;
  }

  const Json input = io.read_json(o.input);
  const std::string type = doc::document_type(input);
  if (type == doc::kResult || type == doc::kChartSet) {
    auto charts = type == doc::kResult ? build_chart_set(doc::result_from_json(input), o.top)
                                       : doc::chart_set_from_json(input);
    io.emit(as_json ? doc::serialize(doc::chart_set_to_json(charts)) : render_charts(charts, format), o.out_path);
  } else if (type == doc::kSummary) {
    auto summary = doc::summary_from_json(input);
    io.emit(as_json ? doc::serialize(doc::summary_to_json(summary)) : render_charts(summary, format), o.out_path);
  } else {
    throw ValidationError("chart input must be a retrieval result, chart set or distribution summary",
                          {{"", "unsupported-document", type.empty() ? "untagged document" : type}});
  }
  return kOk;
}

int cmd_validate(Io& io, const Options& o) {
  auto violations = validate_model(load_model(io, o.model));
  io.emit(doc::serialize(doc::violations_to_json(violations)), o.out_path);
  for (const auto& v : violations) {
    io.err << "violation: " << (v.attribute.empty() ? "(model)" : v.attribute) << ": " << v.rule << ": "
           << v.message << '\n';
  }
  return violations.empty() ? kOk : kValidationError;
}

int cmd_serve(Io& io, const Options& o) {
  service::Project project(o.project);
  service::Server server(project);
  auto [host, port] = service::parse_bind_address(o.bind);
  const int bound = server.bind(host, port);
  io.err << "serving " << o.project << " on http://" << host << ':' << bound << "/api/v1\n";
  io.err.flush();
  server.listen();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in) {
  Io io(out, err, in);
  Options o;

  CLI::App app{"Explainable case-based retrieval: ingest, inspect, retrieve, explain, evaluate, chart"};
  app.name(args.empty() ? "cbrx" : args.front());
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "Load a CSV file into a case base document");
  ingest->add_option("csv", o.csv, "CSV file with a header row ('-' for stdin)")->required();
  ingest->add_option("--solution", o.solution, "Column that holds the solution label");
  ingest->add_option("--zero-missing", o.zero_missing, "Columns whose zeros mean 'not measured'")->delimiter(',');
  ingest->add_flag("--keep-zeros", o.keep_zeros, "Do not convert zeros to missing values");
  ingest->add_option("--hint", o.hints, "Column kind hint, column=numeric|symbolic");
  ingest->add_option("--name", o.name, "Case base name");
  ingest->add_option("--out", o.out_path, "Write the case base here instead of stdout");
  ingest->add_option("--model-out", o.model_out, "Also write a starter model over the schema");
  ingest->add_option("--degree", o.degree, "Polynomial degree of the starter model")->check(CLI::PositiveNumber);

  auto* summarize_cmd = app.add_subcommand("summarize", "Value distribution of one attribute");
  summarize_cmd->add_option("--casebase", o.casebase, "Case base document")->required();
  summarize_cmd->add_option("--attribute", o.attribute, "Attribute name")->required();
  summarize_cmd->add_option("--bins", o.bins, "Number of equal-width bins")->check(CLI::PositiveNumber);
  summarize_cmd->add_flag("--group-by-solution", o.group, "One histogram per solution value");
  summarize_cmd->add_option("--out", o.out_path, "Output file");

  auto* suggest = app.add_subcommand("suggest", "Propose a starter measure from the value distribution");
  auto* suggest_cb = suggest->add_option("--casebase", o.casebase, "Case base document");
  auto* suggest_summary = suggest->add_option("--summary", o.summary, "Distribution summary document");
  suggest_cb->excludes(suggest_summary);
  suggest->add_option("--attribute", o.attribute, "Attribute name")->needs(suggest_cb);
  suggest->add_option("--bins", o.bins, "Number of bins")->check(CLI::PositiveNumber);
  suggest->add_option("--degree", o.degree, "Polynomial degree")->check(CLI::PositiveNumber);
  auto* suggest_model = suggest->add_option("--model", o.model, "Model to install the suggestion into");
  suggest->add_flag("--apply", o.apply, "Emit the model with the suggestion installed")->needs(suggest_model);
  suggest->add_option("--out", o.out_path, "Output file");

  auto* retrieve_cmd = app.add_subcommand("retrieve", "Rank the case base against a query");
  retrieve_cmd->add_option("--model", o.model, "Similarity model document")->required();
  retrieve_cmd->add_option("--casebase", o.casebase, "Case base document")->required();
  retrieve_cmd->add_option("--query", o.query, "Query document ('-' for stdin)")->required();
  retrieve_cmd->add_option("--k", o.k, "Number of cases to return (default: all)")->check(CLI::PositiveNumber);
  retrieve_cmd->add_flag("--explain", o.explain, "Include per-attribute explanations");
  retrieve_cmd->add_flag("--serial", o.serial, "Use the serial scoring kernel");
  retrieve_cmd->add_option("--out", o.out_path, "Output file");

  auto* explain_cmd = app.add_subcommand("explain", "Decompose the similarity of one case to a query");
  explain_cmd->add_option("--model", o.model, "Similarity model document")->required();
  explain_cmd->add_option("--casebase", o.casebase, "Case base document")->required();
  explain_cmd->add_option("--query", o.query, "Query document ('-' for stdin)")->required();
  explain_cmd->add_option("--case", o.case_id, "Case id")->required();
  explain_cmd->add_option("--out", o.out_path, "Output file");

  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate retrieval as a k-NN classifier");
  evaluate->add_option("--model", o.model, "Similarity model document")->required();
  evaluate->add_option("--casebase", o.casebase, "Case base document")->required();
  evaluate->add_option("--k", o.k, "Neighbors per vote (default 5)")->check(CLI::PositiveNumber);
  evaluate->add_option("--folds", o.folds, "Number of folds")->check(CLI::Range(2, 1000000));
  evaluate->add_option("--seed", o.seed, "Shuffle seed");
  evaluate->add_flag("--table", o.table, "Print a table instead of the report document");
  evaluate->add_flag("--serial", o.serial, "Evaluate folds sequentially");
  evaluate->add_option("--out", o.out_path, "Output file");

  auto* chart = app.add_subcommand("chart", "Render decomposition, distribution or measure charts");
  chart->add_option("--input", o.input, "Result, chart set or summary document ('-' for stdin)");
  chart->add_option("--top", o.top, "Rows of the decomposition chart")->check(CLI::PositiveNumber);
  chart->add_option("--format", o.format, "text, svg or json");
  auto* chart_model = chart->add_option("--model", o.model, "Model for a measure preview");
  chart->add_option("--attribute", o.attribute, "Attribute for a measure preview")->needs(chart_model);
  chart->add_option("--samples", o.samples, "Preview sample count");
  auto* chart_reference = chart->add_option("--reference", o.reference, "Preview reference value");
  chart->add_option("--out", o.out_path, "Output file");

  auto* validate = app.add_subcommand("validate", "Check a similarity model against its invariants");
  validate->add_option("--model", o.model, "Similarity model document ('-' for stdin)")->required();
  validate->add_option("--out", o.out_path, "Output file");

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service for a project directory");
  serve_cmd->add_option("--project", o.project, "Project directory");
  serve_cmd->add_option("--bind", o.bind, "host:port to listen on");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(io, o);
    if (summarize_cmd->parsed()) return cmd_summarize(io, o);
    if (suggest->parsed()) {
      if (o.summary.empty() && (o.casebase.empty() || o.attribute.empty())) {
        err << "error: suggest needs --summary or --casebase with --attribute\n";
        return kUsageError;
      }
      return cmd_suggest(io, o);
    }
    if (retrieve_cmd->parsed()) return cmd_retrieve(io, o);
    if (explain_cmd->parsed()) return cmd_explain(io, o);
    if (evaluate->parsed()) return cmd_evaluate(io, o);
    if (chart->parsed()) return cmd_chart(io, o, !o.attribute.empty(), chart_reference->count() > 0);
    if (validate->parsed()) return cmd_validate(io, o);
    if (serve_cmd->parsed()) return cmd_serve(io, o);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    for (const auto& v : e.violations()) {
      err << "violation: " << (v.attribute.empty() ? "(model)" : v.attribute) << ": " << v.rule << ": " << v.message
          << '\n';
    }
    return kValidationError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }
  return kUsageError;
}

}  // namespace cbrx::cli
