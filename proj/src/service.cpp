#include "cbrx/service.hpp"

#include <chrono>
#include <ctime>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "cbrx/evaluation.hpp"
#include "cbrx/ingestion.hpp"
#include "cbrx/similarity.hpp"
#include "cbrx/text.hpp"
#include "cbrx/viz.hpp"

namespace cbrx::service {

namespace {

using doc::Json;

constexpr const char* kModelFile = "model.json";
constexpr const char* kLogFile = "edit-log.json";
constexpr const char* kCaseBaseDir = "casebases";

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool valid_name(const std::string& name) {
  static const std::regex pattern("[A-Za-z0-9_.-]{1,64}");
  return std::regex_match(name, pattern) && name.front() != '.';
}

Json log_to_json(const std::vector<EditLogEntry>& log) {
  Json j;
  j["document"] = "edit-log";
  j["entries"] = Json::array();
  for (const auto& e : log) {
    Json je;
    je["version"] = e.version;
    je["timestamp"] = e.timestamp;
    je["summary"] = e.summary;
    j["entries"].push_back(std::move(je));
  }
  return j;
}

}  // namespace

Project::Project(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_ / kCaseBaseDir);

  SimilarityModel model;
  if (std::filesystem::exists(directory_ / kModelFile)) {
    model = doc::model_from_json(doc::read_file(directory_ / kModelFile));
    if (!model.schema.empty()) require_valid(model);
  }
  state_.model = std::make_shared<const SimilarityModel>(std::move(model));

  for (const auto& entry : std::filesystem::directory_iterator(directory_ / kCaseBaseDir)) {
    if (entry.path().extension() != ".json") continue;
    auto base = doc::casebase_from_json(doc::read_file(entry.path()));
    state_.casebases[base.name] = std::make_shared<const CaseBase>(std::move(base));
  }

  if (std::filesystem::exists(directory_ / kLogFile)) {
    const Json j = doc::read_file(directory_ / kLogFile);
    for (const auto& je : j.at("entries")) {
      log_.push_back({je.at("version").get<std::uint64_t>(), je.at("timestamp").get<std::string>(),
                      je.at("summary").get<std::string>()});
    }
  }
}

Project::Snapshot Project::snapshot() const {
  std::shared_lock lock(state_mutex_);
  return state_;
}

std::vector<EditLogEntry> Project::edit_log() const {
  std::shared_lock lock(state_mutex_);
  return log_;
}

void Project::check_version(std::optional<std::uint64_t> base_version) const {
  const std::uint64_t current = state_.model->version;
  if (base_version && *base_version != current) throw VersionConflict(*base_version, current);
}

// Caller holds writer_mutex_.
std::shared_ptr<const SimilarityModel> Project::commit(SimilarityModel next, const std::string& summary) {
  next.version = state_.model->version + 1;
  require_valid(next);

  auto log = log_;
  log.push_back({next.version, utc_now(), summary});
  doc::write_file_atomic(directory_ / kModelFile, doc::serialize(doc::model_to_json(next)));
  doc::write_file_atomic(directory_ / kLogFile, doc::serialize(log_to_json(log)));

  auto published = std::make_shared<const SimilarityModel>(std::move(next));
  std::unique_lock lock(state_mutex_);
  state_.model = published;
  log_ = std::move(log);
  return published;
}

std::shared_ptr<const SimilarityModel> Project::replace_model(SimilarityModel model,
                                                              std::optional<std::uint64_t> base_version) {
  std::lock_guard writer(writer_mutex_);
  check_version(base_version);
  return commit(std::move(model), "replace model");
}

std::shared_ptr<const SimilarityModel> Project::put_measure(const std::string& attribute,
                                                            LocalSimilarityMeasure measure, std::optional<Range> range,
                                                            std::optional<std::uint64_t> base_version) {
  std::lock_guard writer(writer_mutex_);
  check_version(base_version);
  const auto& current = *state_.model;
  if (!find_attribute(current.schema, attribute)) throw NotFoundError("unknown attribute '" + attribute + "'");
  SimilarityModel next = current;
  next.measures.insert_or_assign(attribute, measure);
  if (range) next.schema[*find_attribute(next.schema, attribute)].range = *range;
  return commit(std::move(next), "set " + std::string(measure.type_name()) + " measure on " + attribute);
}

std::shared_ptr<const SimilarityModel> Project::put_weights(const std::map<std::string, double>& weights,
                                                            std::optional<std::uint64_t> base_version) {
  std::lock_guard writer(writer_mutex_);
  check_version(base_version);
  SimilarityModel next = *state_.model;
  for (const auto& [name, w] : weights) next.amalgamation.weights[name] = w;
  return commit(std::move(next), "update " + std::to_string(weights.size()) + " weight(s)");
}

std::shared_ptr<const SimilarityModel> Project::add_casebase(CaseBase base, double default_degree) {
  if (!valid_name(base.name)) {
    throw ValidationError("invalid case base name '" + base.name + "'",
                          {{"", "invalid-name", "use letters, digits, '.', '_' or '-'"}});
  }
  std::lock_guard writer(writer_mutex_);
  std::shared_ptr<const SimilarityModel> model = state_.model;
  if (model->schema.empty()) {
    model = commit(make_default_model(base.schema, {default_degree, 1.0}), "install default model from " + base.name);
  } else {
    require_compatible(model->schema, base.schema);
  }
  doc::write_file_atomic(directory_ / kCaseBaseDir / (base.name + ".json"),
                         doc::serialize(doc::casebase_to_json(base)));
  auto stored = std::make_shared<const CaseBase>(std::move(base));
  std::unique_lock lock(state_mutex_);
  state_.casebases[stored->name] = stored;
  return model;
}

void Project::remember_result(std::shared_ptr<const RetrievalResult> result) {
  std::unique_lock lock(state_mutex_);
  state_.last_result = std::move(result);
}

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(doc::serialize(body), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::vector<Violation>& violations = {}) {
  Json body;
  body["error"] = message;
  body["status"] = status;
  if (status == 422) body["violations"] = doc::violations_to_json(violations)["violations"];
  send_json(res, status, body);
}

template <typename F>
httplib::Server::Handler guard(Project& project, F handler) {
  return [&project, handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const VersionConflict& e) {
      Json body;
      body["error"] = e.what();
      body["status"] = 409;
      body["citedVersion"] = e.cited();
      body["currentVersion"] = e.current();
      send_json(res, 409, body);
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what());
    } catch (const ValidationError& e) {
      auto violations = e.violations();
      if (violations.empty()) violations.push_back({"", "invalid-request", e.what()});
      send_error(res, 422, e.what(), violations);
    } catch (const Error& e) {
      send_error(res, 422, e.what(), {{"", "invalid-request", e.what()}});
    } catch (const nlohmann::json::exception& e) {
      // Well-formed JSON with a missing or mistyped field.
      send_error(res, 422, e.what(), {{"", "malformed-document", e.what()}});
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
    if (!res.has_header("X-Model-Version")) {
      res.set_header("X-Model-Version", std::to_string(project.snapshot().model->version));
    }
  };
}

Json body_json(const httplib::Request& req) {
  if (req.body.empty()) throw ValidationError("request body is empty", {{"", "malformed-document", "empty body"}});
  return doc::parse(req.body);
}

std::optional<std::uint64_t> base_version_of(const Json& j) {
  if (j.is_object() && j.contains("baseVersion") && !j.at("baseVersion").is_null()) {
    return j.at("baseVersion").get<std::uint64_t>();
  }
  return std::nullopt;
}

std::size_t size_param(const httplib::Request& req, const char* name, std::size_t fallback) {
  if (!req.has_param(name)) return fallback;
  const auto text = req.get_param_value(name);
  auto x = parse_number(text);
  if (!x || *x < 0 || *x != static_cast<double>(static_cast<std::size_t>(*x))) {
    throw ValidationError(std::string("parameter '") + name + "' must be a non-negative integer",
                          {{"", "invalid-parameter", name}});
  }
  return static_cast<std::size_t>(*x);
}

bool bool_param(const httplib::Request& req, const char* name, bool fallback) {
  if (!req.has_param(name)) return fallback;
  const auto v = req.get_param_value(name);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError(std::string("parameter '") + name + "' must be true or false", {{"", "invalid-parameter", name}});
}

std::shared_ptr<const CaseBase> find_casebase(const Project::Snapshot& snap, const std::string& name) {
  auto it = snap.casebases.find(name);
  if (it == snap.casebases.end()) throw NotFoundError("unknown case base '" + name + "'");
  return it->second;
}

void tag_version(httplib::Response& res, std::uint64_t version) {
  res.set_header("X-Model-Version", std::to_string(version));
}

}  // namespace

Server::Server(Project& project) : project_(project), http_(std::make_unique<httplib::Server>()) {
  // The library default adds SO_REUSEPORT, which would let a second server
  // share a port that is already in use.
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  routes();
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void Server::listen() { http_->listen_after_bind(); }

void Server::stop() {
  if (http_) http_->stop();
}

void Server::routes() {
  auto& http = *http_;
  Project& project = project_;

  http.Get("/api/v1/model", guard(project, [&project](const httplib::Request&, httplib::Response& res) {
             auto snap = project.snapshot();
             tag_version(res, snap.model->version);
             send_json(res, 200, doc::model_to_json(*snap.model));
           }));

  http.Put("/api/v1/model", guard(project, [&project](const httplib::Request& req, httplib::Response& res) {
             const Json body = body_json(req);
             const Json& model_doc = body.contains("model") ? body.at("model") : body;
             SimilarityModel model = doc::model_from_json(model_doc);
             std::optional<std::uint64_t> base = base_version_of(body);
             if (!base && model_doc.contains("version")) base = model.version;
             auto committed = project.replace_model(std::move(model), base);
             tag_version(res, committed->version);
             send_json(res, 200, doc::model_to_json(*committed));
           }));

  http.Put(R"(/api/v1/model/measures/([^/]+))",
           guard(project, [&project](const httplib::Request& req, httplib::Response& res) {
             const std::string attribute = req.matches[1];
             const Json body = body_json(req);
             const Json& jm = body.contains("measure") ? body.at("measure") : body;
             auto measure = doc::measure_from_json(jm);
             std::optional<Range> range;
             if (body.contains("range")) {
               range = Range{body.at("range").at("min").get<double>(), body.at("range").at("max").get<double>()};
             }
             auto committed = project.put_measure(attribute, std::move(measure), range, base_version_of(body));
             tag_version(res, committed->version);
             send_json(res, 200, doc::model_to_json(*committed));
           }));

  http.Put("/api/v1/model/weights", guard(project, [&project](const httplib::Request& req, httplib::Response& res) {
             const Json body = body_json(req);
             const Json& jw = body.contains("weights") ? body.at("weights") : body;
             std::map<std::string, double> weights;
             for (const auto& [name, w] : jw.items()) {
               if (name == "baseVersion") continue;
               if (!w.is_number()) {
                 throw ValidationError("weight for '" + name + "' is not a number",
                                       {{name, "negative-weight", "weights must be numbers"}});
               }
               weights[name] = w.get<double>();
             }
             auto committed = project.put_weights(weights, base_version_of(body));
             tag_version(res, committed->version);
             send_json(res, 200, doc::model_to_json(*committed));
           }));

  http.Get("/api/v1/model/log", guard(project, [&project](const httplib::Request&, httplib::Response& res) {
             send_json(res, 200, log_to_json(project.edit_log()));
           }));

  http.Post("/api/v1/casebases", guard(project, [&project](const httplib::Request& req, httplib::Response& res) {
              CsvOptions options;
              options.name = req.has_param("name") ? req.get_param_value("name") : "casebase";
              options.solution_column = req.has_param("solution") ? req.get_param_value("solution") : "";
              options.zero_as_missing = bool_param(req, "zeroAsMissing", true);
              if (req.has_param("zeroMissing")) options.zero_missing_columns = split(req.get_param_value("zeroMissing"), ',');
              if (req.has_param("hints")) {
                for (const auto& hint : split(req.get_param_value("hints"), ',')) {
                  auto parts = split(hint, ':');
                  if (parts.size() != 2 || (parts[1] != "numeric" && parts[1] != "symbolic")) {
                    throw ValidationError("hints must look like column:numeric or column:symbolic",
                                          {{"", "invalid-parameter", hint}});
                  }
                  options.kind_hints[parts[0]] =
                      parts[1] == "numeric" ? AttributeKind::numeric : AttributeKind::symbolic;
                }
              }
              double degree = kDefaultSuggestionDegree;
              if (req.has_param("degree")) {
                auto d = parse_number(req.get_param_value("degree"));
                if (!d) throw ValidationError("degree must be a number", {{"", "invalid-parameter", "degree"}});
                degree = *d;
              }
              std::istringstream in(req.body);
              CaseBase base = load_csv(in, options);
              const std::size_t ncases = base.cases.size();
              std::size_t problem = 0;
              for (const auto& d : base.schema) problem += d.is_problem() ? 1 : 0;
              const std::size_t nattr = base.schema.size();
              const std::string name = base.name;
              auto model = project.add_casebase(std::move(base), degree);

              Json body;
              body["document"] = "casebase-info";
              body["name"] = name;
              body["cases"] = ncases;
              body["attributes"] = nattr;
              body["problemAttributes"] = problem;
              body["solutionAttributes"] = nattr - problem;
              body["modelVersion"] = model->version;
              tag_version(res, model->version);
              send_json(res, 201, body);
            }));

  http.Get("/api/v1/casebases", guard(project, [&project](const httplib::Request&, httplib::Response& res) {
             auto snap = project.snapshot();
             Json body;
             body["document"] = "casebase-list";
             body["casebases"] = Json::array();
             for (const auto& [name, cb] : snap.casebases) {
               Json jc;
               jc["name"] = name;
               jc["cases"] = cb->cases.size();
               body["casebases"].push_back(std::move(jc));
             }
             send_json(res, 200, body);
           }));

  http.Get(R"(/api/v1/casebases/([^/]+))", guard(project, [&project](const httplib::Request& req, httplib::Response& res) {
             auto cb = find_casebase(project.snapshot(), req.matches[1]);
             send_json(res, 200, doc::casebase_to_json(*cb));
           }));

  http.Get(R"(/api/v1/casebases/([^/]+)/summary/([^/]+))",
           guard(project, [&project](const httplib::Request& req, httplib::Response& res) {
             auto snap = project.snapshot();
             auto cb = find_casebase(snap, req.matches[1]);
             const std::string attribute = req.matches[2];
             if (!find_attribute(cb->schema, attribute)) throw NotFoundError("unknown attribute '" + attribute + "'");
             auto summary = summarize(*cb, attribute, size_param(req, "bins", kDefaultBins),
                                      bool_param(req, "groupBySolution", false));
             Json body = doc::summary_to_json(summary);
             body["modelVersion"] = snap.model->version;
             tag_version(res, snap.model->version);
             send_json(res, 200, body);
           }));

  http.Post("/api/v1/retrieval", guard(project, [&project](const httplib::Request& req, httplib::Response& res) {
              const Json body = body_json(req);
              auto snap = project.snapshot();
              auto cb = find_casebase(snap, body.at("casebase").get<std::string>());
              const auto& model = *snap.model;
              Case query = doc::case_from_json(model.schema, body.at("query"), true);
              const std::size_t k = body.value("k", std::size_t{10});
              auto result = std::make_shared<const RetrievalResult>(retrieve(model, *cb, query, k));
              project.remember_result(result);
              tag_version(res, result->model_version);
              send_json(res, 200, doc::result_to_json(*result));
            }));

  http.Post("/api/v1/evaluation", guard(project, [&project](const httplib::Request& req, httplib::Response& res) {
              const Json body = body_json(req);
              auto snap = project.snapshot();
              auto cb = find_casebase(snap, body.at("casebase").get<std::string>());
              auto report = cross_validate(*snap.model, *cb, body.value("k", kDefaultNeighbors),
                                           body.value("folds", kDefaultFolds), body.value("seed", kDefaultSeed));
              tag_version(res, report.model_version);
              send_json(res, 200, doc::report_to_json(report));
            }));

  http.Get("/api/v1/charts/decomposition",
           guard(project, [&project](const httplib::Request& req, httplib::Response& res) {
             auto snap = project.snapshot();
             if (!snap.last_result) throw NotFoundError("no retrieval has been run yet");
             auto charts = build_chart_set(*snap.last_result, size_param(req, "top", 3));
             tag_version(res, charts.model_version);
             const std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
             if (format == "json") {
               send_json(res, 200, doc::chart_set_to_json(charts));
             } else {
               const auto f = parse_chart_format(format);
               res.status = 200;
               res.set_content(render_charts(charts, f), f == ChartFormat::svg ? "image/svg+xml" : "text/plain");
             }
           }));

  http.Get(R"(/api/v1/measures/([^/]+)/preview)",
           guard(project, [&project](const httplib::Request& req, httplib::Response& res) {
             auto snap = project.snapshot();
             const auto& model = *snap.model;
             const std::string attribute = req.matches[1];
             auto idx = find_attribute(model.schema, attribute);
             auto it = model.measures.find(attribute);
             if (!idx || it == model.measures.end()) throw NotFoundError("no measure for attribute '" + attribute + "'");
             std::optional<double> reference;
             if (req.has_param("reference")) {
               reference = parse_number(req.get_param_value("reference"));
               if (!reference) throw ValidationError("reference must be a number", {{attribute, "invalid-parameter", "reference"}});
             }
             auto curve = measure_preview(it->second, model.schema[*idx], size_param(req, "samples", 50), reference);
             Json body = doc::curve_to_json(curve);
             body["modelVersion"] = model.version;
             tag_version(res, model.version);
             send_json(res, 200, body);
           }));
}

std::pair<std::string, int> parse_bind_address(const std::string& address) {
  std::string host = "127.0.0.1";
  std::string port_text = address;
  if (auto colon = address.rfind(':'); colon != std::string::npos) {
    if (colon > 0) host = address.substr(0, colon);
    port_text = address.substr(colon + 1);
  } else if (!address.empty() && !parse_number(address)) {
    return {address, 8080};
  }
  if (port_text.empty()) return {host, 8080};
  auto port = parse_number(port_text);
  if (!port || *port < 0 || *port > 65535 || *port != static_cast<int>(*port)) {
    throw ValidationError("invalid port in bind address '" + address + "'", {{"", "invalid-parameter", "bind"}});
  }
  return {host, static_cast<int>(*port)};
}

void serve(const std::filesystem::path& directory, const std::string& bind_address) {
  Project project(directory);
  Server server(project);
  auto [host, port] = parse_bind_address(bind_address);
  server.bind(host, port);
  server.listen();
}

}  // namespace cbrx::service
