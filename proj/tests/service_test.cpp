#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "cbrx/document.hpp"
#include "cbrx/service.hpp"

namespace cbrx {
namespace {

using doc::Json;

std::string pima_csv() {
  std::ifstream f(std::string(CBRX_DATA_DIR) + "/pima-indians-diabetes.csv");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class Running {
 public:
  explicit Running(const std::filesystem::path& dir) : project_(dir), server_(project_) {
    port_ = server_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_.listen(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(60, 0);
  }
  ~Running() {
    server_.stop();
    thread_.join();
  }

  httplib::Client& client() { return *client_; }
  service::Project& project() { return project_; }

 private:
  service::Project project_;
  service::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("cbrx-service-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    server_ = std::make_unique<Running>(dir_);
  }
  void TearDown() override {
    server_.reset();
    std::filesystem::remove_all(dir_);
  }

  httplib::Client& http() { return server_->client(); }

  Json get(const std::string& path, int expected = 200) {
    auto res = http().Get(path);
    EXPECT_TRUE(res) << path;
    if (!res) return {};
    EXPECT_EQ(res->status, expected) << path << ": " << res->body;
    return Json::parse(res->body);
  }

  Json send(const std::string& method, const std::string& path, const Json& body, int expected) {
    auto text = body.dump();
    auto res = method == "PUT" ? http().Put(path, text, "application/json")
                               : http().Post(path, text, "application/json");
    EXPECT_TRUE(res) << path;
    if (!res) return {};
    EXPECT_EQ(res->status, expected) << path << ": " << res->body;
    return Json::parse(res->body);
  }

  std::uint64_t upload_pima() {
    auto res = http().Post("/api/v1/casebases?name=pima&solution=Outcome&zeroMissing=Glucose,BloodPressure,"
                           "SkinThickness,Insulin,BMI&degree=1",
                           pima_csv(), "text/csv");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 201) << res->body;
    auto j = Json::parse(res->body);
    EXPECT_EQ(j["cases"], 768);
    EXPECT_EQ(j["problemAttributes"], 8);
    EXPECT_EQ(j["solutionAttributes"], 1);
    return j["modelVersion"].get<std::uint64_t>();
  }

  static Json query() {
    return {{"id", "probe"}, {"values", {{"Pregnancies", 2}, {"Glucose", 120}, {"BMI", 30.5}, {"Age", 35}}}};
  }

  std::filesystem::path dir_;
  std::unique_ptr<Running> server_;
};

TEST_F(ServiceTest, FreshProjectHasEmptyModelAtVersionZero) {
  auto res = http().Get("/api/v1/model");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("X-Model-Version"), "0");
  auto j = Json::parse(res->body);
  EXPECT_EQ(j["version"], 0);
  EXPECT_TRUE(j["schema"].empty());
}

TEST_F(ServiceTest, UploadInstallsDefaultModel) {
  EXPECT_EQ(upload_pima(), 1u);
  auto model = get("/api/v1/model");
  EXPECT_EQ(model["version"], 1);
  EXPECT_EQ(model["schema"].size(), 9u);
  EXPECT_EQ(model["measures"]["Age"]["degree"], 1.0);
  auto list = get("/api/v1/casebases");
  ASSERT_EQ(list["casebases"].size(), 1u);
  EXPECT_EQ(list["casebases"][0]["name"], "pima");
  EXPECT_EQ(get("/api/v1/casebases/pima")["cases"].size(), 768u);
}

TEST_F(ServiceTest, NegativeDegreeIsRejectedWithViolations) {
  upload_pima();
  auto j = send("PUT", "/api/v1/model/measures/Age", {{"measure", {{"type", "polynomial"}, {"degree", -1}}}}, 422);
  ASSERT_FALSE(j["violations"].empty());
  EXPECT_EQ(j["violations"][0]["attribute"], "Age");
  EXPECT_EQ(j["violations"][0]["rule"], "invalid-parameter");
  EXPECT_EQ(get("/api/v1/model")["version"], 1);
  EXPECT_EQ(get("/api/v1/model")["measures"]["Age"]["degree"], 1.0);
}

TEST_F(ServiceTest, MeasureEditCommitsNextVersion) {
  upload_pima();
  auto j = send("PUT", "/api/v1/model/measures/Age",
                {{"measure", {{"type", "polynomial"}, {"degree", 3}}}, {"baseVersion", 1}}, 200);
  EXPECT_EQ(j["version"], 2);
  EXPECT_EQ(get("/api/v1/model")["measures"]["Age"]["degree"], 3.0);
  auto log = get("/api/v1/model/log");
  ASSERT_EQ(log["entries"].size(), 2u);
  EXPECT_EQ(log["entries"][1]["version"], 2);
}

TEST_F(ServiceTest, StaleVersionConflicts) {
  upload_pima();
  send("PUT", "/api/v1/model/weights", {{"weights", {{"Glucose", 3}}}, {"baseVersion", 1}}, 200);
  auto j = send("PUT", "/api/v1/model/weights", {{"weights", {{"Age", 3}}}, {"baseVersion", 1}}, 409);
  EXPECT_EQ(j["citedVersion"], 1);
  EXPECT_EQ(j["currentVersion"], 2);
  auto stale = get("/api/v1/model");
  stale["version"] = 1;
  send("PUT", "/api/v1/model", stale, 409);
  stale["version"] = 2;
  EXPECT_EQ(send("PUT", "/api/v1/model", stale, 200)["version"], 3);
}

TEST_F(ServiceTest, WeightsMergeIntoModel) {
  upload_pima();
  auto j = send("PUT", "/api/v1/model/weights", {{"Glucose", 4}}, 200);
  EXPECT_EQ(j["amalgamation"]["weights"]["Glucose"], 4.0);
  EXPECT_EQ(j["amalgamation"]["weights"]["Age"], 1.0);
  send("PUT", "/api/v1/model/weights", {{"Glucose", -4}}, 422);
  send("PUT", "/api/v1/model/weights", {{"Outcome", 1}}, 422);
}

TEST_F(ServiceTest, RetrievalCarriesCurrentModelVersion) {
  upload_pima();
  send("PUT", "/api/v1/model/measures/Age", {{"type", "polynomial"}, {"degree", 2}}, 200);
  auto res = http().Post("/api/v1/retrieval", Json{{"casebase", "pima"}, {"query", query()}, {"k", 5}}.dump(),
                         "application/json");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  auto result = Json::parse(res->body);
  auto model = get("/api/v1/model");
  EXPECT_EQ(result["modelVersion"], model["version"]);
  EXPECT_EQ(res->get_header_value("X-Model-Version"), std::to_string(model["version"].get<int>()));
  ASSERT_EQ(result["entries"].size(), 5u);
  for (const auto& e : result["entries"]) {
    double sum = 0;
    for (const auto& row : e["explanation"]["rows"]) sum += row["contribution"].get<double>();
    EXPECT_NEAR(sum, e["score"].get<double>(), 1e-9);
  }
}

TEST_F(ServiceTest, DecompositionChartsFollowLastRetrieval) {
  upload_pima();
  get("/api/v1/charts/decomposition", 404);
  send("POST", "/api/v1/retrieval", {{"casebase", "pima"}, {"query", query()}, {"k", 10}}, 200);
  auto charts = get("/api/v1/charts/decomposition?top=3");
  EXPECT_EQ(charts["document"], "decomposition-chart-set");
  ASSERT_EQ(charts["rows"].size(), 3u);
  EXPECT_EQ(charts["rows"][0]["rank"], 1);
  EXPECT_EQ(charts["rows"][0]["panels"].size(), 3u);
  auto text = http().Get("/api/v1/charts/decomposition?top=2&format=text");
  ASSERT_TRUE(text);
  EXPECT_EQ(text->status, 200);
  EXPECT_NE(text->body.find("#2"), std::string::npos);
  get("/api/v1/charts/decomposition?format=png", 422);
  get("/api/v1/charts/decomposition?top=11", 422);
}

TEST_F(ServiceTest, SummaryAndPreview) {
  upload_pima();
  auto s = get("/api/v1/casebases/pima/summary/Age?bins=12&groupBySolution=true");
  EXPECT_EQ(s["document"], "distribution-summary");
  EXPECT_EQ(s["bins"].size(), 12u);
  EXPECT_EQ(s["groups"].size(), 2u);
  auto p = get("/api/v1/measures/Age/preview?samples=5");
  EXPECT_EQ(p["points"].size(), 5u);
  EXPECT_EQ(p["reference"], 51.0);
  get("/api/v1/measures/Age/preview?samples=1", 422);
  get("/api/v1/measures/Outcome/preview", 404);
}

TEST_F(ServiceTest, Evaluation) {
  upload_pima();
  auto r = send("POST", "/api/v1/evaluation", {{"casebase", "pima"}, {"k", 5}, {"folds", 10}, {"seed", 42}}, 200);
  EXPECT_EQ(r["perFold"].size(), 10u);
  EXPECT_GT(r["meanAccuracy"].get<double>(), 0.5);
  send("POST", "/api/v1/evaluation", {{"casebase", "pima"}, {"folds", 1}}, 422);
}

TEST_F(ServiceTest, UnknownResourcesAndBadRequests) {
  get("/api/v1/casebases/nope", 404);
  upload_pima();
  get("/api/v1/casebases/nope/summary/Age", 404);
  get("/api/v1/casebases/pima/summary/Nope", 404);
  send("PUT", "/api/v1/model/measures/Nope", {{"type", "polynomial"}, {"degree", 2}}, 404);
  send("POST", "/api/v1/retrieval", {{"casebase", "nope"}, {"query", query()}}, 404);
  send("POST", "/api/v1/retrieval", {{"query", query()}}, 422);
  send("POST", "/api/v1/retrieval", {{"casebase", "pima"}, {"query", {{"values", {{"Weight", 1}}}}}}, 422);
  auto res = http().Post("/api/v1/retrieval", "{oops", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  auto bad = http().Post("/api/v1/casebases?name=bad", "a,b\n1,x\n", "text/csv");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 422);
  auto misfit = http().Post("/api/v1/casebases?name=other", "a,b\n1,2\n", "text/csv");
  ASSERT_TRUE(misfit);
  EXPECT_EQ(misfit->status, 422);
}

TEST_F(ServiceTest, StatePersistsAcrossRestart) {
  upload_pima();
  send("PUT", "/api/v1/model/weights", {{"Glucose", 2.5}}, 200);
  server_.reset();
  server_ = std::make_unique<Running>(dir_);
  auto model = get("/api/v1/model");
  EXPECT_EQ(model["version"], 2);
  EXPECT_EQ(model["amalgamation"]["weights"]["Glucose"], 2.5);
  EXPECT_EQ(get("/api/v1/casebases")["casebases"].size(), 1u);
  EXPECT_EQ(get("/api/v1/model/log")["entries"].size(), 2u);
}

TEST_F(ServiceTest, ConcurrentReadsSeeCommittedSnapshots) {
  upload_pima();
  std::atomic<bool> done{false};
  std::atomic<int> failures{0};
  std::thread writer([&] {
    httplib::Client c("127.0.0.1", http().port());
    for (int i = 0; i < 10; ++i) {
      auto body = Json{{"Glucose", 1 + i}, {"Age", 10 - i}}.dump();
      auto res = c.Put("/api/v1/model/weights", body, "application/json");
      if (!res || res->status != 200) ++failures;
    }
    done = true;
  });
  int reads = 0;
  while (!done || reads < 3) {
    auto res = http().Post("/api/v1/retrieval", Json{{"casebase", "pima"}, {"query", query()}, {"k", 3}}.dump(),
                           "application/json");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    auto result = Json::parse(res->body);
    EXPECT_EQ(res->get_header_value("X-Model-Version"), std::to_string(result["modelVersion"].get<int>()));
    for (const auto& e : result["entries"]) {
      double sum = 0, wsum = 0;
      for (const auto& row : e["explanation"]["rows"]) {
        sum += row["contribution"].get<double>();
        wsum += row["weightNormalized"].get<double>();
      }
      EXPECT_NEAR(sum, e["score"].get<double>(), 1e-9);
      EXPECT_NEAR(wsum, 1.0, 1e-12);
    }
    ++reads;
  }
  writer.join();
  EXPECT_EQ(failures, 0);
  EXPECT_EQ(get("/api/v1/model")["version"], 11);
}

TEST(ServiceStartup, InvalidStoredModelIsRejected) {
  auto dir = std::filesystem::temp_directory_path() / "cbrx-service-invalid";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "model.json") << R"({
    "document": "similarity-model", "version": 4,
    "schema": [{"name": "x", "kind": "numeric", "role": "problem", "range": {"min": 0, "max": 1}}],
    "measures": {},
    "amalgamation": {"mode": "weighted_sum", "weights": {"x": 1}}})";
  try {
    service::Project project(dir);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    ASSERT_FALSE(e.violations().empty());
    EXPECT_EQ(e.violations()[0].rule, "missing-measure");
  }
  std::filesystem::remove_all(dir);
}

TEST(ServiceStartup, PortInUseIsAnError) {
  auto dir = std::filesystem::temp_directory_path() / "cbrx-service-port";
  std::filesystem::remove_all(dir);
  service::Project project(dir);
  service::Server first(project);
  const int port = first.bind("127.0.0.1", 0);
  service::Server second(project);
  EXPECT_THROW(second.bind("127.0.0.1", port), Error);
  std::filesystem::remove_all(dir);
}

TEST(ServiceStartup, BindAddressParsing) {
  EXPECT_EQ(service::parse_bind_address("0.0.0.0:9000"), (std::pair<std::string, int>{"0.0.0.0", 9000}));
  EXPECT_EQ(service::parse_bind_address(":7000"), (std::pair<std::string, int>{"127.0.0.1", 7000}));
  EXPECT_THROW(service::parse_bind_address("host:notaport"), ValidationError);
}

}  // namespace
}  // namespace cbrx
