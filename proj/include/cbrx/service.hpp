#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cbrx/document.hpp"
#include "cbrx/model.hpp"
#include "cbrx/retrieval.hpp"

namespace httplib {
class Server;
}

namespace cbrx::service {

// A mutation cited a model version that is no longer current.
class VersionConflict : public Error {
 public:
  VersionConflict(std::uint64_t cited, std::uint64_t current)
      : Error("stale model version " + std::to_string(cited) + ", current is " + std::to_string(current)),
        cited_(cited),
        current_(current) {}

  std::uint64_t cited() const { return cited_; }
  std::uint64_t current() const { return current_; }

 private:
  std::uint64_t cited_;
  std::uint64_t current_;
};

struct EditLogEntry {
  std::uint64_t version = 0;
  std::string timestamp;  // UTC, ISO 8601
  std::string summary;
};

// Versioned project state backed by a directory:
//   model.json            the committed similarity model
//   casebases/<name>.json uploaded case bases
//   edit-log.json         append-only edit log
// Readers work on immutable snapshots; mutations go through one writer path
// that validates, persists and then publishes the new snapshot.
class Project {
 public:
  struct Snapshot {
    std::shared_ptr<const SimilarityModel> model;
    std::map<std::string, std::shared_ptr<const CaseBase>> casebases;
    std::shared_ptr<const RetrievalResult> last_result;
  };

  // Loads an existing project or starts an empty one. Throws ValidationError
  // with the violation list if a stored model is invalid.
  explicit Project(std::filesystem::path directory);

  Snapshot snapshot() const;
  std::vector<EditLogEntry> edit_log() const;
  const std::filesystem::path& directory() const { return directory_; }

  // Each mutation commits version + 1 or leaves the state untouched.
  // base_version, when given, must equal the current version.
  std::shared_ptr<const SimilarityModel> replace_model(SimilarityModel model, std::optional<std::uint64_t> base_version);
  std::shared_ptr<const SimilarityModel> put_measure(const std::string& attribute, LocalSimilarityMeasure measure,
                                                     std::optional<Range> range,
                                                     std::optional<std::uint64_t> base_version);
  std::shared_ptr<const SimilarityModel> put_weights(const std::map<std::string, double>& weights,
                                                     std::optional<std::uint64_t> base_version);

  // Stores a case base. On a project without a schema this also installs a
  // default model over the case base schema. Returns the model in effect.
  std::shared_ptr<const SimilarityModel> add_casebase(CaseBase base, double default_degree);

  void remember_result(std::shared_ptr<const RetrievalResult> result);

 private:
  std::shared_ptr<const SimilarityModel> commit(SimilarityModel next, const std::string& summary);
  void check_version(std::optional<std::uint64_t> base_version) const;

  std::filesystem::path directory_;
  mutable std::shared_mutex state_mutex_;
  std::mutex writer_mutex_;
  Snapshot state_;
  std::vector<EditLogEntry> log_;
};

// HTTP front end for a Project under /api/v1.
class Server {
 public:
  explicit Server(Project& project);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws Error when the
  // address cannot be bound.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void listen();
  void stop();

 private:
  void routes();

  Project& project_;
  std::unique_ptr<httplib::Server> http_;
};

// Splits "host:port" (host defaults to 127.0.0.1, port to 8080).
std::pair<std::string, int> parse_bind_address(const std::string& address);

// Runs the service until the process is stopped.
void serve(const std::filesystem::path& directory, const std::string& bind_address);

}  // namespace cbrx::service
