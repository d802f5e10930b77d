#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>

namespace construe {

struct ServiceConfig {
  std::map<std::string, std::filesystem::path> packs;  // language -> pack directory
  std::filesystem::path data_dir;                      // empty: nothing is persisted
  std::size_t default_density = 3;
};

struct ApiRequest {
  std::string method;
  std::string path;  // e.g. "/api/v1/stories/s1/preview"
  std::map<std::string, std::string> query;
  std::string token;  // bearer token, may be empty
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

/// Stories, practice sessions, placement, progress and groups over the
/// versioned JSON API. Every mutation is appended to data_dir/events.ndjson
/// and replayed on construction. Requests are serialized.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ApiResponse handle(const ApiRequest& request);

  /// Blocks serving HTTP until stop(). `on_ready` receives the bound port
  /// (useful with port 0). Returns false when binding fails.
  bool serve(const std::string& host, int port, const std::function<void(int)>& on_ready = {});
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace construe
