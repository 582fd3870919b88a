#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

namespace postpick {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  int port = 8080;
  std::size_t threads = 0;
  /// Fewest labeled samples accepted by POST /train.
  std::size_t min_training_samples = 50;
};

/// Curation service over a dataset directory.
///
///   GET  /samples?state=all|unlabeled|labeled|predicted&offset&limit
///   GET  /samples/{id}
///   GET  /image/{id}                  PNG, min-max stretched
///   POST /labels {id, label}
///   POST /train {k, seed}             -> {job_id}; 409 while a job runs
///   GET  /train/{job_id}              -> {state, validation, error}
///   POST /classify                    regenerates predictions
///   GET  /predictions?sort=margin_asc|margin_desc|id&label&offset&limit
///   GET  /metrics                     latest evaluation report
///
/// Errors are JSON {"error": message} with a 4xx or 5xx status.
class Service {
 public:
  Service(std::filesystem::path root, ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves on a background thread. Throws std::runtime_error
  /// when the port cannot be bound.
  void start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();
  /// The bound port, valid after start().
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace postpick
