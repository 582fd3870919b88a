// postpick: command-line driver for the post-picking pipeline.

#include <csignal>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "postpick/classifier.hpp"
#include "postpick/metrics.hpp"
#include "postpick/pipeline.hpp"
#include "postpick/service.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

void print_validation(const postpick::Ensemble& e) {
  const auto& v = e.validation();
  std::printf("members: %zu\nvalidation: tp=%zu fp=%zu tn=%zu fn=%zu sensitivity=%s specificity=%s accuracy=%s\n",
              e.k(), v.cm.tp, v.cm.fp, v.cm.tn, v.cm.fn, postpick::format_ratio(v.sensitivity).c_str(),
              postpick::format_ratio(v.specificity).c_str(), postpick::format_ratio(v.accuracy).c_str());
}

void print_report(const postpick::EvaluationReport& r) {
  const auto& m = r.metrics;
  std::printf("tp=%zu fp=%zu tn=%zu fn=%zu\nsensitivity=%s specificity=%s ppv=%s npv=%s accuracy=%s\n", r.cm.tp,
              r.cm.fp, r.cm.tn, r.cm.fn, postpick::format_ratio(m.sensitivity).c_str(),
              postpick::format_ratio(m.specificity).c_str(), postpick::format_ratio(m.ppv).c_str(),
              postpick::format_ratio(m.npv).c_str(), postpick::format_ratio(m.accuracy).c_str());
}

postpick::Service* g_service = nullptr;

extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle vs. non-particle classification of windowed cryo-EM images"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  fs::path config, out, manifest, features, model, pred, truth, root;
  std::size_t k = 21;
  std::uint64_t seed = 0;
  std::optional<fs::path> eval_features;
  int port = 8080;
  std::string host = "127.0.0.1";

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic labeled dataset");
  simulate->add_option("--config", config, "Simulation config JSON")->required();
  simulate->add_option("--out", out, "Output directory")->required();

  auto* feat = app.add_subcommand("features", "Extract the feature matrix of a manifest");
  feat->add_option("--manifest", manifest, "Dataset manifest (JSON Lines)")->required();
  feat->add_option("--out", out, "Feature CSV")->required();

  auto* train = app.add_subcommand("train", "Train a decision-tree ensemble");
  train->add_option("--features", features, "Feature CSV")->required();
  train->add_option("--k", k, "Ensemble size (odd)")->capture_default_str();
  train->add_option("--seed", seed, "Random seed")->capture_default_str();
  train->add_option("--out", out, "Model JSON")->required();

  auto* classify = app.add_subcommand("classify", "Classify every image of a manifest");
  classify->add_option("--model", model, "Model JSON")->required();
  classify->add_option("--manifest", manifest, "Dataset manifest")->required();
  classify->add_option("--out", out, "Predictions (JSON Lines)")->required();

  auto* eval = app.add_subcommand("eval", "Score predictions against known labels");
  eval->add_option("--pred", pred, "Predictions (JSON Lines)")->required();
  eval->add_option("--truth", truth, "Manifest with true labels")->required();
  eval->add_option("--out", out, "Report JSON")->required();
  eval->add_option("--features", eval_features, "Feature CSV for per-feature AUC");

  auto* serve = app.add_subcommand("serve", "Run the curation HTTP service");
  serve->add_option("--root", root, "Dataset directory")->required();
  serve->add_option("--port", port, "TCP port (0 = any free port)")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*simulate) {
      for (const auto& m : postpick::run_simulate(config, out, threads)) std::printf("%s\n", m.c_str());
    } else if (*feat) {
      postpick::run_features(manifest, out, threads);
    } else if (*train) {
      if (k == 0 || k % 2 == 0) {
        std::fprintf(stderr, "error: --k must be a positive odd number\n");
        return kUsageError;
      }
      print_validation(postpick::run_train(features, k, seed, out, threads));
    } else if (*classify) {
      postpick::run_classify(model, manifest, out, threads);
    } else if (*eval) {
      print_report(postpick::run_eval(pred, truth, out, eval_features));
    } else if (*serve) {
      postpick::ServiceOptions opts;
      opts.host = host;
      opts.port = port;
      opts.threads = threads;
      postpick::Service service(root, opts);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::fprintf(stderr, "serving %s on %s:%d\n", root.c_str(), host.c_str(), port);
      service.run();
      g_service = nullptr;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
  return 0;
}
