#include "postpick/service.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "postpick/classifier.hpp"
#include "postpick/error.hpp"
#include "postpick/features.hpp"
#include "postpick/image_io.hpp"
#include "postpick/label_store.hpp"
#include "postpick/parallel.hpp"
#include "postpick/pipeline.hpp"

namespace postpick {

namespace {

using json = nlohmann::ordered_json;

constexpr std::size_t kDefaultLimit = 100;
constexpr std::size_t kMaxLimit = 10000;
constexpr const char* kModelName = "model.json";
constexpr const char* kMetricsName = "metrics.json";

/// Rejected request; `status` goes on the wire.
struct HttpError : std::runtime_error {
  HttpError(int status, const std::string& message) : std::runtime_error(message), status(status) {}
  int status;
};

json ratio_json(const Ratio& r) { return r ? json(*r) : json(nullptr); }

json prediction_json(const Prediction& p) {
  return {{"predicted", to_string(p.predicted)}, {"margin", p.margin}, {"votes_particle", p.votes_particle}};
}

json record_json(const SampleRecord& r) {
  json j;
  j["id"] = r.id;
  j["path"] = r.path;
  j["label"] = to_string(r.label);
  j["source"] = to_string(r.source);
  j["timestamp"] = r.timestamp;
  j["prediction"] = r.prediction ? prediction_json(*r.prediction) : json(nullptr);
  return j;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

std::size_t parse_index(const std::string& text, const char* what) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || text.empty()) throw HttpError(400, std::string("invalid ") + what);
  return v;
}

std::size_t query_index(const httplib::Request& req, const char* key, std::size_t fallback) {
  return req.has_param(key) ? parse_index(req.get_param_value(key), key) : fallback;
}

std::size_t query_limit(const httplib::Request& req) {
  return std::min(query_index(req, "limit", kDefaultLimit), kMaxLimit);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw HttpError(400, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw HttpError(400, std::string("malformed JSON: ") + e.what());
  }
}

struct Job {
  std::string state = "running";
  std::optional<ValidationReport> validation;
  std::string error;
};

}  // namespace

struct Service::Impl {
  Impl(std::filesystem::path root, ServiceOptions opts) : options(std::move(opts)), store(std::move(root)) {
    const auto model_path = store.root() / kModelName;
    if (std::filesystem::exists(model_path)) model = std::make_shared<const Ensemble>(load_ensemble(model_path));
    const auto metrics_path = store.root() / kMetricsName;
    if (std::filesystem::exists(metrics_path)) metrics = read_text_file(metrics_path);
    routes();
  }

  ~Impl() {
    server.stop();
    if (worker.joinable()) worker.join();
  }

  ServiceOptions options;
  LabelStore store;
  httplib::Server server;
  int bound_port = -1;

  std::mutex cache_mutex;
  std::unordered_map<std::size_t, FeatureVector> cache;

  std::mutex model_mutex;
  std::shared_ptr<const Ensemble> model;
  std::optional<std::string> metrics;

  std::mutex job_mutex;
  std::map<std::size_t, Job> jobs;
  std::size_t next_job = 1;
  bool busy = false;
  std::thread worker;

  /// Features of the given samples, computing and caching missing ones.
  std::vector<FeatureVector> features(const std::vector<std::size_t>& ids) {
    std::vector<std::size_t> missing;
    {
      std::lock_guard lock(cache_mutex);
      for (auto id : ids) {
        if (!cache.contains(id)) missing.push_back(id);
      }
    }
    std::vector<FeatureVector> computed(missing.size());
    parallel_for(
        missing.size(), [&](std::size_t i) { computed[i] = extract_features(load_image(store.locator(missing[i]))); },
        options.threads);
    std::lock_guard lock(cache_mutex);
    for (std::size_t i = 0; i < missing.size(); ++i) cache.emplace(missing[i], computed[i]);
    std::vector<FeatureVector> out;
    out.reserve(ids.size());
    for (auto id : ids) out.push_back(cache.at(id));
    return out;
  }

  std::shared_ptr<const Ensemble> current_model() {
    std::lock_guard lock(model_mutex);
    return model;
  }

  void train_job(std::size_t job_id, std::vector<std::pair<std::size_t, Label>> labeled, EnsembleOptions opts) {
    Job result;
    try {
      std::vector<std::size_t> ids;
      for (const auto& [id, label] : labeled) ids.push_back(id);
      const auto fvs = features(ids);
      Dataset data;
      for (std::size_t i = 0; i < fvs.size(); ++i) data.add(fvs[i], labeled[i].second);
      auto built = build_ensemble(data, opts);
      save_ensemble(store.root() / kModelName, built.ensemble);
      result.state = "succeeded";
      result.validation = built.ensemble.validation();
      std::lock_guard lock(model_mutex);
      model = std::make_shared<const Ensemble>(std::move(built.ensemble));
    } catch (const std::exception& e) {
      result.state = "failed";
      result.error = e.what();
    }
    std::lock_guard lock(job_mutex);
    jobs[job_id] = std::move(result);
    busy = false;
  }

  json start_training(const json& body) {
    EnsembleOptions opts;
    opts.threads = options.threads;
    for (const char* key : {"k", "seed"}) {
      if (body.contains(key) && !body.at(key).is_number_unsigned()) {
        throw HttpError(400, "k and seed must be non-negative integers");
      }
    }
    opts.k = body.value("k", std::size_t{21});
    opts.seed = body.value("seed", std::uint64_t{0});
    if (opts.k == 0 || opts.k % 2 == 0) throw HttpError(400, "k must be a positive odd number");
    auto labeled = store.labeled();
    if (labeled.size() < options.min_training_samples) {
      throw HttpError(422, "training needs at least " + std::to_string(options.min_training_samples) +
                               " labeled samples, have " + std::to_string(labeled.size()));
    }
    const auto particles = std::count_if(labeled.begin(), labeled.end(),
                                         [](const auto& p) { return p.second == Label::kParticle; });
    if (particles == 0 || static_cast<std::size_t>(particles) == labeled.size()) {
      throw HttpError(422, "training needs both particle and non_particle labels");
    }
    opts.min_samples = options.min_training_samples;

    std::lock_guard lock(job_mutex);
    if (busy) throw HttpError(409, "a training job is already running");
    busy = true;
    const std::size_t id = next_job++;
    jobs[id] = Job{};
    if (worker.joinable()) worker.join();
    worker = std::thread([this, id, labeled = std::move(labeled), opts] { train_job(id, labeled, opts); });
    return {{"job_id", std::to_string(id)}};
  }

  json job_status(std::size_t id) {
    std::lock_guard lock(job_mutex);
    const auto it = jobs.find(id);
    if (it == jobs.end()) throw HttpError(404, "unknown job " + std::to_string(id));
    const Job& job = it->second;
    json j;
    j["job_id"] = std::to_string(id);
    j["state"] = job.state;
    if (job.validation) {
      j["validation"] = {{"sensitivity", ratio_json(job.validation->sensitivity)},
                         {"specificity", ratio_json(job.validation->specificity)},
                         {"accuracy", ratio_json(job.validation->accuracy)}};
    } else {
      j["validation"] = nullptr;
    }
    j["error"] = job.error.empty() ? json(nullptr) : json(job.error);
    return j;
  }

  json classify() {
    const auto m = current_model();
    if (!m) throw HttpError(409, "no trained model; POST /train first");
    const std::size_t n = store.size();
    std::vector<std::size_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i;
    const auto fvs = features(ids);
    std::vector<FeatureRow> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = *store.get(i);
      rows[i] = {r.path, r.label, fvs[i]};
    }
    const auto preds = classify_rows(*m, rows);
    store.set_predictions(preds);

    DatasetManifest truth;
    for (const auto& r : rows) truth.add({r.path, r.label, Source::kHand});
    json out = {{"count", preds.size()}};
    const bool both = std::any_of(rows.begin(), rows.end(), [](auto& r) { return r.label == ManifestLabel::kParticle; }) &&
                      std::any_of(rows.begin(), rows.end(), [](auto& r) { return r.label == ManifestLabel::kNonParticle; });
    if (both) {
      const std::string report = report_to_json(evaluate(preds, truth, &rows));
      write_text_file(store.root() / kMetricsName, report);
      std::lock_guard lock(model_mutex);
      metrics = report;
    }
    return out;
  }

  json predictions(const httplib::Request& req) {
    auto recs = store.predicted();
    if (req.has_param("label")) {
      const std::string want = req.get_param_value("label");
      Label l;
      try {
        l = parse_label(want);
      } catch (const ArgumentError& e) {
        throw HttpError(400, e.what());
      }
      std::erase_if(recs, [&](const SampleRecord& r) { return r.prediction->predicted != l; });
    }
    const std::string sort = req.has_param("sort") ? req.get_param_value("sort") : "id";
    std::vector<std::size_t> margins(recs.size());
    std::vector<std::size_t> order(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      margins[i] = recs[i].prediction->margin;
      order[i] = i;
    }
    if (sort == "margin_asc") {
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return margins[a] < margins[b]; });
    } else if (sort == "margin_desc") {
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return margins[a] > margins[b]; });
    } else if (sort != "id") {
      throw HttpError(400, "sort must be margin_asc, margin_desc or id");
    }
    const std::size_t offset = query_index(req, "offset", 0);
    const std::size_t limit = query_limit(req);
    json items = json::array();
    for (std::size_t i = offset; i < order.size() && items.size() < limit; ++i) {
      const auto& r = recs[order[i]];
      json j = prediction_json(*r.prediction);
      j["id"] = r.id;
      j["path"] = r.path;
      j["label"] = to_string(r.label);
      j["source"] = to_string(r.source);
      items.push_back(std::move(j));
    }
    return {{"total", recs.size()}, {"offset", offset}, {"items", std::move(items)}};
  }

  template <typename F>
  httplib::Server::Handler guarded(F fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const HttpError& e) {
        send_json(res, {{"error", e.what()}}, e.status);
      } catch (const ArgumentError& e) {
        send_json(res, {{"error", e.what()}}, 400);
      } catch (const std::exception& e) {
        send_json(res, {{"error", e.what()}}, 500);
      }
    };
  }

  void routes() {
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });

    server.Get("/samples", guarded([this](const httplib::Request& req, httplib::Response& res) {
      SampleState state = SampleState::kAll;
      if (req.has_param("state")) state = parse_sample_state(req.get_param_value("state"));
      const std::size_t offset = query_index(req, "offset", 0);
      json items = json::array();
      for (const auto& r : store.list(state, offset, query_limit(req))) items.push_back(record_json(r));
      send_json(res, {{"total", store.count(state)}, {"offset", offset}, {"items", std::move(items)}});
    }));

    server.Get(R"(/samples/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto r = store.get(parse_index(req.matches[1], "id"));
      if (!r) throw HttpError(404, "unknown sample");
      send_json(res, record_json(*r));
    }));

    server.Get(R"(/image/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::size_t id = parse_index(req.matches[1], "id");
      if (!store.get(id)) throw HttpError(404, "unknown sample");
      const auto png = encode_png_display(load_image(store.locator(id)));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    }));

    server.Post("/labels", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      if (!body.contains("id") || !body.contains("label")) throw HttpError(400, "body needs id and label");
      std::size_t id = 0;
      Label label{};
      try {
        const json& raw = body.at("id");
        if (!raw.is_string() && !raw.is_number_unsigned()) throw HttpError(400, "id must be a non-negative integer");
        id = raw.is_string() ? parse_index(raw.get<std::string>(), "id") : raw.get<std::size_t>();
        label = parse_label(body.at("label").get<std::string>());
      } catch (const json::exception&) {
        throw HttpError(400, "id must be an integer and label a string");
      }
      if (!store.get(id)) throw HttpError(404, "unknown sample");
      send_json(res, record_json(store.set_label(id, label)));
    }));

    server.Post("/train", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, start_training(parse_body(req)), 202);
    }));

    server.Get(R"(/train/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, job_status(parse_index(req.matches[1], "job id")));
    }));

    server.Post("/classify", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, classify());
    }));

    server.Get("/predictions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, predictions(req));
    }));

    server.Get("/metrics", guarded([this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(model_mutex);
      if (!metrics) throw HttpError(404, "no evaluation report yet; POST /classify with labeled samples first");
      res.set_content(*metrics, "application/json");
    }));
  }

  void bind() {
    if (options.port == 0) {
      bound_port = server.bind_to_any_port(options.host);
    } else if (server.bind_to_port(options.host, options.port)) {
      bound_port = options.port;
    }
    if (bound_port < 0) {
      throw std::runtime_error("cannot bind " + options.host + ":" + std::to_string(options.port) +
                               " (port in use?)");
    }
  }

  std::thread listener;
};

Service::Service(std::filesystem::path root, ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(root), std::move(options))) {}

Service::~Service() { stop(); }

void Service::start() {
  impl_->bind();
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void Service::run() {
  impl_->bind();
  impl_->server.listen_after_bind();
}

void Service::stop() {
  impl_->server.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
}

int Service::port() const { return impl_->bound_port; }

}  // namespace postpick
