#include "frugal/service.hpp"

#include "frugal/png.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <random>
#include <regex>

namespace frugal {

std::filesystem::path resolve_state_dir(const std::filesystem::path& requested) {
  if (const char* env = std::getenv(kStateDirEnv); env != nullptr && *env != '\0') return env;
  return requested;
}

int http_status(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Phase:
    case ErrorKind::Conflict: return 409;
    case ErrorKind::SingularMatrix:
    case ErrorKind::TrainingDiverged:
    case ErrorKind::UndefinedMetric:
    case ErrorKind::Io: return 500;
    default: return 400;
  }
}

// ---------------------------------------------------------------------------
// Datasets

SynthConfig synth_config_from_json(const Json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::InvalidConfig, "synth config must be an object");
  SynthConfig c;
  try {
    c.n = doc.value("n", c.n);
    c.n_pos = doc.value("n_pos", c.n_pos);
    c.dim = doc.value("dim", c.dim);
    c.noise = doc.value("noise", c.noise);
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("patches") && !doc.at("patches").is_null()) {
      const Json& p = doc.at("patches");
      c.patches = PatchGeometry{p.at("width").get<std::uint16_t>(), p.at("height").get<std::uint16_t>(),
                                p.at("channels").get<std::uint16_t>()};
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("synth config: ") + e.what());
  }
  return c;
}

Json to_json(const SynthConfig& c) {
  Json doc = {{"n", c.n}, {"n_pos", c.n_pos}, {"dim", c.dim}, {"noise", c.noise}, {"seed", c.seed}};
  if (c.patches) {
    doc["patches"] = {{"width", c.patches->width},
                      {"height", c.patches->height},
                      {"channels", c.patches->channels}};
  }
  return doc;
}

DatasetRegistry::Handle DatasetRegistry::load_file(const std::filesystem::path& path) {
  Dataset ds = load_dataset(path);
  std::filesystem::path sidecar = path;
  sidecar += ".split";
  if (std::filesystem::exists(sidecar)) ds = load_split(sidecar, ds);
  auto handle = std::make_shared<const Dataset>(std::move(ds));
  add(path.stem().string(), handle);
  return handle;
}

void DatasetRegistry::add(const std::string& name, Handle dataset) {
  std::lock_guard lock(mutex_);
  named_[name] = std::move(dataset);
}

DatasetRegistry::Handle DatasetRegistry::get(const std::string& name) const {
  std::lock_guard lock(mutex_);
  const auto it = named_.find(name);
  if (it == named_.end()) throw Error(ErrorKind::InvalidConfig, "unknown dataset '" + name + "'");
  return it->second;
}

DatasetRegistry::Handle DatasetRegistry::synth(const SynthConfig& config) {
  const std::string key = to_json(config).dump();
  {
    std::lock_guard lock(mutex_);
    if (const auto it = synthetic_.find(key); it != synthetic_.end()) return it->second;
  }
  auto handle = std::make_shared<const Dataset>(synth_generate(config));
  std::lock_guard lock(mutex_);
  return synthetic_.emplace(key, std::move(handle)).first->second;
}

std::vector<std::string> DatasetRegistry::names() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, _] : named_) out.push_back(name);
  return out;
}

// ---------------------------------------------------------------------------
// Sessions

struct SessionService::Snapshot {
  Json dataset_ref;
  DatasetRegistry::Handle dataset;
  SessionState state;
  std::string created;
  std::string updated;
};

struct SessionService::Entry {
  std::mutex write;
  mutable std::mutex read;
  std::shared_ptr<const Snapshot> current;

  std::shared_ptr<const Snapshot> get() const {
    std::lock_guard lock(read);
    return current;
  }
  void publish(std::shared_ptr<const Snapshot> next) {
    std::lock_guard lock(read);
    current = std::move(next);
  }
};

namespace {

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

DatasetRegistry::Handle resolve_dataset(DatasetRegistry& datasets, const Json& ref) {
  if (ref.is_object() && ref.contains("synth")) return datasets.synth(synth_config_from_json(ref.at("synth")));
  if (ref.is_object() && ref.contains("name") && ref.at("name").is_string()) {
    return datasets.get(ref.at("name").get<std::string>());
  }
  throw Error(ErrorKind::InvalidConfig, "dataset must be a name or {\"synth\": {...}}");
}

Json dataset_ref_from_request(const DatasetRegistry& datasets, const Json& request) {
  if (!request.contains("dataset") || request.at("dataset").is_null()) {
    const auto names = datasets.names();
    if (names.size() != 1) {
      throw Error(ErrorKind::InvalidConfig, "request must name a dataset (" +
                                                std::to_string(names.size()) + " loaded)");
    }
    return {{"name", names.front()}};
  }
  const Json& d = request.at("dataset");
  if (d.is_string()) return {{"name", d.get<std::string>()}};
  if (d.is_object() && d.contains("synth")) return {{"synth", to_json(synth_config_from_json(d.at("synth")))}};
  if (d.is_object() && d.contains("name")) return {{"name", d.at("name")}};
  throw Error(ErrorKind::InvalidConfig, "dataset must be a name or {\"synth\": {...}}");
}

Json metric_records(const MetricsHistory& metrics) { return to_json(metrics); }

}  // namespace

SessionService::SessionService(DatasetRegistry& datasets, std::filesystem::path state_dir)
    : datasets_(datasets), state_dir_(std::move(state_dir)) {
  std::random_device rd;
  id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^
             static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());

  std::error_code ec;
  std::filesystem::create_directories(state_dir_, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create state dir " + state_dir_.string() + ": " + ec.message());

  for (const auto& file : std::filesystem::directory_iterator(state_dir_)) {
    if (file.path().extension() != ".json") continue;
    try {
      const Json doc = Json::parse(read_file(file.path()));
      auto snap = std::make_shared<Snapshot>();
      snap->dataset_ref = doc.at("dataset");
      snap->dataset = resolve_dataset(datasets_, snap->dataset_ref);
      snap->state = state_from_json(doc.at("state"));
      snap->created = doc.value("created", "");
      snap->updated = doc.value("updated", "");
      auto e = std::make_shared<Entry>();
      e->current = std::move(snap);
      sessions_.emplace(doc.at("id").get<std::string>(), std::move(e));
    } catch (const std::exception& err) {
      std::clog << "frugalcd: skipping " << file.path() << ": " << err.what() << '\n';
    }
  }
}

SessionService::~SessionService() = default;

std::string SessionService::new_id() {
  std::lock_guard lock(id_mutex_);
  RngStream rng(id_salt_, id_counter_++);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng.next_u64()));
  return buf;
}

std::shared_ptr<SessionService::Entry> SessionService::entry(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorKind::NotFound, "no session '" + id + "'");
  return it->second;
}

std::shared_ptr<const SessionService::Snapshot> SessionService::snapshot(const std::string& id) const {
  return entry(id)->get();
}

void SessionService::persist(const std::string& id, const Snapshot& snap) const {
  const Json doc = {{"id", id},
                    {"dataset", snap.dataset_ref},
                    {"created", snap.created},
                    {"updated", snap.updated},
                    {"state", to_json(snap.state)}};
  write_file_atomic(state_dir_ / (id + ".json"), doc.dump());
}

std::vector<std::string> SessionService::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

Json SessionService::create(const Json& request) {
  if (!request.is_object()) throw Error(ErrorKind::InvalidConfig, "request must be a JSON object");
  auto snap = std::make_shared<Snapshot>();
  snap->dataset_ref = dataset_ref_from_request(datasets_, request);
  snap->dataset = resolve_dataset(datasets_, snap->dataset_ref);

  SessionConfig defaults;
  defaults.shape.dim = snap->dataset->dim();
  snap->state = init_session(*snap->dataset, config_from_json(request.value("config", Json()), defaults));
  snap->created = snap->updated = now_utc();

  const std::string id = new_id();
  persist(id, *snap);
  auto e = std::make_shared<Entry>();
  e->current = snap;
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(id, e);
  }
  Json out = info(id);
  out["display"] = display_payload(id, *snap);
  return out;
}

Json SessionService::info(const std::string& id) const {
  const auto snap = snapshot(id);
  const SessionState& s = snap->state;
  std::size_t labeled = 0;
  for (const auto& a : s.answers) labeled += a.size();
  return {{"id", id},
          {"dataset", snap->dataset_ref},
          {"config", to_json(s.config)},
          {"phase", to_string(s.phase)},
          {"iteration", s.displays.size()},
          {"labeled", labeled},
          {"sampling_rate", sampling_rate(labeled, s.dataset_size)},
          {"created", snap->created},
          {"updated", snap->updated}};
}

Json SessionService::display_payload(const std::string& id, const Snapshot& snap) const {
  const SessionState& s = snap.state;
  const Dataset& ds = *snap.dataset;
  Json items = Json::array();
  for (SampleId sid : s.current_display()) {
    const Sample& sample = ds.at(sid);
    Json item = {{"id", sid}, {"probability", classify(s.net, sample.features)}, {"features", sample.features}};
    if (sample.patches) {
      const std::string base = "/api/sessions/" + id + "/samples/" + std::to_string(sid) + "/patch?which=";
      item["patches"] = {{"before", base + "before"}, {"after", base + "after"}};
    } else {
      item["patches"] = nullptr;
    }
    items.push_back(std::move(item));
  }
  return {{"iteration", s.displays.size()}, {"sampling_rate", sampling_rate(s)}, {"items", items}};
}

Json SessionService::display(const std::string& id) const {
  const auto snap = snapshot(id);
  if (snap->state.phase != Phase::AwaitingLabels) {
    throw Error(ErrorKind::Phase, "session is " + std::string(to_string(snap->state.phase)));
  }
  return display_payload(id, *snap);
}

Json SessionService::submit(const std::string& id, const Json& body) {
  const auto e = entry(id);
  std::unique_lock write(e->write, std::try_to_lock);
  if (!write.owns_lock()) throw Error(ErrorKind::Conflict, "another submit is in progress for this session");

  const auto current = e->get();
  if (current->state.phase != Phase::AwaitingLabels) {
    throw Error(ErrorKind::Phase, "session is " + std::string(to_string(current->state.phase)));
  }
  if (!body.is_object() || !body.contains("labels") || !body.at("labels").is_array()) {
    throw Error(ErrorKind::LabelMismatch, "body must carry a \"labels\" array");
  }
  Answers answers;
  for (const auto& item : body.at("labels")) {
    if (!item.is_object() || !item.contains("id") || !item.contains("label") ||
        !item.at("id").is_number_unsigned() || !item.at("label").is_number_integer()) {
      throw Error(ErrorKind::LabelMismatch, "each label needs an integer id and label");
    }
    answers.emplace_back(item.at("id").get<SampleId>(), label_from_int(item.at("label").get<int>()));
  }

  auto next = std::make_shared<Snapshot>(*current);
  next->state = submit_labels(*next->dataset, current->state, answers);
  next->updated = now_utc();
  persist(id, *next);
  e->publish(next);

  Json out = info(id);
  out["metrics"] = metric_records(next->state.metrics);
  if (next->state.phase == Phase::AwaitingLabels) out["display"] = display_payload(id, *next);
  return out;
}

Json SessionService::metrics(const std::string& id) const {
  const auto snap = snapshot(id);
  const MetricsHistory& m = snap->state.metrics;
  Json out = {{"records", metric_records(m)}, {"auc", nullptr}, {"final_eer", nullptr}};
  try {
    out["auc"] = m.auc();
  } catch (const Error&) {
    // Fewer than two evaluated iterations.
  }
  if (const auto last = m.final_eer()) out["final_eer"] = *last;
  return out;
}

std::vector<std::uint8_t> SessionService::patch_png(const std::string& id, SampleId sample,
                                                    std::string_view which) const {
  const auto snap = snapshot(id);
  if (which != "before" && which != "after") {
    throw Error(ErrorKind::InvalidArgument, "which must be 'before' or 'after'");
  }
  const Dataset& ds = *snap->dataset;
  if (!ds.geometry()) throw Error(ErrorKind::NotFound, "dataset carries no patches");
  const Sample* s = ds.find(sample);
  if (s == nullptr || !s->patches) {
    throw Error(ErrorKind::NotFound, "no patches for sample " + std::to_string(sample));
  }
  const PatchGeometry& g = *ds.geometry();
  return encode_png(Image{g.width, g.height, g.channels, which == "before" ? s->patches->before : s->patches->after});
}

// ---------------------------------------------------------------------------
// HTTP

struct HttpServer::Impl {
  SessionService& service;
  httplib::Server server;

  explicit Impl(SessionService& s) : service(s) {}
};

namespace {

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
  send_json(res, {{"error", kind}, {"message", message}}, status);
}

template <typename F>
auto guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.kind()), to_string(e.kind()), e.what());
    } catch (const Json::exception& e) {
      send_error(res, 400, "parse", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  return Json::parse(req.body);
}

SampleId parse_sample_id(const std::string& text) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used == text.size() && v <= 0xFFFFFFFFull) return static_cast<SampleId>(v);
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::NotFound, "no sample '" + text + "'");
}

}  // namespace

HttpServer::HttpServer(SessionService& service, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  SessionService& svc = service;

  srv.Post("/api/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             send_json(res, svc.create(parse_body(req)), 201);
           }));
  srv.Get("/api/sessions", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            send_json(res, {{"sessions", svc.session_ids()}});
          }));
  srv.Get(R"(/api/sessions/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, svc.info(req.matches[1]));
          }));
  srv.Get(R"(/api/sessions/([^/]+)/display)",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, svc.display(req.matches[1]));
          }));
  srv.Post(R"(/api/sessions/([^/]+)/labels)",
           guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             send_json(res, svc.submit(req.matches[1], parse_body(req)));
           }));
  srv.Get(R"(/api/sessions/([^/]+)/metrics)",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, svc.metrics(req.matches[1]));
          }));
  srv.Get(R"(/api/sessions/([^/]+)/samples/([^/]+)/patch)",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const std::string which = req.has_param("which") ? req.get_param_value("which") : "";
            const auto png = svc.patch_png(req.matches[1], parse_sample_id(req.matches[2]), which);
            res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
          }));

  if (static_dir) srv.set_mount_point("/", static_dir->string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorKind::Io, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() {
  if (!impl_->server.listen_after_bind()) throw Error(ErrorKind::Io, "server stopped with an error");
}

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace frugal
