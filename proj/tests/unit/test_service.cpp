#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "frugal/png.hpp"
#include "frugal/service.hpp"

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace frugal;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("frugalcd-svc-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

Json synth_request(std::uint64_t seed, std::size_t iterations = 2, std::size_t epochs = 5) {
  return {{"dataset",
           {{"synth", {{"n", 200}, {"n_pos", 20}, {"patches", {{"width", 8}, {"height", 6}, {"channels", 3}}}}}}},
          {"config", {{"seed", seed}, {"iterations", iterations}, {"train", {{"epochs", epochs}}}}}};
}

Json truth_labels(const Dataset& ds, const Json& display, std::size_t drop = 0) {
  Json labels = Json::array();
  const auto& items = display.at("items");
  for (std::size_t i = 0; i + drop < items.size(); ++i) {
    const SampleId id = items[i].at("id").get<SampleId>();
    labels.push_back({{"id", id}, {"label", to_int(*ds.at(id).label)}});
  }
  return {{"labels", labels}};
}

struct Served {
  DatasetRegistry datasets;
  SessionService service;
  HttpServer server;
  int port;
  std::thread thread;

  explicit Served(const std::filesystem::path& dir)
      : service(datasets, dir), server(service), port(server.bind("127.0.0.1", 0)),
        thread([this] { server.listen(); }) {}
  ~Served() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(120, 0);
    return c;
  }
};

}  // namespace

TEST_CASE("error kinds map to HTTP statuses") {
  CHECK(http_status(ErrorKind::NotFound) == 404);
  CHECK(http_status(ErrorKind::Phase) == 409);
  CHECK(http_status(ErrorKind::Conflict) == 409);
  CHECK(http_status(ErrorKind::LabelMismatch) == 400);
  CHECK(http_status(ErrorKind::InsufficientPool) == 400);
  CHECK(http_status(ErrorKind::InvalidConfig) == 400);
}

TEST_CASE("state directory override") {
  ::unsetenv(kStateDirEnv);
  CHECK(resolve_state_dir("a") == "a");
  ::setenv(kStateDirEnv, "/tmp/elsewhere", 1);
  CHECK(resolve_state_dir("a") == "/tmp/elsewhere");
  ::unsetenv(kStateDirEnv);
}

TEST_CASE("session state survives a JSON round trip") {
  const Dataset ds = synth_generate({.n = 200, .n_pos = 20});
  SessionConfig c;
  c.iterations = 4;
  c.train.epochs = 10;
  SessionState s = init_session(ds, c);
  GroundTruthOracle oracle(ds);
  s = submit_labels(ds, std::move(s), pair_answers(s.current_display(), oracle.answer(s.current_display())));

  const Json doc = to_json(s);
  const SessionState back = state_from_json(Json::parse(doc.dump()));
  CHECK(to_json(back) == doc);
  for (std::size_t l = 0; l < s.net.depth(); ++l) CHECK(back.net.layer(l).weight == s.net.layer(l).weight);
  CHECK(back.rng == s.rng);

  const auto next = [&](SessionState st) {
    const Display d = st.current_display();
    return submit_labels(ds, std::move(st), pair_answers(d, oracle.answer(d)));
  };
  CHECK(next(s).metrics == next(back).metrics);
}

TEST_CASE("config JSON parsing") {
  const SessionConfig c = config_from_json(Json::parse(
      R"({"display_size": 8, "strategy": {"kind": "maxmin"}, "augment": {"kind": "binary-crisp", "space": "ambient"}})"));
  CHECK(c.display_size == 8);
  CHECK(c.strategy.kind == StrategyKind::Maxmin);
  CHECK(c.policy.kind == AugmentKind::BinaryCrisp);
  CHECK(c.policy.space == AugmentSpace::Ambient);
  CHECK(c.iterations == 10);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"strategy": "best"})")), Error);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"iterations": -1})")), Error);
}

TEST_CASE("PNG codec is lossless") {
  RngStream rng(1);
  for (std::uint32_t channels = 1; channels <= 4; ++channels) {
    Image img{7, 5, channels, {}};
    for (std::size_t i = 0; i < 7 * 5 * channels; ++i) img.pixels.push_back(static_cast<std::uint8_t>(rng.uniform_index(256)));
    const Image back = decode_png(encode_png(img));
    CHECK(back.width == 7);
    CHECK(back.height == 5);
    CHECK(back.channels == channels);
    CHECK(back.pixels == img.pixels);
  }
  CHECK_THROWS_AS(decode_png(std::vector<std::uint8_t>{1, 2, 3}), Error);
}

TEST_CASE("HTTP session lifecycle") {
  Served s(fresh_dir("life"));
  auto cli = s.client();

  auto created = cli.Post("/api/sessions", synth_request(7).dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const Json c = Json::parse(created->body);
  const std::string id = c.at("id");
  CHECK(c.at("display").at("items").size() == 16);

  auto disp = cli.Get("/api/sessions/" + id + "/display");
  REQUIRE(disp);
  CHECK(disp->status == 200);
  const Json d = Json::parse(disp->body);
  CHECK(d.at("iteration") == 1);
  CHECK(d.at("items").size() == 16);
  CHECK(d == c.at("display"));

  const Json again = Json::parse(cli.Post("/api/sessions", synth_request(7).dump(), "application/json")->body);
  const auto shown_ids = [](const Json& display) {
    std::vector<SampleId> ids;
    for (const auto& it : display.at("items")) ids.push_back(it.at("id"));
    return ids;
  };
  CHECK(shown_ids(again.at("display")) == shown_ids(c.at("display")));
  CHECK(again.at("id") != c.at("id"));

  const auto ds = s.datasets.synth(synth_config_from_json(synth_request(7).at("dataset").at("synth")));

  auto short_post = cli.Post("/api/sessions/" + id + "/labels", truth_labels(*ds, d, 1).dump(), "application/json");
  CHECK(short_post->status == 400);
  CHECK(Json::parse(short_post->body).at("error") == "label-mismatch");

  auto bad_label = truth_labels(*ds, d);
  bad_label["labels"][0]["label"] = 3;
  CHECK(cli.Post("/api/sessions/" + id + "/labels", bad_label.dump(), "application/json")->status == 400);
  CHECK(cli.Post("/api/sessions/" + id + "/labels", "{not json", "application/json")->status == 400);

  auto first = cli.Post("/api/sessions/" + id + "/labels", truth_labels(*ds, d).dump(), "application/json");
  REQUIRE(first);
  CHECK(first->status == 200);
  const Json progress = Json::parse(first->body);
  CHECK(progress.at("iteration") == 2);
  CHECK(progress.at("metrics").size() == 1);

  const Json d2 = Json::parse(cli.Get("/api/sessions/" + id + "/display")->body);
  std::set<SampleId> earlier;
  for (const auto& it : d.at("items")) earlier.insert(it.at("id").get<SampleId>());
  for (const auto& it : d2.at("items")) CHECK(!earlier.contains(it.at("id").get<SampleId>()));

  CHECK(cli.Post("/api/sessions/" + id + "/labels", truth_labels(*ds, d2).dump(), "application/json")->status == 200);
  const Json info = Json::parse(cli.Get("/api/sessions/" + id)->body);
  CHECK(info.at("phase") == "finished");
  CHECK(cli.Get("/api/sessions/" + id + "/display")->status == 409);
  CHECK(cli.Post("/api/sessions/" + id + "/labels", truth_labels(*ds, d2).dump(), "application/json")->status == 409);

  const Json metrics = Json::parse(cli.Get("/api/sessions/" + id + "/metrics")->body);
  CHECK(metrics.at("records").size() == 2);
  CHECK(metrics.at("auc").is_number());

  CHECK(cli.Get("/api/sessions/nope")->status == 404);
  CHECK(cli.Get("/api/sessions/nope/metrics")->status == 404);
}

TEST_CASE("HTTP create errors") {
  Served s(fresh_dir("errors"));
  auto cli = s.client();
  Json big = synth_request(1);
  big["config"]["display_size"] = 500;
  auto r = cli.Post("/api/sessions", big.dump(), "application/json");
  CHECK(r->status == 400);
  CHECK(Json::parse(r->body).at("error") == "insufficient-pool");

  CHECK(cli.Post("/api/sessions", R"({"dataset": "missing"})", "application/json")->status == 400);
  CHECK(cli.Post("/api/sessions", R"({})", "application/json")->status == 400);
  Json bad = synth_request(1);
  bad["config"]["strategy"] = "best";
  CHECK(cli.Post("/api/sessions", bad.dump(), "application/json")->status == 400);
}

TEST_CASE("HTTP patches") {
  Served s(fresh_dir("patch"));
  auto cli = s.client();
  const Json c = Json::parse(cli.Post("/api/sessions", synth_request(3).dump(), "application/json")->body);
  const std::string id = c.at("id");
  const auto ds = s.datasets.synth(synth_config_from_json(synth_request(3).at("dataset").at("synth")));
  const SampleId sid = c.at("display").at("items")[0].at("id");
  const std::string base = "/api/sessions/" + id + "/samples/" + std::to_string(sid) + "/patch?which=";

  auto before = cli.Get(base + "before");
  auto after = cli.Get(base + "after");
  REQUIRE(before);
  REQUIRE(after);
  CHECK(before->status == 200);
  CHECK(before->get_header_value("Content-Type") == "image/png");
  CHECK(before->body != after->body);
  const auto decode = [](const std::string& body) {
    return decode_png(std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
  };
  const Image b = decode(before->body), a = decode(after->body);
  CHECK(b.width == 8);
  CHECK(b.height == 6);
  CHECK(b.channels == 3);
  CHECK(b.pixels == ds->at(sid).patches->before);
  CHECK(a.pixels == ds->at(sid).patches->after);

  CHECK(cli.Get(base + "sideways")->status == 400);
  CHECK(cli.Get("/api/sessions/" + id + "/samples/999999/patch?which=before")->status == 404);
  CHECK(cli.Get("/api/sessions/" + id + "/samples/abc/patch?which=before")->status == 404);

  Json plain = synth_request(3);
  plain["dataset"]["synth"].erase("patches");
  const Json p = Json::parse(cli.Post("/api/sessions", plain.dump(), "application/json")->body);
  CHECK(p.at("display").at("items")[0].at("patches").is_null());
  const SampleId psid = p.at("display").at("items")[0].at("id");
  CHECK(cli.Get("/api/sessions/" + p.at("id").get<std::string>() + "/samples/" + std::to_string(psid) +
                "/patch?which=before")
            ->status == 404);
}

TEST_CASE("overlapping submits on one session: exactly one wins") {
  Served s(fresh_dir("race"));
  Json req = synth_request(5, 3, 300);
  req["dataset"]["synth"]["n"] = 2200;
  req["dataset"]["synth"]["n_pos"] = 39;
  auto cli = s.client();
  const Json c = Json::parse(cli.Post("/api/sessions", req.dump(), "application/json")->body);
  const std::string id = c.at("id");
  const auto ds = s.datasets.synth(synth_config_from_json(req.at("dataset").at("synth")));
  const std::string body = truth_labels(*ds, c.at("display")).dump();

  constexpr int kClients = 4;
  std::atomic<int> ready{0};
  std::vector<int> statuses(kClients, 0);
  std::vector<std::thread> threads;
  for (int k = 0; k < kClients; ++k) {
    threads.emplace_back([&, k] {
      auto mine = s.client();
      ready.fetch_add(1);
      while (ready.load() < kClients) std::this_thread::yield();
      auto r = mine.Post("/api/sessions/" + id + "/labels", body, "application/json");
      statuses[k] = r ? r->status : -1;
    });
  }
  for (auto& t : threads) t.join();
  int ok = 0, conflict = 0;
  for (int st : statuses) {
    ok += st == 200;
    conflict += st == 409;
  }
  CHECK(ok == 1);
  CHECK(conflict == kClients - 1);
  CHECK(Json::parse(cli.Get("/api/sessions/" + id)->body).at("iteration") == 2);
}

TEST_CASE("sessions reload from the state directory") {
  const auto dir = fresh_dir("reload");
  std::string id;
  Json before;
  {
    Served s(dir);
    auto cli = s.client();
    const Json c = Json::parse(cli.Post("/api/sessions", synth_request(9, 3).dump(), "application/json")->body);
    id = c.at("id");
    const auto ds = s.datasets.synth(synth_config_from_json(synth_request(9).at("dataset").at("synth")));
    cli.Post("/api/sessions/" + id + "/labels", truth_labels(*ds, c.at("display")).dump(), "application/json");
    before = Json::parse(cli.Get("/api/sessions/" + id + "/display")->body);
  }
  CHECK(std::filesystem::exists(dir / (id + ".json")));
  Served s(dir);
  auto cli = s.client();
  auto r = cli.Get("/api/sessions/" + id + "/display");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(Json::parse(r->body) == before);
}
