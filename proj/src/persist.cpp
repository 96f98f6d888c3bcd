#include "frugal/persist.hpp"

#include "frugal/error.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <system_error>

namespace frugal {

namespace {

template <typename T>
T field_or(const Json& doc, const char* key, T fallback) {
  if (!doc.is_object() || !doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorKind::InvalidConfig, std::string("bad value for '") + key + "'");
  }
}

std::size_t count_or(const Json& doc, const char* key, std::size_t fallback) {
  if (!doc.is_object() || !doc.contains(key) || doc.at(key).is_null()) return fallback;
  const Json& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw Error(ErrorKind::InvalidConfig, std::string("'") + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(Json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

Matrix matrix_from_json(const Json& doc) {
  const auto rows = doc.get<std::vector<Vector>>();
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw Error(ErrorKind::Parse, "ragged matrix");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

Json display_to_json(const Display& d) { return Json(std::vector<SampleId>(d.begin(), d.end())); }

template <typename F>
auto wrap_parse(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Parse, std::string(what) + ": " + e.what());
  }
}

}  // namespace

SessionConfig config_from_json(const Json& doc, const SessionConfig& defaults) {
  if (!doc.is_null() && !doc.is_object()) throw Error(ErrorKind::InvalidConfig, "config must be an object");
  SessionConfig c = defaults;
  c.display_size = count_or(doc, "display_size", c.display_size);
  c.iterations = count_or(doc, "iterations", c.iterations);
  c.seed = field_or<std::uint64_t>(doc, "seed", c.seed);

  const Json strategy = doc.is_object() ? doc.value("strategy", Json()) : Json();
  if (strategy.is_string()) {
    c.strategy.kind = parse_strategy_kind(strategy.get<std::string>());
  } else if (strategy.is_object()) {
    if (strategy.contains("kind")) c.strategy.kind = parse_strategy_kind(strategy.at("kind").get<std::string>());
    c.strategy.alpha = field_or(strategy, "alpha", c.strategy.alpha);
    c.strategy.beta = field_or(strategy, "beta", c.strategy.beta);
    c.strategy.gamma = field_or(strategy, "gamma", c.strategy.gamma);
  }

  const Json augment = doc.is_object() ? doc.value("augment", Json()) : Json();
  if (augment.is_object()) {
    if (augment.contains("kind")) c.policy.kind = parse_augment_kind(augment.at("kind").get<std::string>());
    if (augment.contains("space")) c.policy.space = parse_augment_space(augment.at("space").get<std::string>());
    c.policy.delta = field_or(augment, "delta", c.policy.delta);
    c.policy.per_sample = count_or(augment, "per_sample", c.policy.per_sample);
  }

  const Json net = doc.is_object() ? doc.value("net", Json()) : Json();
  c.shape.dim = count_or(net, "dim", c.shape.dim);
  c.shape.depth = count_or(net, "depth", c.shape.depth);

  const Json train = doc.is_object() ? doc.value("train", Json()) : Json();
  c.train.learning_rate = field_or(train, "learning_rate", c.train.learning_rate);
  c.train.epochs = count_or(train, "epochs", c.train.epochs);
  c.train.divergence_threshold = field_or(train, "divergence_threshold", c.train.divergence_threshold);
  return c;
}

Json to_json(const SessionConfig& c) {
  return {
      {"display_size", c.display_size},
      {"iterations", c.iterations},
      {"seed", c.seed},
      {"strategy",
       {{"kind", to_string(c.strategy.kind)},
        {"alpha", c.strategy.alpha},
        {"beta", c.strategy.beta},
        {"gamma", c.strategy.gamma}}},
      {"augment",
       {{"kind", to_string(c.policy.kind)},
        {"space", to_string(c.policy.space)},
        {"delta", c.policy.delta},
        {"per_sample", c.policy.per_sample}}},
      {"net", {{"dim", c.shape.dim}, {"depth", c.shape.depth}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"epochs", c.train.epochs},
        {"divergence_threshold", c.train.divergence_threshold}}},
  };
}

Json to_json(const InvertibleNet& net) {
  Json layers = Json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"weight", matrix_to_json(l.weight)},
                      {"slope_pos", l.slope_pos},
                      {"slope_neg", l.slope_neg}});
  }
  return {{"layers", layers}, {"head", matrix_to_json(net.head())}, {"lambda", net.lambda()}};
}

InvertibleNet net_from_json(const Json& doc) {
  return wrap_parse("net", [&] {
    std::vector<LayerParams> layers;
    for (const auto& l : doc.at("layers")) {
      LayerParams p;
      p.weight = matrix_from_json(l.at("weight"));
      p.slope_pos = l.at("slope_pos").get<double>();
      p.slope_neg = l.at("slope_neg").get<double>();
      layers.push_back(std::move(p));
    }
    return InvertibleNet(std::move(layers), matrix_from_json(doc.at("head")),
                         doc.at("lambda").get<double>());
  });
}

Json to_json(const MetricsHistory& metrics) {
  Json records = Json::array();
  for (const auto& r : metrics.records) {
    records.push_back({{"iteration", r.iteration},
                       {"sampling_rate", r.sampling_rate},
                       {"eer", r.eer ? Json(*r.eer) : Json()}});
  }
  return records;
}

Json to_json(const SessionState& s) {
  Json displays = Json::array();
  for (const auto& d : s.displays) displays.push_back(display_to_json(d));
  Json answers = Json::array();
  for (const auto& a : s.answers) {
    Json row = Json::array();
    for (Label y : a) row.push_back(to_int(y));
    answers.push_back(row);
  }
  return {
      {"config", to_json(s.config)},
      {"dataset_size", s.dataset_size},
      {"split", {{"train", s.split.train}, {"eval", s.split.eval}}},
      {"displays", displays},
      {"answers", answers},
      {"net", to_json(s.net)},
      {"rng", {{"seed", s.rng.seed()}, {"counter", s.rng.counter()}}},
      {"metrics", to_json(s.metrics)},
      {"phase", to_string(s.phase)},
  };
}

SessionState state_from_json(const Json& doc) {
  return wrap_parse("session", [&] {
    SessionState s;
    s.config = config_from_json(doc.at("config"));
    s.dataset_size = doc.at("dataset_size").get<std::size_t>();
    s.split.train = doc.at("split").at("train").get<std::vector<SampleId>>();
    s.split.eval = doc.at("split").at("eval").get<std::vector<SampleId>>();
    for (const auto& d : doc.at("displays")) s.displays.push_back(d.get<Display>());
    for (const auto& a : doc.at("answers")) {
      std::vector<Label> row;
      for (const auto& y : a) row.push_back(label_from_int(y.get<int>()));
      s.answers.push_back(std::move(row));
    }
    s.net = net_from_json(doc.at("net"));
    s.rng = RngStream(doc.at("rng").at("seed").get<std::uint64_t>(),
                      doc.at("rng").at("counter").get<std::uint64_t>());
    for (const auto& r : doc.at("metrics")) {
      MetricRecord rec;
      rec.iteration = r.at("iteration").get<std::size_t>();
      rec.sampling_rate = r.at("sampling_rate").get<double>();
      if (!r.at("eer").is_null()) rec.eer = r.at("eer").get<double>();
      s.metrics.records.push_back(rec);
    }
    s.phase = parse_phase(doc.at("phase").get<std::string>());
    if (s.answers.size() > s.displays.size()) {
      throw Error(ErrorKind::Parse, "session: more answer rows than displays");
    }
    return s;
  });
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot replace " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace frugal
