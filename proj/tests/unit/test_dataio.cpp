#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "frugal/alloop.hpp"
#include "frugal/dataio.hpp"
#include "frugal/error.hpp"
#include "oracles.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <set>
#include <unordered_set>

using namespace frugal;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::Io;
}

std::vector<Label> labels_of(std::initializer_list<int> ys) {
  std::vector<Label> out;
  for (int y : ys) out.push_back(label_from_int(y));
  return out;
}

Dataset small_dataset(bool patches) {
  SynthConfig c;
  c.n = 40;
  c.n_pos = 5;
  c.dim = 8;
  c.seed = 3;
  if (patches) c.patches = PatchGeometry{6, 5, 3};
  return synth_generate(c);
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("frugalcd-test-" + name);
}

}  // namespace

TEST_CASE("synthetic defaults match the class counts") {
  const Dataset ds = synth_generate({});
  CHECK(ds.size() == 2200);
  CHECK(ds.dim() == 32);
  CHECK(ds.count(Label::NoChange) == 2161);
  CHECK(ds.count(Label::Change) == 39);
  for (const auto& s : ds.samples())
    for (double v : s.features) CHECK(std::isfinite(v));
  CHECK(synth_generate({}) == ds);
  SynthConfig other;
  other.seed = 1;
  CHECK(!(synth_generate(other) == ds));
}

TEST_CASE("synthetic config validation") {
  SynthConfig c;
  c.n_pos = c.n;
  CHECK(kind_of([&] { synth_generate(c); }) == ErrorKind::InvalidConfig);
  c.n_pos = 0;
  CHECK(kind_of([&] { synth_generate(c); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("split_half") {
  const Dataset ds = synth_generate({});
  RngStream rng(1);
  const Dataset split = split_half(ds, rng);
  REQUIRE(split.split());
  const Split& s = *split.split();
  CHECK(s.train.size() == 1100);
  CHECK(s.eval.size() == 1100);
  std::set<SampleId> all(s.train.begin(), s.train.end());
  all.insert(s.eval.begin(), s.eval.end());
  CHECK(all.size() == 2200);
  std::size_t train_pos = 0, eval_pos = 0;
  for (SampleId id : s.train) train_pos += split.at(id).label == Label::Change;
  for (SampleId id : s.eval) eval_pos += split.at(id).label == Label::Change;
  CHECK(train_pos == 19);
  CHECK(eval_pos == 20);

  SynthConfig tiny;
  tiny.n = 3;
  tiny.n_pos = 2;
  tiny.dim = 6;
  const Dataset t = split_half(synth_generate(tiny), rng);
  CHECK(t.split()->train.size() == 1);
  CHECK(t.split()->eval.size() == 2);
  for (const auto* half : {&t.split()->train, &t.split()->eval}) {
    bool has_pos = false;
    for (SampleId id : *half) has_pos |= t.at(id).label == Label::Change;
    CHECK(has_pos);
  }
}

TEST_CASE("evaluation samples never duplicate training samples") {
  const Dataset ds = synth_generate({});
  RngStream rng(2);
  const Dataset split = split_half(ds, rng);
  std::set<std::vector<double>> train;
  for (SampleId id : split.split()->train) train.insert(split.at(id).features);
  for (SampleId id : split.split()->eval) CHECK(!train.contains(split.at(id).features));
}

TEST_CASE("EER examples") {
  CHECK(compute_eer(std::vector<double>{0.9, 0.8, 0.3, 0.2}, labels_of({1, 1, -1, -1})) == 0.0);
  CHECK(compute_eer(std::vector<double>{0.9, 0.4, 0.6, 0.2}, labels_of({1, 1, -1, -1})) == 50.0);
  CHECK(kind_of([] { compute_eer(std::vector<double>{0.1, 0.2}, labels_of({1, 1})); }) == ErrorKind::UndefinedMetric);
  CHECK(kind_of([] { compute_eer(std::vector<double>{0.1}, labels_of({1, -1})); }) == ErrorKind::Shape);
}

TEST_CASE("EER equals the exhaustive oracle") {
  RngStream rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(60);
    std::vector<double> scores(n);
    std::vector<Label> labels(n);
    const bool coarse = trial % 3 == 0;  // many ties
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = coarse ? static_cast<double>(rng.uniform_index(5)) / 4.0 : rng.uniform();
      labels[i] = rng.uniform() < 0.3 ? Label::Change : Label::NoChange;
    }
    labels[0] = Label::Change;
    labels[1] = Label::NoChange;
    CHECK(compute_eer(scores, labels) == oracle::exhaustive_eer(scores, labels));
  }
}

TEST_CASE("EER is invariant to increasing transforms") {
  RngStream rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.uniform_index(40);
    std::vector<double> scores(n), transformed(n);
    std::vector<Label> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.uniform_index(12)) / 11.0;
      transformed[i] = std::exp(3.0 * scores[i]) + 7.0;
      labels[i] = i % 3 == 0 ? Label::Change : Label::NoChange;
    }
    CHECK(compute_eer(scores, labels) == compute_eer(transformed, labels));
  }
}

TEST_CASE("FCD1 round trip") {
  for (bool patches : {false, true}) {
    const Dataset ds = small_dataset(patches);
    CHECK(decode_fcd1(encode_fcd1(ds)) == ds);
    const auto path = temp_path(patches ? "p.fcd" : "np.fcd");
    save_dataset(path, ds);
    CHECK(load_dataset(path) == ds);
    std::filesystem::remove(path);
  }
}

TEST_CASE("FCD1 header layout") {
  const Dataset ds = small_dataset(true);
  const auto bytes = encode_fcd1(ds);
  CHECK(std::memcmp(bytes.data(), "FCD1", 4) == 0);
  auto u32 = [&](std::size_t at) {
    return static_cast<std::uint32_t>(bytes[at] | bytes[at + 1] << 8 | bytes[at + 2] << 16 | bytes[at + 3] << 24);
  };
  CHECK(u32(4) == 1);
  CHECK(u32(8) == 40);
  CHECK(u32(12) == 8);
  CHECK(bytes[16] == 1);
  CHECK(bytes[17] == 1);
  CHECK((bytes[18] | bytes[19] << 8) == 6);
  CHECK((bytes[20] | bytes[21] << 8) == 5);
  CHECK((bytes[22] | bytes[23] << 8) == 3);
  CHECK(bytes.size() == 24 + 40 * (4 + 1 + 8 * 4 + 2 * 6 * 5 * 3));
}

TEST_CASE("FCD1 rejects duplicates and truncation") {
  const Dataset ds = small_dataset(false);
  auto bytes = encode_fcd1(ds);
  const std::size_t record = 4 + 1 + 8 * 4;
  std::memcpy(bytes.data() + 24 + record, bytes.data() + 24, 4);
  CHECK(kind_of([&] { decode_fcd1(bytes); }) == ErrorKind::DuplicateId);

  auto truncated = encode_fcd1(ds);
  truncated.resize(truncated.size() - 3);
  try {
    decode_fcd1(truncated);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(e.offset() <= truncated.size());
  }
}

TEST_CASE("CSV matches FCD1") {
  const Dataset ds = small_dataset(false);
  const std::string csv = format_csv(ds);
  CHECK(csv.rfind("id,label,f0,f1,", 0) == 0);
  CHECK(parse_csv(csv) == decode_fcd1(encode_fcd1(ds)));

  const auto path = temp_path("d.csv");
  save_dataset(path, ds);
  CHECK(load_dataset(path) == ds);
  std::filesystem::remove(path);

  CHECK(kind_of([] { parse_csv("id,label,f0\n1,1,0.5\n1,-1,0.25\n"); }) == ErrorKind::DuplicateId);
  const Dataset unlabeled = parse_csv("id,label,f0,f1\n4,,1.0,2.0\n5,0,3.0,4.0\n");
  CHECK(!unlabeled.at(4).label);
  CHECK(!unlabeled.at(5).label);
}

TEST_CASE("split sidecar round trip") {
  RngStream rng(5);
  const Dataset ds = split_half(small_dataset(false), rng);
  const auto path = temp_path("split.txt");
  save_split(path, ds);
  const Dataset back = load_split(path, small_dataset(false));
  CHECK(back.split()->eval == ds.split()->eval);
  std::set<SampleId> a(back.split()->train.begin(), back.split()->train.end());
  std::set<SampleId> b(ds.split()->train.begin(), ds.split()->train.end());
  CHECK(a == b);
  std::filesystem::remove(path);
}

TEST_CASE("a fully supervised net separates the synthetic defaults") {
  const Dataset ds = synth_generate({});
  const double eer = supervised_eer(ds, SessionConfig{});
  MESSAGE("supervised eval EER " << eer << "%");
  CHECK(eer < 3.0);
}
