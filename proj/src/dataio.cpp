#include "frugal/dataio.hpp"

#include "frugal/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <unordered_set>

namespace frugal {

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::vector<Sample> samples, std::size_t dim,
                 std::optional<PatchGeometry> geometry)
    : samples_(std::move(samples)), dim_(dim), geometry_(geometry) {
  if (dim_ == 0) throw Error(ErrorKind::InvalidDimension, "dataset dimension must be >= 1");
  index_.reserve(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!index_.emplace(s.id, i).second) {
      throw Error(ErrorKind::DuplicateId, "duplicate sample id " + std::to_string(s.id));
    }
    if (s.features.size() != dim_) {
      throw Error(ErrorKind::Shape, "sample " + std::to_string(s.id) + " has dimension " +
                                        std::to_string(s.features.size()) + ", expected " +
                                        std::to_string(dim_));
    }
    for (double v : s.features) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::InvalidArgument,
                    "sample " + std::to_string(s.id) + " has a non-finite feature");
      }
    }
    if (s.patches) {
      if (!geometry_) {
        throw Error(ErrorKind::InvalidArgument, "patches present without a patch geometry");
      }
      if (s.patches->before.size() != geometry_->bytes() ||
          s.patches->after.size() != geometry_->bytes()) {
        throw Error(ErrorKind::Shape, "sample " + std::to_string(s.id) + " patch size mismatch");
      }
    }
  }
}

const Sample* Dataset::find(SampleId id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &samples_[it->second];
}

const Sample& Dataset::at(SampleId id) const {
  const Sample* s = find(id);
  if (s == nullptr) throw Error(ErrorKind::NotFound, "unknown sample id " + std::to_string(id));
  return *s;
}

bool Dataset::fully_labeled() const noexcept {
  return std::all_of(samples_.begin(), samples_.end(),
                     [](const Sample& s) { return s.label.has_value(); });
}

std::size_t Dataset::count(Label label) const noexcept {
  return static_cast<std::size_t>(std::count_if(
      samples_.begin(), samples_.end(), [&](const Sample& s) { return s.label == label; }));
}

Dataset Dataset::with_split(Split split) const {
  std::unordered_set<SampleId> seen;
  for (const auto* part : {&split.train, &split.eval}) {
    for (SampleId id : *part) {
      if (find(id) == nullptr) {
        throw Error(ErrorKind::NotFound, "split names unknown sample id " + std::to_string(id));
      }
      if (!seen.insert(id).second) {
        throw Error(ErrorKind::DuplicateId, "split lists sample " + std::to_string(id) + " twice");
      }
    }
  }
  if (seen.size() != samples_.size()) {
    throw Error(ErrorKind::InvalidArgument, "split does not cover every sample");
  }
  Dataset out = *this;
  out.split_ = std::move(split);
  return out;
}

Matrix Dataset::features(std::span<const SampleId> ids) const {
  Matrix m(ids.size(), dim_);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& f = at(ids[i]).features;
    std::copy(f.begin(), f.end(), m.row(i).begin());
  }
  return m;
}

PointSet Dataset::points(std::span<const SampleId> ids) const {
  return PointSet{std::vector<SampleId>(ids.begin(), ids.end()), features(ids)};
}

// ---------------------------------------------------------------------------
// FCD1

namespace {

constexpr char kMagic[4] = {'F', 'C', 'D', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 1 + 1 + 2 + 2 + 2;

class Writer {
public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    bytes_.insert(bytes_.end(), raw, raw + sizeof(T));
  }
  void put_bytes(std::span<const std::uint8_t> data) {
    bytes_.insert(bytes_.end(), data.begin(), data.end());
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }

  template <typename T>
  T get(const char* what) {
    require(sizeof(T), what);
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  std::vector<std::uint8_t> get_bytes(std::size_t n, const char* what) {
    require(n, what);
    std::vector<std::uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

private:
  void require(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(ErrorKind::Parse, std::string("truncated record: missing ") + what, pos_);
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode_fcd1(const Dataset& dataset) {
  const bool has_labels = std::any_of(dataset.samples().begin(), dataset.samples().end(),
                                      [](const Sample& s) { return s.label.has_value(); });
  const bool has_patches = dataset.geometry().has_value() &&
                           std::all_of(dataset.samples().begin(), dataset.samples().end(),
                                       [](const Sample& s) { return s.patches.has_value(); });
  const PatchGeometry geometry = dataset.geometry().value_or(PatchGeometry{});

  Writer w;
  for (char c : kMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(dataset.size()));
  w.put(static_cast<std::uint32_t>(dataset.dim()));
  w.put(static_cast<std::uint8_t>(has_labels));
  w.put(static_cast<std::uint8_t>(has_patches));
  w.put(geometry.width);
  w.put(geometry.height);
  w.put(geometry.channels);
  for (const auto& s : dataset.samples()) {
    w.put(static_cast<std::uint32_t>(s.id));
    w.put(static_cast<std::int8_t>(s.label ? to_int(*s.label) : 0));
    for (double v : s.features) w.put(static_cast<float>(v));
    if (has_patches) {
      w.put_bytes(s.patches->before);
      w.put_bytes(s.patches->after);
    }
  }
  return w.take();
}

Dataset decode_fcd1(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.get<std::uint8_t>("magic") != static_cast<std::uint8_t>(c)) {
      throw ParseError(ErrorKind::Parse, "bad magic, expected FCD1", 0);
    }
  }
  const std::size_t version_at = r.offset();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) {
    throw ParseError(ErrorKind::Parse, "unsupported FCD1 version " + std::to_string(version),
                     version_at);
  }
  const auto n = r.get<std::uint32_t>("n");
  const std::size_t dim_at = r.offset();
  const auto d = r.get<std::uint32_t>("d");
  const auto has_labels = r.get<std::uint8_t>("has_labels");
  const auto has_patches = r.get<std::uint8_t>("has_patches");
  PatchGeometry geometry;
  geometry.width = r.get<std::uint16_t>("patch_w");
  geometry.height = r.get<std::uint16_t>("patch_h");
  geometry.channels = r.get<std::uint16_t>("patch_c");
  if (d == 0) throw ParseError(ErrorKind::Parse, "feature dimension must be >= 1", dim_at);
  if (has_patches && geometry.bytes() == 0) {
    throw ParseError(ErrorKind::Parse, "patches declared with empty geometry", kHeaderBytes - 6);
  }

  std::vector<Sample> samples;
  samples.reserve(n);
  std::unordered_set<SampleId> seen;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t record_at = r.offset();
    Sample s;
    s.id = r.get<std::uint32_t>("id");
    if (!seen.insert(s.id).second) {
      throw ParseError(ErrorKind::DuplicateId, "duplicate sample id " + std::to_string(s.id),
                       record_at);
    }
    const std::size_t label_at = r.offset();
    const auto label = r.get<std::int8_t>("label");
    if (label == 1 || label == -1) {
      if (!has_labels) {
        throw ParseError(ErrorKind::Parse, "label present but has_labels = 0", label_at);
      }
      s.label = label_from_int(label);
    } else if (label != 0) {
      throw ParseError(ErrorKind::Parse, "label must be -1, 0 or +1", label_at);
    }
    s.features.resize(d);
    for (std::uint32_t k = 0; k < d; ++k) {
      const std::size_t at = r.offset();
      const float v = r.get<float>("feature");
      if (!std::isfinite(v)) throw ParseError(ErrorKind::Parse, "non-finite feature", at);
      s.features[k] = v;
    }
    if (has_patches) {
      PatchPair p;
      p.before = r.get_bytes(geometry.bytes(), "before patch");
      p.after = r.get_bytes(geometry.bytes(), "after patch");
      s.patches = std::move(p);
    }
    samples.push_back(std::move(s));
  }
  if (r.offset() != bytes.size()) {
    throw ParseError(ErrorKind::Parse, "trailing bytes after last record", r.offset());
  }
  return Dataset(std::move(samples), d,
                 has_patches ? std::optional<PatchGeometry>(geometry) : std::nullopt);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Dataset parse_csv(const std::string& text) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  std::vector<Sample> samples;
  std::unordered_set<SampleId> seen;

  while (pos < text.size()) {
    const std::size_t line_at = pos;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    const auto fields = split_fields(line);

    if (line_no++ == 0) {
      if (fields.size() < 3 || trim(fields[0]) != "id" || trim(fields[1]) != "label") {
        throw ParseError(ErrorKind::Parse, "CSV header must be id,label,f0,...", line_at);
      }
      dim = fields.size() - 2;
      for (std::size_t k = 0; k < dim; ++k) {
        if (trim(fields[k + 2]) != "f" + std::to_string(k)) {
          throw ParseError(ErrorKind::Parse, "CSV feature columns must be f0..f{d-1}", line_at);
        }
      }
      continue;
    }
    if (fields.size() != dim + 2) {
      throw ParseError(ErrorKind::Shape,
                       "dimension mismatch: expected " + std::to_string(dim) + " features, got " +
                           std::to_string(fields.size() >= 2 ? fields.size() - 2 : 0),
                       line_at);
    }
    const auto parse_number = [&](std::string_view field, auto& value) {
      field = trim(field);
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(ErrorKind::Parse, "bad number '" + std::string(field) + "'", line_at);
      }
    };
    Sample s;
    parse_number(fields[0], s.id);
    if (!seen.insert(s.id).second) {
      throw ParseError(ErrorKind::DuplicateId, "duplicate sample id " + std::to_string(s.id),
                       line_at);
    }
    if (!trim(fields[1]).empty()) {
      int label = 0;
      parse_number(fields[1], label);
      if (label == 1 || label == -1) {
        s.label = label_from_int(label);
      } else if (label != 0) {
        throw ParseError(ErrorKind::Parse, "label must be -1, 0 or +1", line_at);
      }
    }
    s.features.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      parse_number(fields[k + 2], s.features[k]);
      if (!std::isfinite(s.features[k])) {
        throw ParseError(ErrorKind::Parse, "non-finite feature", line_at);
      }
    }
    samples.push_back(std::move(s));
  }
  if (dim == 0) throw ParseError(ErrorKind::Parse, "CSV has no header", 0);
  return Dataset(std::move(samples), dim);
}

std::string format_csv(const Dataset& dataset) {
  std::ostringstream out;
  out.precision(17);
  out << "id,label";
  for (std::size_t k = 0; k < dataset.dim(); ++k) out << ",f" << k;
  out << '\n';
  for (const auto& s : dataset.samples()) {
    out << s.id << ',' << (s.label ? to_int(*s.label) : 0);
    for (double v : s.features) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

Dataset load_dataset(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 4 && std::equal(kMagic, kMagic + 4, bytes.begin(),
                                      [](char a, std::uint8_t b) { return a == static_cast<char>(b); })) {
    return decode_fcd1(bytes);
  }
  const std::string text(bytes.begin(), bytes.end());
  if (text.rfind("id,", 0) == 0) return parse_csv(text);
  throw ParseError(ErrorKind::Parse, "bad magic: neither FCD1 nor CSV", 0);
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  if (path.extension() == ".csv") {
    const std::string text = format_csv(dataset);
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    return;
  }
  write_file(path, encode_fcd1(dataset));
}

void save_split(const std::filesystem::path& path, const Dataset& dataset) {
  if (!dataset.split()) throw Error(ErrorKind::InvalidArgument, "dataset carries no split");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (SampleId id : dataset.split()->eval) out << id << '\n';
}

Dataset load_split(const std::filesystem::path& path, const Dataset& dataset) {
  const auto bytes = read_file(path);
  const std::string text(bytes.begin(), bytes.end());
  std::unordered_set<SampleId> eval_set;
  Split split;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t line_at = pos;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    SampleId id = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), id);
    if (ec != std::errc() || ptr != line.data() + line.size()) {
      throw ParseError(ErrorKind::Parse, "bad id in split file", line_at);
    }
    if (!eval_set.insert(id).second) {
      throw ParseError(ErrorKind::DuplicateId, "duplicate id in split file", line_at);
    }
    split.eval.push_back(id);
  }
  for (const auto& s : dataset.samples()) {
    if (!eval_set.contains(s.id)) split.train.push_back(s.id);
  }
  return dataset.with_split(std::move(split));
}

// ---------------------------------------------------------------------------
// Synthetic generator

namespace {

constexpr std::size_t kIntrinsicDims = 4;

struct Manifold {
  Matrix rotation;  // columns: tangent basis, two normals, the rest
  std::array<double, kIntrinsicDims> frequency{};
  std::array<double, kIntrinsicDims> phase{};
  double tangent_scale = 2.0;
  double warp = 1.6;
  double bend = 0.8;

  double height(std::span<const double> t) const {
    double h = 0.0;
    for (std::size_t k = 0; k < kIntrinsicDims; ++k) h += std::sin(frequency[k] * t[k] + phase[k]);
    return warp * h / std::sqrt(static_cast<double>(kIntrinsicDims));
  }

  double curvature(std::span<const double> t) const {
    double c = 0.0;
    for (std::size_t k = 0; k < kIntrinsicDims; ++k) c += t[k] * t[k];
    return bend * (c / static_cast<double>(kIntrinsicDims) - 1.0 / 3.0);
  }

  // Local coordinates (tangent.., normal, second normal) -> ambient.
  Vector embed(std::span<const double> local, std::span<const double> noise) const {
    const std::size_t d = rotation.rows();
    Vector x(d, 0.0);
    for (std::size_t c = 0; c < local.size(); ++c)
      for (std::size_t r = 0; r < d; ++r) x[r] += rotation(r, c) * local[c];
    for (std::size_t r = 0; r < d; ++r) x[r] += noise[r];
    return x;
  }
};

std::vector<std::uint8_t> texture(const PatchGeometry& g, RngStream& rng) {
  std::vector<std::uint8_t> px(g.bytes());
  std::vector<double> base(g.channels), grad_x(g.channels), grad_y(g.channels);
  for (std::size_t c = 0; c < g.channels; ++c) {
    base[c] = 60.0 + 120.0 * rng.uniform();
    grad_x[c] = 40.0 * (rng.uniform() - 0.5);
    grad_y[c] = 40.0 * (rng.uniform() - 0.5);
  }
  for (std::size_t y = 0; y < g.height; ++y) {
    for (std::size_t x = 0; x < g.width; ++x) {
      for (std::size_t c = 0; c < g.channels; ++c) {
        const double v = base[c] + grad_x[c] * x / std::max<double>(g.width, 1) +
                         grad_y[c] * y / std::max<double>(g.height, 1) + 12.0 * rng.normal();
        px[(y * g.width + x) * g.channels + c] =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return px;
}

// Irrelevant change: global radiometric shift, sometimes a bright cloud.
// Relevant change: a dark rectangular footprint (destroyed structure).
std::vector<std::uint8_t> after_patch(const PatchGeometry& g, std::vector<std::uint8_t> px,
                                      bool change, RngStream& rng) {
  const double shift = 20.0 * (rng.uniform() - 0.5);
  for (auto& v : px) v = static_cast<std::uint8_t>(std::clamp(std::lround(v + shift), 0L, 255L));
  const auto blob = [&](double value, double size) {
    const std::size_t w = std::max<std::size_t>(1, static_cast<std::size_t>(size * g.width));
    const std::size_t h = std::max<std::size_t>(1, static_cast<std::size_t>(size * g.height));
    const std::size_t x0 = rng.uniform_index(g.width - w + 1);
    const std::size_t y0 = rng.uniform_index(g.height - h + 1);
    for (std::size_t y = y0; y < y0 + h; ++y)
      for (std::size_t x = x0; x < x0 + w; ++x)
        for (std::size_t c = 0; c < g.channels; ++c)
          px[(y * g.width + x) * g.channels + c] = static_cast<std::uint8_t>(value);
  };
  if (change) {
    blob(25.0, 0.45);
  } else if (rng.uniform() < 0.15) {
    blob(240.0, 0.3);
  }
  return px;
}

}  // namespace

Dataset synth_generate(const SynthConfig& config) {
  if (config.n_pos < 1 || config.n_pos >= config.n) {
    throw Error(ErrorKind::InvalidConfig, "synth: need 1 <= n_pos < n");
  }
  if (config.dim < kIntrinsicDims + 2) {
    throw Error(ErrorKind::InvalidConfig,
                "synth: dimension must be at least " + std::to_string(kIntrinsicDims + 2));
  }
  if (!(config.noise >= 0.0) || !std::isfinite(config.noise)) {
    throw Error(ErrorKind::InvalidConfig, "synth: noise must be finite and >= 0");
  }
  if (config.patches && config.patches->bytes() == 0) {
    throw Error(ErrorKind::InvalidConfig, "synth: empty patch geometry");
  }

  const RngStream root(config.seed);
  RngStream geometry_rng = root.split(1);
  Manifold m{random_orthonormal(config.dim, geometry_rng)};
  for (std::size_t k = 0; k < kIntrinsicDims; ++k) {
    m.frequency[k] = 1.5 + 1.5 * geometry_rng.uniform();
    m.phase[k] = 2.0 * std::numbers::pi * geometry_rng.uniform();
  }

  // The change cluster sits above the sheet at a fixed intrinsic location.
  std::array<double, kIntrinsicDims> centre{};
  for (double& c : centre) c = geometry_rng.uniform() - 0.5;
  constexpr double kLift = 4.0;
  constexpr double kClusterSpread = 0.3;
  // Features sit away from the origin so the bias-free net gets an implicit
  // offset, and at a scale where 300 plain gradient steps reach a sharp fit.
  constexpr double kScale = 8.0;
  constexpr double kOffset = 4.0;

  // Positive positions are drawn at random among the n slots.
  RngStream order_rng = root.split(2);
  std::vector<SampleId> ids(config.n);
  for (std::size_t i = 0; i < config.n; ++i) ids[i] = static_cast<SampleId>(i + 1);
  const Display positive_ids = select_random(ids, config.n_pos, order_rng);
  std::unordered_set<SampleId> positive(positive_ids.begin(), positive_ids.end());

  std::vector<Sample> samples;
  samples.reserve(config.n);
  for (SampleId id : ids) {
    RngStream rng = root.split(1000 + id);
    const bool change = positive.contains(id);
    std::array<double, kIntrinsicDims> t{};
    if (change) {
      for (std::size_t k = 0; k < kIntrinsicDims; ++k) {
        t[k] = centre[k] + kClusterSpread * rng.normal();
      }
    } else {
      for (double& v : t) v = 2.0 * rng.uniform() - 1.0;
    }
    Vector local(kIntrinsicDims + 2);
    for (std::size_t k = 0; k < kIntrinsicDims; ++k) local[k] = m.tangent_scale * t[k];
    local[kIntrinsicDims] = m.height(t) + (change ? kLift : 0.0);
    local[kIntrinsicDims + 1] = m.curvature(t);
    Vector noise = gaussian_vector(config.dim, rng);
    for (double& v : noise) v *= config.noise;

    Sample s;
    s.id = id;
    s.features = m.embed(local, noise);
    for (std::size_t r = 0; r < config.dim; ++r) {
      s.features[r] = kScale * (s.features[r] + kOffset * m.rotation(r, config.dim - 1));
    }
    for (double& v : s.features) v = static_cast<double>(static_cast<float>(v));
    s.label = change ? Label::Change : Label::NoChange;
    if (config.patches) {
      RngStream patch_rng = rng.split(7);
      PatchPair p;
      p.before = texture(*config.patches, patch_rng);
      p.after = after_patch(*config.patches, p.before, change, patch_rng);
      s.patches = std::move(p);
    }
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples), config.dim, config.patches);
}

// ---------------------------------------------------------------------------
// Split

Dataset split_half(const Dataset& dataset, RngStream& rng) {
  const std::size_t n = dataset.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "split_half: need at least 2 samples");
  const std::size_t train_total = n / 2;

  std::vector<SampleId> pos, neg, all;
  for (const auto& s : dataset.samples()) {
    all.push_back(s.id);
    if (s.label == Label::Change) pos.push_back(s.id);
    if (s.label == Label::NoChange) neg.push_back(s.id);
  }

  Split split;
  const auto take = [&](std::vector<SampleId> group, std::size_t k) {
    const Display chosen = k > 0 ? select_random(group, k, rng) : Display{};
    std::unordered_set<SampleId> chosen_set(chosen.begin(), chosen.end());
    split.train.insert(split.train.end(), chosen.begin(), chosen.end());
    for (SampleId id : group)
      if (!chosen_set.contains(id)) split.eval.push_back(id);
  };

  const bool stratify = dataset.fully_labeled() && !pos.empty() && !neg.empty();
  if (stratify) {
    const std::size_t train_pos = pos.size() / 2;
    take(std::move(pos), train_pos);
    take(std::move(neg), train_total - train_pos);
  } else {
    take(std::move(all), train_total);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.eval.begin(), split.eval.end());
  return dataset.with_split(std::move(split));
}

// ---------------------------------------------------------------------------
// EER

double compute_eer(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::Shape, "compute_eer: scores and labels differ in length");
  }
  std::size_t positives = 0;
  for (Label y : labels) positives += y == Label::Change;
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorKind::UndefinedMetric, "compute_eer: both classes must be present");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw Error(ErrorKind::InvalidArgument, "compute_eer: NaN score");
  }

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Ascending sweep: at threshold tau = score of order[i], every sample with
  // a smaller score is predicted "no change".
  const double p = static_cast<double>(positives);
  const double q = static_cast<double>(negatives);
  std::size_t missed = 0;      // positives below tau
  std::size_t rejected = 0;    // negatives below tau
  double best_gap = INFINITY;
  double best_eer = 0.0;
  std::size_t i = 0;
  while (true) {
    const double fnr = static_cast<double>(missed) / p;
    const double fpr = static_cast<double>(negatives - rejected) / q;
    const double gap = std::abs(fpr - fnr);
    if (gap < best_gap) {
      best_gap = gap;
      best_eer = (fpr + fnr) / 2.0;
    }
    if (i == order.size()) break;  // the +infinity threshold was just evaluated
    const double tau = scores[order[i]];
    while (i < order.size() && scores[order[i]] == tau) {
      (labels[order[i]] == Label::Change ? missed : rejected) += 1;
      ++i;
    }
  }
  return 100.0 * best_eer;
}

}  // namespace frugal
