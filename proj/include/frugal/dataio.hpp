#pragma once

#include "frugal/linalg.hpp"
#include "frugal/selection.hpp"
#include "frugal/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace frugal {

struct PatchGeometry {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint16_t channels = 0;

  std::size_t bytes() const noexcept {
    return static_cast<std::size_t>(width) * height * channels;
  }
  friend bool operator==(const PatchGeometry&, const PatchGeometry&) = default;
};

/// Raw bi-temporal patches, row-major, interleaved channels.
struct PatchPair {
  std::vector<std::uint8_t> before;
  std::vector<std::uint8_t> after;
  friend bool operator==(const PatchPair&, const PatchPair&) = default;
};

struct Sample {
  SampleId id = 0;
  Vector features;
  std::optional<Label> label;
  std::optional<PatchPair> patches;
  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Split {
  std::vector<SampleId> train;
  std::vector<SampleId> eval;
  friend bool operator==(const Split&, const Split&) = default;
};

/// Immutable collection of samples sharing one feature dimension.
class Dataset {
public:
  Dataset() = default;
  Dataset(std::vector<Sample> samples, std::size_t dim,
          std::optional<PatchGeometry> geometry = std::nullopt);

  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const Sample> samples() const noexcept { return samples_; }
  const std::optional<PatchGeometry>& geometry() const noexcept { return geometry_; }
  const std::optional<Split>& split() const noexcept { return split_; }

  const Sample* find(SampleId id) const;
  const Sample& at(SampleId id) const;
  bool fully_labeled() const noexcept;
  std::size_t count(Label label) const noexcept;

  /// Copy carrying `split`, which must partition the ids.
  Dataset with_split(Split split) const;

  PointSet points(std::span<const SampleId> ids) const;
  Matrix features(std::span<const SampleId> ids) const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.dim_ == b.dim_ && a.samples_ == b.samples_ && a.geometry_ == b.geometry_ &&
           a.split_ == b.split_;
  }

private:
  std::vector<Sample> samples_;
  std::size_t dim_ = 0;
  std::optional<PatchGeometry> geometry_;
  std::optional<Split> split_;
  std::unordered_map<SampleId, std::size_t> index_;
};

/// Reads FCD1 when the file starts with the magic, the CSV fallback otherwise.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);

std::vector<std::uint8_t> encode_fcd1(const Dataset& dataset);
Dataset decode_fcd1(std::span<const std::uint8_t> bytes);

/// CSV with header `id,label,f0,...,f{d-1}`; empty or 0 label = unlabeled.
Dataset parse_csv(const std::string& text);
std::string format_csv(const Dataset& dataset);

/// Sidecar: evaluation ids, one per line.
void save_split(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_split(const std::filesystem::path& path, const Dataset& dataset);

struct SynthConfig {
  std::size_t n = 2200;
  std::size_t n_pos = 39;
  std::size_t dim = 32;
  /// Isotropic ambient noise around the manifold.
  double noise = 0.4;
  std::uint64_t seed = 0;
  std::optional<PatchGeometry> patches;
};

/// Negatives on a sine-warped sheet with a curved second normal direction,
/// positives in a tight cluster pushed off the sheet, all shifted along a
/// spare direction and placed under a random rotation of R^dim. Features are
/// rounded to float so the result survives an FCD1 round trip unchanged.
Dataset synth_generate(const SynthConfig& config);

/// Random half split, stratified by label when the dataset is fully labeled
/// with both classes present. The train half gets floor(n / 2) samples.
Dataset split_half(const Dataset& dataset, RngStream& rng);

/// Equal error rate in percent. Thresholds sweep every distinct score plus
/// +infinity (score >= threshold predicts change); the reported value is
/// (FPR + FNR) / 2 at the threshold minimizing |FPR - FNR|, the smallest such
/// threshold on ties.
double compute_eer(std::span<const double> scores, std::span<const Label> labels);

}  // namespace frugal
