#pragma once

#include "frugal/augment.hpp"
#include "frugal/dataio.hpp"
#include "frugal/invnet.hpp"
#include "frugal/selection.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace frugal {

struct SessionConfig {
  std::size_t display_size = 16;
  std::size_t iterations = 10;
  Strategy strategy;
  AugmentPolicy policy;
  NetShape shape;
  TrainConfig train;
  std::uint64_t seed = 0;
};

void validate(const SessionConfig& config);

enum class Phase { AwaitingLabels, Ready, Finished };

std::string_view to_string(Phase phase) noexcept;
Phase parse_phase(std::string_view text);

/// One row per completed iteration. `iteration` counts labeled displays, so
/// iteration n corresponds to the model trained on D_0..D_{n-1}.
struct MetricRecord {
  std::size_t iteration = 0;
  double sampling_rate = 0.0;
  std::optional<double> eer;
  friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

struct MetricsHistory {
  std::vector<MetricRecord> records;

  /// Mean EER over iterations >= 2 (the first model sees a single display and
  /// is reported but not averaged).
  double auc() const;
  std::optional<double> final_eer() const;
  friend bool operator==(const MetricsHistory&, const MetricsHistory&) = default;
};

/// Arithmetic mean; throws InvalidArgument on an empty list.
double auc_of_eers(std::span<const double> eers);

struct SessionState {
  SessionConfig config;
  std::size_t dataset_size = 0;
  Split split;
  std::vector<Display> displays;
  std::vector<std::vector<Label>> answers;
  InvertibleNet net = InvertibleNet::identity(2, 0);
  RngStream rng;
  MetricsHistory metrics;
  Phase phase = Phase::AwaitingLabels;

  /// Index t of the newest display.
  std::size_t iteration() const noexcept { return displays.empty() ? 0 : displays.size() - 1; }
  const Display& current_display() const;
  std::vector<SampleId> remaining_pool() const;
};

/// Percentage of the training half shown to the oracle so far, counting every
/// display in the state (including one still awaiting labels).
double sampling_rate(const SessionState& state);
double sampling_rate(std::size_t labeled, std::size_t dataset_size);

/// Splits the dataset (unless it already carries a split), draws D_0 at random
/// from the train half and initializes the net.
SessionState init_session(const Dataset& dataset, const SessionConfig& config);

using Answers = std::vector<std::pair<SampleId, Label>>;

/// Records the oracle's answers for the current display, retrains on every
/// labeled display (augmented per policy), evaluates, and selects the next
/// display or finishes.
SessionState submit_labels(const Dataset& dataset, SessionState state, const Answers& answers);

class Oracle {
public:
  virtual ~Oracle() = default;
  virtual std::vector<Label> answer(std::span<const SampleId> display) = 0;
};

/// Answers from ground truth.
class GroundTruthOracle final : public Oracle {
public:
  explicit GroundTruthOracle(const Dataset& dataset) : dataset_(dataset) {}
  std::vector<Label> answer(std::span<const SampleId> display) override;

private:
  const Dataset& dataset_;
};

Answers pair_answers(std::span<const SampleId> display, std::span<const Label> labels);

SessionState run_session(const Dataset& dataset, const SessionConfig& config, Oracle& oracle);
MetricsHistory run_simulated(const Dataset& dataset, const SessionConfig& config, Oracle& oracle);

/// Net trained on the whole labeled train half (no augmentation), evaluated on
/// the eval half; the session seed fixes both the split and the init.
double supervised_eer(const Dataset& dataset, const SessionConfig& config);

}  // namespace frugal
