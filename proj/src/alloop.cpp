#include "frugal/alloop.hpp"

#include "frugal/error.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace frugal {

namespace {

// Stream keys; every random decision of a session derives from the seed and
// the iteration, so a reloaded session replays bit-identically.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kFirstDisplayStream = 2;
constexpr std::uint64_t kInitNetStream = 3;
constexpr std::uint64_t kSupervisedStream = 4;
constexpr std::uint64_t kIterationStreams = 100;

enum IterationStream : std::uint64_t { kAuxInit = 1, kAugment = 2, kNetInit = 3, kSelect = 4 };

RngStream iteration_stream(const SessionState& state, std::size_t t, IterationStream which) {
  return state.rng.split(kIterationStreams + t).split(which);
}

}  // namespace

void validate(const SessionConfig& config) {
  if (config.display_size == 0) throw Error(ErrorKind::InvalidConfig, "display size must be >= 1");
  if (config.iterations == 0) throw Error(ErrorKind::InvalidConfig, "iterations must be >= 1");
  if (config.shape.dim < 2) throw Error(ErrorKind::InvalidConfig, "net dimension must be >= 2");
  if (!(config.policy.delta >= 0.0)) throw Error(ErrorKind::InvalidConfig, "delta must be >= 0");
  if (!(config.train.learning_rate > 0.0) || config.train.epochs == 0) {
    throw Error(ErrorKind::InvalidConfig, "invalid training configuration");
  }
}

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::AwaitingLabels: return "awaiting-labels";
    case Phase::Ready: return "ready";
    case Phase::Finished: return "finished";
  }
  return "finished";
}

Phase parse_phase(std::string_view text) {
  if (text == "awaiting-labels") return Phase::AwaitingLabels;
  if (text == "ready") return Phase::Ready;
  if (text == "finished") return Phase::Finished;
  throw Error(ErrorKind::Parse, "unknown phase '" + std::string(text) + "'");
}

double auc_of_eers(std::span<const double> eers) {
  if (eers.empty()) throw Error(ErrorKind::InvalidArgument, "auc_of_eers: empty history");
  return std::accumulate(eers.begin(), eers.end(), 0.0) / static_cast<double>(eers.size());
}

double MetricsHistory::auc() const {
  std::vector<double> eers;
  for (const auto& r : records)
    if (r.iteration >= 2 && r.eer) eers.push_back(*r.eer);
  return auc_of_eers(eers);
}

std::optional<double> MetricsHistory::final_eer() const {
  if (records.empty()) return std::nullopt;
  return records.back().eer;
}

const Display& SessionState::current_display() const {
  if (displays.empty()) throw Error(ErrorKind::Phase, "session has no display");
  return displays.back();
}

std::vector<SampleId> SessionState::remaining_pool() const {
  std::unordered_set<SampleId> shown;
  for (const auto& d : displays) shown.insert(d.begin(), d.end());
  std::vector<SampleId> pool;
  for (SampleId id : split.train)
    if (!shown.contains(id)) pool.push_back(id);
  return pool;
}

double sampling_rate(std::size_t labeled, std::size_t dataset_size) {
  return 100.0 * static_cast<double>(labeled) / (static_cast<double>(dataset_size) / 2.0);
}

double sampling_rate(const SessionState& state) {
  std::size_t labeled = 0;
  for (const auto& d : state.displays) labeled += d.size();
  return sampling_rate(labeled, state.dataset_size);
}

SessionState init_session(const Dataset& dataset, const SessionConfig& config) {
  validate(config);
  if (config.shape.dim != dataset.dim()) {
    throw Error(ErrorKind::InvalidConfig, "net dimension " + std::to_string(config.shape.dim) +
                                              " does not match dataset dimension " +
                                              std::to_string(dataset.dim()));
  }
  SessionState state;
  state.config = config;
  state.dataset_size = dataset.size();
  state.rng = RngStream(config.seed);

  if (dataset.split()) {
    state.split = *dataset.split();
  } else {
    RngStream split_rng = state.rng.split(kSplitStream);
    state.split = *split_half(dataset, split_rng).split();
  }

  RngStream display_rng = state.rng.split(kFirstDisplayStream);
  state.displays.push_back(select_random(state.split.train, config.display_size, display_rng));
  RngStream init_rng = state.rng.split(kInitNetStream);
  state.net = InvertibleNet::random(config.shape, init_rng);
  state.phase = Phase::AwaitingLabels;
  return state;
}

namespace {

std::vector<Label> match_answers(const Display& display, const Answers& answers) {
  if (answers.size() != display.size()) {
    throw Error(ErrorKind::LabelMismatch, "expected " + std::to_string(display.size()) +
                                              " answers, got " + std::to_string(answers.size()));
  }
  std::unordered_map<SampleId, Label> by_id;
  for (const auto& [id, label] : answers) {
    if (!by_id.emplace(id, label).second) {
      throw Error(ErrorKind::LabelMismatch, "sample " + std::to_string(id) + " answered twice");
    }
  }
  std::vector<Label> labels;
  labels.reserve(display.size());
  for (SampleId id : display) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::LabelMismatch,
                  "no answer for sample " + std::to_string(id) + " of the current display");
    }
    labels.push_back(it->second);
  }
  return labels;
}

LabeledSet cumulative_labeled(const Dataset& dataset, const SessionState& state) {
  LabeledSet out;
  for (std::size_t k = 0; k < state.answers.size(); ++k) {
    for (std::size_t i = 0; i < state.displays[k].size(); ++i) {
      out.push_back({dataset.at(state.displays[k][i]).features, state.answers[k][i]});
    }
  }
  return out;
}

std::optional<double> evaluate(const Dataset& dataset, const Split& split, const InvertibleNet& net) {
  std::vector<Label> labels;
  labels.reserve(split.eval.size());
  for (SampleId id : split.eval) {
    const auto& label = dataset.at(id).label;
    if (!label) return std::nullopt;
    labels.push_back(*label);
  }
  const bool both = std::find(labels.begin(), labels.end(), Label::Change) != labels.end() &&
                    std::find(labels.begin(), labels.end(), Label::NoChange) != labels.end();
  if (!both) return std::nullopt;
  return compute_eer(classify_batch(net, dataset.features(split.eval)), labels);
}

}  // namespace

SessionState submit_labels(const Dataset& dataset, SessionState state, const Answers& answers) {
  if (state.phase != Phase::AwaitingLabels) {
    throw Error(ErrorKind::Phase, "session is " + std::string(to_string(state.phase)) +
                                      ", not awaiting labels");
  }
  const std::size_t t = state.iteration();
  state.answers.push_back(match_answers(state.current_display(), answers));
  state.phase = Phase::Ready;

  // Augmentation runs through a net fitted to the labeled displays; the
  // criterion is then retrained from scratch on the augmented set.
  const LabeledSet labeled = cumulative_labeled(dataset, state);
  const AugmentPolicy& policy = state.config.policy;
  LabeledSet training = labeled;
  if (policy.kind != AugmentKind::None && policy.per_sample > 0) {
    InvertibleNet mapper = InvertibleNet::identity(state.config.shape.dim, 0);
    if (policy.space == AugmentSpace::Latent) {
      RngStream aux_rng = iteration_stream(state, t, kAuxInit);
      mapper = fit(state.config.shape, labeled, state.config.train, aux_rng);
    }
    RngStream augment_rng = iteration_stream(state, t, kAugment);
    training = augment_display(mapper, labeled, policy, augment_rng);
  }
  RngStream net_rng = iteration_stream(state, t, kNetInit);
  state.net = fit(state.config.shape, training, state.config.train, net_rng);

  state.metrics.records.push_back(
      {t + 1, sampling_rate(state), evaluate(dataset, state.split, state.net)});

  const std::vector<SampleId> pool = state.remaining_pool();
  if (t + 1 >= state.config.iterations || pool.empty()) {
    state.phase = Phase::Finished;
    return state;
  }
  const std::size_t b = std::min(state.config.display_size, pool.size());
  std::vector<SampleId> labeled_ids;
  for (const auto& d : state.displays) labeled_ids.insert(labeled_ids.end(), d.begin(), d.end());
  RngStream select_rng = iteration_stream(state, t, kSelect);
  state.displays.push_back(select_display(state.config.strategy, state.net, dataset.points(pool),
                                          dataset.points(labeled_ids), b, select_rng));
  state.phase = Phase::AwaitingLabels;
  return state;
}

std::vector<Label> GroundTruthOracle::answer(std::span<const SampleId> display) {
  std::vector<Label> labels;
  labels.reserve(display.size());
  for (SampleId id : display) {
    const auto& label = dataset_.at(id).label;
    if (!label) {
      throw Error(ErrorKind::InvalidArgument,
                  "ground-truth oracle: sample " + std::to_string(id) + " is unlabeled");
    }
    labels.push_back(*label);
  }
  return labels;
}

Answers pair_answers(std::span<const SampleId> display, std::span<const Label> labels) {
  if (display.size() != labels.size()) {
    throw Error(ErrorKind::LabelMismatch, "one label per displayed sample required");
  }
  Answers out;
  out.reserve(display.size());
  for (std::size_t i = 0; i < display.size(); ++i) out.emplace_back(display[i], labels[i]);
  return out;
}

SessionState run_session(const Dataset& dataset, const SessionConfig& config, Oracle& oracle) {
  SessionState state = init_session(dataset, config);
  while (state.phase == Phase::AwaitingLabels) {
    const Display display = state.current_display();
    state = submit_labels(dataset, std::move(state), pair_answers(display, oracle.answer(display)));
  }
  return state;
}

MetricsHistory run_simulated(const Dataset& dataset, const SessionConfig& config, Oracle& oracle) {
  return run_session(dataset, config, oracle).metrics;
}

double supervised_eer(const Dataset& dataset, const SessionConfig& config) {
  validate(config);
  const RngStream root(config.seed);
  Split split;
  if (dataset.split()) {
    split = *dataset.split();
  } else {
    RngStream split_rng = root.split(kSplitStream);
    split = *split_half(dataset, split_rng).split();
  }
  LabeledSet train;
  for (SampleId id : split.train) {
    const auto& s = dataset.at(id);
    if (!s.label) throw Error(ErrorKind::InvalidArgument, "supervised_eer: unlabeled train sample");
    train.push_back({s.features, *s.label});
  }
  RngStream init_rng = root.split(kSupervisedStream);
  const InvertibleNet net = fit(config.shape, train, config.train, init_rng);
  const auto eer = evaluate(dataset, split, net);
  if (!eer) throw Error(ErrorKind::UndefinedMetric, "supervised_eer: evaluation half lacks a class");
  return *eer;
}

}  // namespace frugal
