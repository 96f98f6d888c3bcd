#pragma once

#include "frugal/alloop.hpp"
#include "frugal/dataio.hpp"
#include "frugal/error.hpp"
#include "frugal/persist.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace frugal {

inline constexpr const char* kStateDirEnv = "FRUGALCD_STATE_DIR";

/// The state directory: $FRUGALCD_STATE_DIR when set, `requested` otherwise.
std::filesystem::path resolve_state_dir(const std::filesystem::path& requested);

/// HTTP status for a library error kind.
int http_status(ErrorKind kind) noexcept;

/// Datasets sessions may refer to: files loaded at startup, addressed by file
/// stem, plus synthetic datasets generated on demand and cached by config.
class DatasetRegistry {
public:
  using Handle = std::shared_ptr<const Dataset>;

  /// Loads `path`, attaching `<path>.split` when that sidecar exists.
  Handle load_file(const std::filesystem::path& path);
  void add(const std::string& name, Handle dataset);

  Handle get(const std::string& name) const;
  Handle synth(const SynthConfig& config);
  std::vector<std::string> names() const;

private:
  mutable std::mutex mutex_;
  std::map<std::string, Handle> named_;
  std::map<std::string, Handle> synthetic_;
};

SynthConfig synth_config_from_json(const Json& doc);
Json to_json(const SynthConfig& config);

/// Transport-independent session API. Every mutation is persisted as one JSON
/// document per session before it becomes visible to readers.
class SessionService {
public:
  SessionService(DatasetRegistry& datasets, std::filesystem::path state_dir);
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  /// Body: {"dataset": name | {"synth": {...}}, "config": {...}}. The dataset
  /// may be omitted when exactly one file is loaded.
  Json create(const Json& request);
  Json info(const std::string& id) const;
  /// Throws a Phase error once the session is finished.
  Json display(const std::string& id) const;
  /// Body: {"labels": [{"id": ..., "label": +1 | -1}, ...]}. A submit that
  /// overlaps another one on the same session fails with Conflict.
  Json submit(const std::string& id, const Json& body);
  Json metrics(const std::string& id) const;
  std::vector<std::uint8_t> patch_png(const std::string& id, SampleId sample,
                                      std::string_view which) const;

  std::vector<std::string> session_ids() const;
  const std::filesystem::path& state_dir() const noexcept { return state_dir_; }

private:
  struct Snapshot;
  struct Entry;

  std::shared_ptr<Entry> entry(const std::string& id) const;
  std::shared_ptr<const Snapshot> snapshot(const std::string& id) const;
  void persist(const std::string& id, const Snapshot& snap) const;
  Json display_payload(const std::string& id, const Snapshot& snap) const;
  std::string new_id();

  DatasetRegistry& datasets_;
  std::filesystem::path state_dir_;
  mutable std::shared_mutex sessions_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mutex id_mutex_;
  std::uint64_t id_counter_ = 0;
  std::uint64_t id_salt_ = 0;
};

/// JSON-over-HTTP front end for a SessionService.
class HttpServer {
public:
  explicit HttpServer(SessionService& service,
                      std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~HttpServer();

  /// Binds without serving; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); requires a successful bind().
  void listen();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace frugal
