#pragma once

// Resumable insertion sessions driven by external answers, a file-backed
// session store, and the HTTP front end.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "hier/hierarchy.hpp"
#include "hier/noiseless.hpp"
#include "hier/noisy.hpp"
#include "hier/oracles.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace hier {

inline constexpr int kSnapshotVersion = 1;

enum class SessionMode { Noiseless, Noisy };

const char* to_string(SessionMode m);
SessionMode parse_session_mode(const std::string& s);

struct SessionOptions {
  SessionMode mode = SessionMode::Noiseless;
  double p = 0.9;
  double delta = 0.1;
  NoisyConstants constants;

  void validate() const;
};

enum class SessionState { AwaitingAnswer, Idle, Done };

const char* to_string(SessionState s);

class SessionError : public std::runtime_error {
 public:
  enum class Kind { BadRequest, NotFound, NoPendingQuery, InvalidPair, Corrupt };

  SessionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }
  int http_status() const;

 private:
  Kind kind_;
};

// One insertion run suspended between oracle calls. Elements are inserted in
// the given order; each answer advances the current sibling search by one
// step.
class Session {
 public:
  Session(std::string id, std::vector<ElementId> elements, SessionOptions options);
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }
  const std::vector<ElementId>& elements() const { return elements_; }
  const SessionOptions& options() const { return options_; }
  SessionState state() const;
  bool done() const { return state() == SessionState::Done; }

  // The pending triplet, or nullopt once done. Repeated calls return the same
  // triplet until it is answered.
  std::optional<Triplet> next_query() const;
  // Number of answers accepted so far; also the index of the pending query.
  std::size_t answered() const { return transcript_.size(); }
  // Throws SessionError: NoPendingQuery when done, InvalidPair when the pair
  // is not inside the pending triplet. State is unchanged on error.
  SessionState answer(const TripletAnswer& pair);

  const BinaryHierarchy& tree() const { return *tree_; }
  std::size_t placed() const { return tree_->leaf_count(); }
  const QueryLog& log() const { return log_; }
  const std::vector<TripletAnswer>& transcript() const { return transcript_; }

  // Versioned snapshot; restore() replays the transcript and checks the tree.
  nlohmann::json snapshot() const;
  static std::unique_ptr<Session> restore(const nlohmann::json& j);

 private:
  void start_search();
  ElementId current() const { return elements_[next_]; }
  NodeId pivot() const;
  void step(PivotDirection d);

  std::string id_;
  std::vector<ElementId> elements_;
  SessionOptions options_;
  std::unique_ptr<BinaryHierarchy> tree_;  // searches keep a pointer to it
  std::size_t next_ = 0;
  std::optional<SiblingSearch> exact_;
  std::optional<RobustSiblingSearch> robust_;
  std::optional<RobustConfig> robust_cfg_;
  QueryLog log_;
  std::vector<TripletAnswer> transcript_;
};

// Sessions keyed by id. With a directory every mutation is written through
// to <dir>/<id>.json and unknown ids are looked up on disk, so sessions
// survive restarts. Operations on one session are serialised; different
// sessions proceed independently.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir = {}, std::uint64_t seed = 0);

  std::string create(std::vector<ElementId> elements, const SessionOptions& options);

  // f(const Session&) under a shared lock.
  template <class F>
  auto read(const std::string& id, F&& f) {
    auto e = entry(id);
    std::shared_lock lock(e->mutex);
    return f(static_cast<const Session&>(*e->session));
  }

  // f(Session&) under an exclusive lock; the session is persisted once f
  // returns.
  template <class F>
  auto write(const std::string& id, F&& f) {
    auto e = entry(id);
    std::unique_lock lock(e->mutex);
    if constexpr (std::is_void_v<decltype(f(*e->session))>) {
      f(*e->session);
      persist(*e->session);
    } else {
      auto out = f(*e->session);
      persist(*e->session);
      return out;
    }
  }

  bool exists(const std::string& id);
  std::size_t size() const;
  const std::filesystem::path& directory() const { return dir_; }

 private:
  struct Entry {
    std::shared_mutex mutex;
    std::unique_ptr<Session> session;
  };

  std::shared_ptr<Entry> entry(const std::string& id);
  void persist(const Session& s) const;
  std::string fresh_id();

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  Rng id_rng_;
};

// HTTP+JSON front end:
//   POST /sessions              {elements, mode, p?, delta?} -> {id}
//   GET  /sessions/{id}/query   -> {triplet, index} | {done: true}
//   POST /sessions/{id}/answer  {pair, index?} -> {state, ...}
//   GET  /sessions/{id}/tree    -> {newick, json, queries, ...}
class SessionServer {
 public:
  // New noisy sessions use `constants`.
  explicit SessionServer(SessionStore& store, NoisyConstants constants = NoisyConstants::calibrated());
  ~SessionServer();

  // Blocking.
  bool listen(const std::string& host, int port);
  // Non-blocking: binds (port 0 picks a free one), serves on a background
  // thread, and returns the bound port or -1.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

 private:
  void routes();

  SessionStore* store_;
  NoisyConstants constants_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace hier
