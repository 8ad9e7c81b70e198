#include "hier/session.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "hier/io.hpp"

namespace hier {

namespace fs = std::filesystem;

const char* to_string(SessionMode m) { return m == SessionMode::Noisy ? "noisy" : "noiseless"; }

SessionMode parse_session_mode(const std::string& s) {
  if (s == "noiseless") return SessionMode::Noiseless;
  if (s == "noisy") return SessionMode::Noisy;
  throw SessionError(SessionError::Kind::BadRequest, "mode must be \"noiseless\" or \"noisy\"");
}

const char* to_string(SessionState s) {
  switch (s) {
    case SessionState::AwaitingAnswer: return "awaiting_answer";
    case SessionState::Idle: return "idle";
    case SessionState::Done: return "done";
  }
  return "?";
}

void SessionOptions::validate() const {
  if (mode == SessionMode::Noiseless) return;
  if (!(p > 0.5 && p <= 1.0)) throw SessionError(SessionError::Kind::BadRequest, "p must lie in (0.5, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw SessionError(SessionError::Kind::BadRequest, "delta must lie in (0, 1)");
  if (!(constants.c_rounds > 0) || !(constants.c_keep > 0)) {
    throw SessionError(SessionError::Kind::BadRequest, "constants must be positive");
  }
}

int SessionError::http_status() const {
  switch (kind_) {
    case Kind::BadRequest: return 400;
    case Kind::NotFound: return 404;
    case Kind::NoPendingQuery: return 409;
    case Kind::InvalidPair: return 422;
    case Kind::Corrupt: return 500;
  }
  return 500;
}

// ---------------------------------------------------------------------------
// Session

Session::Session(std::string id, std::vector<ElementId> elements, SessionOptions options)
    : id_(std::move(id)), elements_(std::move(elements)), options_(options) {
  using K = SessionError::Kind;
  if (elements_.empty()) throw SessionError(K::BadRequest, "elements must not be empty");
  std::set<ElementId> seen;
  for (const auto& e : elements_) {
    if (!is_newick_label(e)) throw SessionError(K::BadRequest, "invalid element label: \"" + e + "\"");
    if (!seen.insert(e).second) throw SessionError(K::BadRequest, "duplicate element: " + e);
  }
  options_.validate();
  if (options_.mode == SessionMode::Noisy) {
    robust_cfg_ = RobustConfig::make(options_.p, options_.delta / static_cast<double>(elements_.size()),
                                     options_.constants);
  }

  if (elements_.size() == 1) {
    tree_ = std::make_unique<BinaryHierarchy>(elements_[0]);
    next_ = 1;
    return;
  }
  tree_ = std::make_unique<BinaryHierarchy>(BinaryHierarchy::pair(elements_[0], elements_[1]));
  next_ = 2;
  if (next_ < elements_.size()) start_search();
}

SessionState Session::state() const {
  if (next_ >= elements_.size()) return SessionState::Done;
  return (exact_ || robust_) ? SessionState::AwaitingAnswer : SessionState::Idle;
}

void Session::start_search() {
  exact_.reset();
  robust_.reset();
  if (options_.mode == SessionMode::Noiseless) {
    exact_.emplace(*tree_);
  } else {
    robust_.emplace(*tree_, *robust_cfg_);
  }
}

NodeId Session::pivot() const { return exact_ ? exact_->pivot() : robust_->pivot(); }

std::optional<Triplet> Session::next_query() const {
  if (state() != SessionState::AwaitingAnswer) return std::nullopt;
  return pivot_triplet(*tree_, pivot(), current());
}

SessionState Session::answer(const TripletAnswer& pair) {
  const auto t = next_query();
  if (!t) throw SessionError(SessionError::Kind::NoPendingQuery, "no pending query");
  if (!pair.within(*t)) throw SessionError(SessionError::Kind::InvalidPair, "pair is not inside the pending triplet");
  step(interpret_pivot(*tree_, pivot(), current(), pair));
  transcript_.push_back(pair);
  log_.record(options_.mode == SessionMode::Noiseless ? "find_sibling" : "robust_find_sibling");
  return state();
}

void Session::step(PivotDirection d) {
  NodeId found = kNoNode;
  if (exact_) {
    try {
      exact_->apply(d);
    } catch (const std::invalid_argument& e) {
      throw SessionError(SessionError::Kind::InvalidPair, e.what());
    }
    if (exact_->done()) found = exact_->result();
  } else {
    robust_->apply(d);
    if (robust_->done()) found = robust_->result();
  }
  if (found == kNoNode) return;
  exact_.reset();
  robust_.reset();
  tree_->insert_sibling(found, current());
  ++next_;
  if (next_ < elements_.size()) start_search();
}

nlohmann::json Session::snapshot() const {
  nlohmann::json j;
  j["version"] = kSnapshotVersion;
  j["id"] = id_;
  j["elements"] = elements_;
  j["mode"] = to_string(options_.mode);
  j["p"] = options_.p;
  j["delta"] = options_.delta;
  j["constants"] = {{"c_rounds", options_.constants.c_rounds}, {"c_keep", options_.constants.c_keep}};
  auto& answers = j["answers"] = nlohmann::json::array();
  for (const auto& a : transcript_) answers.push_back({a.first(), a.second()});
  j["tree"] = to_state_json(*tree_);
  j["state"] = to_string(state());
  j["queries"] = log_.total();
  return j;
}

std::unique_ptr<Session> Session::restore(const nlohmann::json& j) {
  using K = SessionError::Kind;
  std::unique_ptr<Session> s;
  try {
    if (j.at("version").get<int>() != kSnapshotVersion) throw SessionError(K::Corrupt, "unsupported snapshot version");
    SessionOptions opt;
    opt.mode = parse_session_mode(j.at("mode").get<std::string>());
    opt.p = j.at("p").get<double>();
    opt.delta = j.at("delta").get<double>();
    opt.constants.c_rounds = j.at("constants").at("c_rounds").get<double>();
    opt.constants.c_keep = j.at("constants").at("c_keep").get<double>();
    s = std::make_unique<Session>(j.at("id").get<std::string>(), j.at("elements").get<std::vector<ElementId>>(), opt);
    for (const auto& a : j.at("answers")) {
      s->answer(TripletAnswer(a.at(0).get<std::string>(), a.at(1).get<std::string>()));
    }
  } catch (const SessionError& e) {
    throw SessionError(K::Corrupt, std::string("snapshot replay failed: ") + e.what());
  } catch (const std::exception& e) {
    throw SessionError(K::Corrupt, std::string("malformed snapshot: ") + e.what());
  }
  if (to_state_json(*s->tree_) != j.at("tree")) throw SessionError(K::Corrupt, "replayed tree differs from snapshot");
  return s;
}

// ---------------------------------------------------------------------------
// SessionStore

namespace {

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
  }
  return true;
}

}  // namespace

SessionStore::SessionStore(fs::path dir, std::uint64_t seed) : dir_(std::move(dir)) {
  if (seed == 0) seed = (std::uint64_t{std::random_device{}()} << 32) ^ std::random_device{}();
  id_rng_ = make_rng(seed);
  if (!dir_.empty()) fs::create_directories(dir_);
}

std::string SessionStore::fresh_id() {
  static const char* hex = "0123456789abcdef";
  while (true) {
    std::uint64_t x = id_rng_();
    std::string id(16, '0');
    for (auto& c : id) {
      c = hex[x & 15];
      x >>= 4;
    }
    if (sessions_.contains(id)) continue;
    if (!dir_.empty() && fs::exists(dir_ / (id + ".json"))) continue;
    return id;
  }
}

std::string SessionStore::create(std::vector<ElementId> elements, const SessionOptions& options) {
  std::string id;
  auto e = std::make_shared<Entry>();
  {
    std::lock_guard lock(mutex_);
    id = fresh_id();
    e->session = std::make_unique<Session>(id, std::move(elements), options);
    sessions_.emplace(id, e);
  }
  std::unique_lock lock(e->mutex);
  persist(*e->session);
  return id;
}

std::shared_ptr<SessionStore::Entry> SessionStore::entry(const std::string& id) {
  std::lock_guard lock(mutex_);
  if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
  if (dir_.empty() || !valid_id(id)) throw SessionError(SessionError::Kind::NotFound, "unknown session: " + id);
  const fs::path path = dir_ / (id + ".json");
  std::ifstream in(path);
  if (!in) throw SessionError(SessionError::Kind::NotFound, "unknown session: " + id);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw SessionError(SessionError::Kind::Corrupt, "unreadable snapshot " + path.string() + ": " + ex.what());
  }
  auto e = std::make_shared<Entry>();
  e->session = Session::restore(j);
  sessions_.emplace(id, e);
  return e;
}

void SessionStore::persist(const Session& s) const {
  if (dir_.empty()) return;
  const fs::path path = dir_ / (s.id() + ".json");
  const fs::path tmp = dir_ / (s.id() + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << s.snapshot().dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

bool SessionStore::exists(const std::string& id) {
  try {
    entry(id);
    return true;
  } catch (const SessionError& e) {
    if (e.kind() == SessionError::Kind::NotFound) return false;
    throw;
  }
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

}  // namespace hier
