#include "httplib.h"
#include "hier/io.hpp"
#include "hier/session.hpp"

namespace hier {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception&) {
    throw SessionError(SessionError::Kind::BadRequest, "request body is not valid JSON");
  }
}

template <class Handler>
auto guarded(Handler h) {
  return [h](const httplib::Request& req, httplib::Response& res) {
    try {
      h(req, res);
    } catch (const SessionError& e) {
      send_json(res, e.http_status(), {{"error", e.what()}});
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", std::string("bad request: ") + e.what()}});
    } catch (const std::invalid_argument& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}});
    }
  };
}

json tree_view(const Session& s) {
  return {{"newick", to_newick(s.tree())},
          {"json", to_json_tree(s.tree())},
          {"queries", s.log().total()},
          {"placed", s.placed()},
          {"total", s.elements().size()},
          {"state", to_string(s.state())}};
}

}  // namespace

SessionServer::SessionServer(SessionStore& store, NoisyConstants constants)
    : store_(&store), constants_(constants), server_(std::make_unique<httplib::Server>()) {
  routes();
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::routes() {
  auto& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             if (!body.is_object() || !body.contains("elements") || !body.at("elements").is_array()) {
               throw SessionError(SessionError::Kind::BadRequest, "elements must be an array of labels");
             }
             SessionOptions opt;
             opt.constants = constants_;
             if (body.contains("mode")) opt.mode = parse_session_mode(body.at("mode").get<std::string>());
             if (body.contains("p") && !body.at("p").is_null()) opt.p = body.at("p").get<double>();
             if (body.contains("delta") && !body.at("delta").is_null()) opt.delta = body.at("delta").get<double>();
             const std::string id = store_->create(body.at("elements").get<std::vector<ElementId>>(), opt);
             const auto state = store_->read(id, [](const Session& s) { return s.state(); });
             send_json(res, 201, {{"id", id}, {"state", to_string(state)}});
           }));

  srv.Get(R"(/sessions/([^/]+)/query)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const json out = store_->read(req.matches[1], [](const Session& s) -> json {
              const auto t = s.next_query();
              if (!t) return {{"done", true}};
              const auto& m = t->members();
              return {{"triplet", {m[0], m[1], m[2]}}, {"index", s.answered()}, {"done", false}};
            });
            send_json(res, 200, out);
          }));

  srv.Post(R"(/sessions/([^/]+)/answer)", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             if (!body.is_object() || !body.contains("pair") || !body.at("pair").is_array() ||
                 body.at("pair").size() != 2) {
               throw SessionError(SessionError::Kind::InvalidPair, "pair must be an array of two labels");
             }
             const auto a = body.at("pair").at(0).get<std::string>();
             const auto b = body.at("pair").at(1).get<std::string>();
             if (a == b) throw SessionError(SessionError::Kind::InvalidPair, "pair members must differ");
             std::optional<std::size_t> index;
             if (body.contains("index")) index = body.at("index").get<std::size_t>();
             const json out = store_->write(req.matches[1], [&](Session& s) -> json {
               if (s.done()) throw SessionError(SessionError::Kind::NoPendingQuery, "no pending query");
               // An index that is not the pending one is a replayed or stale answer.
               if (index && *index != s.answered()) {
                 throw SessionError(SessionError::Kind::NoPendingQuery, "query " + std::to_string(*index) +
                                                                            " is not pending");
               }
               const auto state = s.answer(TripletAnswer(a, b));
               return {{"state", to_string(state)},
                       {"queries", s.log().total()},
                       {"placed", s.placed()},
                       {"total", s.elements().size()}};
             });
             send_json(res, 200, out);
           }));

  srv.Get(R"(/sessions/([^/]+)/tree)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, store_->read(req.matches[1], [](const Session& s) { return tree_view(s); }));
          }));
}

bool SessionServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int SessionServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) return -1;
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void SessionServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace hier
