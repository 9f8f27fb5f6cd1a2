#pragma once

// HTTP + server-sent-events front end for SessionManager.
//
//   POST   /sessions                      create a class        -> {"id"}
//   GET    /sessions                      list sessions
//   GET    /sessions/{id}                 current snapshot
//   DELETE /sessions/{id}                 drop a session
//   POST   /sessions/{id}/advance         {"dt"} or {"real_seconds"} -> snapshot
//   POST   /sessions/{id}/control         {"u", "teaching"}     -> control event
//   POST   /sessions/{id}/quiz            {"theta"}             -> quiz result
//   POST   /sessions/{id}/run             {"running", "speed"?} -> session info
//   GET    /sessions/{id}/score           teacher grade report
//   GET    /sessions/{id}/history?student=ID
//   GET    /sessions/{id}/stream          text/event-stream of world/snapshot/control/quiz
//
// Bodies are JSON. Errors come back as {"error": "..."} with 400 (invalid
// input) or 404 (unknown session or student).

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "didactic/config.hpp"
#include "didactic/session.hpp"

namespace didactic {

inline json to_json(const TeachingControl& c) { return json{{"u", c.u}, {"teaching", c.teaching}}; }

inline json to_json(const Snapshot& s) {
  json students = json::array();
  for (const auto& st : s.students)
    students.push_back({{"id", st.id}, {"z", st.z}, {"total", st.total}, {"strength", st.strength}});
  return json{{"session", s.session}, {"clock", s.clock}, {"control", to_json(s.control)}, {"students", students}};
}

inline json to_json(const ControlEvent& e) { return json{{"t", e.t}, {"control", to_json(e.control)}}; }

inline json to_json(const QuizResult& q) {
  json students = json::array();
  for (const auto& e : q.students)
    students.push_back({{"id", e.student},
                        {"z", e.z},
                        {"probability", e.probability},
                        {"outcome", e.passed ? "passed" : "failed"},
                        {"score", e.score}});
  return json{{"t", q.t}, {"theta", q.theta}, {"pass_rate", q.pass_rate}, {"students", students}};
}

inline json to_json(const ScoreReport& r) {
  json rates = json::array();
  for (const auto& [t, p] : r.quiz_pass_rates) rates.push_back({{"t", t}, {"pass_rate", p}});
  return json{{"clock", r.clock},
              {"mean_z", r.mean_z},
              {"mean_strength", r.mean_strength},
              {"max_u", r.max_u},
              {"quiz_pass_rate", r.quiz_pass_rate},
              {"quiz_pass_rates", rates},
              {"weights", {{"z", r.weights.z}, {"strength", r.weights.strength}, {"quiz", r.weights.quiz}}},
              {"grade", r.grade}};
}

inline json to_json(const SessionInfo& i) {
  return json{{"id", i.id},
              {"clock", i.clock},
              {"students", i.students},
              {"running", i.running},
              {"control", to_json(i.control)}};
}

inline json to_json(const StreamMessage& m) {
  json payload = std::visit([](const auto& p) { return to_json(p); }, m.payload);
  return json{{"type", to_string(m.type)}, {"seq", m.seq}, {"clock", m.clock}, {"data", payload}};
}

inline json to_json(const SessionConfig& c) {
  json students = json::array();
  for (const auto& s : c.students)
    students.push_back({{"id", s.id}, {"params", params_to_json(s.params)}, {"initial_state", s.initial_state}});
  return json{{"model", to_string(c.model)},
              {"students", students},
              {"speed", c.speed},
              {"seed", c.seed},
              {"integrator", integrator_to_json(c.integrator)},
              {"history_cap", c.history_cap},
              {"weights", {{"z", c.weights.z}, {"strength", c.weights.strength}, {"quiz", c.weights.quiz}}},
              {"consolidate_on_pass", c.consolidate_on_pass},
              {"consolidation_time", c.consolidation_time}};
}

/// Parse a class description. Throws ConfigError with field paths.
inline SessionConfig parse_session_config(const json& doc) {
  std::vector<ConfigIssue> issues;
  detail::FieldReader r(doc, "", issues);
  if (!r.ok()) throw ConfigError(std::move(issues));
  SessionConfig cfg;
  if (auto m = r.get<std::string>("model", false)) {
    if (auto k = detail::parse_model_kind(*m)) cfg.model = *k;
    else r.issue("model", "expected one of two, three, four, general");
  }
  if (r.has("students")) {
    const json& arr = r.raw("students");
    if (!arr.is_array() || arr.empty()) {
      r.issue("students", "expected a non-empty array");
    } else {
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string path = "students[" + std::to_string(i) + "]";
        detail::FieldReader sr(arr[i], path, issues);
        if (!sr.ok()) continue;
        StudentSpec s;
        s.id = sr.get<std::string>("id", false).value_or("s" + std::to_string(i + 1));
        std::optional<ModelParams> p;
        if (sr.has("params")) p = parse_params(sr.raw("params"), path + ".params", issues);
        else sr.issue("params", "missing required field");
        s.initial_state = sr.get<std::vector<double>>("initial_state", false).value_or(std::vector<double>{});
        sr.reject_unknown();
        if (p) s.params = *p;
        cfg.students.push_back(std::move(s));
      }
    }
  } else {
    r.issue("students", "missing required field");
  }
  cfg.speed = r.get<double>("speed", false).value_or(cfg.speed);
  cfg.seed = r.get<std::uint64_t>("seed", false).value_or(cfg.seed);
  if (r.has("integrator")) {
    if (auto ic = parse_integrator(r.raw("integrator"), "integrator", issues)) cfg.integrator = *ic;
  }
  cfg.history_cap = r.get<std::size_t>("history_cap", false).value_or(cfg.history_cap);
  if (r.has("weights")) {
    detail::FieldReader w(r.raw("weights"), "weights", issues);
    if (w.ok()) {
      cfg.weights.z = w.get<double>("z", false).value_or(cfg.weights.z);
      cfg.weights.strength = w.get<double>("strength", false).value_or(cfg.weights.strength);
      cfg.weights.quiz = w.get<double>("quiz", false).value_or(cfg.weights.quiz);
      if (!(cfg.weights.z >= 0 && cfg.weights.strength >= 0 && cfg.weights.quiz >= 0))
        w.issue("", "weights must be >= 0");
      w.reject_unknown();
    }
  }
  cfg.consolidate_on_pass = r.get<bool>("consolidate_on_pass", false).value_or(false);
  cfg.consolidation_time = r.get<double>("consolidation_time", false).value_or(0.0);
  r.reject_unknown();
  if (!issues.empty()) throw ConfigError(std::move(issues));
  try {
    Session::validate(cfg);
  } catch (const std::exception& e) {
    throw ConfigError(std::vector<ConfigIssue>{{"", e.what()}});
  }
  return cfg;
}

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  double tick_hz = 10.0;  // 0 disables the real-time ticker
  std::string static_dir;  // served at / when set (trainer UI assets)
  std::string snapshot_dir;  // periodic session dumps when set
  double snapshot_every = 5.0;  // seconds
};

/// Dump of one session for crash recovery.
inline json session_dump(const Session& s) {
  return json{{"id", s.id()}, {"config", to_json(s.config())}, {"snapshot", to_json(s.snapshot())}, {"max_u", s.max_u()}};
}

/// Recreate a session from `session_dump` output.
inline std::string restore_session(SessionManager& mgr, const json& dump) {
  SessionConfig cfg = parse_session_config(dump.at("config"));
  auto s = mgr.create_with_id(dump.at("id").get<std::string>(), std::move(cfg));
  const json& sj = dump.at("snapshot");
  Snapshot snap;
  snap.session = s->id();
  snap.clock = sj.at("clock").get<double>();
  snap.control = {sj.at("control").at("teaching").get<bool>(), sj.at("control").at("u").get<double>()};
  for (const auto& st : sj.at("students"))
    snap.students.push_back({st.at("id").get<std::string>(), st.at("z").get<std::vector<double>>(), 0.0, 0.0});
  s->restore(snap, dump.value("max_u", 0.0));
  return s->id();
}

class SessionServer {
 public:
  SessionServer(SessionManager& mgr, ServerOptions opts) : mgr_(mgr), opts_(std::move(opts)) { routes(); }

  ~SessionServer() { stop(); }

  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  /// Bind and serve on background threads; returns the bound port.
  int start() {
    if (opts_.port == 0) port_ = server_.bind_to_any_port(opts_.host);
    else port_ = server_.bind_to_port(opts_.host, opts_.port) ? opts_.port : -1;
    if (port_ <= 0) throw std::runtime_error("cannot bind " + opts_.host + ":" + std::to_string(opts_.port));
    stopping_ = false;
    listener_ = std::thread([this] { server_.listen_after_bind(); });
    if (opts_.tick_hz > 0.0 || !opts_.snapshot_dir.empty()) ticker_ = std::thread([this] { tick_loop(); });
    return port_;
  }

  void stop() {
    if (stopping_.exchange(true)) return;
    for (const auto& info : mgr_.list()) {
      try {
        mgr_.get(info.id)->close_subscribers();
      } catch (const NotFoundError&) {
      }
    }
    server_.stop();
    if (listener_.joinable()) listener_.join();
    if (ticker_.joinable()) ticker_.join();
  }

  int port() const noexcept { return port_; }

  /// Write one JSON file per session into `dir`.
  void write_snapshots(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& info : mgr_.list()) {
      try {
        const auto s = mgr_.get(info.id);
        const auto tmp = dir / (info.id + ".json.tmp");
        {
          std::ofstream out(tmp, std::ios::trunc);
          out << session_dump(*s).dump(1) << '\n';
        }
        std::filesystem::rename(tmp, dir / (info.id + ".json"));
      } catch (const NotFoundError&) {
      }
    }
  }

 private:
  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <class Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const NotFoundError& e) {
        reply(res, 404, {{"error", e.what()}});
      } catch (const ConfigError& e) {
        json issues = json::array();
        for (const auto& i : e.issues()) issues.push_back({{"path", i.path}, {"message", i.message}});
        reply(res, 400, {{"error", "invalid request"}, {"issues", issues}});
      } catch (const json::exception& e) {
        reply(res, 400, {{"error", std::string("malformed body: ") + e.what()}});
      } catch (const std::invalid_argument& e) {
        reply(res, 400, {{"error", e.what()}});
      } catch (const std::domain_error& e) {
        reply(res, 400, {{"error", e.what()}});
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", e.what()}});
      }
    };
  }

  static json body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body);
    if (!j.is_object()) throw std::invalid_argument("request body must be a JSON object");
    return j;
  }

  static double number(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) throw std::invalid_argument(std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
  }

  void routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
    if (!opts_.static_dir.empty()) server_.set_mount_point("/", opts_.static_dir);

    server_.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = mgr_.create(parse_session_config(body(req)));
      reply(res, 201, {{"id", id}});
    }));
    server_.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      json arr = json::array();
      for (const auto& i : mgr_.list()) arr.push_back(to_json(i));
      reply(res, 200, arr);
    }));
    server_.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, to_json(mgr_.get(req.matches[1])->snapshot()));
    }));
    server_.Delete(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!mgr_.remove(req.matches[1])) throw NotFoundError("unknown session '" + std::string(req.matches[1]) + "'");
      reply(res, 200, {{"deleted", std::string(req.matches[1])}});
    }));
    server_.Post(R"(/sessions/([^/]+)/advance)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json j = body(req);
      const std::string id = req.matches[1];
      if (j.contains("dt") == j.contains("real_seconds"))
        throw std::invalid_argument("give exactly one of 'dt' (simulated) or 'real_seconds'");
      const Snapshot s = j.contains("dt") ? mgr_.advance(id, number(j, "dt"))
                                          : mgr_.advance_real(id, number(j, "real_seconds"));
      reply(res, 200, to_json(s));
    }));
    server_.Post(R"(/sessions/([^/]+)/control)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json j = body(req);
      const std::string id = req.matches[1];
      auto session = mgr_.get(id);
      const bool teaching = j.contains("teaching") ? j.at("teaching").get<bool>() : session->info().control.teaching;
      const double u = j.contains("u") ? number(j, "u") : session->info().control.u;
      reply(res, 200, to_json(session->set_control(u, teaching)));
    }));
    server_.Post(R"(/sessions/([^/]+)/quiz)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json j = body(req);
      reply(res, 200, to_json(mgr_.give_quiz(req.matches[1], number(j, "theta"))));
    }));
    server_.Post(R"(/sessions/([^/]+)/run)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json j = body(req);
      auto session = mgr_.get(req.matches[1]);
      if (j.contains("speed")) session->set_speed(number(j, "speed"));
      if (j.contains("running")) session->set_running(j.at("running").get<bool>());
      reply(res, 200, to_json(session->info()));
    }));
    server_.Get(R"(/sessions/([^/]+)/score)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, to_json(mgr_.score_teacher(req.matches[1])));
    }));
    server_.Get(R"(/sessions/([^/]+)/history)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_param("student")) throw std::invalid_argument("query parameter 'student' is required");
      json arr = json::array();
      for (const auto& h : mgr_.get(req.matches[1])->history(req.get_param_value("student")))
        arr.push_back({{"t", h.t}, {"u", h.u}, {"teaching", h.teaching}, {"z", h.z}, {"strength", h.strength}});
      reply(res, 200, arr);
    }));
    server_.Get(R"(/sessions/([^/]+)/stream)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto sub = mgr_.stream_updates(req.matches[1]);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream",
          [this, sub](std::size_t, httplib::DataSink& sink) {
            while (!stopping_ && !sub->closed()) {
              auto msg = sub->pop(std::chrono::milliseconds(200));
              if (!msg) {
                if (!sink.is_writable()) break;
                continue;
              }
              const std::string frame =
                  "event: " + std::string(to_string(msg->type)) + "\ndata: " + to_json(*msg).dump() + "\n\n";
              if (!sink.write(frame.data(), frame.size())) break;
            }
            sub->close();
            sink.done();
            return true;
          },
          [sub](bool) { sub->close(); });
    }));
  }

  void tick_loop() {
    using clock = std::chrono::steady_clock;
    const double hz = opts_.tick_hz > 0.0 ? opts_.tick_hz : 10.0;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / hz));
    auto next = clock::now() + period;
    auto last_dump = clock::now();
    while (!stopping_) {
      std::this_thread::sleep_until(next);
      next += period;
      if (opts_.tick_hz > 0.0) {
        mgr_.tick(1.0 / hz);
      }
      if (!opts_.snapshot_dir.empty() &&
          std::chrono::duration<double>(clock::now() - last_dump).count() >= opts_.snapshot_every) {
        last_dump = clock::now();
        try {
          write_snapshots(opts_.snapshot_dir);
        } catch (const std::exception&) {
        }
      }
    }
  }

  SessionManager& mgr_;
  ServerOptions opts_;
  httplib::Server server_;
  std::thread listener_;
  std::thread ticker_;
  std::atomic<bool> stopping_{true};
  int port_ = -1;
};

}  // namespace didactic
