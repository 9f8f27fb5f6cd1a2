#pragma once

// Live, steerable class simulations for teacher training. A session holds
// a class of simulated students that share one clock; an operator sets the
// requirement level and lesson/break flag, gives quizzes, and is graded.

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "didactic/integrator.hpp"
#include "didactic/model.hpp"
#include "didactic/rasch.hpp"

namespace didactic {

class NotFoundError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct StudentSpec {
  std::string id;
  ModelParams params;
  std::vector<double> initial_state;
};

/// Weights of the teacher grade
/// 100 * (z * mean Z / max U + strength * mean strength + quiz * pass rate).
struct GradeWeights {
  double z = 0.5;
  double strength = 0.3;
  double quiz = 0.2;

  bool operator==(const GradeWeights&) const = default;
};

struct SessionConfig {
  ModelKind model = ModelKind::four;
  std::vector<StudentSpec> students;
  double speed = 1.0;  // simulated time per real second
  std::uint64_t seed = 0;
  IntegratorConfig integrator{0.01, Method::rk4, 1};
  std::size_t history_cap = 10000;
  GradeWeights weights;
  // Off by default: a quiz only measures. When on, students who pass spend
  // `consolidation_time` consolidating while the rest follow the control.
  bool consolidate_on_pass = false;
  double consolidation_time = 0.0;
};

struct StudentSnapshot {
  std::string id;
  std::vector<double> z;
  double total = 0.0;
  double strength = 0.0;
};

struct Snapshot {
  std::string session;
  double clock = 0.0;
  TeachingControl control;
  std::vector<StudentSnapshot> students;
};

struct ControlEvent {
  double t = 0.0;
  TeachingControl control;
};

struct QuizEntry {
  std::string student;
  double z = 0.0;
  double probability = 0.0;
  bool passed = false;
  double score = 0.0;  // 1 for a pass, 0 otherwise
};

struct QuizResult {
  double t = 0.0;
  double theta = 0.0;
  std::vector<QuizEntry> students;
  double pass_rate = 0.0;
};

struct ScoreReport {
  double clock = 0.0;
  double mean_z = 0.0;
  double mean_strength = 0.0;
  double max_u = 0.0;
  double quiz_pass_rate = 0.0;
  std::vector<std::pair<double, double>> quiz_pass_rates;  // (t, pass rate)
  GradeWeights weights;
  double grade = 0.0;
};

struct HistoryPoint {
  double t = 0.0;
  double u = 0.0;
  bool teaching = false;
  std::vector<double> z;
  double strength = 0.0;
};

/// One message of the push stream. `world` is the state-of-world snapshot
/// every new subscriber receives first.
struct StreamMessage {
  enum class Type { world, snapshot, control, quiz };
  Type type = Type::snapshot;
  std::uint64_t seq = 0;
  double clock = 0.0;
  std::variant<Snapshot, ControlEvent, QuizResult> payload;
};

inline const char* to_string(StreamMessage::Type t) noexcept {
  switch (t) {
    case StreamMessage::Type::world: return "world";
    case StreamMessage::Type::snapshot: return "snapshot";
    case StreamMessage::Type::control: return "control";
    case StreamMessage::Type::quiz: return "quiz";
  }
  return "?";
}

/// Subscriber-side queue. Closing it ends only this subscription.
class Subscription {
 public:
  void push(StreamMessage m) {
    {
      std::lock_guard lk(mu_);
      if (closed_) return;
      queue_.push_back(std::move(m));
    }
    cv_.notify_all();
  }

  std::optional<StreamMessage> pop(std::chrono::milliseconds timeout) {
    std::unique_lock lk(mu_);
    cv_.wait_for(lk, timeout, [&] { return closed_ || !queue_.empty(); });
    if (queue_.empty()) return std::nullopt;
    StreamMessage m = std::move(queue_.front());
    queue_.pop_front();
    return m;
  }

  void close() {
    {
      std::lock_guard lk(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  bool closed() const {
    std::lock_guard lk(mu_);
    return closed_;
  }

  std::size_t pending() const {
    std::lock_guard lk(mu_);
    return queue_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<StreamMessage> queue_;
  bool closed_ = false;
};

struct SessionInfo {
  std::string id;
  double clock = 0.0;
  std::size_t students = 0;
  bool running = false;
  TeachingControl control;
};

namespace detail {

struct StudentRuntime {
  std::string id;
  Model model;
  std::vector<double> z;
  std::deque<HistoryPoint> history;
};

}  // namespace detail

/// One class simulation. All operations lock the session, so commands on
/// a session are applied one at a time.
class Session {
 public:
  Session(std::string id, SessionConfig cfg) : id_(std::move(id)), cfg_(std::move(cfg)), rng_(cfg_.seed) {
    validate(cfg_);
    for (const auto& s : cfg_.students) {
      detail::StudentRuntime rt{s.id, Model(cfg_.model, s.params), s.initial_state, {}};
      if (rt.z.empty()) rt.z.assign(rt.model.size(), 0.0);
      students_.push_back(std::move(rt));
    }
    for (auto& s : students_) record(s);
  }

  static void validate(const SessionConfig& cfg) {
    if (cfg.students.empty()) throw ContractError("a session needs at least one student");
    if (!(cfg.speed > 0.0) || !std::isfinite(cfg.speed)) throw DomainError("speed must be a finite value > 0");
    if (cfg.history_cap < 1) throw DomainError("history_cap must be >= 1");
    if (!(cfg.consolidation_time >= 0.0)) throw DomainError("consolidation_time must be >= 0");
    cfg.integrator.validate();
    std::map<std::string, int> seen;
    for (std::size_t i = 0; i < cfg.students.size(); ++i) {
      const auto& s = cfg.students[i];
      const std::string where = "students[" + std::to_string(i) + "]";
      if (s.id.empty()) throw ContractError(where + ".id must be non-empty");
      if (seen[s.id]++) throw ContractError(where + ".id '" + s.id + "' is duplicated");
      try {
        Model m(cfg.model, s.params);
        if (!s.initial_state.empty() && s.initial_state.size() != m.size()) {
          std::ostringstream os;
          os << where << ".initial_state has length " << s.initial_state.size() << " but params have length "
             << m.size();
          throw ContractError(os.str());
        }
        for (double v : s.initial_state)
          if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(where + ".initial_state entries must be >= 0");
      } catch (const ContractError& e) {
        throw ContractError(std::string(e.what()).rfind(where, 0) == 0 ? e.what() : where + ": " + e.what());
      }
    }
  }

  const std::string& id() const noexcept { return id_; }

  /// Integrate every student forward by `delta` simulated time units.
  Snapshot advance(double delta) {
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("advance delta must be a finite value >= 0");
    std::lock_guard lk(mu_);
    if (delta > 0.0) {
      const TeachingControl c = control_;
      for (auto& s : students_) {
        auto dyn = [&](std::span<const double> z, double, std::span<double> out) { s.model.rates(z, c, out); };
        s.z = propagate(s.z, dyn, clock_, clock_ + delta);
      }
      clock_ += delta;
      for (auto& s : students_) record(s);
    }
    Snapshot snap = snapshot_locked();
    publish(StreamMessage::Type::snapshot, snap);
    return snap;
  }

  Snapshot advance_real(double seconds) { return advance(seconds * speed()); }

  ControlEvent set_control(double u, bool teaching) {
    if (!(u >= 0.0) || !std::isfinite(u)) throw DomainError("u must be a finite value >= 0");
    std::lock_guard lk(mu_);
    // Breaks carry no requirement.
    control_ = TeachingControl{teaching, teaching ? u : 0.0};
    if (teaching) max_u_ = std::max(max_u_, u);
    ControlEvent ev{clock_, control_};
    control_log_.push_back(ev);
    publish(StreamMessage::Type::control, ev);
    return ev;
  }

  QuizResult give_quiz(double theta) {
    if (!std::isfinite(theta)) throw DomainError("theta must be finite");
    std::lock_guard lk(mu_);
    QuizResult q;
    q.t = clock_;
    q.theta = theta;
    std::size_t passed = 0;
    for (const auto& s : students_) {
      const double z = total_knowledge(s.z);
      const AttemptRecord a = attempt(z, theta, s.model.params.lambda(), rng_, clock_);
      q.students.push_back({s.id, z, a.probability, a.solved, a.solved ? 1.0 : 0.0});
      passed += a.solved ? 1 : 0;
    }
    q.pass_rate = static_cast<double>(passed) / static_cast<double>(students_.size());
    if (cfg_.consolidate_on_pass && cfg_.consolidation_time > 0.0) {
      const double t0 = clock_, t1 = clock_ + cfg_.consolidation_time;
      for (std::size_t i = 0; i < students_.size(); ++i) {
        auto& s = students_[i];
        const bool pass = q.students[i].passed;
        const TeachingControl c = control_;
        auto dyn = [&](std::span<const double> z, double, std::span<double> out) {
          s.model.rates(z, pass ? TeachingControl{true, total_knowledge(z)} : c, out);
        };
        s.z = propagate(s.z, dyn, t0, t1);
      }
      clock_ = t1;
      for (auto& s : students_) record(s);
    }
    quiz_log_.push_back(q);
    publish(StreamMessage::Type::quiz, q);
    return q;
  }

  ScoreReport score() const {
    std::lock_guard lk(mu_);
    ScoreReport r;
    r.clock = clock_;
    r.weights = cfg_.weights;
    r.max_u = max_u_;
    for (const auto& s : students_) {
      r.mean_z += total_knowledge(s.z);
      r.mean_strength += s.model.strength(s.z);
    }
    const double n = static_cast<double>(students_.size());
    r.mean_z /= n;
    r.mean_strength /= n;
    double passes = 0.0, attempts = 0.0;
    for (const auto& q : quiz_log_) {
      r.quiz_pass_rates.emplace_back(q.t, q.pass_rate);
      passes += q.pass_rate * static_cast<double>(q.students.size());
      attempts += static_cast<double>(q.students.size());
    }
    r.quiz_pass_rate = attempts > 0.0 ? passes / attempts : 0.0;
    const double z_term = r.max_u > 0.0 ? r.mean_z / r.max_u : 0.0;
    r.grade = 100.0 * (r.weights.z * z_term + r.weights.strength * r.mean_strength + r.weights.quiz * r.quiz_pass_rate);
    return r;
  }

  Snapshot snapshot() const {
    std::lock_guard lk(mu_);
    return snapshot_locked();
  }

  std::shared_ptr<Subscription> subscribe() {
    std::lock_guard lk(mu_);
    auto sub = std::make_shared<Subscription>();
    sub->push(StreamMessage{StreamMessage::Type::world, seq_, clock_, snapshot_locked()});
    subscribers_.push_back(sub);
    return sub;
  }

  std::vector<HistoryPoint> history(const std::string& student) const {
    std::lock_guard lk(mu_);
    for (const auto& s : students_)
      if (s.id == student) return {s.history.begin(), s.history.end()};
    throw NotFoundError("unknown student '" + student + "'");
  }

  std::vector<QuizResult> quiz_log() const {
    std::lock_guard lk(mu_);
    return quiz_log_;
  }

  std::vector<ControlEvent> control_log() const {
    std::lock_guard lk(mu_);
    return control_log_;
  }

  SessionInfo info() const {
    std::lock_guard lk(mu_);
    return {id_, clock_, students_.size(), running_, control_};
  }

  double speed() const {
    std::lock_guard lk(mu_);
    return cfg_.speed;
  }

  void set_speed(double speed) {
    if (!(speed > 0.0) || !std::isfinite(speed)) throw DomainError("speed must be a finite value > 0");
    std::lock_guard lk(mu_);
    cfg_.speed = speed;
  }

  bool running() const {
    std::lock_guard lk(mu_);
    return running_;
  }

  void set_running(bool on) {
    std::lock_guard lk(mu_);
    running_ = on;
  }

  SessionConfig config() const {
    std::lock_guard lk(mu_);
    return cfg_;
  }

  double max_u() const {
    std::lock_guard lk(mu_);
    return max_u_;
  }

  /// Reinstate clock, control and per-student states from a saved snapshot.
  void restore(const Snapshot& snap, double max_u) {
    std::lock_guard lk(mu_);
    if (snap.students.size() != students_.size()) throw ContractError("snapshot student count does not match");
    for (std::size_t i = 0; i < students_.size(); ++i) {
      if (snap.students[i].id != students_[i].id || snap.students[i].z.size() != students_[i].model.size())
        throw ContractError("snapshot student '" + snap.students[i].id + "' does not match the session");
    }
    clock_ = snap.clock;
    control_ = snap.control;
    max_u_ = max_u;
    for (std::size_t i = 0; i < students_.size(); ++i) {
      students_[i].z = snap.students[i].z;
      students_[i].history.clear();
      record(students_[i]);
    }
  }

  void close_subscribers() {
    std::lock_guard lk(mu_);
    for (auto& w : subscribers_)
      if (auto s = w.lock()) s->close();
    subscribers_.clear();
  }

 private:
  template <class Dynamics>
  std::vector<double> propagate(const std::vector<double>& z, Dynamics&& dyn, double t0, double t1) {
    SimulationTrace scratch;
    IntegratorConfig cfg = cfg_.integrator;
    cfg.record_every = std::numeric_limits<std::size_t>::max();
    auto out = integrate_into(scratch, z, dyn, t0, t1, cfg);
    clamp_events_ += scratch.clamp_events;
    return out;
  }

  void record(detail::StudentRuntime& s) {
    s.history.push_back({clock_, control_.u, control_.teaching, s.z, s.model.strength(s.z)});
    while (s.history.size() > cfg_.history_cap) s.history.pop_front();
  }

  Snapshot snapshot_locked() const {
    Snapshot snap{id_, clock_, control_, {}};
    for (const auto& s : students_)
      snap.students.push_back({s.id, s.z, total_knowledge(s.z), s.model.strength(s.z)});
    return snap;
  }

  template <class Payload>
  void publish(StreamMessage::Type type, const Payload& payload) {
    StreamMessage m{type, ++seq_, clock_, payload};
    std::erase_if(subscribers_, [](const std::weak_ptr<Subscription>& w) {
      auto s = w.lock();
      return !s || s->closed();
    });
    for (auto& w : subscribers_)
      if (auto s = w.lock()) s->push(m);
  }

  std::string id_;
  SessionConfig cfg_;
  mutable std::mutex mu_;
  std::vector<detail::StudentRuntime> students_;
  double clock_ = 0.0;
  TeachingControl control_{};
  double max_u_ = 0.0;
  bool running_ = false;
  Rng rng_;
  std::uint64_t seq_ = 0;
  std::size_t clamp_events_ = 0;
  std::vector<QuizResult> quiz_log_;
  std::vector<ControlEvent> control_log_;
  std::vector<std::weak_ptr<Subscription>> subscribers_;
};

/// Registry of live sessions. Distinct sessions proceed concurrently.
class SessionManager {
 public:
  explicit SessionManager(std::uint64_t id_seed = std::random_device{}()) : id_rng_(id_seed) {}

  std::string create(SessionConfig cfg) {
    Session::validate(cfg);
    std::unique_lock lk(mu_);
    std::string id;
    do {
      std::ostringstream os;
      os << std::hex << id_rng_() << std::hex << ++counter_;
      id = os.str();
    } while (sessions_.count(id));
    sessions_.emplace(id, std::make_shared<Session>(id, std::move(cfg)));
    return id;
  }

  /// Register a session under a caller-chosen id (used when restoring).
  std::shared_ptr<Session> create_with_id(const std::string& id, SessionConfig cfg) {
    Session::validate(cfg);
    std::unique_lock lk(mu_);
    if (id.empty() || sessions_.count(id)) throw ContractError("session id '" + id + "' is empty or taken");
    auto s = std::make_shared<Session>(id, std::move(cfg));
    sessions_.emplace(id, s);
    return s;
  }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::shared_lock lk(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
    return it->second;
  }

  Snapshot advance(const std::string& id, double simulated_delta) { return get(id)->advance(simulated_delta); }
  Snapshot advance_real(const std::string& id, double seconds) { return get(id)->advance_real(seconds); }
  ControlEvent set_control(const std::string& id, double u, bool teaching) {
    return get(id)->set_control(u, teaching);
  }
  QuizResult give_quiz(const std::string& id, double theta) { return get(id)->give_quiz(theta); }
  ScoreReport score_teacher(const std::string& id) const { return get(id)->score(); }
  std::shared_ptr<Subscription> stream_updates(const std::string& id) { return get(id)->subscribe(); }

  bool remove(const std::string& id) {
    std::shared_ptr<Session> s;
    {
      std::unique_lock lk(mu_);
      auto it = sessions_.find(id);
      if (it == sessions_.end()) return false;
      s = it->second;
      sessions_.erase(it);
    }
    s->close_subscribers();
    return true;
  }

  std::vector<SessionInfo> list() const {
    std::vector<std::shared_ptr<Session>> all;
    {
      std::shared_lock lk(mu_);
      for (const auto& [id, s] : sessions_) all.push_back(s);
    }
    std::vector<SessionInfo> out;
    for (const auto& s : all) out.push_back(s->info());
    return out;
  }

  /// Advance every running session by `seconds` of real time. A session
  /// whose integration fails is paused.
  void tick(double seconds) {
    std::vector<std::shared_ptr<Session>> all;
    {
      std::shared_lock lk(mu_);
      for (const auto& [id, s] : sessions_) all.push_back(s);
    }
    for (const auto& s : all) {
      if (!s->running()) continue;
      try {
        s->advance_real(seconds);
      } catch (const SimulationError&) {
        s->set_running(false);
      }
    }
  }

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 id_rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace didactic
