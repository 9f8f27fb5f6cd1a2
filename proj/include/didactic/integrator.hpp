#pragma once

// Fixed-step explicit integration (classical RK4 with forward Euler as a
// low-order cross-check) and the trace type every run produces.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "didactic/model.hpp"

namespace didactic {

/// A step produced a NaN or infinite rate.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method { rk4, euler };

inline const char* to_string(Method m) noexcept { return m == Method::rk4 ? "rk4" : "euler"; }

struct IntegratorConfig {
  double dt = 0.01;
  Method method = Method::rk4;
  std::size_t record_every = 10;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("integrator dt must be a finite value > 0");
    if (record_every < 1) throw DomainError("integrator record_every must be >= 1");
  }

  bool operator==(const IntegratorConfig&) const = default;
};

/// Outcome of one Rasch task attempt.
struct AttemptRecord {
  double t = 0.0;
  std::size_t task_index = 0;  // 1-based, theta = task_index * d_theta
  double theta = 0.0;
  double z_at_attempt = 0.0;
  double probability = 0.0;
  bool solved = false;

  bool operator==(const AttemptRecord&) const = default;
};

enum class EventKind { lesson_start, lesson_end, attempt };

inline const char* to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::lesson_start: return "lesson_start";
    case EventKind::lesson_end: return "lesson_end";
    case EventKind::attempt: return "attempt";
  }
  return "?";
}

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::lesson_start;
  std::size_t lesson = 0;  // 1-based lesson number, 0 if not applicable
  std::optional<AttemptRecord> attempt;

  bool operator==(const Event&) const = default;
};

struct Sample {
  double t = 0.0;
  double u = 0.0;
  bool teaching = false;
  std::vector<double> z;
  double strength = 0.0;

  double total() const noexcept { return total_knowledge(z); }
};

struct TraceMetadata {
  std::string model = "four";
  std::string strength_name = "pf";
  std::vector<double> alphas, gammas;
  double b = 0.0, lambda = 1.0, s = 0.0;
  std::uint64_t seed = 0;
  std::string rng;
  std::string unit = "time";
  double dt = 0.0;
  std::string method;
};

struct SimulationTrace {
  std::vector<Sample> samples;
  std::vector<Event> events;
  TraceMetadata metadata;
  std::size_t clamp_events = 0;
  std::vector<std::string> warnings;

  bool empty() const noexcept { return samples.empty(); }
  const Sample& back() const { return samples.back(); }
};

namespace detail {

inline void check_finite(std::span<const double> rates, std::span<const double> z, double t) {
  for (double r : rates) {
    if (!std::isfinite(r)) {
      std::ostringstream os;
      os << "non-finite rate at t=" << t << " for state (";
      for (std::size_t i = 0; i < z.size(); ++i) os << (i ? ", " : "") << z[i];
      os << ")";
      throw SimulationError(os.str());
    }
  }
}

}  // namespace detail

/// Advance `state` by one step of length `dt`.
///
/// `dynamics(z, t, out)` writes dz/dt into `out`. Components that would
/// become negative are clamped to zero and counted in `clamp_events`.
template <class Dynamics>
std::vector<double> step(const std::vector<double>& state, Dynamics&& dynamics, double t, double dt, Method method,
                         std::size_t& clamp_events) {
  const std::size_t n = state.size();
  std::vector<double> next(n);
  std::vector<double> k1(n);
  dynamics(std::span<const double>(state), t, std::span<double>(k1));
  detail::check_finite(k1, state, t);
  if (method == Method::euler) {
    for (std::size_t i = 0; i < n; ++i) next[i] = state[i] + dt * k1[i];
  } else {
    std::vector<double> k2(n), k3(n), k4(n), tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = state[i] + 0.5 * dt * k1[i];
    dynamics(std::span<const double>(tmp), t + 0.5 * dt, std::span<double>(k2));
    detail::check_finite(k2, tmp, t + 0.5 * dt);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = state[i] + 0.5 * dt * k2[i];
    dynamics(std::span<const double>(tmp), t + 0.5 * dt, std::span<double>(k3));
    detail::check_finite(k3, tmp, t + 0.5 * dt);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = state[i] + dt * k3[i];
    dynamics(std::span<const double>(tmp), t + dt, std::span<double>(k4));
    detail::check_finite(k4, tmp, t + dt);
    for (std::size_t i = 0; i < n; ++i)
      next[i] = state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  bool clamped = false;
  for (double& v : next) {
    if (v < 0.0) {
      v = 0.0;
      clamped = true;
    }
  }
  if (clamped) ++clamp_events;
  return next;
}

template <class Dynamics>
std::vector<double> step(const std::vector<double>& state, Dynamics&& dynamics, double t, const IntegratorConfig& cfg) {
  std::size_t ignored = 0;
  return step(state, std::forward<Dynamics>(dynamics), t, cfg.dt, cfg.method, ignored);
}

/// Fills the non-state columns of a sample (u, teaching, strength).
struct PlainAnnotator {
  void operator()(Sample&) const noexcept {}
};

/// Integrate from t0 to t1 and append samples to `trace`.
///
/// The first sample is skipped when the trace already ends at t0, so
/// consecutive segments share their boundary sample. Every
/// `record_every`-th step is stored and the final sample always is. The
/// last step is shortened so the segment ends exactly at t1.
template <class Dynamics, class Annotator = PlainAnnotator>
std::vector<double> integrate_into(SimulationTrace& trace, std::vector<double> state, Dynamics&& dynamics, double t0,
                                   double t1, const IntegratorConfig& cfg, Annotator&& annotate = {}) {
  cfg.validate();
  if (!(t1 > t0)) throw DomainError("integration interval must satisfy t1 > t0");
  auto record = [&](double t) {
    Sample s;
    s.t = t;
    s.z = state;
    annotate(s);
    trace.samples.push_back(std::move(s));
  };
  if (trace.samples.empty() || trace.samples.back().t != t0) record(t0);

  const double span = t1 - t0;
  // Steps land on t0 + k*dt; a remainder below 1e-9*dt is folded into the
  // previous step instead of producing a sliver step.
  const double ratio = span / cfg.dt;
  std::size_t full = static_cast<std::size_t>(std::floor(ratio));
  if (ratio - static_cast<double>(full) < 1e-9) {
    if (full > 0) --full;
  }
  std::size_t count = 0;
  for (std::size_t k = 0; k < full; ++k) {
    const double t = t0 + static_cast<double>(k) * cfg.dt;
    state = step(state, dynamics, t, cfg.dt, cfg.method, trace.clamp_events);
    ++count;
    if (count % cfg.record_every == 0) record(t0 + static_cast<double>(k + 1) * cfg.dt);
  }
  const double t_last = t0 + static_cast<double>(full) * cfg.dt;
  state = step(state, dynamics, t_last, t1 - t_last, cfg.method, trace.clamp_events);
  record(t1);
  return state;
}

/// Integrate a fresh trace over [t0, t1], including initial and final samples.
template <class Dynamics, class Annotator = PlainAnnotator>
SimulationTrace integrate(const std::vector<double>& state0, Dynamics&& dynamics, double t0, double t1,
                          const IntegratorConfig& cfg, Annotator&& annotate = {}) {
  SimulationTrace trace;
  trace.metadata.dt = cfg.dt;
  trace.metadata.method = to_string(cfg.method);
  integrate_into(trace, state0, std::forward<Dynamics>(dynamics), t0, t1, cfg, std::forward<Annotator>(annotate));
  return trace;
}

}  // namespace didactic
