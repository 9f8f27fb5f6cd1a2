#pragma once

// Didactic experiments: requirement schedules with lessons and breaks, the
// stochastic task-sequence teacher loop, and the multi-year school career.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "didactic/integrator.hpp"
#include "didactic/model.hpp"
#include "didactic/rasch.hpp"

namespace didactic {

/// One stretch of the requirement schedule. During a lesson
/// U(t) = u_slope (t - t_start) + u_base; breaks always have U = 0.
struct RequirementSegment {
  double t_start = 0.0;
  double t_end = 0.0;
  bool teaching = true;
  double u_base = 0.0;
  double u_slope = 0.0;

  double u_at(double t) const noexcept { return teaching ? u_slope * (t - t_start) + u_base : 0.0; }

  bool operator==(const RequirementSegment&) const = default;
};

class RequirementSchedule {
 public:
  RequirementSchedule() = default;
  explicit RequirementSchedule(std::vector<RequirementSegment> segments) : segments_(std::move(segments)) {
    validate();
  }

  const std::vector<RequirementSegment>& segments() const noexcept { return segments_; }
  double t_begin() const { return segments_.front().t_start; }
  double t_end() const { return segments_.back().t_end; }

  /// Segment containing t; intervals are right-open except the last.
  const RequirementSegment& segment_at(double t) const {
    if (segments_.empty() || t < t_begin() || t > t_end() || !std::isfinite(t)) {
      std::ostringstream os;
      os << "time " << t << " lies outside the schedule";
      if (!segments_.empty()) os << " [" << t_begin() << ", " << t_end() << "]";
      throw DomainError(os.str());
    }
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double v, const RequirementSegment& s) { return v < s.t_end; });
    if (it == segments_.end()) return segments_.back();
    return *it;
  }

  bool operator==(const RequirementSchedule&) const = default;

 private:
  void validate() const {
    if (segments_.empty()) throw ContractError("schedule needs at least one segment");
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const auto& s = segments_[i];
      const std::string where = "segment " + std::to_string(i) + ": ";
      if (!std::isfinite(s.t_start) || !std::isfinite(s.t_end) || !(s.t_end > s.t_start))
        throw ContractError(where + "requires t_end > t_start");
      if (i > 0 && s.t_start != segments_[i - 1].t_end)
        throw ContractError(where + "must start where the previous segment ends (no gaps or overlaps)");
      if (s.teaching) {
        if (!(s.u_base >= 0.0)) throw DomainError(where + "u_base must be >= 0");
        if (!(s.u_at(s.t_end) >= 0.0)) throw DomainError(where + "U(t) becomes negative before the segment ends");
      }
    }
  }

  std::vector<RequirementSegment> segments_;
};

/// Teaching flag and requirement level at time t.
inline TeachingControl requirement_at(const RequirementSchedule& schedule, double t) {
  const auto& seg = schedule.segment_at(t);
  return {seg.teaching, seg.u_at(t)};
}

/// Lesson description used by `lesson_schedule`.
struct LessonSpec {
  double length = 1.0;
  double u_base = 0.0;
  double u_slope = 0.0;

  bool operator==(const LessonSpec&) const = default;
};

/// Lessons separated by breaks of `break_len`, followed by a final break of
/// `final_break` (omitted when zero).
inline RequirementSchedule lesson_schedule(const std::vector<LessonSpec>& lessons, double break_len,
                                           double final_break, double t0 = 0.0) {
  std::vector<RequirementSegment> segs;
  double t = t0;
  for (std::size_t i = 0; i < lessons.size(); ++i) {
    segs.push_back({t, t + lessons[i].length, true, lessons[i].u_base, lessons[i].u_slope});
    t += lessons[i].length;
    const double pause = (i + 1 < lessons.size()) ? break_len : final_break;
    if (pause > 0.0) {
      segs.push_back({t, t + pause, false, 0.0, 0.0});
      t += pause;
    }
  }
  return RequirementSchedule(std::move(segs));
}

namespace detail {

inline void fill_metadata(TraceMetadata& m, const Model& model, const IntegratorConfig& cfg) {
  m.model = to_string(model.kind);
  m.strength_name = model.strength_name();
  m.alphas = model.params.alphas();
  m.gammas = model.params.gammas();
  m.b = model.params.b();
  m.lambda = model.params.lambda();
  m.s = model.params.s();
  m.dt = cfg.dt;
  m.method = to_string(cfg.method);
}

inline void require_state(const Model& model, const std::vector<double>& z) {
  if (z.size() != model.size()) {
    std::ostringstream os;
    os << "initial state has length " << z.size() << " but the model has " << model.size() << " components";
    throw ContractError(os.str());
  }
  for (double v : z)
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("initial state components must be finite and >= 0");
}

}  // namespace detail

/// Integrate `model` under a requirement schedule. Integration is split at
/// every segment boundary, so each boundary appears as a sample.
inline SimulationTrace run_lessons(const RequirementSchedule& schedule, const Model& model,
                                   const std::vector<double>& state0, const IntegratorConfig& cfg) {
  cfg.validate();
  detail::require_state(model, state0);
  SimulationTrace trace;
  detail::fill_metadata(trace.metadata, model, cfg);

  std::vector<double> state = state0;
  std::size_t lesson = 0;
  for (const auto& seg : schedule.segments()) {
    if (seg.teaching) trace.events.push_back({seg.t_start, EventKind::lesson_start, ++lesson, std::nullopt});
    auto dynamics = [&](std::span<const double> z, double t, std::span<double> out) {
      model.rates(z, TeachingControl{seg.teaching, seg.u_at(t)}, out);
    };
    auto annotate = [&](Sample& s) {
      s.teaching = seg.teaching;
      s.u = seg.u_at(s.t);
      s.strength = model.strength(s.z);
    };
    // The sample shared with the previous segment keeps its annotation.
    state = integrate_into(trace, std::move(state), dynamics, seg.t_start, seg.t_end, cfg, annotate);
    if (seg.teaching) trace.events.push_back({seg.t_end, EventKind::lesson_end, lesson, std::nullopt});
  }
  return trace;
}

/// Tasks of increasing difficulty theta_i = i * d_theta, attempted every
/// `attempt_dt`, in lessons of `lesson_len` separated by breaks of `break_len`.
struct TaskSet {
  std::size_t n_tasks = 10;
  double d_theta = 1.0;
  double attempt_dt = 0.05;
  double lesson_len = 1.0;
  double break_len = 0.5;
  std::size_t n_lessons = 4;

  double theta(std::size_t i) const noexcept { return static_cast<double>(i) * d_theta; }

  void validate() const {
    if (n_tasks < 1) throw DomainError("tasks.n_tasks must be >= 1");
    if (n_lessons < 1) throw DomainError("tasks.n_lessons must be >= 1");
    if (!(d_theta > 0.0)) throw DomainError("tasks.d_theta must be > 0");
    if (!(attempt_dt > 0.0)) throw DomainError("tasks.attempt_dt must be > 0");
    if (!(lesson_len > 0.0)) throw DomainError("tasks.lesson_len must be > 0");
    if (!(break_len > 0.0)) throw DomainError("tasks.break_len must be > 0");
  }

  /// Advisory checks: lessons and breaks should be long compared with an attempt.
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (lesson_len < 10.0 * attempt_dt) w.emplace_back("lesson_len is shorter than 10 attempt intervals");
    if (break_len < 10.0 * attempt_dt) w.emplace_back("break_len is shorter than 10 attempt intervals");
    return w;
  }

  bool operator==(const TaskSet&) const = default;
};

/// The teacher loop. At each attempt boundary the student tries task i;
/// a success is followed by an interval of consolidation (acquisition off,
/// category transfer on) and the next task, a failure by an interval of
/// teaching at U = theta_i and a retry. Lessons end at the first attempt
/// boundary at or after `lesson_len`; breaks are pure forgetting.
inline SimulationTrace run_task_sequence(const TaskSet& tasks, const Model& model, const std::vector<double>& state0,
                                         const IntegratorConfig& cfg, std::uint64_t seed) {
  tasks.validate();
  cfg.validate();
  detail::require_state(model, state0);
  SimulationTrace trace;
  detail::fill_metadata(trace.metadata, model, cfg);
  trace.metadata.seed = seed;
  trace.metadata.rng = Rng::name;
  trace.warnings = tasks.warnings();

  Rng rng(seed);
  const double lambda = model.params.lambda();
  const auto per_lesson = static_cast<std::size_t>(std::max(1.0, std::ceil(tasks.lesson_len / tasks.attempt_dt - 1e-9)));

  std::vector<double> state = state0;
  std::size_t task = 1;
  double t = 0.0;
  for (std::size_t lesson = 1; lesson <= tasks.n_lessons && task <= tasks.n_tasks; ++lesson) {
    const double lesson_start = t;
    trace.events.push_back({t, EventKind::lesson_start, lesson, std::nullopt});
    for (std::size_t j = 0; j < per_lesson && task <= tasks.n_tasks; ++j) {
      const double ta = lesson_start + static_cast<double>(j) * tasks.attempt_dt;
      const double tb = lesson_start + static_cast<double>(j + 1) * tasks.attempt_dt;
      const double theta = tasks.theta(task);
      const AttemptRecord rec = attempt(total_knowledge(state), theta, lambda, rng, ta, task);
      trace.events.push_back({ta, EventKind::attempt, lesson, rec});

      auto annotate = [&](Sample& s) {
        s.teaching = true;
        s.u = theta;
        s.strength = model.strength(s.z);
      };
      if (rec.solved) {
        auto consolidate = [&](std::span<const double> z, double, std::span<double> out) {
          model.rates(z, TeachingControl{true, total_knowledge(z)}, out);
        };
        state = integrate_into(trace, std::move(state), consolidate, ta, tb, cfg, annotate);
        ++task;
      } else {
        auto teach = [&](std::span<const double> z, double, std::span<double> out) {
          model.rates(z, TeachingControl{true, theta}, out);
        };
        state = integrate_into(trace, std::move(state), teach, ta, tb, cfg, annotate);
      }
      t = tb;
    }
    trace.events.push_back({t, EventKind::lesson_end, lesson, std::nullopt});
    if (lesson < tasks.n_lessons && task <= tasks.n_tasks) {
      auto forget = [&](std::span<const double> z, double, std::span<double> out) {
        model.rates(z, TeachingControl{false, 0.0}, out);
      };
      auto annotate = [&](Sample& s) {
        s.teaching = false;
        s.u = 0.0;
        s.strength = model.strength(s.z);
      };
      state = integrate_into(trace, std::move(state), forget, t, t + tasks.break_len, cfg, annotate);
      t += tasks.break_len;
    }
  }
  return trace;
}

/// Years of schooling: each grade is `months_study` of lessons at the grade's
/// requirement level followed by `months_vacation` without teaching.
struct SchoolCareerConfig {
  std::size_t n_grades = 11;
  double months_study = 9.0;
  double months_vacation = 3.0;
  std::vector<double> grade_requirements;
  double post_school_horizon = 24.0;

  void validate() const {
    if (n_grades < 1) throw DomainError("career.n_grades must be >= 1");
    if (!(months_study > 0.0)) throw DomainError("career.months_study must be > 0");
    if (!(months_vacation > 0.0)) throw DomainError("career.months_vacation must be > 0");
    if (grade_requirements.size() != n_grades) {
      std::ostringstream os;
      os << "career.grade_requirements has length " << grade_requirements.size() << " but n_grades is " << n_grades;
      throw ContractError(os.str());
    }
    for (double u : grade_requirements)
      if (!(u >= 0.0)) throw DomainError("career.grade_requirements entries must be >= 0");
    if (!(post_school_horizon >= 0.0)) throw DomainError("career.post_school_horizon must be >= 0");
  }

  RequirementSchedule schedule() const {
    validate();
    std::vector<RequirementSegment> segs;
    double t = 0.0;
    for (std::size_t g = 0; g < n_grades; ++g) {
      segs.push_back({t, t + months_study, true, grade_requirements[g], 0.0});
      t += months_study;
      segs.push_back({t, t + months_vacation, false, 0.0, 0.0});
      t += months_vacation;
    }
    if (post_school_horizon > 0.0) segs.push_back({t, t + post_school_horizon, false, 0.0, 0.0});
    return RequirementSchedule(std::move(segs));
  }

  bool operator==(const SchoolCareerConfig&) const = default;
};

/// School career with the three-component (n = 3 generalized) model.
inline SimulationTrace run_school_career(const SchoolCareerConfig& career, const ModelParams& params,
                                         const std::vector<double>& state0, const IntegratorConfig& cfg) {
  return run_lessons(career.schedule(), Model(ModelKind::three, params), state0, cfg);
}

}  // namespace didactic
