#pragma once

// Run configuration documents (JSON): strict parsing with field-path tagged
// diagnostics, and serialization back to the same schema.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "didactic/integrator.hpp"
#include "didactic/model.hpp"
#include "didactic/scenarios.hpp"

namespace didactic {

using json = nlohmann::json;

struct ConfigIssue {
  std::string path;
  std::string message;
};

/// Invalid configuration; carries every problem found, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues)
      : std::runtime_error(render(issues)), issues_(std::move(issues)) {}

  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  static std::string render(const std::vector<ConfigIssue>& issues) {
    std::ostringstream os;
    for (std::size_t i = 0; i < issues.size(); ++i)
      os << (i ? "\n" : "") << (issues[i].path.empty() ? "<root>" : issues[i].path) << ": " << issues[i].message;
    return os.str();
  }

  std::vector<ConfigIssue> issues_;
};

enum class Scenario { lessons, task_sequence, school_career };
enum class OutputFormat { csv, json };

inline const char* to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::lessons: return "lessons";
    case Scenario::task_sequence: return "task_sequence";
    case Scenario::school_career: return "school_career";
  }
  return "?";
}
inline const char* to_string(OutputFormat f) noexcept { return f == OutputFormat::csv ? "csv" : "json"; }

struct OutputConfig {
  std::string dir = "out";
  std::string name = "trace";
  OutputFormat format = OutputFormat::csv;
  bool plot = false;

  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  Scenario scenario = Scenario::lessons;
  Model model;
  std::vector<double> initial_state;
  std::optional<RequirementSchedule> schedule;
  std::optional<TaskSet> tasks;
  std::optional<SchoolCareerConfig> career;
  IntegratorConfig integrator;
  std::uint64_t seed = 0;
  std::string unit = "time";
  OutputConfig output;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

/// Reads fields of one JSON object, recording issues instead of throwing.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string path, std::vector<ConfigIssue>& issues)
      : obj_(obj), path_(std::move(path)), issues_(issues) {
    if (!obj_.is_object()) issue("", "expected an object");
  }

  bool ok() const { return obj_.is_object(); }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return ok() && obj_.contains(key); }
  const json& raw(const std::string& key) const {
    seen_.insert(key);
    return obj_.at(key);
  }

  void issue(const std::string& key, std::string msg) const {
    issues_.push_back({key.empty() ? path_ : at(key), std::move(msg)});
  }

  template <class T>
  std::optional<T> get(const std::string& key, bool required) const {
    if (!has(key)) {
      if (required && ok()) issue(key, "missing required field");
      return std::nullopt;
    }
    return convert<T>(raw(key), at(key));
  }

  template <class T>
  std::optional<T> convert(const json& v, const std::string& path) const {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) return fail<T>(path, "expected a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (v.is_boolean()) return v.get<bool>();
      if (v.is_number_integer() && (v.get<long long>() == 0 || v.get<long long>() == 1)) return v.get<long long>() == 1;
      return fail<T>(path, "expected a boolean (or 0/1)");
    } else if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
      if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
      if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<T>(v.get<long long>());
      return fail<T>(path, "expected a non-negative integer");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return fail<T>(path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) return fail<T>(path, "expected an array of numbers");
      std::vector<double> out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) return fail<T>(path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
      }
      return out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported field type");
    }
  }

  /// Reports every key that was never read.
  void reject_unknown() const {
    if (!ok()) return;
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) issue(it.key(), "unknown key");
  }

  void mark(const std::string& key) const { seen_.insert(key); }

 private:
  template <class T>
  std::optional<T> fail(const std::string& path, const char* msg) const {
    issues_.push_back({path, msg});
    return std::nullopt;
  }

  const json& obj_;
  std::string path_;
  std::vector<ConfigIssue>& issues_;
  mutable std::set<std::string> seen_;
};

inline std::optional<ModelKind> parse_model_kind(const std::string& s) {
  if (s == "two") return ModelKind::two;
  if (s == "three") return ModelKind::three;
  if (s == "four") return ModelKind::four;
  if (s == "general") return ModelKind::general;
  return std::nullopt;
}

inline std::string length_mismatch(const char* a, std::size_t na, const char* b, std::size_t nb) {
  std::ostringstream os;
  os << a << " has length " << na << " but " << b << " has length " << nb;
  return os.str();
}

}  // namespace detail

/// Parse `{"alphas": [...], "gammas": [...] | "taus": [...], "b", "lambda", "s"}`.
inline std::optional<ModelParams> parse_params(const json& j, const std::string& path,
                                               std::vector<ConfigIssue>& issues) {
  detail::FieldReader r(j, path, issues);
  if (!r.ok()) return std::nullopt;
  const std::size_t before = issues.size();
  auto alphas = r.get<std::vector<double>>("alphas", true);
  std::optional<std::vector<double>> gammas;
  if (r.has("gammas") && r.has("taus")) {
    r.mark("gammas");
    r.mark("taus");
    r.issue("taus", "give either gammas or taus, not both");
  } else if (r.has("taus")) {
    if (auto taus = r.get<std::vector<double>>("taus", true)) {
      gammas.emplace();
      for (std::size_t i = 0; i < taus->size(); ++i) {
        if (!((*taus)[i] > 0.0)) {
          issues.push_back({r.at("taus") + "[" + std::to_string(i) + "]", "tau must be > 0"});
          gammas.reset();
          break;
        }
        gammas->push_back(gamma_from_tau((*taus)[i]));
      }
    }
  } else {
    gammas = r.get<std::vector<double>>("gammas", true);
  }
  const double b = r.get<double>("b", false).value_or(0.0);
  const double lambda = r.get<double>("lambda", false).value_or(1.0);
  const double s = r.get<double>("s", false).value_or(0.0);
  r.reject_unknown();
  if (issues.size() != before || !alphas || !gammas) return std::nullopt;

  if (alphas->size() != gammas->size()) {
    issues.push_back({r.at("alphas"), detail::length_mismatch("alphas", alphas->size(), "gammas", gammas->size())});
    return std::nullopt;
  }
  for (std::size_t i = 1; i < gammas->size(); ++i) {
    if (!((*gammas)[i] < (*gammas)[i - 1])) {
      issues.push_back({r.at("gammas"),
                        "gammas must be strictly decreasing (gamma_1 > gamma_2 > ... > gamma_n); entry " +
                            std::to_string(i) + " is not below entry " + std::to_string(i - 1)});
      return std::nullopt;
    }
  }
  try {
    return ModelParams(*alphas, *gammas, b, lambda, s);
  } catch (const std::exception& e) {
    issues.push_back({path, e.what()});
    return std::nullopt;
  }
}

inline json params_to_json(const ModelParams& p) {
  return json{{"alphas", p.alphas()}, {"gammas", p.gammas()}, {"b", p.b()}, {"lambda", p.lambda()}, {"s", p.s()}};
}

inline std::optional<IntegratorConfig> parse_integrator(const json& j, const std::string& path,
                                                        std::vector<ConfigIssue>& issues) {
  detail::FieldReader r(j, path, issues);
  if (!r.ok()) return std::nullopt;
  IntegratorConfig cfg;
  const std::size_t before = issues.size();
  if (auto dt = r.get<double>("dt", false)) {
    if (!(*dt > 0.0)) r.issue("dt", "must be > 0");
    cfg.dt = *dt;
  }
  if (auto m = r.get<std::string>("method", false)) {
    if (*m == "rk4") cfg.method = Method::rk4;
    else if (*m == "euler") cfg.method = Method::euler;
    else r.issue("method", "expected \"rk4\" or \"euler\"");
  }
  if (auto re = r.get<std::size_t>("record_every", false)) {
    if (*re < 1) r.issue("record_every", "must be >= 1");
    cfg.record_every = *re;
  }
  r.reject_unknown();
  if (issues.size() != before) return std::nullopt;
  return cfg;
}

inline json integrator_to_json(const IntegratorConfig& c) {
  return json{{"dt", c.dt}, {"method", to_string(c.method)}, {"record_every", c.record_every}};
}

namespace detail {

inline std::optional<RequirementSchedule> parse_schedule(const json& j, const std::string& path,
                                                         std::vector<ConfigIssue>& issues) {
  FieldReader r(j, path, issues);
  if (!r.ok()) return std::nullopt;
  const std::size_t before = issues.size();
  std::vector<RequirementSegment> segs;
  if (r.has("segments") == r.has("lessons")) {
    r.issue("", "give exactly one of \"segments\" or \"lessons\"");
    if (r.has("segments")) r.mark("segments");
    if (r.has("lessons")) r.mark("lessons");
  } else if (r.has("segments")) {
    const json& arr = r.raw("segments");
    if (!arr.is_array() || arr.empty()) {
      r.issue("segments", "expected a non-empty array");
    } else {
      for (std::size_t i = 0; i < arr.size(); ++i) {
        FieldReader sr(arr[i], r.at("segments") + "[" + std::to_string(i) + "]", issues);
        if (!sr.ok()) continue;
        RequirementSegment s;
        s.t_start = sr.get<double>("t_start", true).value_or(0.0);
        s.t_end = sr.get<double>("t_end", true).value_or(0.0);
        s.teaching = sr.get<bool>("teaching", true).value_or(false);
        s.u_base = sr.get<double>("u_base", false).value_or(0.0);
        s.u_slope = sr.get<double>("u_slope", false).value_or(0.0);
        sr.reject_unknown();
        segs.push_back(s);
      }
    }
  } else {
    const json& arr = r.raw("lessons");
    const double break_len = r.get<double>("break_len", true).value_or(0.0);
    const double final_break = r.get<double>("final_break", false).value_or(0.0);
    const double t0 = r.get<double>("t0", false).value_or(0.0);
    if (!(break_len > 0.0)) r.issue("break_len", "must be > 0");
    if (!(final_break >= 0.0)) r.issue("final_break", "must be >= 0");
    std::vector<LessonSpec> lessons;
    if (!arr.is_array() || arr.empty()) {
      r.issue("lessons", "expected a non-empty array");
    } else {
      for (std::size_t i = 0; i < arr.size(); ++i) {
        FieldReader lr(arr[i], r.at("lessons") + "[" + std::to_string(i) + "]", issues);
        if (!lr.ok()) continue;
        LessonSpec l;
        l.length = lr.get<double>("length", true).value_or(0.0);
        l.u_base = lr.get<double>("u_base", true).value_or(0.0);
        l.u_slope = lr.get<double>("u_slope", false).value_or(0.0);
        if (!(l.length > 0.0)) lr.issue("length", "must be > 0");
        lr.reject_unknown();
        lessons.push_back(l);
      }
    }
    if (issues.size() == before) {
      try {
        return lesson_schedule(lessons, break_len, final_break, t0);
      } catch (const std::exception& e) {
        issues.push_back({path, e.what()});
        return std::nullopt;
      }
    }
  }
  r.reject_unknown();
  if (issues.size() != before) return std::nullopt;
  try {
    return RequirementSchedule(std::move(segs));
  } catch (const std::exception& e) {
    issues.push_back({path + ".segments", e.what()});
    return std::nullopt;
  }
}

inline std::optional<TaskSet> parse_tasks(const json& j, const std::string& path, std::vector<ConfigIssue>& issues) {
  FieldReader r(j, path, issues);
  if (!r.ok()) return std::nullopt;
  const std::size_t before = issues.size();
  TaskSet t;
  t.n_tasks = r.get<std::size_t>("n_tasks", true).value_or(0);
  t.d_theta = r.get<double>("d_theta", true).value_or(0.0);
  t.attempt_dt = r.get<double>("attempt_dt", true).value_or(0.0);
  t.lesson_len = r.get<double>("lesson_len", true).value_or(0.0);
  t.break_len = r.get<double>("break_len", true).value_or(0.0);
  t.n_lessons = r.get<std::size_t>("n_lessons", true).value_or(0);
  r.reject_unknown();
  if (issues.size() != before) return std::nullopt;
  try {
    t.validate();
  } catch (const std::exception& e) {
    issues.push_back({path, e.what()});
    return std::nullopt;
  }
  return t;
}

inline std::optional<SchoolCareerConfig> parse_career(const json& j, const std::string& path,
                                                      std::vector<ConfigIssue>& issues) {
  FieldReader r(j, path, issues);
  if (!r.ok()) return std::nullopt;
  const std::size_t before = issues.size();
  SchoolCareerConfig c;
  c.n_grades = r.get<std::size_t>("n_grades", false).value_or(11);
  c.months_study = r.get<double>("months_study", false).value_or(9.0);
  c.months_vacation = r.get<double>("months_vacation", false).value_or(3.0);
  c.grade_requirements = r.get<std::vector<double>>("grade_requirements", true).value_or(std::vector<double>{});
  c.post_school_horizon = r.get<double>("post_school_horizon", false).value_or(24.0);
  r.reject_unknown();
  if (issues.size() != before) return std::nullopt;
  if (c.grade_requirements.size() != c.n_grades) {
    issues.push_back({r.at("grade_requirements"),
                      length_mismatch("grade_requirements", c.grade_requirements.size(), "n_grades", c.n_grades)});
    return std::nullopt;
  }
  try {
    c.validate();
  } catch (const std::exception& e) {
    issues.push_back({path, e.what()});
    return std::nullopt;
  }
  return c;
}

}  // namespace detail

/// Parse and validate a run configuration. Throws ConfigError listing every
/// problem found.
inline RunConfig parse_config(const json& doc) {
  std::vector<ConfigIssue> issues;
  detail::FieldReader r(doc, "", issues);
  if (!r.ok()) throw ConfigError(std::move(issues));
  RunConfig cfg;

  std::optional<Scenario> scenario;
  if (auto s = r.get<std::string>("scenario", true)) {
    if (*s == "lessons") scenario = Scenario::lessons;
    else if (*s == "task_sequence") scenario = Scenario::task_sequence;
    else if (*s == "school_career") scenario = Scenario::school_career;
    else r.issue("scenario", "expected one of lessons, task_sequence, school_career");
  }
  std::optional<ModelKind> kind;
  if (auto m = r.get<std::string>("model", true)) {
    kind = detail::parse_model_kind(*m);
    if (!kind) r.issue("model", "expected one of two, three, four, general");
  }
  std::optional<ModelParams> params;
  if (r.has("params")) params = parse_params(r.raw("params"), "params", issues);
  else r.issue("params", "missing required field");

  if (kind && params) {
    const std::size_t want = fixed_dimension(*kind);
    if (want != 0 && params->size() != want) {
      std::ostringstream os;
      os << "model '" << to_string(*kind) << "' needs " << want << " components but params have length "
         << params->size();
      r.issue("params", os.str());
    } else {
      cfg.model = Model(*kind, *params);
    }
  }
  if (scenario == Scenario::school_career && kind && *kind != ModelKind::three &&
      !(*kind == ModelKind::general && params && params->size() == 3))
    r.issue("model", "school_career uses the three-component model");

  if (auto z0 = r.get<std::vector<double>>("initial_state", false)) {
    for (std::size_t i = 0; i < z0->size(); ++i)
      if (!((*z0)[i] >= 0.0)) issues.push_back({"initial_state[" + std::to_string(i) + "]", "must be >= 0"});
    if (params && z0->size() != params->size())
      r.issue("initial_state", detail::length_mismatch("initial_state", z0->size(), "params", params->size()));
    cfg.initial_state = *z0;
  } else if (params) {
    cfg.initial_state.assign(params->size(), 0.0);
  }

  const bool want_schedule = scenario == Scenario::lessons;
  const bool want_tasks = scenario == Scenario::task_sequence;
  const bool want_career = scenario == Scenario::school_career;
  auto payload = [&](const char* key, bool wanted) -> const json* {
    if (!scenario) {
      r.mark(key);
      return nullptr;
    }
    if (!r.has(key)) {
      if (wanted) r.issue(key, std::string("scenario '") + to_string(*scenario) + "' requires this field");
      return nullptr;
    }
    const json& v = r.raw(key);
    if (!wanted) {
      r.issue(key, "not used by this scenario");
      return nullptr;
    }
    return &v;
  };
  if (const json* j = payload("schedule", want_schedule)) cfg.schedule = detail::parse_schedule(*j, "schedule", issues);
  if (const json* j = payload("tasks", want_tasks)) cfg.tasks = detail::parse_tasks(*j, "tasks", issues);
  if (const json* j = payload("career", want_career)) cfg.career = detail::parse_career(*j, "career", issues);

  if (r.has("integrator")) {
    if (auto ic = parse_integrator(r.raw("integrator"), "integrator", issues)) cfg.integrator = *ic;
  }
  cfg.seed = r.get<std::uint64_t>("seed", false).value_or(0);
  cfg.unit = r.get<std::string>("unit", false).value_or("time");
  if (r.has("output")) {
    detail::FieldReader o(r.raw("output"), "output", issues);
    if (o.ok()) {
      cfg.output.dir = o.get<std::string>("dir", false).value_or(cfg.output.dir);
      cfg.output.name = o.get<std::string>("name", false).value_or(cfg.output.name);
      if (auto f = o.get<std::string>("format", false)) {
        if (*f == "csv") cfg.output.format = OutputFormat::csv;
        else if (*f == "json") cfg.output.format = OutputFormat::json;
        else o.issue("format", "expected \"csv\" or \"json\"");
      }
      cfg.output.plot = o.get<bool>("plot", false).value_or(false);
      if (cfg.output.name.empty() || cfg.output.name.find('/') != std::string::npos)
        o.issue("name", "must be a non-empty file stem without '/'");
      o.reject_unknown();
    }
  }
  r.reject_unknown();
  if (scenario) cfg.scenario = *scenario;
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::vector<ConfigIssue>{{"", std::string("malformed JSON: ") + e.what()}});
  }
  return parse_config(doc);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::vector<ConfigIssue>{{"", "cannot open config file '" + path + "'"}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Serialize to the document schema; `parse_config(to_json(c)) == c`.
inline json to_json(const RunConfig& c) {
  json j;
  j["scenario"] = to_string(c.scenario);
  j["model"] = to_string(c.model.kind);
  j["params"] = params_to_json(c.model.params);
  j["initial_state"] = c.initial_state;
  if (c.schedule) {
    json segs = json::array();
    for (const auto& s : c.schedule->segments())
      segs.push_back({{"t_start", s.t_start}, {"t_end", s.t_end}, {"teaching", s.teaching}, {"u_base", s.u_base},
                      {"u_slope", s.u_slope}});
    j["schedule"] = {{"segments", segs}};
  }
  if (c.tasks) {
    const auto& t = *c.tasks;
    j["tasks"] = {{"n_tasks", t.n_tasks},       {"d_theta", t.d_theta},     {"attempt_dt", t.attempt_dt},
                  {"lesson_len", t.lesson_len}, {"break_len", t.break_len}, {"n_lessons", t.n_lessons}};
  }
  if (c.career) {
    const auto& k = *c.career;
    j["career"] = {{"n_grades", k.n_grades},
                   {"months_study", k.months_study},
                   {"months_vacation", k.months_vacation},
                   {"grade_requirements", k.grade_requirements},
                   {"post_school_horizon", k.post_school_horizon}};
  }
  j["integrator"] = integrator_to_json(c.integrator);
  j["seed"] = c.seed;
  j["unit"] = c.unit;
  j["output"] = {{"dir", c.output.dir},
                 {"name", c.output.name},
                 {"format", to_string(c.output.format)},
                 {"plot", c.output.plot}};
  return j;
}

}  // namespace didactic
