#pragma once

// Trace export (CSV/JSON), event and metadata sidecars, gnuplot scripts,
// run summaries, and the batch `run` entry point.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "didactic/config.hpp"
#include "didactic/integrator.hpp"
#include "didactic/scenarios.hpp"

namespace didactic {

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> csv_columns(const SimulationTrace& trace) {
  std::vector<std::string> cols{"t", "u", "teaching"};
  const std::size_t n = trace.samples.empty() ? trace.metadata.gammas.size() : trace.samples.front().z.size();
  for (std::size_t i = 1; i <= n; ++i) cols.push_back("z" + std::to_string(i));
  cols.emplace_back("z");
  cols.push_back(trace.metadata.strength_name);
  return cols;
}

/// Header `t,u,teaching,z1..zn,z,<pf|pr>` followed by one row per sample.
inline void write_csv(std::ostream& os, const SimulationTrace& trace) {
  const auto cols = csv_columns(trace);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& s : trace.samples) {
    os << format_number(s.t) << ',' << format_number(s.u) << ',' << (s.teaching ? 1 : 0);
    for (double v : s.z) os << ',' << format_number(v);
    os << ',' << format_number(s.total()) << ',' << format_number(s.strength) << '\n';
  }
}

inline json event_to_json(const Event& e) {
  json j{{"t", e.t}, {"kind", to_string(e.kind)}};
  if (e.lesson) j["lesson"] = e.lesson;
  if (e.attempt) {
    const auto& a = *e.attempt;
    j["task"] = a.task_index;
    j["theta"] = a.theta;
    j["z"] = a.z_at_attempt;
    j["p"] = a.probability;
    j["outcome"] = a.solved ? "solved" : "failed";
  }
  return j;
}

inline json events_to_json(const SimulationTrace& trace) {
  json arr = json::array();
  for (const auto& e : trace.events) arr.push_back(event_to_json(e));
  return arr;
}

inline json metadata_to_json(const SimulationTrace& trace) {
  const auto& m = trace.metadata;
  json j{{"model", m.model},
         {"strength", m.strength_name},
         {"params", {{"alphas", m.alphas}, {"gammas", m.gammas}, {"b", m.b}, {"lambda", m.lambda}, {"s", m.s}}},
         {"seed", m.seed},
         {"unit", m.unit},
         {"integrator", {{"dt", m.dt}, {"method", m.method}}},
         {"columns", csv_columns(trace)},
         {"samples", trace.samples.size()},
         {"clamp_events", trace.clamp_events},
         {"warnings", trace.warnings}};
  if (!m.rng.empty()) j["rng"] = m.rng;
  return j;
}

/// Whole trace as one JSON document: metadata, columns, rows, events.
inline json trace_to_json(const SimulationTrace& trace) {
  json rows = json::array();
  for (const auto& s : trace.samples) {
    json row = json::array({s.t, s.u, s.teaching ? 1 : 0});
    for (double v : s.z) row.push_back(v);
    row.push_back(s.total());
    row.push_back(s.strength);
    rows.push_back(std::move(row));
  }
  return json{{"metadata", metadata_to_json(trace)},
              {"columns", csv_columns(trace)},
              {"rows", std::move(rows)},
              {"events", events_to_json(trace)}};
}

/// gnuplot script plotting U, the components and Z against t from a CSV.
inline std::string gnuplot_script(const SimulationTrace& trace, const std::string& csv_name) {
  const auto cols = csv_columns(trace);
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set xlabel 't (" << trace.metadata.unit << ")'\n"
     << "set ylabel 'knowledge'\n"
     << "set y2label '" << trace.metadata.strength_name << "'\n"
     << "set y2tics\n"
     << "plot '" << csv_name << "' using 1:2 with steps lw 2";
  for (std::size_t c = 3; c < cols.size() - 1; ++c) os << ", '' using 1:" << (c + 1) << " with lines";
  os << ", '' using 1:" << cols.size() << " axes x1y2 with lines dt 2\n";
  return os.str();
}

struct DecayFit {
  std::size_t component = 0;  // 1-based
  double rate = 0.0;
};

struct TraceSummary {
  double final_t = 0.0;
  std::vector<double> final_z;
  double final_total = 0.0;
  double final_strength = 0.0;
  std::vector<double> lesson_end_totals;
  std::vector<DecayFit> terminal_decay;
  std::size_t dips = 0;
  std::size_t attempts = 0;
  std::size_t tasks_solved = 0;
  std::size_t clamp_events = 0;
};

/// Least-squares decay rate -d ln(y)/dt; nullopt when fewer than two
/// positive points or no time spread.
inline std::optional<double> fit_decay_rate(const std::vector<double>& t, const std::vector<double>& y) {
  double st = 0, sl = 0, stt = 0, stl = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(y[i] > 0.0)) continue;
    const double l = std::log(y[i]);
    st += t[i];
    sl += l;
    stt += t[i] * t[i];
    stl += t[i] * l;
    ++n;
  }
  if (n < 2) return std::nullopt;
  const double denom = static_cast<double>(n) * stt - st * st;
  if (!(std::abs(denom) > 0.0)) return std::nullopt;
  return -(static_cast<double>(n) * stl - st * sl) / denom;
}

/// Decline episodes of Z: local maxima followed by a strict decrease.
/// Flat stretches are skipped; a decrease from the very first sample does
/// not count.
inline std::size_t count_dips(const SimulationTrace& trace, double tol = 1e-12) {
  std::size_t dips = 0;
  int dir = 0;
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    const double d = trace.samples[i].total() - trace.samples[i - 1].total();
    const double scale = tol * std::max(1.0, std::abs(trace.samples[i - 1].total()));
    if (d > scale) {
      dir = 1;
    } else if (d < -scale) {
      if (dir == 1) ++dips;
      dir = -1;
    }
  }
  return dips;
}

inline TraceSummary summarize(const SimulationTrace& trace) {
  if (trace.samples.empty()) throw ContractError("cannot summarize an empty trace");
  TraceSummary s;
  const Sample& last = trace.samples.back();
  s.final_t = last.t;
  s.final_z = last.z;
  s.final_total = last.total();
  s.final_strength = last.strength;
  s.clamp_events = trace.clamp_events;

  auto total_at = [&](double t) {
    auto it = std::lower_bound(trace.samples.begin(), trace.samples.end(), t,
                               [](const Sample& a, double v) { return a.t < v; });
    if (it == trace.samples.end()) return trace.samples.back().total();
    return it->total();
  };
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::lesson_end) s.lesson_end_totals.push_back(total_at(e.t));
    if (e.kind == EventKind::attempt) {
      ++s.attempts;
      if (e.attempt && e.attempt->solved) ++s.tasks_solved;
    }
  }

  // Terminal break: trailing samples without teaching, plus the boundary
  // sample where forgetting starts.
  std::size_t first = trace.samples.size();
  while (first > 0 && !trace.samples[first - 1].teaching) --first;
  if (first < trace.samples.size()) {
    if (first > 0) --first;
    if (trace.samples.size() - first >= 2) {
      const std::size_t n = last.z.size();
      std::vector<double> ts;
      for (std::size_t i = first; i < trace.samples.size(); ++i) ts.push_back(trace.samples[i].t);
      for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> ys;
        for (std::size_t i = first; i < trace.samples.size(); ++i) ys.push_back(trace.samples[i].z[c]);
        if (auto rate = fit_decay_rate(ts, ys)) s.terminal_decay.push_back({c + 1, *rate});
      }
    }
  }
  s.dips = count_dips(trace);
  return s;
}

inline json summary_to_json(const TraceSummary& s, const std::string& strength_name) {
  json fits = json::array();
  for (const auto& f : s.terminal_decay) fits.push_back({{"component", f.component}, {"rate", f.rate}});
  return json{{"final_t", s.final_t},
              {"final_z", s.final_z},
              {"final_total", s.final_total},
              {"final_" + strength_name, s.final_strength},
              {"lesson_end_totals", s.lesson_end_totals},
              {"terminal_decay_rates", fits},
              {"dips", s.dips},
              {"attempts", s.attempts},
              {"tasks_solved", s.tasks_solved},
              {"clamp_events", s.clamp_events}};
}

/// Dispatch a validated config to the scenario engine.
inline SimulationTrace simulate(const RunConfig& cfg) {
  SimulationTrace trace;
  switch (cfg.scenario) {
    case Scenario::lessons:
      trace = run_lessons(cfg.schedule.value(), cfg.model, cfg.initial_state, cfg.integrator);
      break;
    case Scenario::task_sequence:
      trace = run_task_sequence(cfg.tasks.value(), cfg.model, cfg.initial_state, cfg.integrator, cfg.seed);
      break;
    case Scenario::school_career:
      trace = run_school_career(cfg.career.value(), cfg.model.params, cfg.initial_state, cfg.integrator);
      break;
  }
  trace.metadata.seed = cfg.seed;
  trace.metadata.unit = cfg.unit;
  return trace;
}

struct RunArtifacts {
  std::filesystem::path trace;
  std::filesystem::path events;
  std::filesystem::path metadata;
  std::filesystem::path summary;
  std::optional<std::filesystem::path> plot;
  TraceSummary stats;
};

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << content;
  if (!out.flush()) throw std::runtime_error("write failed for '" + p.string() + "'");
}

}  // namespace detail

/// Run one config and write its artifacts into `output.dir`:
/// `<name>.csv|.json`, `<name>.events.json`, `<name>.meta.json`,
/// `<name>.summary.json` and optionally `<name>.gp`. On failure any file
/// already written is removed before the exception propagates.
inline RunArtifacts run(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output.dir);
  const std::string& name = cfg.output.name;
  RunArtifacts art;
  art.trace = dir / (name + (cfg.output.format == OutputFormat::csv ? ".csv" : ".json"));
  art.events = dir / (name + ".events.json");
  art.metadata = dir / (name + ".meta.json");
  art.summary = dir / (name + ".summary.json");
  if (cfg.output.plot) art.plot = dir / (name + ".gp");

  std::vector<fs::path> written;
  try {
    const SimulationTrace trace = simulate(cfg);
    art.stats = summarize(trace);
    fs::create_directories(dir);

    auto emit = [&](const fs::path& p, const std::string& content) {
      written.push_back(p);
      detail::write_file(p, content);
    };
    if (cfg.output.format == OutputFormat::csv) {
      std::ostringstream os;
      write_csv(os, trace);
      emit(art.trace, os.str());
    } else {
      emit(art.trace, trace_to_json(trace).dump(1) + "\n");
    }
    emit(art.events, events_to_json(trace).dump(1) + "\n");
    json meta = metadata_to_json(trace);
    meta["scenario"] = to_string(cfg.scenario);
    meta["config"] = to_json(cfg);
    emit(art.metadata, meta.dump(1) + "\n");
    emit(art.summary, summary_to_json(art.stats, trace.metadata.strength_name).dump(1) + "\n");
    if (art.plot) emit(*art.plot, gnuplot_script(trace, art.trace.filename().string()));
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
  return art;
}

}  // namespace didactic
