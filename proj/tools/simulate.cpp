// simulate: run scenario config files and export traces.
//
//   simulate <config-file>... [--seed N] [--out DIR] [--format csv|json]
//            [--dt X] [--jobs K] [--plot]
//
// Exit status: 0 success, 1 invalid configuration, 2 runtime failure.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "didactic/config.hpp"
#include "didactic/report.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<double> dt;
  bool plot = false;
};

enum Status { ok = 0, invalid = 1, failed = 2 };

std::mutex log_mu;

Status run_one(const std::string& path, const Overrides& o, bool name_from_file) {
  didactic::RunConfig cfg;
  try {
    cfg = didactic::load_config(path);
    if (name_from_file) cfg.output.name = std::filesystem::path(path).stem().string();
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.output.dir = *o.out;
    if (o.format) cfg.output.format = *o.format == "json" ? didactic::OutputFormat::json : didactic::OutputFormat::csv;
    if (o.dt) {
      if (!(*o.dt > 0.0)) throw didactic::ConfigError(std::vector<didactic::ConfigIssue>{{"--dt", "must be > 0"}});
      cfg.integrator.dt = *o.dt;
    }
    if (o.plot) cfg.output.plot = true;
  } catch (const didactic::ConfigError& e) {
    std::lock_guard lk(log_mu);
    std::cerr << path << ": invalid configuration\n" << e.what() << '\n';
    return invalid;
  }
  try {
    const auto art = didactic::run(cfg);
    std::lock_guard lk(log_mu);
    const auto& s = art.stats;
    std::cout << path << ": wrote " << art.trace.string() << "\n"
              << "  final Z = " << didactic::format_number(s.final_total) << ", final strength = "
              << didactic::format_number(s.final_strength) << ", dips = " << s.dips;
    if (s.attempts) std::cout << ", attempts = " << s.attempts << ", solved = " << s.tasks_solved;
    std::cout << '\n';
    if (s.clamp_events) std::cout << "  warning: " << s.clamp_events << " clamp events (dt too large?)\n";
    return ok;
  } catch (const std::exception& e) {
    std::lock_guard lk(log_mu);
    std::cerr << path << ": run failed: " << e.what() << '\n';
    return failed;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate learning and forgetting scenarios"};
  std::vector<std::string> configs;
  Overrides o;
  std::size_t jobs = 1;
  app.add_option("config", configs, "Scenario config file(s) (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Override the RNG seed");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--format", o.format, "Trace format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--dt", o.dt, "Override the integrator step");
  app.add_option("--jobs", jobs, "Run this many configs in parallel")->check(CLI::PositiveNumber);
  app.add_flag("--plot", o.plot, "Also write a gnuplot script");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : invalid;
  }

  // With several configs each run is named after its file so outputs never collide.
  const bool name_from_file = configs.size() > 1;
  std::vector<Status> results(configs.size(), ok);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) results[i] = run_one(configs[i], o, name_from_file);
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < std::min(jobs, configs.size()); ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return *std::max_element(results.begin(), results.end());
}
