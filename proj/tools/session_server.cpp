// session_server: live class simulations over HTTP for teacher training.
//
//   session_server [--host H] [--port P] [--tick-hz F] [--static DIR]
//                  [--snapshot-dir DIR] [--restore]
//
// Host and port also come from DIDACTIC_HOST / DIDACTIC_PORT.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "didactic/session_http.hpp"

namespace {
volatile std::sig_atomic_t stop_requested = 0;
void on_signal(int) { stop_requested = 1; }
}  // namespace

int main(int argc, char** argv) {
  didactic::ServerOptions opts;
  if (const char* h = std::getenv("DIDACTIC_HOST")) opts.host = h;
  if (const char* p = std::getenv("DIDACTIC_PORT")) opts.port = std::atoi(p);
  bool restore = false;

  CLI::App app{"Live teacher-training session service"};
  app.add_option("--host", opts.host, "Bind address")->capture_default_str();
  app.add_option("--port", opts.port, "Port (0 picks a free one)")->capture_default_str();
  app.add_option("--tick-hz", opts.tick_hz, "Real-time ticks per second for running sessions (0 = off)")
      ->capture_default_str();
  app.add_option("--static", opts.static_dir, "Directory of UI assets served at /")->check(CLI::ExistingDirectory);
  app.add_option("--snapshot-dir", opts.snapshot_dir, "Write session dumps here periodically");
  app.add_option("--snapshot-every", opts.snapshot_every, "Seconds between dumps")->capture_default_str();
  app.add_flag("--restore", restore, "Reload sessions from --snapshot-dir at startup");
  CLI11_PARSE(app, argc, argv);

  didactic::SessionManager manager;
  if (restore) {
    if (opts.snapshot_dir.empty()) {
      std::cerr << "--restore needs --snapshot-dir\n";
      return 1;
    }
    namespace fs = std::filesystem;
    if (fs::is_directory(opts.snapshot_dir)) {
      for (const auto& entry : fs::directory_iterator(opts.snapshot_dir)) {
        if (entry.path().extension() != ".json") continue;
        try {
          std::ifstream in(entry.path());
          const auto id = didactic::restore_session(manager, didactic::json::parse(in));
          std::cout << "restored session " << id << '\n';
        } catch (const std::exception& e) {
          std::cerr << entry.path().string() << ": not restored: " << e.what() << '\n';
        }
      }
    }
  }

  didactic::SessionServer server(manager, opts);
  int port = 0;
  try {
    port = server.start();
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  std::cout << "listening on http://" << opts.host << ':' << port << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  if (!opts.snapshot_dir.empty()) server.write_snapshots(opts.snapshot_dir);
  server.stop();
  return 0;
}
