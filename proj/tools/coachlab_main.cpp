// coachlab command-line tool: batch sessions, sweeps, reports, the live
// training server and the acceptance experiments.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <numeric>
#include <thread>

#include <CLI11.hpp>

#include "coachlab/config.hpp"
#include "coachlab/experiments.hpp"
#include "coachlab/server.hpp"
#include "coachlab/session.hpp"
#include "coachlab/session_log.hpp"
#include "coachlab/training_session.hpp"

namespace fs = std::filesystem;
using namespace coachlab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted.store(true); }

struct SeedRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;
};

SeedRange parse_seed_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const auto s = std::stoull(text);
      return {s, s};
    }
    SeedRange r{std::stoull(text.substr(0, dots)), std::stoull(text.substr(dots + 2))};
    if (r.last < r.first) throw ConfigError("seed range '" + text + "' is empty");
    return r;
  } catch (const std::logic_error&) {
    throw ConfigError("seed range must look like a..b, got '" + text + "'");
  }
}

LogFormat format_for(const std::string& path, const std::string& requested) {
  if (!requested.empty()) {
    try {
      return parse_log_format(requested);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return fs::path(path).extension() == ".csv" ? LogFormat::csv : LogFormat::jsonl;
}

std::optional<double> final_return(const SessionLog& log) {
  for (auto it = log.records().rbegin(); it != log.records().rend(); ++it) {
    if (it->eval_return) return it->eval_return;
  }
  return std::nullopt;
}

std::string return_text(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

int cmd_run(const std::string& config_path, std::uint64_t seed, const std::string& out, const std::string& format) {
  const SessionConfig config = load_session_config(config_path);
  const LogFormat fmt = format_for(out, format);
  const SessionLog log = run_session(config, seed);
  export_log(log, out, fmt);
  std::printf("seed %llu: %zu steps, final greedy return %s, digest %s\n", static_cast<unsigned long long>(seed),
              log.records().size(), return_text(final_return(log)).c_str(), log.digest().c_str());
  if (log.header().aborted) {
    std::fprintf(stderr, "session aborted: %s (partial log written)\n", log.header().abort_reason.c_str());
    return kExitRuntime;
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& seeds, const std::string& out_dir, unsigned jobs) {
  const SessionConfig config = load_session_config(config_path);
  const SeedRange range = parse_seed_range(seeds);
  if (!out_dir.empty()) fs::create_directories(out_dir);
  const std::uint64_t count = range.last - range.first + 1;
  std::vector<std::optional<SessionLog>> logs(count);
  std::atomic<std::uint64_t> next{0};
  std::mutex error_mutex;
  std::string first_error;

  // Sessions share nothing; each worker claims the next seed.
  auto worker = [&] {
    for (std::uint64_t i = next++; i < count; i = next++) {
      try {
        SessionLog log = run_session(config, range.first + i);
        if (!out_dir.empty()) {
          export_log(log, (fs::path(out_dir) / ("seed_" + std::to_string(range.first + i) + ".jsonl")).string(),
                     LogFormat::jsonl);
        }
        logs[i] = std::move(log);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (!first_error.empty()) {
    std::fprintf(stderr, "sweep failed: %s\n", first_error.c_str());
    return kExitRuntime;
  }

  int status = 0;
  std::printf("%-8s %-8s %-10s %s\n", "seed", "steps", "return", "digest");
  for (std::uint64_t i = 0; i < count; ++i) {
    const SessionLog& log = *logs[i];
    std::printf("%-8llu %-8zu %-10s %s%s\n", static_cast<unsigned long long>(range.first + i), log.records().size(),
                return_text(final_return(log)).c_str(), log.digest().c_str(), log.header().aborted ? " ABORTED" : "");
    if (log.header().aborted) status = kExitRuntime;
  }
  return status;
}

int cmd_report(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("'" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".jsonl" || ext == ".csv")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::printf("no session logs in %s\n", dir.c_str());
    return 0;
  }
  std::printf("%-24s %-8s %-7s %-7s %-9s %-10s %-10s %s\n", "log", "seed", "learner", "steps", "episodes", "return",
              "mean|f|", "status");
  std::vector<double> returns;
  for (const fs::path& file : files) {
    const SessionLog log = import_log(file.string());
    double feedback = 0.0;
    std::size_t with_feedback = 0;
    for (const StepRecord& r : log.records()) {
      if (r.feedback) {
        feedback += std::abs(*r.feedback);
        ++with_feedback;
      }
    }
    const auto ret = final_return(log);
    if (ret) returns.push_back(*ret);
    const std::size_t episodes = log.records().empty() ? 0 : log.records().back().episode + 1;
    char mean[32];
    std::snprintf(mean, sizeof mean, "%.4f", with_feedback ? feedback / double(with_feedback) : 0.0);
    std::printf("%-24s %-8llu %-7s %-7zu %-9zu %-10s %-10s %s\n", file.filename().string().c_str(),
                static_cast<unsigned long long>(log.header().seed), log.header().learner.c_str(), log.records().size(),
                episodes, return_text(ret).c_str(), mean, log.header().aborted ? "aborted" : "ok");
  }
  if (!returns.empty()) {
    const double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / double(returns.size());
    const auto [lo, hi] = std::minmax_element(returns.begin(), returns.end());
    std::printf("\nfinal greedy return over %zu logs: mean %.4f, min %.4f, max %.4f\n", returns.size(), mean, *lo,
                *hi);
  }
  return 0;
}

int cmd_serve(const std::string& config_path, const std::string& listen, std::uint64_t seed, const std::string& out,
              double duration) {
  const SessionConfig config = load_session_config(config_path);
  const auto [host, port] = parse_listen_address(listen);
  TrainingSession session(config, seed);
  session.set_logger([](std::string_view line) { std::fprintf(stderr, "%.*s\n", int(line.size()), line.data()); });
  TrainerServer server(session, host, port);
  server.start();
  std::printf("serving on %s:%u (cycle %zu ms)\n", host.c_str(), unsigned(server.port()), config.service.cycle_ms);
  std::fflush(stdout);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto start = std::chrono::steady_clock::now();
  while (!g_interrupted.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (duration > 0 && std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= duration) {
      break;
    }
  }
  server.stop();
  const ServiceStats stats = session.stats();
  std::printf("stopped after %llu steps: %llu cycles, %llu overruns, %llu late wake-ups, %llu feedback applied, %llu dropped frames\n",
              static_cast<unsigned long long>(stats.steps), static_cast<unsigned long long>(server.loop().cycles()),
              static_cast<unsigned long long>(server.loop().overruns()),
              static_cast<unsigned long long>(server.loop().late_wakeups()),
              static_cast<unsigned long long>(stats.feedback_applied),
              static_cast<unsigned long long>(server.dropped_frames()));
  if (!out.empty()) export_log(session.log(), out, format_for(out, ""));
  return 0;
}

std::vector<NamedExperiment> all_experiments() {
  auto list = core_experiments();
  list.push_back({"soak", [] { return std::vector{soak_experiment()}; }});
  return list;
}

int cmd_experiment(const std::string& name) {
  bool found = false;
  bool all_passed = true;
  for (const NamedExperiment& e : all_experiments()) {
    if (name != "all" && e.name != name) continue;
    found = true;
    for (const ExperimentResult& r : e.run()) {
      std::printf("%s\n", format_result(r).c_str());
      std::fflush(stdout);
      all_passed = all_passed && r.passed;
    }
  }
  if (!found) throw ConfigError("unknown experiment '" + name + "'");
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coachlab: learning from policy-dependent human feedback"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string format;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run one oracle-trained session and export its log");
  run->add_option("--config", config_path, "Session config file")->required();
  run->add_option("--seed", seed, "Random seed")->default_val(0);
  run->add_option("--out", out, "Output log path")->required();
  run->add_option("--format", format, "csv or jsonl (default: from the extension)");

  std::string seeds;
  unsigned jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run one session per seed");
  sweep->add_option("--config", config_path, "Session config file")->required();
  sweep->add_option("--seeds", seeds, "Seed range a..b")->required();
  sweep->add_option("--out", out, "Directory for per-seed JSONL logs");
  sweep->add_option("--jobs", jobs, "Parallel workers")->default_val(1);

  std::string in_dir;
  auto* report = app.add_subcommand("report", "Summarise the session logs in a directory");
  report->add_option("--in", in_dir, "Directory of .jsonl/.csv logs")->required();

  std::string listen = "127.0.0.1:8765";
  double duration = 0.0;
  auto* serve = app.add_subcommand("serve", "Run the live training server");
  serve->add_option("--config", config_path, "Session config file")->required();
  serve->add_option("--listen", listen, "host:port")->default_val("127.0.0.1:8765");
  serve->add_option("--seed", seed, "Random seed")->default_val(0);
  serve->add_option("--out", out, "Export the session log here on shutdown");
  serve->add_option("--duration", duration, "Stop after this many seconds (0 = until interrupted)");

  std::string experiment_name;
  auto* experiment = app.add_subcommand("experiment", "Run an acceptance experiment");
  experiment->add_option("name", experiment_name, "Experiment name or 'all'")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, seed, out, format);
    if (*sweep) return cmd_sweep(config_path, seeds, out, jobs);
    if (*report) return cmd_report(in_dir);
    if (*serve) return cmd_serve(config_path, listen, seed, out, duration);
    if (*experiment) return cmd_experiment(experiment_name);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
