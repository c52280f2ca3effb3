// sib: command-line front end for block programs.
//
// Exit codes: 0 ok, 1 invalid program, 2 I/O failure, 3 runtime error,
// 4 bind failure.

#include <csignal>
#include <chrono>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "sib/error.h"
#include "sib/geometry.h"
#include "sib/interpreter.h"
#include "sib/preview.h"
#include "sib/program.h"
#include "sib/rtf.h"
#include "sib/simulator.h"
#include "sib/station.h"
#include "sib/station_server.h"
#include "sib/svg_plot.h"
#include "sib/trace.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitIo = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitBind = 4;

struct ExitError {
  int code;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ExitError{kExitIo, "cannot read '" + path + "'"};
  std::ostringstream s;
  s << in.rdbuf();
  if (in.bad()) throw ExitError{kExitIo, "read error on '" + path + "'"};
  return s.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
  out.flush();
  if (!out) throw ExitError{kExitIo, "cannot write '" + path + "'"};
}

sib::blocks::BlockProgram load_program(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return sib::blocks::parse(text);
  } catch (const sib::Error& e) {
    throw ExitError{kExitInvalid, path + ": " + e.what()};
  }
}

int cmd_validate(const std::string& path) {
  const auto program = load_program(path);
  std::cout << sib::blocks::serialize(program) << '\n';
  return kExitOk;
}

struct RunFlags {
  std::string path;
  int drones = 4;
  bool preview = false;
  std::string trace_out;
  std::string plot_out;
  std::uint64_t seed = 0;
  std::vector<double> answers;
};

void emit_artifacts(const RunFlags& f, const sib::sim::Trace& trace) {
  if (!f.trace_out.empty()) {
    write_file(f.trace_out, sib::sim::to_jsonl(trace));
    std::cout << f.trace_out << '\n';
  }
  if (!f.plot_out.empty()) {
    write_file(f.plot_out, sib::plot::render_svg(trace, {.title = f.path}));
    std::cout << f.plot_out << '\n';
  }
}

int finish_run(const RunFlags& f, const sib::sim::Trace& trace) {
  emit_artifacts(f, trace);
  if (trace.status == sib::blocks::ExecStatus::Errored) {
    std::cerr << "error: " << trace.error.value_or("execution failed") << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

// Live topic messages go to stdout as JSON lines.
class StdoutTopics final : public sib::TopicPublisher {
 public:
  void publish(std::string_view topic, const nlohmann::json& payload) override {
    std::cout << nlohmann::json{{"topic", topic}, {"payload", payload}}.dump() << std::endl;
  }
};

int run_live(const RunFlags& f, const sib::blocks::BlockProgram& program) {
  sib::sim::SimConfig cfg;
  cfg.seed = f.seed;
  sib::sim::Simulator sim(cfg, f.drones);
  StdoutTopics topics;
  sib::blocks::ProgramRunner runner;
  std::deque<double> answers(f.answers.begin(), f.answers.end());

  sib::sim::Trace trace;
  auto snap = sim.snapshot();
  trace.entries.push_back({snap.sim_time(), std::nullopt, snap.drones});
  auto exec = runner.run(program, {}, topics, snap);

  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(cfg.tick_dt));
  auto next = clock::now();
  while (true) {
    if (exec->status() == sib::blocks::ExecStatus::Prompting) {
      double value = 0.0;
      if (!answers.empty()) {
        value = answers.front();
        answers.pop_front();
      } else if (!(std::cin >> value)) {
        runner.stop();
      }
      if (exec->status() == sib::blocks::ExecStatus::Prompting) runner.answer_prompt(value);
      next = clock::now();
    }
    runner.advance(sim.snapshot(), sim);
    if (exec->finished()) break;
    const auto block = exec->state().current_block;
    sim.tick();
    snap = sim.snapshot();
    trace.entries.push_back({snap.sim_time(), block, snap.drones});
    next += period;
    std::this_thread::sleep_until(next);
  }
  const auto state = exec->state();
  trace.status = state.status;
  trace.error = state.error_message;
  return finish_run(f, trace);
}

int cmd_run(const RunFlags& f) {
  const auto program = load_program(f.path);
  if (!f.preview) return run_live(f, program);
  sib::sim::PreviewOptions opts;
  opts.sim.seed = f.seed;
  opts.answers = f.answers;
  const auto trace = sib::sim::preview_run(program, {}, f.drones, opts);
  return finish_run(f, trace);
}

std::vector<int> parse_counts(const std::string& list) {
  std::vector<int> out;
  std::stringstream s(list);
  std::string item;
  while (std::getline(s, item, ',')) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(item, &used);
      if (used != item.size() || n < 1) throw std::invalid_argument(item);
      out.push_back(n);
    } catch (const std::exception&) {
      throw ExitError{kExitInvalid, "bad drone count '" + item + "'"};
    }
  }
  if (out.empty()) throw ExitError{kExitInvalid, "--drones needs at least one count"};
  return out;
}

int cmd_bench(const std::string& list, double duration, int runs) {
  const auto counts = parse_counts(list);
  const auto report = sib::sim::run_bench(counts, duration, runs);
  std::cout << sib::sim::to_csv(report);
  return kExitOk;
}

std::atomic<bool> g_interrupted{false};
extern "C" void on_signal(int) { g_interrupted = true; }

struct ServeFlags {
  std::uint16_t port = 8080;
  std::string address = "127.0.0.1";
  int drones = 4;
  int dt_ms = 50;
  std::string programs = "programs";
  std::string ui;
};

int cmd_serve(const ServeFlags& f) {
  sib::station::StationConfig cfg;
  cfg.drones = f.drones;
  cfg.sim.tick_dt = f.dt_ms / 1000.0;
  cfg.program_dir = f.programs;
  // Keep telemetry near 10 Hz of sim time whatever the tick length.
  cfg.telemetry_every_ticks = std::max(1, static_cast<int>(std::lround(100.0 / f.dt_ms)));
  sib::station::Station station(cfg);

  sib::station::ServerOptions opts;
  opts.address = f.address;
  opts.port = f.port;
  if (!f.ui.empty()) opts.ui_dir = f.ui;
  sib::station::StationServer server(station, opts);
  try {
    server.start();
  } catch (const sib::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBind;
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  station.start_realtime();
  std::cout << nlohmann::json{{"port", server.port()}}.dump() << std::endl;
  std::cerr << "serving on http://" << f.address << ':' << server.port() << '\n';
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(50));

  std::cerr << "shutting down: landing all drones\n";
  server.stop();
  const bool landed = station.land_and_settle();
  std::cerr << (landed ? "all drones landed\n" : "warning: drones still airborne at shutdown\n");
  std::cout << nlohmann::json{{"shutdown", true}, {"landed", landed}}.dump() << std::endl;
  return kExitOk;
}

int cmd_formation(const std::string& kind, int n, double size, double height, double altitude) {
  sib::geom::FormationSpec spec;
  try {
    spec.kind = sib::geom::formation_kind_from_string(kind);
    spec.n = n;
    spec.size_param = size;
    spec.height = height;
    spec.altitude = altitude;
    std::cout << sib::geom::to_json(sib::geom::generate(spec)).dump() << '\n';
  } catch (const sib::Error& e) {
    throw ExitError{kExitInvalid, e.what()};
  }
  return kExitOk;
}

int cmd_plot(const std::string& trace_path, const std::string& out) {
  std::ifstream in(trace_path);
  if (!in) throw ExitError{kExitIo, "cannot read '" + trace_path + "'"};
  sib::sim::Trace trace;
  try {
    trace = sib::sim::read_jsonl(in);
  } catch (const sib::Error& e) {
    throw ExitError{kExitInvalid, trace_path + ": " + e.what()};
  }
  write_file(out, sib::plot::render_svg(trace, {.title = trace_path}));
  std::cout << out << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Swarm block programs: validate, preview, run, benchmark and serve"};
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a program and print its canonical form");
  validate->add_option("path", validate_path, "Program file")->required();

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Execute a program against a local simulator");
  run->add_option("path", run_flags.path, "Program file")->required();
  run->add_option("--drones", run_flags.drones, "Swarm size")->check(CLI::Range(1, sib::sim::kMaxDrones));
  run->add_flag("--preview", run_flags.preview, "Run as fast as possible instead of in real time");
  run->add_option("--trace", run_flags.trace_out, "Write the JSONL trace here");
  run->add_option("--plot", run_flags.plot_out, "Write an SVG plot of the trajectories here");
  run->add_option("--seed", run_flags.seed, "Seed for random LED groups");
  run->add_option("--answer", run_flags.answers, "Answers for Prompt blocks, consumed in order");

  std::string bench_list = "1,2,5,10,20,50";
  double bench_duration = 10.0;
  int bench_runs = 5;
  auto* bench = app.add_subcommand("bench", "Measure the real-time factor per swarm size (CSV on stdout)");
  bench->add_option("--drones", bench_list, "Comma separated swarm sizes");
  bench->add_option("--duration", bench_duration, "Simulated seconds per run")->check(CLI::PositiveNumber);
  bench->add_option("--runs", bench_runs, "Runs per size")->check(CLI::Range(1, 1000));

  ServeFlags serve_flags;
  auto* serve = app.add_subcommand("serve", "Serve the station over HTTP and WebSocket");
  serve->add_option("--port", serve_flags.port, "TCP port, 0 for any free port");
  serve->add_option("--address", serve_flags.address, "Listen address");
  serve->add_option("--drones", serve_flags.drones, "Swarm size")->check(CLI::Range(1, sib::sim::kMaxDrones));
  serve->add_option("--dt-ms", serve_flags.dt_ms, "Tick length in milliseconds")->check(CLI::Range(1, 1000));
  serve->add_option("--programs", serve_flags.programs, "Program store directory");
  serve->add_option("--ui", serve_flags.ui, "Directory with the built station UI");

  std::string f_kind;
  int f_n = 1;
  double f_size = 1.0, f_height = 0.0, f_alt = 0.0;
  auto* formation = app.add_subcommand("formation", "Print formation slots as JSON");
  formation->add_option("kind", f_kind, "line, circle, square, triangle, cube, pyramid or sphere")->required();
  formation->add_option("--n", f_n, "Number of slots")->required();
  formation->add_option("--size", f_size, "Spacing, radius, side or edge");
  formation->add_option("--height", f_height, "Pyramid height");
  formation->add_option("--altitude", f_alt, "Altitude offset");

  std::string plot_in, plot_out;
  auto* plot = app.add_subcommand("plot", "Render a recorded trace as SVG");
  plot->add_option("trace", plot_in, "JSONL trace")->required();
  plot->add_option("out", plot_out, "SVG output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*validate) return cmd_validate(validate_path);
    if (*run) return cmd_run(run_flags);
    if (*bench) return cmd_bench(bench_list, bench_duration, bench_runs);
    if (*serve) return cmd_serve(serve_flags);
    if (*formation) return cmd_formation(f_kind, f_n, f_size, f_height, f_alt);
    if (*plot) return cmd_plot(plot_in, plot_out);
  } catch (const ExitError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const sib::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
