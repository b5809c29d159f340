// fields: run, validate, sweep and serve proxemic-engagement scenarios.

#include <csignal>
#include <atomic>
#include <chrono>
#include <fstream>
#include <future>
#include <iostream>
#include <thread>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "fields/scenario_io.hpp"
#include "fields/service.hpp"
#include "fields/transport.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;

std::atomic<bool> g_interrupted{false};

void report(const fields::ValidationError& e) {
  std::cerr << "validation failed:\n";
  for (const auto& msg : e.errors()) std::cerr << "  - " << msg << '\n';
}

// Splits "a,b,[c,d]" on top-level commas so array values survive.
std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '[' || c == '{') ++depth;
    if (c == ']' || c == '}') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

nlohmann::json parse_value(const std::string& raw) {
  try {
    return nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    return raw;  // bare words such as non_directional
  }
}

void print_events(const fields::EventTrace& trace) {
  for (const auto& r : trace.records) {
    for (const auto& e : r.events) {
      std::cerr << "  t=" << e.t << "  " << r.actor << " -> " << r.device << "  " << fields::to_string(e.kind);
      if (e.kind == fields::EventKind::LevelChanged) std::cerr << ' ' << e.from << "->" << e.to;
      std::cerr << '\n';
    }
  }
}

int write_trace(const fields::EventTrace& trace, const fields::ScenarioConfig& cfg, const std::string& out) {
  if (out.empty() || out == "-") {
    fields::write_trace_jsonl(std::cout, trace, cfg);
    return kExitOk;
  }
  std::ofstream file(out, std::ios::binary);
  if (!file) {
    std::cerr << "cannot write " << out << '\n';
    return kExitFailure;
  }
  fields::write_trace_jsonl(file, trace, cfg);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proxemic engagement engine: interaction fields, Potential Interest and interaction patterns"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> ticks_hz;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Replay a scenario and write its JSON-lines trace");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--out", out_path, "Trace output file (default: stdout)");
  run->add_option("--seed", seed, "Override the noise seed");
  run->add_option("--ticks-hz", ticks_hz, "Override the tick rate");
  run->add_flag("-q,--quiet", quiet, "Do not list events on stderr");

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", scenario_path, "Scenario file")->required();

  std::string param_path;
  std::string values;
  auto* sweep = app.add_subcommand("sweep", "Re-run a scenario once per parameter value");
  sweep->add_option("scenario", scenario_path, "Scenario file")->required();
  sweep->add_option("--param", param_path, "Parameter path, e.g. actors[0].k")->required();
  sweep->add_option("--values", values, "Comma-separated JSON values")->required();
  sweep->add_option("--out", out_path, "Output prefix; writes <prefix>.<i>.jsonl (default: stdout)");

  std::uint16_t port = 8765;
  std::string address = "0.0.0.0";
  auto* serve = app.add_subcommand("serve", "Host a live session for the sandbox UI");
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  serve->add_option("--address", address, "Bind address")->capture_default_str();
  serve->add_option("--scenario", scenario_path, "Scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    fields::ScenarioConfig cfg = fields::load_scenario_file(scenario_path);

    if (*validate) {
      std::cout << "ok: " << cfg.name << " (" << cfg.actors.size() << " actors, " << cfg.devices.size()
                << " devices, " << cfg.bindings.size() << " bindings)\n";
      return kExitOk;
    }

    if (*run) {
      if (seed) cfg = fields::set_param(cfg, "noise.seed", *seed);
      if (ticks_hz) cfg = fields::set_param(cfg, "tick_rate", *ticks_hz);
      const fields::EventTrace trace = fields::run_scenario(cfg);
      if (!quiet) {
        std::cerr << cfg.name << ": " << trace.records.size() << " records, config " << trace.meta.config_hash << '\n';
        print_events(trace);
      }
      return write_trace(trace, cfg, out_path);
    }

    if (*sweep) {
      std::vector<fields::ScenarioConfig> variants;
      for (const auto& raw : split_values(values)) variants.push_back(fields::set_param(cfg, param_path, parse_value(raw)));
      std::vector<std::future<fields::EventTrace>> runs;
      for (const auto& v : variants) runs.push_back(std::async(std::launch::async, [&v] { return fields::run_scenario(v); }));
      for (std::size_t i = 0; i < runs.size(); ++i) {
        const fields::EventTrace trace = runs[i].get();
        const std::string target = out_path.empty() ? "" : out_path + "." + std::to_string(i) + ".jsonl";
        if (const int rc = write_trace(trace, variants[i], target); rc != kExitOk) return rc;
      }
      return kExitOk;
    }

    if (*serve) {
      fields::SessionHost host(fields::make_session(cfg));
      fields::Server server(host, port, address);
      server.start();
      host.start();
      std::cerr << "serving \"" << cfg.name << "\" on " << address << ":" << server.port() << " at "
                << cfg.tick_rate << " Hz\n";
      std::signal(SIGINT, [](int) { g_interrupted = true; });
      std::signal(SIGTERM, [](int) { g_interrupted = true; });
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      host.stop();
      server.stop();
      return kExitOk;
    }
  } catch (const fields::ValidationError& e) {
    report(e);
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
