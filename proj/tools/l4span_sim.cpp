// l4span-sim: run, sweep, validate and report on simulator scenarios.
//
// Exit codes: 0 ok, 1 configuration or input error, 2 acceptance failure.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "l4span/acceptance.hpp"
#include "l4span/errors.hpp"
#include "l4span/metrics.hpp"
#include "l4span/scenario.hpp"
#include "l4span/simulator.hpp"

namespace fs = std::filesystem;
using namespace l4span;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kAcceptanceFailed = 2;

std::vector<Override> parse_sets(const std::vector<std::string>& sets) {
  std::vector<Override> out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("--set", "expected path=value, got '" + s + "'");
    }
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("--out", "cannot write " + p.string());
  return os;
}

void write_run(const fs::path& dir, const Scenario& s, const SimResult& r, bool csv) {
  fs::create_directories(dir);
  {
    auto os = open_out(dir / "scenario.json");
    os << scenario_to_json(s);
  }
  {
    auto os = open_out(dir / "flows.jsonl");
    write_flow_intervals(os, r.records);
  }
  {
    auto os = open_out(dir / "drbs.jsonl");
    write_drb_intervals(os, r.records);
  }
  if (s.metrics.packet_records) {
    auto os = open_out(dir / "packets.jsonl");
    write_packets(os, r.records);
  }
  {
    auto os = open_out(dir / "summary.json");
    write_summary_json(os, r.summary);
  }
  {
    auto os = open_out(dir / "summary.txt");
    write_summary_text(os, r.summary);
  }
  if (csv) {
    auto fo = open_out(dir / "flows.csv");
    write_flow_intervals_csv(fo, r.records);
    if (s.metrics.packet_records) {
      auto po = open_out(dir / "packets.csv");
      write_packets_csv(po, r.records);
    }
  }
}

// "aqm.tau_secs=0.005,0.01" -> one axis of the sweep grid
struct Axis {
  std::string path;
  std::vector<std::string> values;
};

Axis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw ConfigError("--param", "expected path=v1,v2,..., got '" + spec + "'");
  }
  Axis a{spec.substr(0, eq), {}};
  std::stringstream vals(spec.substr(eq + 1));
  std::string v;
  while (std::getline(vals, v, ',')) {
    if (v.empty()) throw ConfigError("--param", "empty value in '" + spec + "'");
    a.values.push_back(v);
  }
  return a;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("L4SPAN_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) {
      throw ConfigError("L4SPAN_WORKERS", "expected a positive integer");
    }
    return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_run(const std::string& file, const std::vector<std::string>& sets,
            const std::string& out, bool csv) {
  const Scenario s = load_scenario(file, parse_sets(sets));
  const SimResult r = run_scenario(s);
  if (!out.empty()) write_run(out, s, r, csv);
  write_summary_text(std::cout, r.summary);
  return kOk;
}

int cmd_sweep(const std::string& file, const std::vector<std::string>& sets,
              const std::vector<std::string>& params, const std::string& out, bool csv) {
  const auto base = parse_sets(sets);
  std::vector<Axis> axes;
  for (const auto& p : params) axes.push_back(parse_axis(p));

  // cartesian product, first axis slowest
  std::vector<std::vector<Override>> points{{}};
  for (const auto& a : axes) {
    std::vector<std::vector<Override>> next;
    for (const auto& pt : points) {
      for (const auto& v : a.values) {
        auto q = pt;
        q.emplace_back(a.path, v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }

  // load everything first so configuration errors surface before any work
  std::vector<Scenario> scenarios;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto ov = base;
    ov.insert(ov.end(), points[i].begin(), points[i].end());
    scenarios.push_back(load_scenario(file, ov));
    std::string name = "point-" + std::to_string(i);
    for (const auto& [k, v] : points[i]) name += "_" + k + "=" + v;
    names.push_back(name);
  }

  std::atomic<std::size_t> next{0};
  std::mutex io;
  std::vector<std::string> errors;
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      try {
        const SimResult r = run_scenario(scenarios[i]);
        write_run(fs::path(out) / names[i], scenarios[i], r, csv);
        std::lock_guard lock(io);
        std::cout << names[i] << ": done\n";
      } catch (const std::exception& e) {
        std::lock_guard lock(io);
        errors.push_back(names[i] + ": " + e.what());
      }
    }
  };
  const std::size_t n = std::min(worker_count(), scenarios.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) std::cerr << "error: " << e << '\n';
  return errors.empty() ? kOk : kConfigError;
}

int cmd_validate(const std::string& file, const std::vector<std::string>& sets, bool print) {
  const Scenario s = load_scenario(file, parse_sets(sets));
  if (print) {
    std::cout << scenario_to_json(s);
  } else {
    std::cout << "ok: " << s.name << " (" << s.ues.size() << " UEs, " << s.flows.size()
              << " flows, " << s.horizon << " s)\n";
  }
  return kOk;
}

int cmd_report(const std::string& dir, const std::string& scenario_dir,
               const std::vector<int>& only, bool rerun) {
  const fs::path results = fs::path(dir) / "acceptance.json";
  std::vector<CriterionResult> res;
  if (!rerun && fs::exists(results)) {
    std::ifstream is(results);
    std::stringstream buf;
    buf << is.rdbuf();
    res = acceptance_from_json(buf.str());
  } else {
    AcceptanceOptions opts;
    opts.scenario_dir = scenario_dir;
    opts.only = only;
    opts.progress = &std::cerr;
    res = run_acceptance(opts);
    fs::create_directories(dir);
    auto os = open_out(results);
    os << acceptance_to_json(res);
  }
  write_acceptance_table(std::cout, res);
  const auto passed = std::count_if(res.begin(), res.end(),
                                    [](const CriterionResult& r) { return r.passed; });
  std::cout << passed << "/" << res.size() << " criteria passed\n";
  return all_passed(res) ? kOk : kAcceptanceFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"L4Span RAN marking simulator"};
  app.require_subcommand(1);

  std::string file, out, scenario_dir = L4SPAN_DEFAULT_SCENARIO_DIR;
  std::vector<std::string> sets, params;
  std::vector<int> only;
  bool csv = false, print = false, rerun = false;

  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("scenario", file, "Scenario JSON file")->required();
  run->add_option("--out,-o", out, "Directory for metric streams and summary");
  run->add_option("--set,-s", sets, "Override a field, e.g. aqm.tau_secs=0.005");
  run->add_flag("--csv", csv, "Also write CSV exports");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid, one output dir per point");
  sweep->add_option("scenario", file, "Scenario JSON file")->required();
  sweep->add_option("--param,-p", params, "Axis: path=v1,v2,... (repeatable)")->required();
  sweep->add_option("--out,-o", out, "Output root")->required();
  sweep->add_option("--set,-s", sets, "Fixed override applied to every point");
  sweep->add_flag("--csv", csv, "Also write CSV exports");
  sweep->footer("Workers: L4SPAN_WORKERS (default: hardware concurrency)");

  auto* validate = app.add_subcommand("validate", "Parse and cross-check a scenario");
  validate->add_option("scenario", file, "Scenario JSON file")->required();
  validate->add_option("--set,-s", sets, "Override a field");
  validate->add_flag("--print", print, "Print the scenario with every default filled in");

  auto* report = app.add_subcommand("report", "Acceptance-criteria table for a results dir");
  report->add_option("dir", out, "Results directory (acceptance.json)")->required();
  report->add_option("--scenarios", scenario_dir, "Bundled scenario directory");
  report->add_option("--only", only, "Restrict to these criterion ids");
  report->add_flag("--rerun", rerun, "Ignore cached acceptance.json and run the suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(file, sets, out, csv);
    if (*sweep) return cmd_sweep(file, sets, params, out, csv);
    if (*validate) return cmd_validate(file, sets, print);
    if (*report) return cmd_report(out, scenario_dir, only, rerun);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
