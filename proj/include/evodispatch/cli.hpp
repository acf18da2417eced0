#ifndef EVODISPATCH_CLI_HPP
#define EVODISPATCH_CLI_HPP

// Command implementations behind the `evodispatch` binary. Kept in a header
// so tests can drive them in-process.
//
// Exit codes: 0 success, 2 usage/config/input error, 3 internal failure.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dispatch.hpp"
#include "evolve.hpp"
#include "generator.hpp"
#include "metrics.hpp"
#include "network.hpp"
#include "objective.hpp"
#include "oracle.hpp"
#include "simulator.hpp"
#include "text.hpp"

namespace evodispatch::cli {

inline constexpr std::string_view kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInternal = 3;

/// Bad input, configuration or I/O: exit 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonArgs {
  std::string matrix;
  std::string freq;
  std::string scenario_file;
  std::string name;
  std::uint64_t seed = 0;
  std::size_t city_zones = 19;
  std::uint64_t city_seed = 0;
  Seconds dt = 300;
  Seconds bins = 600;
  std::string out;
};

struct RunArgs {
  CommonArgs common;
  std::string objective = "default_composite";
};

struct EvolveArgs {
  CommonArgs common;
  bool mock = false;
  bool adaptive_mock = false;
  std::string endpoint;
  std::string model;
  double temperature = 0.9;
  int retries = 3;
  double timeout_s = 60.0;
  double mock_invalid_rate = 0.0;
  std::optional<std::uint64_t> mock_seed;
  double hmcr = 0.9;
  double par = 0.2;
  std::size_t iters = 10;
  std::size_t pop = 5;
  std::size_t workers = 1;
  bool open_loop = false;
  bool audit = false;
};

struct OracleArgs {
  CommonArgs common;
  std::size_t max_passengers = 5;
  std::size_t max_vehicles = 3;
};

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
};

struct CityArgs {
  std::size_t zones = 19;
  std::uint64_t seed = 0;
  std::string out;
};

// ---------------------------------------------------------------------------
// Files

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw UsageError("cannot write " + path.string());
  f << content;
  if (!f) throw UsageError("failed writing " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// `--out` as given, else runs/<UTC timestamp>-<command>.
inline std::filesystem::path run_dir(const std::string& out, std::string_view command) {
  std::filesystem::path dir;
  if (!out.empty()) {
    dir = out;
  } else {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    dir = std::filesystem::path("runs") / (std::string(buf) + "-" + std::string(command));
    for (int k = 1; std::filesystem::exists(dir); ++k)
      dir = std::filesystem::path("runs") / (std::string(buf) + "-" + std::string(command) + "-" + std::to_string(k));
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

inline void write_manifest(const std::filesystem::path& dir, std::string_view command,
                           const std::vector<std::string>& args, nlohmann::ordered_json inputs) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  nlohmann::ordered_json j;
  j["command"] = command;
  j["args"] = args;
  j["version"] = kVersion;
  j["created"] = buf;
  j["inputs"] = std::move(inputs);
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Inputs

/// Travel matrix and OD table: from files, or the synthetic city. A matrix
/// without an OD table gets uniform off-diagonal demand.
inline SyntheticCity load_city(const CommonArgs& a) {
  if (a.matrix.empty()) {
    if (!a.freq.empty()) throw UsageError("--freq needs --matrix");
    return make_synthetic_city(a.city_zones, a.city_seed);
  }
  auto matrix = load_travel_matrix(a.matrix);
  if (!a.freq.empty()) {
    auto freq = load_od_frequency(a.freq, matrix);
    return SyntheticCity{std::move(matrix), std::move(freq)};
  }
  const std::size_t n = matrix.zone_count();
  std::vector<double> w(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) w[i * n + i] = 0.0;
  return SyntheticCity{std::move(matrix), OdFrequency(n, std::move(w))};
}

inline Scenario load_or_generate(const CommonArgs& a, const SyntheticCity& city) {
  if (!a.scenario_file.empty()) {
    if (!a.name.empty()) throw UsageError("give either --scenario or --name, not both");
    return load_scenario(a.scenario_file, city.matrix.zone_count());
  }
  if (a.name.empty()) throw UsageError("a scenario is required: --scenario FILE or --name P<n>_C<n>_T<n>");
  auto spec = parse_scenario_name(a.name);
  spec.seed = a.seed;
  return generate_scenario(spec, city.freq, city.matrix);
}

/// Builtin name or path to a DSL JSON file; returns (spec, label).
inline std::pair<ObjectiveSpec, std::string> resolve_objective(const std::string& selector) {
  for (const auto& n : builtin_names())
    if (n == selector) return {builtin_objective(n), n};
  if (!std::filesystem::exists(selector))
    throw UsageError("objective '" + selector + "' is neither a builtin nor a file");
  ObjectiveSpec spec;
  try {
    spec = parse_objective(std::string_view(read_text(selector)));
  } catch (const ObjectiveParseError& e) {
    throw UsageError(selector + ": " + e.what());
  }
  const auto violations = validate(spec);
  if (!violations.empty()) {
    std::string msg = selector + ": invalid objective";
    for (const auto& v : violations) msg += "\n  " + v;
    throw UsageError(msg);
  }
  return {spec, std::filesystem::path(selector).stem().string()};
}

inline void check_common(const CommonArgs& a) {
  if (a.dt < 1) throw UsageError("--dt must be >= 1");
  if (a.bins < 1) throw UsageError("--bins must be >= 1");
}

inline std::string scenario_label(const Scenario& s) { return format_scenario_name(s.spec); }

inline nlohmann::ordered_json labelled_metrics(const Metrics& m, const std::string& method, const Scenario& s,
                                               Seconds dt) {
  nlohmann::ordered_json j;
  j["method"] = method;
  j["scenario"] = scenario_label(s);
  j["seed"] = s.spec.seed;
  j["dt"] = dt;
  const auto mj = metrics_to_json(m);
  for (const auto& [k, v] : mj.items()) j[k] = v;
  return j;
}

inline std::string one_decimal(double minutes) { return text::format_fixed(minutes, 1); }

// ---------------------------------------------------------------------------
// Commands

inline int cmd_city(const CityArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const auto city = make_synthetic_city(a.zones, a.seed);
  const auto dir = run_dir(a.out, "city");
  write_file(dir / "matrix.csv", to_csv(city.matrix));
  write_file(dir / "freq.csv", to_csv(city.freq));
  write_manifest(dir, "city", argv, {{"zones", a.zones}, {"seed", a.seed}});
  out << "wrote " << (dir / "matrix.csv").string() << " and " << (dir / "freq.csv").string() << "\n";
  return kExitOk;
}

inline int cmd_generate(const CommonArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  if (a.name.empty()) throw UsageError("generate needs --name P<n>_C<n>_T<n>");
  const auto city = load_city(a);
  const auto s = load_or_generate(a, city);
  const auto dir = run_dir(a.out, "generate");
  write_file(dir / "scenario.json", scenario_to_json(s).dump(2) + "\n");
  write_manifest(dir, "generate", argv,
                 {{"scenario", scenario_label(s)}, {"seed", s.spec.seed}, {"matrix", city.matrix.fingerprint()}});
  out << "wrote " << (dir / "scenario.json").string() << " (" << s.requests.size() << " requests, "
      << s.fleet.size() << " taxis)\n";
  return kExitOk;
}

inline int cmd_run(const RunArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  check_common(a.common);
  const auto [spec, label] = resolve_objective(a.objective);
  const auto city = load_city(a.common);
  const auto s = load_or_generate(a.common, city);
  DispatchOptions opts;
  opts.dt = a.common.dt;
  opts.bin_seconds = a.common.bins;
  const auto result = run_fixed(s, city.matrix, spec, opts);
  const auto dir = run_dir(a.common.out, "run");
  write_file(dir / "metrics.json", labelled_metrics(result.metrics, label, s, opts.dt).dump(2) + "\n");
  write_file(dir / "heatmap.csv", heatmap_to_csv(result.metrics));
  write_file(dir / "trace.jsonl", trace_to_jsonl(result.trace));
  write_file(dir / "objective.json", objective_to_json(spec).dump(2) + "\n");
  write_manifest(dir, "run", argv,
                 {{"scenario", scenario_label(s)},
                  {"seed", s.spec.seed},
                  {"objective", label},
                  {"matrix", city.matrix.fingerprint()}});
  out << "mean wait: " << one_decimal(result.metrics.mean_wait_min) << " min (" << label << ", "
      << scenario_label(s) << ")\n";
  return kExitOk;
}

inline GeneratorConfig generator_config(const EvolveArgs& a, const std::filesystem::path& dir) {
  GeneratorConfig g;
  const int modes = int(a.mock) + int(a.adaptive_mock) + int(!a.endpoint.empty());
  if (modes != 1) throw UsageError("choose exactly one of --mock, --adaptive-mock, --endpoint");
  g.mode = a.mock ? GeneratorMode::mock : a.adaptive_mock ? GeneratorMode::adaptive_mock : GeneratorMode::remote;
  g.endpoint_url = a.endpoint;
  g.model_name = a.model;
  g.temperature = a.temperature;
  g.max_retries = a.retries;
  g.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(a.timeout_s * 1000.0));
  g.mock_invalid_rate = a.mock_invalid_rate;
  g.mock_seed = a.mock_seed.value_or(a.common.seed);
  if (a.audit) g.audit_log = (dir / "audit.jsonl").string();
  const auto problems = validate(g);
  if (!problems.empty()) throw UsageError("generator: " + problems.front());
  return g;
}

inline int cmd_evolve(const EvolveArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  check_common(a.common);
  const auto city = load_city(a.common);
  const auto s = load_or_generate(a.common, city);
  HsParams params;
  params.hmcr = a.hmcr;
  params.par = a.par;
  params.pop_size = a.pop;
  params.iterations = a.iters;
  params.rng_seed = a.common.seed;
  {
    auto p = params;
    p.steps = 1;
    const auto problems = validate(p);
    if (!problems.empty()) throw UsageError(problems.front());
  }
  const auto dir = run_dir(a.common.out, "evolve");
  Generator gen(generator_config(a, dir));
  EvolutionOptions opts;
  opts.mode = a.open_loop ? LoopMode::open_loop : LoopMode::closed_loop;
  opts.dispatch.dt = a.common.dt;
  opts.dispatch.bin_seconds = a.common.bins;
  opts.workers = a.workers;
  const auto report = run_evolution(s, city.matrix, params, gen, opts);

  // Replay the best individual's objectives for its full metrics.
  const auto& best = report.best();
  const auto replay = run_dispatch(
      s, city.matrix,
      [&](std::size_t e, const DynContext&) { return best.per_step.at(std::min(e, best.per_step.size() - 1)).objective; },
      opts.dispatch);
  if (replay.metrics.mean_wait_min != best.fitness)
    throw std::logic_error("replay of the best individual does not reproduce its fitness");

  auto rj = report_to_json(report);
  rj["scenario"] = scenario_label(s);
  rj["generator_queries"] = gen.query_count();
  write_file(dir / "evolution.json", rj.dump(2) + "\n");
  write_file(dir / "best_objective.json", objective_to_json(best.per_step.front().objective).dump(2) + "\n");
  write_file(dir / "best_condensed.txt", token_select(best));
  const std::string method = a.open_loop ? "evolved_open_loop" : "evolved";
  write_file(dir / "metrics.json", labelled_metrics(replay.metrics, method, s, opts.dispatch.dt).dump(2) + "\n");
  write_file(dir / "heatmap.csv", heatmap_to_csv(replay.metrics));
  write_file(dir / "trace.jsonl", trace_to_jsonl(replay.trace));
  write_manifest(dir, "evolve", argv,
                 {{"scenario", scenario_label(s)},
                  {"seed", s.spec.seed},
                  {"mode", a.open_loop ? "open_loop" : "closed_loop"},
                  {"generator", a.mock ? "mock" : a.adaptive_mock ? "adaptive_mock" : "remote"},
                  {"matrix", city.matrix.fingerprint()}});
  for (const auto& it : report.iterations)
    out << "iteration " << it.iteration << ": best " << one_decimal(it.best) << " min, mean " << one_decimal(it.mean)
        << " min, error rate " << text::format_fixed(it.error_rate, 3) << "\n";
  out << "queries: " << report.queries << ", errors: " << report.errors << "\n";
  return kExitOk;
}

inline int cmd_oracle(const OracleArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const auto city = load_city(a.common);
  const auto s = load_or_generate(a.common, city);
  const OracleLimits limits{a.max_passengers, a.max_vehicles};
  if (s.requests.size() > limits.max_passengers || s.fleet.size() > limits.max_vehicles)
    throw UsageError("instance " + scenario_label(s) + " exceeds oracle limits (" +
                     std::to_string(limits.max_passengers) + " passengers, " + std::to_string(limits.max_vehicles) +
                     " taxis)");
  const Simulator sim(s, city.matrix);
  const auto snap = sim.snapshot();
  const auto holistic = solve_holistic(snap, city.matrix, limits);
  const Seconds hier = hierarchical_wait(builtin_objective("default_composite"), snap, city.matrix);
  if (holistic.total_wait > hier) throw std::logic_error("oracle value exceeds the hierarchical value");
  const double ratio = holistic.total_wait > 0 ? static_cast<double>(hier) / static_cast<double>(holistic.total_wait)
                                               : (hier == 0 ? 1.0 : std::numeric_limits<double>::infinity());
  const auto dir = run_dir(a.common.out, "oracle");
  nlohmann::ordered_json j;
  j["scenario"] = scenario_label(s);
  j["seed"] = s.spec.seed;
  j["oracle_wait_s"] = holistic.total_wait;
  j["hierarchical_wait_s"] = hier;
  if (std::isfinite(ratio)) j["ratio"] = ratio;
  else j["ratio"] = nullptr;
  j["oracle_assignment"] = holistic.assignment.taxi_of;
  write_file(dir / "gap.json", j.dump(2) + "\n");
  write_manifest(dir, "oracle", argv, {{"scenario", scenario_label(s)}, {"seed", s.spec.seed}});
  out << "oracle: " << holistic.total_wait << " s\nhierarchical: " << hier << " s\nratio: "
      << (std::isfinite(ratio) ? text::format_fixed(ratio, 4) : std::string("inf")) << "\n";
  return kExitOk;
}

/// CSV of mean waits, methods as rows and scenarios as columns, in order of
/// first appearance. Several files for one cell are averaged.
inline int cmd_report(const ReportArgs& a, std::ostream& out) {
  if (a.inputs.empty()) throw UsageError("report needs at least one metrics file");
  std::vector<std::string> methods, scenarios;
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> cells;
  std::optional<std::int64_t> bins;
  std::string heat = "method,scenario,zone,bin,mean_delay_min,count\n";
  for (const auto& path : a.inputs) {
    if (!std::filesystem::exists(path)) throw UsageError("missing metrics file " + path);
    nlohmann::json j = nlohmann::json::parse(read_text(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw UsageError(path + ": not a JSON object");
    std::string method, scenario;
    double mean = 0.0;
    std::int64_t b = 0;
    try {
      method = j.at("method").get<std::string>();
      scenario = j.at("scenario").get<std::string>();
      mean = j.at("mean_wait_min").get<double>();
      b = j.at("bin_seconds").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(path + ": " + e.what());
    }
    if (bins && *bins != b)
      throw UsageError(path + ": bin size " + std::to_string(b) + " s differs from " + std::to_string(*bins) + " s");
    bins = b;
    if (std::find(methods.begin(), methods.end(), method) == methods.end()) methods.push_back(method);
    if (std::find(scenarios.begin(), scenarios.end(), scenario) == scenarios.end()) scenarios.push_back(scenario);
    auto& c = cells[{method, scenario}];
    c.first += mean;
    c.second += 1;
    if (j.contains("heatmap"))
      for (const auto& h : j["heatmap"])
        heat += method + "," + scenario + "," + std::to_string(h.at("zone").get<std::int64_t>()) + "," +
                std::to_string(h.at("bin").get<std::int64_t>()) + "," +
                text::format_double(h.at("mean_delay_min").get<double>()) + "," +
                std::to_string(h.at("count").get<std::int64_t>()) + "\n";
  }
  std::string csv = "method";
  for (const auto& s : scenarios) csv += "," + s;
  csv += "\n";
  for (const auto& m : methods) {
    csv += m;
    for (const auto& s : scenarios) {
      csv += ",";
      const auto it = cells.find({m, s});
      if (it != cells.end()) csv += text::format_double(it->second.first / static_cast<double>(it->second.second));
    }
    csv += "\n";
  }
  if (!a.out.empty()) {
    const auto dir = run_dir(a.out, "report");
    write_file(dir / "report.csv", csv);
    write_file(dir / "heatmaps.csv", heat);
  }
  out << csv;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Argument parsing

inline void add_common(CLI::App* app, CommonArgs& a, bool with_dispatch) {
  app->add_option("--matrix", a.matrix, "Travel-time matrix CSV (seconds)");
  app->add_option("--freq", a.freq, "OD frequency CSV");
  app->add_option("--scenario", a.scenario_file, "Scenario JSON file");
  app->add_option("--name", a.name, "Scenario pattern P<n>_C<n>_T<n>");
  app->add_option("--seed", a.seed, "Seed for scenario generation and search");
  app->add_option("--zones", a.city_zones, "Zones of the synthetic city when no matrix is given");
  app->add_option("--city-seed", a.city_seed, "Seed of the synthetic city");
  if (with_dispatch) {
    app->add_option("--dt", a.dt, "Decision epoch length in seconds");
    app->add_option("--bins", a.bins, "Heatmap bin length in seconds");
  }
  app->add_option("--out", a.out, "Output directory (default runs/<timestamp>-<command>)");
}

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"evodispatch: evolved objectives for two-level taxi dispatch"};
  app.set_config("--config", "", "Read options from a key = value file");
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CityArgs city;
  auto* c_city = app.add_subcommand("city", "Write the synthetic city's matrix and OD table");
  c_city->add_option("--zones", city.zones, "Number of zones");
  c_city->add_option("--seed", city.seed, "Seed");
  c_city->add_option("--out", city.out, "Output directory");

  CommonArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Generate a seeded scenario file");
  add_common(c_gen, gen, false);

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "One dispatch run with a fixed objective");
  add_common(c_run, run.common, true);
  c_run->add_option("--objective", run.objective, "Builtin objective name or DSL JSON file");

  EvolveArgs evo;
  auto* c_evo = app.add_subcommand("evolve", "Harmony-search evolution of objectives");
  add_common(c_evo, evo.common, true);
  c_evo->add_flag("--mock", evo.mock, "Use the deterministic offline generator");
  c_evo->add_flag("--adaptive-mock", evo.adaptive_mock, "Use the demand-reactive offline generator");
  c_evo->add_option("--endpoint", evo.endpoint, "Chat-completions URL");
  c_evo->add_option("--model", evo.model, "Model name sent to the endpoint");
  c_evo->add_option("--temperature", evo.temperature, "Sampling temperature");
  c_evo->add_option("--retries", evo.retries, "Retries per query");
  c_evo->add_option("--timeout", evo.timeout_s, "Per-request timeout in seconds");
  c_evo->add_option("--mock-invalid-rate", evo.mock_invalid_rate, "Probability of an invalid mock response");
  c_evo->add_option("--mock-seed", evo.mock_seed, "Mock seed (default: --seed)");
  c_evo->add_option("--hmcr", evo.hmcr, "Harmony memory considering rate");
  c_evo->add_option("--par", evo.par, "Pitch adjustment rate");
  c_evo->add_option("--iters", evo.iters, "Iterations");
  c_evo->add_option("--pop", evo.pop, "Population size");
  c_evo->add_option("--workers", evo.workers, "Parallel rounds per iteration");
  c_evo->add_flag("--open-loop", evo.open_loop, "Query once at the start and reuse the objective");
  c_evo->add_flag("--audit", evo.audit, "Log every prompt and response to audit.jsonl");

  OracleArgs orc;
  auto* c_orc = app.add_subcommand("oracle", "Holistic optimum vs the two-level pipeline on a tiny instance");
  add_common(c_orc, orc.common, false);
  c_orc->add_option("--max-passengers", orc.max_passengers, "Oracle passenger limit");
  c_orc->add_option("--max-taxis", orc.max_vehicles, "Oracle taxi limit");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Tabulate metrics files");
  c_rep->add_option("inputs", rep.inputs, "metrics.json files")->required();
  c_rep->add_option("--out", rep.out, "Also write report.csv and heatmaps.csv here");

  std::vector<std::string> argv_store{"evodispatch"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (c_city->parsed()) return cmd_city(city, args, out);
    if (c_gen->parsed()) return cmd_generate(gen, args, out);
    if (c_run->parsed()) return cmd_run(run, args, out);
    if (c_evo->parsed()) return cmd_evolve(evo, args, out);
    if (c_orc->parsed()) return cmd_oracle(orc, args, out);
    if (c_rep->parsed()) return cmd_report(rep, out);
    err << "no command given\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ObjectiveParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SimulationError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace evodispatch::cli

#endif  // EVODISPATCH_CLI_HPP
