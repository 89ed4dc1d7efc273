// Command-line front end for the p-Laplacian MinRes studies.

#include "pminres/config.hpp"
#include "pminres/driver.hpp"
#include "pminres/kernels.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace pminres;

namespace {

enum ExitCode { kOk = 0, kSolverAbort = 1, kBadInput = 2 };

struct Overrides {
  std::string config_path;
  std::optional<double> p;
  std::optional<double> sigma;
  std::string x0;
  std::optional<double> theta;
  std::optional<int> levels;
  std::string strategy;
  std::string out_dir = "out";
  std::vector<std::string> settings;
  bool no_timing = false;
  bool telemetry = false;
  int rate_window = 3;
};

void add_common(CLI::App* cmd, Overrides& o, bool with_strategy) {
  cmd->add_option("-c,--config", o.config_path, "Config file (key = value, see docs/config.md)");
  cmd->add_option("--p", o.p, "Target exponent p (> 1)");
  cmd->add_option("--sigma", o.sigma, "Load singularity exponent (< 2), default 0.97");
  cmd->add_option("--x0", o.x0, "Singularity location as 'x,y'");
  cmd->add_option("--theta", o.theta, "Doerfler parameter in (0, 1]");
  cmd->add_option("--levels", o.levels, "Number of mesh levels (>= 1)");
  if (with_strategy)
    cmd->add_option("--strategy", o.strategy, "uniform, pre_adapted or adaptive")
        ->check(CLI::IsMember({"uniform", "pre_adapted", "pre_adapted_then_uniform", "adaptive"}));
  cmd->add_option("-o,--out", o.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--set", o.settings, "Extra config setting 'key=value' (repeatable)");
  cmd->add_flag("--no-timing", o.no_timing, "Write zero wall_ms so CSVs are byte-reproducible");
  cmd->add_flag("--telemetry", o.telemetry, "Write solver telemetry as JSON lines");
  cmd->add_option("--rate-window", o.rate_window, "Trailing levels used for the rate fit")
      ->capture_default_str()
      ->check(CLI::Range(2, 1000));
}

// Config file first, then explicit flags, then --set entries.
ProblemConfig resolve(const Overrides& o, ProblemConfig base) {
  if (!o.config_path.empty()) base = load_config(o.config_path, base);
  if (o.p) base.p_target = *o.p;
  if (o.sigma) base.sigma = *o.sigma;
  if (!o.x0.empty()) apply_setting(base, "x0", o.x0);
  if (o.theta) base.theta = *o.theta;
  if (o.levels) base.max_levels = *o.levels;
  if (!o.strategy.empty()) apply_setting(base, "strategy", o.strategy);
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set", 0, s, "expected key=value");
    apply_setting(base, s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.telemetry) base.telemetry = true;
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("<options>", 0, "", e.what());
  }
  return base;
}

nlohmann::json rates_json(const std::vector<StudyRecord>& records, int window) {
  nlohmann::json j;
  j["levels"] = records.size();
  j["reference_slope"] = -0.5;
  if (records.size() >= static_cast<std::size_t>(window) && window >= 2) {
    const RateSummary r = summarize_rates(records, window);
    j["window"] = r.window;
    j["error_slope"] = r.error_slope;
    j["eta_slope"] = r.eta_slope;
    j["slope_gap"] = std::abs(r.error_slope - r.eta_slope);
  } else {
    j["window"] = nullptr;
  }
  nlohmann::json newton = nlohmann::json::array();
  for (const auto& rec : records) newton.push_back(rec.newton_total);
  j["newton_totals"] = newton;
  return j;
}

struct StudyOutcome {
  bool completed = false;
  nlohmann::json rates;
};

// Runs one study, writing <stem>.csv, <stem>.config and optionally
// <stem>.telemetry.jsonl into cfg.output_dir.
StudyOutcome run_and_write(ProblemConfig cfg, const std::string& stem, const Overrides& o) {
  fs::create_directories(cfg.output_dir);
  const fs::path dir(cfg.output_dir);
  {
    std::ofstream os(dir / (stem + ".config"));
    write_config(cfg, os);
  }
  std::ofstream tel_stream;
  Telemetry tel;
  if (cfg.telemetry) {
    tel_stream.open(dir / (stem + ".telemetry.jsonl"));
    tel = Telemetry(tel_stream);
  }
  std::cerr << "[" << stem << "] p=" << cfg.p_target << " strategy=" << to_string(cfg.strategy)
            << " levels=" << cfg.max_levels << "\n";
  StudyResult res = run_study(
      cfg,
      [&stem](const LevelView& v) {
        std::cerr << "[" << stem << "] level " << v.level << ": " << v.mesh.num_triangles()
                  << " triangles, newton " << v.log.total_iterations << "\n";
      },
      cfg.telemetry ? &tel : nullptr);

  // The CSV is written even for an aborted study so partial results survive.
  {
    std::ofstream os(dir / (stem + ".csv"));
    write_csv(res.records, os, !o.no_timing);
  }
  StudyOutcome out;
  out.completed = res.completed;
  out.rates = rates_json(res.records, o.rate_window);
  out.rates["completed"] = res.completed;
  if (!res.completed) {
    out.rates["message"] = res.message;
    std::cerr << "[" << stem << "] aborted: " << res.message << "\n";
  }
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  os << j.dump(2) << "\n";
}

std::string p_stem(const std::string& prefix, double p) {
  std::ostringstream s;
  s << prefix << "_p" << p;
  return s.str();
}

int cmd_run(const Overrides& o) {
  ProblemConfig cfg = resolve(o, {});
  if (cfg.output_dir.empty()) cfg.output_dir = o.out_dir;
  const StudyOutcome r = run_and_write(cfg, "study", o);
  write_json(fs::path(cfg.output_dir) / "study_rates.json", r.rates);
  return r.completed ? kOk : kSolverAbort;
}

int cmd_case1(const Overrides& o) {
  ProblemConfig base;
  base.x0 = {-1.0, -1.0};
  base.strategy = Strategy::Uniform;
  base.max_levels = 6;
  base.snapshot_levels.clear();
  base = resolve(o, base);
  if (base.output_dir.empty()) base.output_dir = o.out_dir;

  const std::vector<double> ps = o.p ? std::vector<double>{*o.p} : std::vector<double>{1.5, 3.0};
  nlohmann::json summary;
  bool ok = true;
  for (double p : ps) {
    ProblemConfig cfg = base;
    cfg.p_target = p;
    const std::string stem = p_stem("case1", p);
    const StudyOutcome r = run_and_write(cfg, stem, o);
    summary[stem] = r.rates;
    ok = ok && r.completed;
  }
  write_json(fs::path(base.output_dir) / "case1_rates.json", summary);
  return ok ? kOk : kSolverAbort;
}

int cmd_case2(const Overrides& o) {
  ProblemConfig cfg;
  cfg.p_target = 1.5;
  cfg.sigma = 0.97;
  cfg.x0 = {0.0, 0.0};
  cfg.strategy = Strategy::Adaptive;
  cfg.max_levels = 10;
  cfg = resolve(o, cfg);
  if (cfg.output_dir.empty()) cfg.output_dir = o.out_dir;
  if (!o.levels && cfg.strategy != Strategy::Adaptive && o.config_path.empty()) cfg.max_levels = 5;
  if (cfg.strategy != Strategy::Adaptive) cfg.snapshot_levels.clear();

  const std::string stem = "case2_" + to_string(cfg.strategy);
  const StudyOutcome r = run_and_write(cfg, stem, o);
  write_json(fs::path(cfg.output_dir) / (stem + "_rates.json"), r.rates);
  return r.completed ? kOk : kSolverAbort;
}

int cmd_export_mesh(const Overrides& o, const std::vector<int>& steps) {
  ProblemConfig cfg;
  cfg.p_target = 1.5;
  cfg.x0 = {0.0, 0.0};
  cfg.strategy = Strategy::Adaptive;
  cfg = resolve(o, cfg);
  if (cfg.output_dir.empty()) cfg.output_dir = o.out_dir;
  cfg.snapshot_levels = steps;
  int last = 0;
  for (int s : steps) last = std::max(last, s);
  cfg.max_levels = last + 1;
  const StudyResult res = run_study(cfg);
  if (!res.completed) {
    std::cerr << "export-mesh aborted: " << res.message << "\n";
    return kSolverAbort;
  }
  return kOk;
}

struct CsvTable {
  std::vector<StudyRecord> records;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "", "cannot open file");
  std::string line;
  std::getline(in, line);
  if (line != kCsvHeader) throw ConfigError(path, 1, "", "unexpected CSV header");
  CsvTable t;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 12) throw ConfigError(path, lineno, "", "expected 12 columns");
    StudyRecord r;
    try {
      r.level = std::stoi(cells[0]);
      r.n_free_trial = std::stoi(cells[1]);
      r.n_free_test = std::stoi(cells[2]);
      r.n_total = std::stoi(cells[3]);
      r.h_max = std::stod(cells[4]);
      r.error = std::stod(cells[5]);
      r.eta = std::stod(cells[6]);
      r.eta_over_error = std::stod(cells[7]);
      r.eta_root_over_error = std::stod(cells[8]);
      r.newton_total = std::stoi(cells[9]);
      r.damping_events = std::stoi(cells[10]);
      r.wall_ms = std::stod(cells[11]);
    } catch (const std::exception&) {
      throw ConfigError(path, lineno, "", "malformed number");
    }
    t.records.push_back(r);
  }
  return t;
}

int cmd_rates(const std::string& csv, int window) {
  const CsvTable t = read_csv(csv);
  if (t.records.size() < static_cast<std::size_t>(window)) {
    std::cerr << csv << ": " << t.records.size() << " rows, fewer than the window " << window << "\n";
    return kBadInput;
  }
  std::cout << rates_json(t.records, window).dump(2) << "\n";
  return kOk;
}

void apply_thread_env() {
  if (const char* s = std::getenv("PMINRES_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0) Eigen::setNbThreads(n);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p-Laplacian residual minimization: convergence and adaptivity studies"};
  app.require_subcommand(1);
  app.footer(
      "Environment: PMINRES_THREADS sets the Eigen thread count; PMINRES_KERNELS selects the flux\n"
      "kernels (auto, scalar, avx2). Exit status: 0 success, 1 solver abort, 2 invalid input.");

  Overrides run_o, c1_o, c2_o, ex_o;
  auto* run = app.add_subcommand("run", "Run the study described by a config file");
  add_common(run, run_o, true);

  auto* case1 = app.add_subcommand("case1", "Smooth load, uniform refinement, p in {1.5, 3.0}");
  add_common(case1, c1_o, false);

  auto* case2 = app.add_subcommand("case2", "Corner singularity at p = 1.5 under a chosen strategy");
  add_common(case2, c2_o, true);

  std::string rates_csv;
  int rates_window = 3;
  auto* rates = app.add_subcommand("rates", "Fit convergence slopes from a study CSV");
  rates->add_option("csv", rates_csv, "CSV written by run, case1 or case2")->required()->check(CLI::ExistingFile);
  rates->add_option("--window", rates_window, "Trailing levels used for the fit")
      ->capture_default_str()
      ->check(CLI::Range(2, 1000));

  std::vector<int> steps{0, 2, 6};
  auto* export_mesh = app.add_subcommand("export-mesh", "Write SVG meshes of the adaptive Case 2 run");
  add_common(export_mesh, ex_o, false);
  export_mesh->add_option("--steps", steps, "Refinement steps to export")->delimiter(',')->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  apply_thread_env();
  try {
    if (run->parsed()) {
      if (run_o.config_path.empty()) throw ConfigError("run", 0, "--config", "a config file is required");
      return cmd_run(run_o);
    }
    if (case1->parsed()) return cmd_case1(c1_o);
    if (case2->parsed()) return cmd_case2(c2_o);
    if (rates->parsed()) return cmd_rates(rates_csv, rates_window);
    if (export_mesh->parsed()) {
      for (int s : steps)
        if (s < 0) throw ConfigError("--steps", 0, "", "steps must be non-negative");
      return cmd_export_mesh(ex_o, steps);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverAbort;
  }
  return kOk;
}
