#pragma once

#include "pminres/estimate.hpp"
#include "pminres/mesh.hpp"
#include "pminres/newton.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace pminres {

enum class Strategy { Uniform, PreAdaptedThenUniform, Adaptive };

std::string to_string(Strategy s);
/// Accepts "uniform", "pre_adapted" (or "pre_adapted_then_uniform") and
/// "adaptive".
Strategy parse_strategy(const std::string& s);

struct ProblemConfig {
  double p_target = 1.5;
  double sigma = 0.97;
  Point x0{-1.0, -1.0};
  /// Initial mesh: unit_square_mesh(initial_n) followed by `initial_uniform`
  /// red refinements.
  int initial_n = 1;
  int initial_uniform = 1;
  Strategy strategy = Strategy::Uniform;
  double theta = 0.5;
  int max_levels = 6;
  /// Adaptive p = 2 steps used to build the pre-adapted mesh.
  int pre_adapt_steps = 6;
  SolverOptions solver;
  /// Warm-start each level from the previous level's transferred state at
  /// p_target instead of restarting the continuation at p = 2.
  bool warm_start = false;
  int load_quad_degree = 10;
  int error_quad_degree = 10;
  /// Radius around x0 used for the refinement localization statistic.
  double localization_radius = 0.25;

  std::string output_dir;
  std::vector<int> snapshot_levels{0, 2, 6};
  bool write_vtk = false;
  bool telemetry = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct StudyRecord {
  int level = 0;
  int n_free_trial = 0;
  int n_free_test = 0;
  int n_total = 0;
  int n_triangles = 0;
  double h_max = 0.0;
  double error = 0.0;
  double eta = 0.0;
  double eta_over_error = 0.0;
  double eta_root_over_error = 0.0;  ///< eta^(1/(p-1)) / error
  int newton_total = 0;
  int damping_events = 0;
  double wall_ms = 0.0;
  /// Refinement after this level (zero on the last level or under uniform
  /// refinement): triangles bisected, and the fraction of them within
  /// `localization_radius` of x0.
  int bisected = 0;
  double bisected_near_fraction = 0.0;
};

/// Snapshot handed to the level callback.
struct LevelView {
  int level;
  const Mesh& mesh;
  const NonlinearForms& forms;
  const DiscreteState& state;
  const std::vector<double>& indicators;
  const IterationLog& log;
};

struct StudyResult {
  std::vector<StudyRecord> records;
  bool completed = false;
  std::string message;
  std::shared_ptr<const Mesh> final_mesh;
};

using LevelCallback = std::function<void(const LevelView&)>;

/// Initial mesh of a study, pre-adaptation included when requested.
Mesh initial_mesh(const ProblemConfig& cfg);

/// Adaptive p = 2 refinement of `start` for `steps` Doerfler rounds.
Mesh pre_adapt_mesh(const Mesh& start, const ProblemConfig& cfg);

/// Runs the configured refinement study. Telemetry (when enabled) goes to
/// `telemetry`; artifacts go to cfg.output_dir when it is non-empty.
StudyResult run_study(const ProblemConfig& cfg, const LevelCallback& on_level = {},
                      Telemetry* telemetry = nullptr);

/// Prolongs a state to a refined mesh using the new mesh's genealogy: u by
/// evaluating the parent's linear function at the new vertices, r by the
/// edge-mean interpolant of the old broken function. Falls back to
/// DiscreteState::initial when the genealogy does not match.
DiscreteState transfer_state(const DiscreteState& old_state, const NonlinearForms& old_forms,
                             const NonlinearForms& new_forms);

/// CSV with header
/// level,n_free_trial,n_free_test,n_total,h_max,error,eta,eta_over_error,
/// eta_root_over_error,newton_total,damping_events,wall_ms
void write_csv(const std::vector<StudyRecord>& records, std::ostream& os, bool include_timing = true);
extern const char* const kCsvHeader;

struct RateSummary {
  int window = 0;
  double error_slope = 0.0;
  double eta_slope = 0.0;
};

/// Slopes over the last `window` records against n_total.
RateSummary summarize_rates(const std::vector<StudyRecord>& records, int window);

}  // namespace pminres
