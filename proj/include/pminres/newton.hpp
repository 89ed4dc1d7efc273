#pragma once

#include "pminres/forms.hpp"
#include "pminres/linsolve.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pminres {

/// Coefficients of one discrete solution pair. Both vectors are complete: `u`
/// carries the Dirichlet values on boundary vertices, `r` is zero on boundary
/// edges.
struct DiscreteState {
  Vector u;
  Vector r;
  double p_current = 2.0;

  /// Zero interior values with the trial space's boundary data, r = 0.
  static DiscreteState initial(const NonlinearForms& forms);
  bool finite() const;
};

struct DampingOptions {
  bool enabled = true;
  double factor = 0.5;
  int max_halvings = 12;
};

struct SolverOptions {
  double newton_tol = 1e-8;
  int max_newton = 50;
  double continuation_step = 0.10;
  double min_step = 1e-3;
  DampingOptions damping;
  LinearSolverOptions linear;
  /// Jacobian regularization: epsilon = regularization * max(|u|_{W^{1,p}}, 1).
  double regularization = 1e-10;

  /// Throws std::invalid_argument when an option is out of range.
  void validate() const;
};

/// JSON-lines sink for solver telemetry. A default-constructed sink drops
/// everything.
class Telemetry {
 public:
  Telemetry() = default;
  explicit Telemetry(std::ostream& os) : os_(&os) {}

  bool enabled() const { return os_ != nullptr; }
  void newton_step(double p, int iteration, double increment, double step_length,
                   double residual_norm, double linear_residual, int halvings);
  void target_done(double p, int iterations, int damping_events, double final_increment,
                   bool converged, double step);
  void message(const std::string& event, const std::string& text);

 private:
  std::ostream* os_ = nullptr;
};

struct NonlinearResidual {
  Vector top;     ///< over free test DOFs: F - J(r) - A(u)
  Vector bottom;  ///< over free trial DOFs: -dA(u)^T r

  double norm() const;
};

NonlinearResidual nonlinear_residual(const NonlinearForms& forms, const Vector& load,
                                     const DiscreteState& state);

struct NewtonResult {
  DiscreteState state;  ///< converged state, or the last accepted iterate on failure
  int iterations = 0;
  int damping_events = 0;
  bool converged = false;
  double final_increment = 0.0;
  bool residual_floor = false;  ///< linear case stopped on a roundoff residual
  std::vector<double> increments;  ///< increment norm of every computed Newton direction
  std::string message;
};

/// Damped Newton iteration on the mixed system at the forms' exponent.
NewtonResult newton_solve(const NonlinearForms& forms, const Vector& load, DiscreteState init,
                          const SolverOptions& opts, Telemetry* telemetry = nullptr);

struct TargetRecord {
  double p = 2.0;
  int iterations = 0;
  int damping_events = 0;
  double final_increment = 0.0;
  bool residual_floor = false;
  bool converged = false;
};

struct IterationLog {
  std::vector<TargetRecord> targets;  ///< every attempted target, failed ones included
  int total_iterations = 0;
  int total_damping_events = 0;
  int step_refinements = 0;
};

struct ContinuationResult {
  DiscreteState state;
  IterationLog log;
  bool converged = false;
  std::string message;
};

/// Solves p = 2 from the zero state, then walks the exponent toward p_target
/// in steps of `continuation_step`, warm-starting every Newton solve from the
/// previous converged state. A failed Newton solve halves the step and retries
/// from the last converged state; the step grows back by doubling after each
/// success, capped at the nominal value.
ContinuationResult continuation_solve(double p_target, const NonlinearForms& base,
                                      const Vector& load, const SolverOptions& opts,
                                      Telemetry* telemetry = nullptr);

/// Same, starting from a given state at exponent `start.p_current` instead of
/// the p = 2 solve.
ContinuationResult continuation_from(double p_target, const NonlinearForms& base,
                                     const Vector& load, DiscreteState start,
                                     const SolverOptions& opts, Telemetry* telemetry = nullptr);

}  // namespace pminres
