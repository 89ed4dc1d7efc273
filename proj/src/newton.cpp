#include "pminres/newton.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace pminres {

DiscreteState DiscreteState::initial(const NonlinearForms& forms) {
  DiscreteState s;
  s.u = forms.trial().expand(Vector::Zero(forms.trial().n_free()));
  s.r = Vector::Zero(forms.test().n_total());
  s.p_current = 2.0;
  return s;
}

bool DiscreteState::finite() const { return u.allFinite() && r.allFinite() && std::isfinite(p_current); }

void SolverOptions::validate() const {
  if (!(newton_tol > 0.0)) throw std::invalid_argument("SolverOptions: newton_tol must be positive");
  if (max_newton < 1) throw std::invalid_argument("SolverOptions: max_newton must be positive");
  if (!(continuation_step > 0.0)) throw std::invalid_argument("SolverOptions: continuation_step must be positive");
  if (!(min_step > 0.0)) throw std::invalid_argument("SolverOptions: min_step must be positive");
  if (continuation_step < min_step) throw std::invalid_argument("SolverOptions: continuation_step below min_step");
  if (!(damping.factor > 0.0 && damping.factor < 1.0)) {
    throw std::invalid_argument("SolverOptions: damping factor must lie in (0, 1)");
  }
  if (damping.max_halvings < 0) throw std::invalid_argument("SolverOptions: negative max_halvings");
  if (!(linear.rel_tol > 0.0)) throw std::invalid_argument("SolverOptions: linear rel_tol must be positive");
  if (!(regularization >= 0.0)) throw std::invalid_argument("SolverOptions: negative regularization");
}

void Telemetry::newton_step(double p, int iteration, double increment, double step_length,
                            double residual_norm, double linear_residual, int halvings) {
  if (!os_) return;
  nlohmann::json j{{"event", "newton"},          {"p", p},
                   {"iteration", iteration},     {"increment", increment},
                   {"step_length", step_length}, {"residual", residual_norm},
                   {"linear_residual", linear_residual}, {"halvings", halvings}};
  *os_ << j.dump() << '\n';
}

void Telemetry::target_done(double p, int iterations, int damping_events, double final_increment,
                            bool converged, double step) {
  if (!os_) return;
  nlohmann::json j{{"event", "target"},         {"p", p},
                   {"iterations", iterations},  {"damping_events", damping_events},
                   {"final_increment", final_increment}, {"converged", converged},
                   {"step", step}};
  *os_ << j.dump() << '\n';
}

void Telemetry::message(const std::string& event, const std::string& text) {
  if (!os_) return;
  nlohmann::json j{{"event", event}, {"message", text}};
  *os_ << j.dump() << '\n';
}

double NonlinearResidual::norm() const {
  return std::sqrt(top.squaredNorm() + bottom.squaredNorm());
}

NonlinearResidual nonlinear_residual(const NonlinearForms& forms, const Vector& load,
                                     const DiscreteState& state) {
  if (load.size() != forms.test().n_free()) throw std::invalid_argument("nonlinear_residual: load size");
  NonlinearResidual res;
  res.top = load - forms.apply_J(state.r) - forms.apply_A(state.u);
  const Vector r_free = forms.test().restrict_to_free(state.r);
  res.bottom = -(forms.assemble_dA(state.u).transpose() * r_free);
  return res;
}

namespace {

DiscreteState advance(const NonlinearForms& forms, const DiscreteState& s, const Vector& dr,
                      const Vector& du, double alpha) {
  DiscreteState out = s;
  const auto& test = forms.test();
  const auto& trial = forms.trial();
  for (int i = 0; i < test.n_free(); ++i) out.r[test.free_dofs()[static_cast<std::size_t>(i)]] += alpha * dr[i];
  for (int j = 0; j < trial.n_free(); ++j) out.u[trial.free_dofs()[static_cast<std::size_t>(j)]] += alpha * du[j];
  return out;
}

double regularization_for(const NonlinearForms& forms, const DiscreteState& s, double scale) {
  if (scale == 0.0) return 0.0;
  const double unorm = broken_seminorm(forms.trial(), s.u, forms.p());
  return scale * std::max(unorm, 1.0);
}

}  // namespace

NewtonResult newton_solve(const NonlinearForms& forms_in, const Vector& load, DiscreteState init,
                          const SolverOptions& opts, Telemetry* telemetry) {
  opts.validate();
  if (!init.finite()) throw std::invalid_argument("newton_solve: initial state is not finite");
  if (init.u.size() != forms_in.trial().n_total() || init.r.size() != forms_in.test().n_total()) {
    throw std::invalid_argument("newton_solve: state does not match the DofMaps");
  }
  const double p = forms_in.p();
  NewtonResult result;
  result.state = std::move(init);
  result.state.p_current = p;

  SaddleSolver solver(opts.linear);
  NonlinearResidual res = nonlinear_residual(forms_in, load, result.state);
  double res_norm = res.norm();
  // Exact-solve exit for the linear case: the residual sits at roundoff.
  const bool linear = p == 2.0;
  const double res_floor = 1e-13 * std::max(load.norm(), 1e-300);

  for (int it = 1; it <= opts.max_newton; ++it) {
    const NonlinearForms forms =
        forms_in.with_epsilon(regularization_for(forms_in, result.state, opts.regularization));
    const Vector r_free = forms.test().restrict_to_free(result.state.r);
    const SparseMatrix G = forms.assemble_dJ(result.state.r);
    SparseMatrix B = forms.assemble_dA(result.state.u);
    // Bottom residual from the unregularized derivative; matrix uses epsilon.
    const SaddleSystem sys = assemble_saddle(G, std::move(B), res.top, res.bottom);
    const LinearSolveResult lin = solver.solve(sys);
    result.iterations = it;
    if (!lin.ok) {
      result.message = "linear solve failed: " + lin.message;
      return result;
    }

    const double increment = broken_seminorm(forms.test(), forms.test().expand_homogeneous(lin.dr), p) +
                             broken_seminorm(forms.trial(), forms.trial().expand_homogeneous(lin.du), p);
    result.increments.push_back(increment);
    result.final_increment = increment;

    if (increment < opts.newton_tol) {
      result.state = advance(forms, result.state, lin.dr, lin.du, 1.0);
      result.converged = true;
      if (telemetry) telemetry->newton_step(p, it, increment, 1.0, nonlinear_residual(forms_in, load, result.state).norm(),
                                            lin.relative_residual, 0);
      return result;
    }

    // Backtracking on the Euclidean norm of the concatenated residual.
    double alpha = 1.0;
    int halvings = 0;
    bool accepted = false;
    DiscreteState candidate;
    NonlinearResidual cand_res;
    const int max_halvings = opts.damping.enabled ? opts.damping.max_halvings : 0;
    for (;;) {
      candidate = advance(forms, result.state, lin.dr, lin.du, alpha);
      cand_res = nonlinear_residual(forms_in, load, candidate);
      const double n = cand_res.norm();
      if (std::isfinite(n) && (n < res_norm || !opts.damping.enabled)) {
        accepted = true;
        break;
      }
      if (halvings >= max_halvings) break;
      alpha *= opts.damping.factor;
      ++halvings;
    }
    if (!accepted) {
      result.message = "line search found no residual decrease";
      if (telemetry) telemetry->newton_step(p, it, increment, 0.0, res_norm, lin.relative_residual, halvings);
      return result;
    }
    if (alpha < 1.0) ++result.damping_events;
    result.state = std::move(candidate);
    res = std::move(cand_res);
    res_norm = res.norm();
    if (telemetry) telemetry->newton_step(p, it, increment, alpha, res_norm, lin.relative_residual, halvings);

    if (linear && res_norm <= res_floor) {
      result.converged = true;
      result.residual_floor = true;
      return result;
    }
  }
  result.message = "maximum Newton iterations reached";
  return result;
}

namespace {

ContinuationResult walk(double p_target, const NonlinearForms& base, const Vector& load,
                        DiscreteState state, const SolverOptions& opts, Telemetry* telemetry,
                        ContinuationResult out) {
  const double nominal = opts.continuation_step;
  double step = nominal;
  double p_now = state.p_current;
  const double dir = p_target > p_now ? 1.0 : -1.0;

  while (std::abs(p_target - p_now) > 1e-12) {
    double next = p_now + dir * step;
    // Land exactly on the target; absorb round-off in the last step.
    if ((next - p_target) * dir > -1e-9) next = p_target;

    NewtonResult nr = newton_solve(base.with_exponent(next), load, state, opts, telemetry);
    out.log.total_iterations += nr.iterations;
    out.log.total_damping_events += nr.damping_events;
    out.log.targets.push_back({next, nr.iterations, nr.damping_events, nr.final_increment, nr.residual_floor, nr.converged});
    if (telemetry) telemetry->target_done(next, nr.iterations, nr.damping_events, nr.final_increment, nr.converged, step);

    if (nr.converged) {
      state = std::move(nr.state);
      p_now = next;
      step = std::min(2.0 * step, nominal);
      continue;
    }
    step *= 0.5;
    ++out.log.step_refinements;
    if (step < opts.min_step) {
      out.state = std::move(state);
      out.converged = false;
      out.message = "continuation step fell below min_step at p = " + std::to_string(p_now) +
                    " (" + nr.message + ")";
      if (telemetry) telemetry->message("abort", out.message);
      return out;
    }
  }
  out.state = std::move(state);
  out.converged = true;
  return out;
}

}  // namespace

ContinuationResult continuation_solve(double p_target, const NonlinearForms& base, const Vector& load,
                                      const SolverOptions& opts, Telemetry* telemetry) {
  if (!(p_target > 1.0)) throw std::invalid_argument("continuation_solve: p_target must exceed 1");
  opts.validate();
  ContinuationResult out;
  const NonlinearForms linear = base.with_exponent(2.0);
  NewtonResult nr = newton_solve(linear, load, DiscreteState::initial(linear), opts, telemetry);
  out.log.total_iterations += nr.iterations;
  out.log.total_damping_events += nr.damping_events;
  out.log.targets.push_back({2.0, nr.iterations, nr.damping_events, nr.final_increment, nr.residual_floor, nr.converged});
  if (telemetry) telemetry->target_done(2.0, nr.iterations, nr.damping_events, nr.final_increment, nr.converged, 0.0);
  if (!nr.converged) {
    out.state = std::move(nr.state);
    out.message = "linear solve at p = 2 failed: " + nr.message;
    return out;
  }
  return walk(p_target, base, load, std::move(nr.state), opts, telemetry, std::move(out));
}

ContinuationResult continuation_from(double p_target, const NonlinearForms& base, const Vector& load,
                                     DiscreteState start, const SolverOptions& opts, Telemetry* telemetry) {
  if (!(p_target > 1.0)) throw std::invalid_argument("continuation_from: p_target must exceed 1");
  opts.validate();
  if (!(start.p_current > 1.0)) throw std::invalid_argument("continuation_from: start exponent must exceed 1");
  ContinuationResult out;
  if (std::abs(start.p_current - p_target) <= 1e-12) {
    // Direct solve at the target from the supplied guess.
    NewtonResult nr = newton_solve(base.with_exponent(p_target), load, start, opts, telemetry);
    out.log.total_iterations += nr.iterations;
    out.log.total_damping_events += nr.damping_events;
    out.log.targets.push_back({p_target, nr.iterations, nr.damping_events, nr.final_increment, nr.residual_floor, nr.converged});
    out.state = std::move(nr.state);
    out.converged = nr.converged;
    out.message = nr.message;
    return out;
  }
  return walk(p_target, base, load, std::move(start), opts, telemetry, std::move(out));
}

}  // namespace pminres
