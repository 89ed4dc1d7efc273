#include "support.hpp"

#include "pminres/newton.hpp"
#include "pminres/quadrature.hpp"

#include <doctest.h>
#include <json.hpp>

#include <Eigen/SparseCholesky>

#include <cmath>
#include <random>
#include <sstream>

using namespace pminres;

namespace {

struct Problem {
  support::Spaces s;
  Vector load;
  ExactSolution es{2.0, 0.97, {-1, -1}};
};

Problem smooth_problem(int n, double p = 2.0) {
  Problem pr;
  pr.es = ExactSolution(p, 0.97, {-1, -1});
  const ExactSolution es = pr.es;
  pr.s = support::make_spaces(unit_square_mesh(n), [es](Point x) { return es.value(x); });
  pr.load = assemble_F(es.load_spec(), *pr.s.test, QuadRule::triangle(10));
  return pr;
}

// Residual norms of the accepted steps, grouped by target, from telemetry.
std::vector<std::vector<double>> residual_sequences(const std::string& jsonl) {
  std::vector<std::vector<double>> out(1);
  std::istringstream in(jsonl);
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["event"] == "newton" && j["step_length"].get<double>() > 0.0) out.back().push_back(j["residual"]);
    if (j["event"] == "target") out.emplace_back();
  }
  return out;
}

}  // namespace

TEST_CASE("nonlinear residual") {
  SUBCASE("zero problem") {
    const auto s = support::make_spaces(unit_square_mesh(3));
    const NonlinearForms f(3.0, s.trial, s.test);
    const NonlinearResidual r = nonlinear_residual(f, Vector::Zero(s.test->n_free()), DiscreteState::initial(f));
    CHECK(r.norm() == 0.0);
  }
  SUBCASE("definition re-evaluated") {
    std::mt19937_64 rng(31);
    const Problem pr = smooth_problem(4);
    const NonlinearForms f(2.5, pr.s.trial, pr.s.test);
    DiscreteState st;
    st.u = support::random_trial(*pr.s.trial, rng);
    st.r = support::random_test(*pr.s.test, rng);
    const NonlinearResidual r = nonlinear_residual(f, pr.load, st);
    const Vector top = pr.load - f.apply_J(st.r) - f.apply_A(st.u);
    CHECK((r.top - top).cwiseAbs().maxCoeff() == 0.0);
    const Vector bottom = -(f.assemble_dA(st.u).transpose() * pr.s.test->restrict_to_free(st.r));
    CHECK((r.bottom - bottom).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(nonlinear_residual(f, Vector::Zero(3), st), std::invalid_argument);
  }
  SUBCASE("p = 2 Galerkin construction") {
    const Problem pr = smooth_problem(4);
    const NonlinearForms f(2.0, pr.s.trial, pr.s.test);
    DiscreteState st;
    const ExactSolution es = pr.es;
    st.u = support::galerkin_poisson(*pr.s.trial, [es](Point x) { return es.load(x); }, 10);
    const SparseMatrix g = f.assemble_dJ(Vector::Zero(pr.s.test->n_total()));
    const Vector rhs = pr.load - f.apply_A(st.u);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt{Eigen::SparseMatrix<double>(g)};
    st.r = pr.s.test->expand_homogeneous(ldlt.solve(rhs));
    const NonlinearResidual r = nonlinear_residual(f, pr.load, st);
    CHECK(r.top.cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(r.bottom.cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("Newton at p = 2 converges in one iteration") {
  const Problem pr = smooth_problem(4);
  const NonlinearForms f(2.0, pr.s.trial, pr.s.test);
  const NewtonResult r = newton_solve(f, pr.load, DiscreteState::initial(f), SolverOptions{});
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.damping_events == 0);
  CHECK(nonlinear_residual(f, pr.load, r.state).norm() <= 1e-12 * pr.load.norm());
}

TEST_CASE("Newton at p = 2.1 from the p = 2 solution contracts quadratically") {
  const Problem pr = smooth_problem(4, 2.1);
  const NonlinearForms f2(2.0, pr.s.trial, pr.s.test);
  const NewtonResult lin = newton_solve(f2, pr.load, DiscreteState::initial(f2), SolverOptions{});
  REQUIRE(lin.converged);
  SolverOptions opts;
  opts.newton_tol = 1e-12;
  const NewtonResult r = newton_solve(f2.with_exponent(2.1), pr.load, lin.state, opts);
  REQUIRE(r.converged);
  REQUIRE(r.increments.size() >= 3);
  const auto& inc = r.increments;
  // inc[k] <= C inc[k-1]^2 with a moderate constant. Once the quadratic
  // prediction drops below the rounding floor of the state the final step
  // lands on that floor instead.
  const double floor = 1e-12 * lin.state.u.norm();
  std::ostringstream seq;
  for (double x : inc) seq << " " << x;
  MESSAGE("increments:" << seq.str() << ", floor " << floor);
  std::size_t above = 0;
  for (std::size_t i = 0; i < inc.size(); ++i) {
    if (i > 0) CHECK(inc[i] <= std::max(10.0 * inc[i - 1] * inc[i - 1], floor));
    if (inc[i] > floor) above = i;
  }
  // At least two contractions above the floor.
  CHECK(above >= 2);
  CHECK(r.damping_events == 0);
}

TEST_CASE("Newton iteration cap reports failure and keeps the state") {
  const Problem pr = smooth_problem(3, 3.0);
  const NonlinearForms f(3.0, pr.s.trial, pr.s.test);
  SolverOptions opts;
  opts.max_newton = 1;
  const NewtonResult r = newton_solve(f, pr.load, DiscreteState::initial(f), opts);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.state.finite());
  CHECK(r.state.u.size() == pr.s.trial->n_total());
  CHECK_FALSE(r.message.empty());
}

TEST_CASE("accepted steps never increase the residual") {
  for (double p : {1.5, 3.0}) {
    const Problem pr = smooth_problem(4, p);
    const NonlinearForms f(p, pr.s.trial, pr.s.test);
    std::ostringstream tel_out;
    Telemetry tel(tel_out);
    const ContinuationResult c = continuation_solve(p, f, pr.load, SolverOptions{}, &tel);
    REQUIRE(c.converged);
    // Within one target, every logged residual is below its predecessor. The
    // first step of each target starts from the residual at the new exponent,
    // which telemetry does not log, so only successive pairs are compared.
    for (const auto& seq : residual_sequences(tel_out.str()))
      for (std::size_t i = 1; i < seq.size(); ++i) CHECK(seq[i] < seq[i - 1]);
  }
}

TEST_CASE("continuation") {
  SUBCASE("p = 2 target: one linear solve") {
    const Problem pr = smooth_problem(4);
    const NonlinearForms f(2.0, pr.s.trial, pr.s.test);
    const ContinuationResult c = continuation_solve(2.0, f, pr.load, SolverOptions{});
    CHECK(c.converged);
    CHECK(c.log.total_iterations == 1);
    CHECK(c.log.targets.size() == 1);
  }
  SUBCASE("monotone exponent path and iteration bands on the coarse mesh") {
    for (double p : {1.5, 3.0}) {
      const Problem pr = smooth_problem(2, p);
      const NonlinearForms f(p, pr.s.trial, pr.s.test);
      const ContinuationResult c = continuation_solve(p, f, pr.load, SolverOptions{});
      REQUIRE(c.converged);
      CHECK(c.state.p_current == p);
      double last = 2.0;
      for (const auto& t : c.log.targets) {
        if (!t.converged) continue;
        CHECK((t.p - last) * (p - 2.0) >= 0.0);
        CHECK((t.final_increment < SolverOptions{}.newton_tol || t.residual_floor));
        last = t.p;
      }
      if (p == 1.5) {
        CHECK(c.log.total_iterations >= 15);
        CHECK(c.log.total_iterations <= 60);
      } else {
        CHECK(c.log.total_iterations >= 30);
        CHECK(c.log.total_iterations <= 80);
      }
    }
  }
  SUBCASE("continuation_from at the target is a direct solve") {
    const Problem pr = smooth_problem(3, 2.5);
    const NonlinearForms f(2.5, pr.s.trial, pr.s.test);
    const ContinuationResult c = continuation_solve(2.5, f, pr.load, SolverOptions{});
    REQUIRE(c.converged);
    const ContinuationResult again = continuation_from(2.5, f, pr.load, c.state, SolverOptions{});
    CHECK(again.converged);
    CHECK(again.log.total_iterations <= 2);
  }
  SUBCASE("aborts when the step collapses") {
    const Problem pr = smooth_problem(3, 3.0);
    const NonlinearForms f(3.0, pr.s.trial, pr.s.test);
    SolverOptions opts;
    opts.max_newton = 1;
    opts.min_step = 0.05;
    const ContinuationResult c = continuation_solve(3.0, f, pr.load, opts);
    CHECK_FALSE(c.converged);
    CHECK(c.log.step_refinements >= 1);
    CHECK(c.message.find("min_step") != std::string::npos);
  }
  SUBCASE("invalid options") {
    const Problem pr = smooth_problem(2);
    const NonlinearForms f(2.0, pr.s.trial, pr.s.test);
    SolverOptions opts;
    opts.newton_tol = 0.0;
    CHECK_THROWS_AS(continuation_solve(3.0, f, pr.load, opts), std::invalid_argument);
    CHECK_THROWS_AS(continuation_solve(1.0, f, pr.load, SolverOptions{}), std::invalid_argument);
  }
}

TEST_CASE("p = 2 MinRes solution equals the Galerkin solution") {
  const Problem pr = smooth_problem(4);
  const NonlinearForms f(2.0, pr.s.trial, pr.s.test);
  const ContinuationResult c = continuation_solve(2.0, f, pr.load, SolverOptions{});
  REQUIRE(c.converged);
  const ExactSolution es = pr.es;
  const Vector ug = support::galerkin_poisson(*pr.s.trial, [es](Point x) { return es.load(x); }, 10);
  const double diff = support::p1_h1_seminorm(*pr.s.mesh, c.state.u - ug);
  CHECK(diff <= 1e-8 * support::p1_h1_seminorm(*pr.s.mesh, ug));
}
