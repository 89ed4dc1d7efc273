#include "pminres/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pminres {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Uniform:
      return "uniform";
    case Strategy::PreAdaptedThenUniform:
      return "pre_adapted";
    case Strategy::Adaptive:
      return "adaptive";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "uniform") return Strategy::Uniform;
  if (s == "pre_adapted" || s == "pre_adapted_then_uniform") return Strategy::PreAdaptedThenUniform;
  if (s == "adaptive") return Strategy::Adaptive;
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

void ProblemConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("config field '" + field + "': " + why);
  };
  if (!(p_target > 1.0)) bad("p", "must exceed 1");
  if (!(sigma < 2.0)) bad("sigma", "must be below 2");
  if (sigma == p_target) bad("sigma", "must differ from p");
  if (!(theta > 0.0 && theta <= 1.0)) bad("theta", "must lie in (0, 1]");
  if (max_levels < 1) bad("levels", "must be at least 1");
  if (initial_n < 1) bad("initial_n", "must be at least 1");
  if (initial_uniform < 0) bad("initial_uniform", "must be non-negative");
  if (pre_adapt_steps < 0) bad("pre_adapt_steps", "must be non-negative");
  if (load_quad_degree < 1) bad("load_quad_degree", "must be positive");
  if (error_quad_degree < 1) bad("error_quad_degree", "must be positive");
  if (!(localization_radius > 0.0)) bad("localization_radius", "must be positive");
  for (int l : snapshot_levels) {
    if (l < 0) bad("snapshot_levels", "entries must be non-negative");
  }
  try {
    solver.validate();
  } catch (const std::invalid_argument& e) {
    bad("solver", e.what());
  }
}

Mesh pre_adapt_mesh(const Mesh& start, const ProblemConfig& cfg) {
  const ExactSolution es(2.0, cfg.sigma, cfg.x0);
  const QuadRule quad = QuadRule::triangle(cfg.load_quad_degree);
  auto mesh = std::make_shared<const Mesh>(start);
  for (int step = 0; step < cfg.pre_adapt_steps; ++step) {
    auto trial = std::make_shared<const DofMap>(
        build_space(mesh, SpaceKind::P1, boundary_values(*mesh, [&es](Point x) { return es.value(x); })));
    auto test = std::make_shared<const DofMap>(build_space(mesh, SpaceKind::CR));
    const NonlinearForms forms(2.0, trial, test);
    const Vector load = assemble_F(es.load_spec(), *test, quad);
    const NewtonResult nr = newton_solve(forms, load, DiscreteState::initial(forms), cfg.solver);
    if (!nr.converged) throw std::runtime_error("pre-adaptation: linear solve failed: " + nr.message);
    const auto masses = forms.local_indicators(nr.state.r);
    const auto marked = dorfler_mark(masses, cfg.theta);
    if (marked.empty()) break;
    mesh = std::make_shared<const Mesh>(refine_marked(*mesh, marked));
  }
  return *mesh;
}

Mesh initial_mesh(const ProblemConfig& cfg) {
  Mesh m = unit_square_mesh(cfg.initial_n);
  for (int i = 0; i < cfg.initial_uniform; ++i) m = refine_uniform(m);
  if (cfg.strategy == Strategy::PreAdaptedThenUniform) m = pre_adapt_mesh(m, cfg);
  return m;
}

namespace {

// Barycentric coordinates of x in triangle t.
std::array<double, 3> barycentric(const Mesh& m, int t, Point x) {
  const auto& tri = m.triangles()[static_cast<std::size_t>(t)];
  const Point a = m.vertex(tri[0]);
  const Point b = m.vertex(tri[1]);
  const Point c = m.vertex(tri[2]);
  const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  const double l1 = ((x.x - a.x) * (c.y - a.y) - (c.x - a.x) * (x.y - a.y)) / det;
  const double l2 = ((b.x - a.x) * (x.y - a.y) - (x.x - a.x) * (b.y - a.y)) / det;
  return {1.0 - l1 - l2, l1, l2};
}

bool genealogy_matches(const Mesh& old_mesh, const Mesh& new_mesh) {
  if (new_mesh.parent().size() != new_mesh.num_triangles()) return false;
  for (int par : new_mesh.parent()) {
    if (par < 0 || static_cast<std::size_t>(par) >= old_mesh.num_triangles()) return false;
  }
  return new_mesh.num_vertices() >= old_mesh.num_vertices();
}

}  // namespace

DiscreteState transfer_state(const DiscreteState& old_state, const NonlinearForms& old_forms,
                             const NonlinearForms& new_forms) {
  const Mesh& om = old_forms.trial().mesh();
  const Mesh& nm = new_forms.trial().mesh();
  if (!genealogy_matches(om, nm)) {
    DiscreteState s = DiscreteState::initial(new_forms);
    s.p_current = old_state.p_current;
    return s;
  }
  const DofMap& trial = new_forms.trial();
  const DofMap& test = new_forms.test();

  // u: value of the parent's linear function at each new-mesh vertex.
  Vector u = Vector::Zero(trial.n_total());
  std::vector<char> seen(nm.num_vertices(), 0);
  for (std::size_t t = 0; t < nm.num_triangles(); ++t) {
    const int par = nm.parent()[t];
    for (int v : nm.triangles()[t]) {
      if (seen[static_cast<std::size_t>(v)]) continue;
      seen[static_cast<std::size_t>(v)] = 1;
      u[v] = evaluate(old_forms.trial(), old_state.u, par, barycentric(om, par, nm.vertex(v)));
    }
  }
  // Keep the new space's Dirichlet values exactly.
  for (std::size_t i = 0; i < trial.constrained_dofs().size(); ++i) {
    u[trial.constrained_dofs()[i]] = trial.constrained_values()[i];
  }

  // r: midpoint value of the old broken function, averaged over the parents
  // on both sides of the new edge.
  Vector r = Vector::Zero(test.n_total());
  for (std::size_t e = 0; e < nm.num_edges(); ++e) {
    if (test.free_index(static_cast<int>(e)) < 0) continue;
    const Point mid = nm.midpoint(static_cast<int>(e));
    double sum = 0.0;
    int count = 0;
    for (int t : nm.edge_triangles()[e]) {
      if (t < 0) continue;
      const int par = nm.parent()[static_cast<std::size_t>(t)];
      sum += evaluate(old_forms.test(), old_state.r, par, barycentric(om, par, mid));
      ++count;
    }
    r[static_cast<Eigen::Index>(e)] = sum / count;
  }

  DiscreteState s;
  s.u = std::move(u);
  s.r = std::move(r);
  s.p_current = old_state.p_current;
  return s;
}

namespace {

struct LevelSpaces {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const DofMap> trial;
  std::shared_ptr<const DofMap> test;
};

LevelSpaces make_spaces(std::shared_ptr<const Mesh> mesh, const ExactSolution& es) {
  LevelSpaces s;
  s.mesh = std::move(mesh);
  s.trial = std::make_shared<const DofMap>(
      build_space(s.mesh, SpaceKind::P1, boundary_values(*s.mesh, [&es](Point x) { return es.value(x); })));
  s.test = std::make_shared<const DofMap>(build_space(s.mesh, SpaceKind::CR));
  return s;
}

void write_snapshot(const ProblemConfig& cfg, int level, const Mesh& mesh, const std::vector<double>& indicators) {
  namespace fs = std::filesystem;
  std::ostringstream name;
  name << "mesh_level_" << std::setw(2) << std::setfill('0') << level;
  const fs::path base = fs::path(cfg.output_dir) / name.str();
  {
    std::ofstream os(base.string() + ".svg");
    write_svg(mesh, os);
  }
  if (cfg.write_vtk) {
    std::ofstream os(base.string() + ".vtk");
    write_vtk(mesh, os, indicators, "indicator");
  }
}

}  // namespace

StudyResult run_study(const ProblemConfig& cfg, const LevelCallback& on_level, Telemetry* telemetry) {
  cfg.validate();
  if (!cfg.output_dir.empty()) std::filesystem::create_directories(cfg.output_dir);

  const ExactSolution es(cfg.p_target, cfg.sigma, cfg.x0);
  const QuadRule load_quad = QuadRule::triangle(cfg.load_quad_degree);
  const QuadRule error_quad = QuadRule::triangle(cfg.error_quad_degree);

  StudyResult result;
  auto mesh = std::make_shared<const Mesh>(initial_mesh(cfg));
  std::unique_ptr<NonlinearForms> prev_forms;
  DiscreteState prev_state;

  for (int level = 0; level < cfg.max_levels; ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    const LevelSpaces spaces = make_spaces(mesh, es);
    const NonlinearForms forms(cfg.p_target, spaces.trial, spaces.test);
    const Vector load = assemble_F(es.load_spec(), *spaces.test, load_quad);

    if (telemetry) telemetry->message("level", "level " + std::to_string(level) + ", triangles " +
                                                   std::to_string(mesh->num_triangles()));
    ContinuationResult cont;
    bool solved = false;
    if (cfg.warm_start && prev_forms) {
      DiscreteState guess = transfer_state(prev_state, *prev_forms, forms);
      cont = continuation_from(cfg.p_target, forms, load, std::move(guess), cfg.solver, telemetry);
      if (cont.converged) {
        solved = true;
      } else {
        // Warm start failed: fall back to the full continuation, keeping the count.
        const int spent = cont.log.total_iterations;
        const int damped = cont.log.total_damping_events;
        cont = continuation_solve(cfg.p_target, forms, load, cfg.solver, telemetry);
        cont.log.total_iterations += spent;
        cont.log.total_damping_events += damped;
        solved = cont.converged;
      }
    } else {
      cont = continuation_solve(cfg.p_target, forms, load, cfg.solver, telemetry);
      solved = cont.converged;
    }
    if (!solved) {
      result.message = "level " + std::to_string(level) + ": " + cont.message;
      result.final_mesh = mesh;
      return result;
    }

    const std::vector<double> indicators = forms.local_indicators(cont.state.r);
    StudyRecord rec;
    rec.level = level;
    rec.n_free_trial = spaces.trial->n_free();
    rec.n_free_test = spaces.test->n_free();
    rec.n_total = rec.n_free_trial + rec.n_free_test;
    rec.n_triangles = static_cast<int>(mesh->num_triangles());
    rec.h_max = mesh->h_max();
    rec.error = true_error(*spaces.trial, cont.state.u, es, error_quad);
    rec.eta = estimator_global(forms, cont.state.r);
    rec.eta_over_error = rec.error > 0.0 ? rec.eta / rec.error : 0.0;
    rec.eta_root_over_error = rec.error > 0.0 ? std::pow(rec.eta, 1.0 / (cfg.p_target - 1.0)) / rec.error : 0.0;
    rec.newton_total = cont.log.total_iterations;
    rec.damping_events = cont.log.total_damping_events;

    if (!cfg.output_dir.empty() &&
        std::find(cfg.snapshot_levels.begin(), cfg.snapshot_levels.end(), level) != cfg.snapshot_levels.end()) {
      write_snapshot(cfg, level, *mesh, indicators);
    }
    if (on_level) on_level(LevelView{level, *mesh, forms, cont.state, indicators, cont.log});

    std::shared_ptr<const Mesh> next;
    if (level + 1 < cfg.max_levels) {
      if (cfg.strategy == Strategy::Adaptive) {
        const auto marked = dorfler_mark(indicators, cfg.theta);
        const auto bisected = bisection_closure(*mesh, marked);
        int near = 0;
        for (int t : bisected) {
          const auto& tri = mesh->triangles()[static_cast<std::size_t>(t)];
          const double d = distance_to_triangle(cfg.x0, mesh->vertex(tri[0]), mesh->vertex(tri[1]),
                                                mesh->vertex(tri[2]));
          if (d <= cfg.localization_radius) ++near;
        }
        rec.bisected = static_cast<int>(bisected.size());
        rec.bisected_near_fraction = bisected.empty() ? 0.0 : static_cast<double>(near) / bisected.size();
        next = std::make_shared<const Mesh>(refine_marked(*mesh, marked));
      } else {
        next = std::make_shared<const Mesh>(refine_uniform(*mesh));
      }
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.records.push_back(rec);

    prev_forms = std::make_unique<NonlinearForms>(forms);
    prev_state = cont.state;
    result.final_mesh = mesh;
    if (next) mesh = std::move(next);
  }
  result.completed = true;
  return result;
}

const char* const kCsvHeader =
    "level,n_free_trial,n_free_test,n_total,h_max,error,eta,eta_over_error,eta_root_over_error,"
    "newton_total,damping_events,wall_ms";

void write_csv(const std::vector<StudyRecord>& records, std::ostream& os, bool include_timing) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    std::ostringstream line;
    line << std::setprecision(12);
    line << r.level << ',' << r.n_free_trial << ',' << r.n_free_test << ',' << r.n_total << ',' << r.h_max << ','
         << r.error << ',' << r.eta << ',' << r.eta_over_error << ',' << r.eta_root_over_error << ','
         << r.newton_total << ',' << r.damping_events << ',' << std::fixed << std::setprecision(3)
         << (include_timing ? r.wall_ms : 0.0);
    os << line.str() << '\n';
  }
}

RateSummary summarize_rates(const std::vector<StudyRecord>& records, int window) {
  if (window < 2) throw std::invalid_argument("summarize_rates: window must be at least 2");
  if (records.size() < static_cast<std::size_t>(window)) {
    throw std::invalid_argument("summarize_rates: fewer records than the window");
  }
  std::vector<double> n, err, eta;
  for (std::size_t i = records.size() - static_cast<std::size_t>(window); i < records.size(); ++i) {
    n.push_back(records[i].n_total);
    err.push_back(records[i].error);
    eta.push_back(records[i].eta);
  }
  return {window, fit_rate(n, err), fit_rate(n, eta)};
}

}  // namespace pminres
