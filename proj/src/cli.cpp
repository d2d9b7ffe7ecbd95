#include "madmm/cli.hpp"

#include "madmm/conditions.hpp"
#include "madmm/diagnostics.hpp"
#include "madmm/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <ostream>

namespace madmm {
namespace {

// Iterations of the preliminary run that supplies a missing reference.
constexpr int kReferenceIters = 200000;
constexpr double kReferenceTol = 1e-12;
constexpr double kMonotoneTol = 1e-8;

struct Loaded {
  InstanceData data;
  CoupledProblem prob;
  RunConfig run;
  std::string hash;
};

Loaded load(const std::string& instance_path, const std::string& config_path) {
  const Json ij = read_json_file(instance_path);
  const Json cj = read_json_file(config_path);
  InstanceData data = instance_from_json(ij);
  CoupledProblem prob = build_problem(data);
  RunConfig run = config_from_json(cj);
  const std::string hash = hex64(fnv1a64(dump(cj), fnv1a64(dump(ij))));
  return {std::move(data), std::move(prob), std::move(run), hash};
}

ReferencePoint reference_from_json(const Json& j, const CoupledProblem& prob,
                                   const std::string& origin) {
  const Json& r = j.contains("solution") ? j["solution"] : j;
  for (const char* key : {"u", "v", "x"})
    if (!r.contains(key))
      throw Error(ErrorKind::schema, origin + "/" + key + ": missing field");
  ReferencePoint ref{vector_from_json(r["u"], origin + "/u"),
                     vector_from_json(r["v"], origin + "/v"),
                     vector_from_json(r["x"], origin + "/x")};
  if (ref.u.size() != prob.u_dim() || ref.v.size() != prob.v_dim() ||
      ref.x.size() != prob.x_dim())
    throw Error(ErrorKind::schema, origin + ": reference dimensions do not match the instance");
  return ref;
}

Json state_json(const IterateState& s) {
  Json j;
  j["k"] = s.k;
  j["u"] = vector_json(s.u);
  j["v"] = vector_json(s.v);
  j["x"] = vector_json(s.x);
  return j;
}

Json resolved_json(const RunConfig& run, const SolverConfig& sc,
                   const std::string& tau_source) {
  Json j = to_json(run);
  j["tau"] = sc.tau;
  j["tau_source"] = tau_source;
  return j;
}

int exit_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::conditions_failed: return kExitConditionFailed;
    case ErrorKind::materialize_cap: return kExitUnverified;
    case ErrorKind::no_feasible_probe: return kExitNoFeasibleProbe;
    default: return kExitInputError;
  }
}

// ----------------------------------------------------------------- generate

struct GenerateArgs {
  std::string spec;
  std::string out;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const InstanceSpec spec = spec_from_json(read_json_file(a.spec));
  const std::string text = dump(to_json(generate(spec)));
  if (a.out.empty()) {
    out << text;
  } else {
    write_text_file(a.out, text);
  }
  return kExitOk;
}

// -------------------------------------------------------------------- check

struct CheckArgs {
  std::string instance;
  std::string config;
  std::string theorem = "auto";
  Index cap = kDefaultMaterializeCap;
};

int cmd_check(const CheckArgs& a, std::ostream& out) {
  Loaded l = load(a.instance, a.config);
  std::string tau_source;
  const SolverConfig sc = resolve_config(l.prob, l.run, &tau_source);
  const Solver solver(l.prob, sc);

  std::string selected = a.theorem;
  if (selected == "auto") selected = sc.tau <= 1.0 ? "1i" : "1ii";

  Json reports = Json::array();
  ConditionOptions copts;
  copts.cap = a.cap;
  const ConditionReport r1i = check_theorem1_case_i(solver, copts);
  const ConditionReport r1ii = check_theorem1_case_ii(solver, copts);
  const ConditionReport r2 = check_theorem2(solver, copts);
  reports.push_back(to_json(r1i));
  reports.push_back(to_json(r1ii));
  reports.push_back(to_json(r2));
  std::optional<ConditionReport> rq;
  if (l.prob.phi.is_quadratic_coupled()) {
    rq = check_remark2_quadratic(solver, copts);
    reports.push_back(to_json(*rq));
  }

  const ConditionReport* chosen = nullptr;
  if (selected == "1i") chosen = &r1i;
  else if (selected == "1ii") chosen = &r1ii;
  else if (selected == "2") chosen = &r2;
  else if (selected == "remark2" && rq) chosen = &*rq;
  if (!chosen)
    throw Error(ErrorKind::usage, "--theorem " + selected + " is not available for this instance");

  Json j;
  j["format"] = "madmm-check v1";
  j["instance_hash"] = l.hash;
  j["config"] = resolved_json(l.run, sc, tau_source);
  j["selected"] = chosen->title;
  j["passed"] = chosen->applicable && chosen->passed;
  j["unverified"] = chosen->unverified;
  j["reports"] = std::move(reports);
  out << dump(j);
  if (chosen->unverified) return kExitUnverified;
  return chosen->applicable && chosen->passed ? kExitOk : kExitConditionFailed;
}

// -------------------------------------------------------------------- solve

struct SolveOverrides {
  std::optional<double> tau;
  std::optional<double> sigma;
  std::optional<int> max_iters;
  std::optional<double> tol;
};

void apply(const SolveOverrides& o, RunConfig& run) {
  if (o.tau) run.tau = *o.tau;
  if (o.sigma) run.sigma = *o.sigma;
  if (o.max_iters) run.max_iters = *o.max_iters;
  if (o.tol) run.kkt_tol = *o.tol;
}

struct SolveArgs {
  std::string instance;
  std::string config;
  SolveOverrides overrides;
  std::string reference;
  std::string out_dir;
  bool force = false;
  bool timing = false;
};

// Largest increase of a sequence along the recorded rows; -inf when there
// are fewer than two values.
double max_increase(const std::vector<double>& seq) {
  double worst = -kInfinity;
  for (std::size_t i = 1; i < seq.size(); ++i) worst = std::max(worst, seq[i] - seq[i - 1]);
  return worst;
}

Json monotonicity_json(const RunHistory& h, double tau) {
  std::vector<double> phi, psi_xi;
  for (const auto& r : h.rows) {
    phi.push_back(r.phi);
    psi_xi.push_back(r.psi + r.xi);
  }
  const double dphi = max_increase(phi);
  const double dpsi = max_increase(psi_xi);
  Json j;
  Json a;
  a["applicable"] = tau <= 1.0;
  a["max_increase"] = std::isfinite(dphi) ? Json(dphi) : Json(nullptr);
  a["passed"] = !(dphi > kMonotoneTol);
  j["phi"] = std::move(a);
  Json b;
  b["max_increase"] = std::isfinite(dpsi) ? Json(dpsi) : Json(nullptr);
  b["passed"] = !(dpsi > kMonotoneTol);
  j["psi_plus_xi"] = std::move(b);
  return j;
}

int cmd_solve(const SolveArgs& a, std::ostream& out) {
  Loaded l = load(a.instance, a.config);
  apply(a.overrides, l.run);
  std::string tau_source;
  SolverConfig sc = resolve_config(l.prob, l.run, &tau_source);
  sc.force = a.force;
  const Solver solver(l.prob, sc);
  const ConvergenceVerdict verdict = convergence_conditions(solver);

  RunOptions opts;
  opts.keep_states = false;
  if (!a.reference.empty())
    opts.reference = reference_from_json(read_json_file(a.reference), l.prob, a.reference);

  const auto t0 = std::chrono::steady_clock::now();
  const RunResult res = solver.run(solver.zero_state(), opts);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Json j;
  j["format"] = "madmm-summary v1";
  j["instance_hash"] = l.hash;
  j["config"] = resolved_json(l.run, sc, tau_source);
  j["status"] = to_string(res.status);
  j["iterations"] = res.iterations;
  if (res.status == RunStatus::diverged) {
    j["diverged_at"] = res.diverged_at;
    j["message"] = res.message;
  }
  j["final"] = state_json(res.final_state);
  j["feas"] = res.final_state.residual.norm();
  j["objective"] = objective(l.prob, res.final_state.u, res.final_state.v);
  j["last_kkt_bound_sq"] =
      res.history.rows.empty() ? Json(nullptr) : Json(res.history.rows.back().kkt_bound_sq);
  j["min_kkt_bound_sq"] = std::isfinite(res.min_bound_sq) ? Json(res.min_bound_sq) : Json(nullptr);
  j["backend"] = {{"u", to_string(solver.u_backend())}, {"v", to_string(solver.v_backend())}};
  j["max_subproblem_residual"] = {{"u", res.max_u_step_residual}, {"v", res.max_v_step_residual}};
  Json verdicts;
  verdicts["conditions"] = {{"passed", verdict.passed},
                            {"unverified", verdict.unverified},
                            {"summary", verdict.summary},
                            {"forced", a.force && !verdict.passed}};
  if (opts.reference) verdicts["monotonicity"] = monotonicity_json(res.history, sc.tau);
  j["verdicts"] = std::move(verdicts);
  if (res.ergodic.count() > 0) {
    j["ergodic"] = {{"count", res.ergodic.count()},
                    {"u", vector_json(res.ergodic.u_mean())},
                    {"v", vector_json(res.ergodic.v_mean())},
                    {"x", vector_json(res.ergodic.x_mean())}};
  }
  j["history_rows"] = res.history.rows.size();
  if (a.timing) j["wall_time_s"] = wall;

  const std::string summary = dump(j);
  if (a.out_dir.empty()) {
    out << summary;
  } else {
    std::filesystem::create_directories(a.out_dir);
    const std::filesystem::path dir(a.out_dir);
    write_text_file((dir / "history.csv").string(), history_csv(res.history));
    write_text_file((dir / "summary.json").string(), summary);
  }
  return res.status == RunStatus::diverged ? kExitDiverged : kExitOk;
}

// --------------------------------------------------------------- rate-study

struct RateArgs {
  std::string instance;
  std::string config;
  SolveOverrides overrides;
  int kmax = 1000;
  std::string reference;
  std::string out;
  bool force = false;
};

int cmd_rate_study(const RateArgs& a, std::ostream& out, std::ostream& err) {
  Loaded l = load(a.instance, a.config);
  apply(a.overrides, l.run);
  std::string tau_source;
  SolverConfig sc = resolve_config(l.prob, l.run, &tau_source);
  sc.force = a.force;

  ReferencePoint ref;
  std::string ref_source;
  if (!a.reference.empty()) {
    ref = reference_from_json(read_json_file(a.reference), l.prob, a.reference);
    ref_source = "file";
  } else if (l.data.solution) {
    ref = *l.data.solution;
    ref_source = "instance";
  } else {
    SolverConfig pre = sc;
    pre.max_iters = kReferenceIters;
    pre.kkt_tol = kReferenceTol;
    pre.record_every = kReferenceIters;
    const Solver s(l.prob, pre);
    RunOptions po;
    po.keep_states = false;
    const RunResult r = s.run(s.zero_state(), po);
    if (r.status == RunStatus::diverged) {
      err << "preliminary reference run diverged: " << r.message << "\n";
      return kExitDiverged;
    }
    ref = {r.final_state.u, r.final_state.v, r.final_state.x};
    ref_source = r.status == RunStatus::converged ? "preliminary_run" : "preliminary_run_unconverged";
  }

  // Rate index k pairs with iterate k + 1, so k = 1..kmax needs kmax + 1 steps.
  sc.max_iters = a.kmax + 1;
  sc.record_every = 1;
  const Solver solver(l.prob, sc);
  RunOptions opts;
  opts.keep_states = false;
  opts.stop_on_tol = false;
  const RunResult res = solver.run(solver.zero_state(), opts);
  if (res.status == RunStatus::diverged) {
    err << res.message << "\n";
    return kExitDiverged;
  }

  const IterateState s0 = solver.zero_state();
  const IterateState s1 = solver.step(s0);
  const ComplexityConstants k = complexity_constants(solver, s0, s1, ref);

  RateTable t;
  t.metadata = {{"tau", sc.tau},
                {"sigma", sc.sigma},
                {"case", k.rate_case == RateCase::i ? 1.0 : 2.0},
                {"defined", k.defined ? 1.0 : 0.0},
                {"C", k.c},
                {"lyapunov_1", k.lyapunov_1},
                {"C_times_lyapunov_1", k.rate_numerator},
                {"C3", k.c3},
                {"D1", k.d1}};
  double running_min = kInfinity;
  for (std::size_t i = 1; i < res.history.rows.size(); ++i) {
    const HistoryRow& row = res.history.rows[i];
    const int rk = row.k - 1;
    running_min = std::min(running_min, row.kkt_bound_sq);
    t.rows.push_back({rk, rk * running_min, rk * row.feas, rk * row.erg_feas});
  }
  const std::string text = rate_csv(t);
  if (a.out.empty()) {
    out << text;
  } else {
    write_text_file(a.out, text);
  }
  err << "reference: " << ref_source << "\n";
  if (!k.defined) err << "constants undefined: " << k.refusal << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ certify

struct CertifyArgs {
  std::string instance;
  std::string config;
  SolveOverrides overrides;
  int probes = 100;
  int iters = 50;
  std::uint64_t seed = 0;
  bool force = false;
};

int cmd_certify(const CertifyArgs& a, std::ostream& out, std::ostream& err) {
  Loaded l = load(a.instance, a.config);
  apply(a.overrides, l.run);
  std::string tau_source;
  SolverConfig sc = resolve_config(l.prob, l.run, &tau_source);
  sc.force = a.force;
  sc.max_iters = a.iters + 1;
  sc.record_every = 1;
  const Solver solver(l.prob, sc);
  RunOptions opts;
  opts.stop_on_tol = false;
  const RunResult res = solver.run(solver.zero_state(), opts);
  if (res.status == RunStatus::diverged) {
    err << res.message << "\n";
    return kExitDiverged;
  }

  const auto& st = res.history.states;
  Rng rng(a.seed);
  CertificateCase total_i, total_ii;
  int evaluated = 0, skipped = 0, steps = 0;
  auto fold = [](CertificateCase& into, const CertificateCase& c) {
    if (!c.evaluated) return;
    into.evaluated = true;
    into.violations += c.violations;
    into.worst_slack = std::max(into.worst_slack, c.worst_slack);
    into.worst_excess = std::max(into.worst_excess, c.worst_excess);
  };
  // Steps k -> k+1 for k = 1..iters, so every step has a predecessor.
  for (std::size_t i = 1; i + 1 < st.size(); ++i) {
    const std::vector<Probe> probes = sample_domain_probes(l.prob, rng, a.probes);
    const CertificateReport r =
        proposition1_certificate(solver, &st[i - 1], st[i], st[i + 1], probes);
    fold(total_i, r.case_i);
    fold(total_ii, r.case_ii);
    evaluated += r.probes - r.skipped;
    skipped += r.skipped;
    ++steps;
  }

  auto case_json = [](const CertificateCase& c) {
    Json j;
    j["evaluated"] = c.evaluated;
    j["violations"] = c.violations;
    j["worst_slack"] = std::isfinite(c.worst_slack) ? Json(c.worst_slack) : Json(nullptr);
    j["worst_excess"] = std::isfinite(c.worst_excess) ? Json(c.worst_excess) : Json(nullptr);
    return j;
  };
  const bool passed = total_i.violations == 0 && total_ii.violations == 0;
  Json j;
  j["format"] = "madmm-certificate v1";
  j["instance_hash"] = l.hash;
  j["config"] = resolved_json(l.run, sc, tau_source);
  j["seed"] = a.seed;
  j["steps"] = steps;
  j["probes_per_step"] = a.probes;
  j["probes_evaluated"] = evaluated;
  j["probes_skipped"] = skipped;
  j["case_i"] = case_json(total_i);
  j["case_ii"] = case_json(total_ii);
  j["passed"] = passed && evaluated > 0;
  if (evaluated == 0 && steps > 0)
    j["advisory"] = "every probe fell outside dom p x dom q; widen the domain sampler";
  out << dump(j);
  if (evaluated == 0 && steps > 0) return kExitNoFeasibleProbe;
  return passed ? kExitOk : kExitConditionFailed;
}

void add_overrides(CLI::App* cmd, SolveOverrides& o) {
  cmd->add_option("--tau", o.tau, "step length in (0, 1.618)");
  cmd->add_option("--sigma", o.sigma, "penalty parameter");
  cmd->add_option("--max-iters", o.max_iters, "iteration limit")->check(CLI::NonNegativeNumber);
  cmd->add_option("--tol", o.tol, "stop once sqrt(kkt bound_sq) <= tol");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Majorized ADMM for linearly constrained convex programs"};
  app.name("madmm");
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "build an instance file from a spec");
  gen->add_option("spec", ga.spec, "spec JSON")->required();
  gen->add_option("-o,--out", ga.out, "instance file (default: stdout)");

  CheckArgs ca;
  auto* chk = app.add_subcommand("check", "evaluate the convergence conditions");
  chk->add_option("instance", ca.instance)->required();
  chk->add_option("config", ca.config)->required();
  chk->add_option("--theorem", ca.theorem, "clause deciding the exit code")
      ->check(CLI::IsMember({"auto", "1i", "1ii", "2", "remark2"}));
  chk->add_option("--cap", ca.cap, "largest dimension assembled densely")->check(CLI::PositiveNumber);

  SolveArgs sa;
  auto* sol = app.add_subcommand("solve", "run the solver");
  sol->add_option("instance", sa.instance)->required();
  sol->add_option("config", sa.config)->required();
  add_overrides(sol, sa.overrides);
  sol->add_option("--reference", sa.reference, "JSON with u, v, x (or an instance with a solution)");
  sol->add_option("--out", sa.out_dir, "directory for history.csv and summary.json");
  sol->add_flag("--force", sa.force, "run even if the conditions do not verify");
  sol->add_flag("--timing", sa.timing, "include wall time in the summary");

  RateArgs ra;
  auto* rate = app.add_subcommand("rate-study", "scaled complexity sequences");
  rate->add_option("instance", ra.instance)->required();
  rate->add_option("config", ra.config)->required();
  add_overrides(rate, ra.overrides);
  rate->add_option("--kmax", ra.kmax)->check(CLI::PositiveNumber);
  rate->add_option("--reference", ra.reference);
  rate->add_option("-o,--out", ra.out, "CSV file (default: stdout)");
  rate->add_flag("--force", ra.force);

  CertifyArgs ce;
  auto* cert = app.add_subcommand("certify", "per-step decrease certificates at random probes");
  cert->add_option("instance", ce.instance)->required();
  cert->add_option("config", ce.config)->required();
  add_overrides(cert, ce.overrides);
  cert->add_option("--probes", ce.probes)->check(CLI::PositiveNumber);
  cert->add_option("--iters", ce.iters)->check(CLI::PositiveNumber);
  cert->add_option("--seed", ce.seed);
  cert->add_flag("--force", ce.force);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*gen) return cmd_generate(ga, out);
    if (*chk) return cmd_check(ca, out);
    if (*sol) return cmd_solve(sa, out);
    if (*rate) return cmd_rate_study(ra, out, err);
    if (*cert) return cmd_certify(ce, out, err);
  } catch (const Error& e) {
    err << "madmm: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    err << "madmm: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace madmm
