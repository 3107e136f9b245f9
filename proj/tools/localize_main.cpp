// Command-line front end: model generators, mean-field bounds, exact free
// energies, and the stopped-tilt decomposition experiments, all emitting
// reproducible JSON reports.
//
// Exit codes: 0 when every verdict in the emitted report holds, 1 when some
// verdict fails, 2 on usage or input errors.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "localize/bounds.hpp"
#include "localize/io.hpp"
#include "localize/localization.hpp"
#include "localize/meanfield.hpp"
#include "localize/measure.hpp"
#include "localize/models.hpp"
#include "localize/parallel.hpp"
#include "localize/rng.hpp"
#include "localize/version.hpp"

using namespace localize;

namespace {

struct CommonFlags {
  std::string out;
  int threads = 0;  // 0 = LOCALIZE_THREADS or hardware default
};

// `threads` is intentionally not echoed: reports are identical for any
// thread count, and the determinism check compares runs across thread
// counts byte for byte.
Json report_envelope(const std::string& command, Json flags, Json payload) {
  Json j;
  j["tool"] = "localize";
  j["version"] = kVersion;
  j["command"] = Json{{"name", command}, {"flags", std::move(flags)}};
  j["payload"] = std::move(payload);
  return j;
}

void emit_report(const Json& report, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error(out_path + ": cannot open for writing");
  out << report.dump(2) << "\n";
}

std::string json_double(double x) { return Json(x).dump(); }

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenArgs {
  int n = 8;
  int d = 1;
  int k = 4;
  double alpha = 0.25;
  double beta = 1.0;
  std::uint64_t seed = 0;
  Eigen::Index matrix_cap = 2000;
  std::string out = "model.json";
};

int run_gen(const std::string& which, const GenArgs& a) {
  GeneratedModel gen = [&] {
    if (which == "curie-weiss") return gen_curie_weiss(a.n, a.beta);
    if (which == "torus") {
      return gen_torus_heat_kernel(a.k, a.d, a.alpha, a.beta, a.matrix_cap);
    }
    return gen_expander(a.n, a.d, a.beta, a.seed);
  }();
  save_model(gen.model, gen.metadata, a.out);
  Json meta = to_json(gen.metadata);
  meta["n"] = gen.model.n;
  meta["k"] = gen.model.space.k();
  meta["path"] = a.out;
  std::cout << meta.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bound
// ---------------------------------------------------------------------------

double default_budget(const SpinModel& model) {
  if (model.space.kind() == SpinSpace::Kind::ising) {
    return static_cast<double>(model.n);
  }
  const double d = model.space.diameter();
  return d * d * static_cast<double>(model.n);
}

int run_bound(const std::string& model_path, std::optional<double> budget,
              const std::vector<double>& ps, bool exact_cov,
              std::size_t state_cap, const CommonFlags& common) {
  auto loaded = load_model(model_path);
  const SpinModel& model = loaded.model;
  const SymmetricMatrix j = flat_coupling(model);

  std::optional<SymmetricMatrix> cov;
  std::string budget_source = "spin-space default";
  double s = default_budget(model);
  if (exact_cov) {
    cov = covariance(
        gibbs_measure(model, state_cap, resolve_threads(common.threads)));
    s = cov->trace();
    budget_source = "Tr(exact covariance)";
  }
  if (budget) {
    s = *budget;
    budget_source = "flag";
  }

  const auto& grid = ps.empty() ? default_p_grid() : ps;
  BoundReport rep = best_bound(j, s, cov, grid);

  Json flags;
  flags["model"] = model_path;
  flags["S"] = budget ? Json(*budget) : Json(nullptr);
  flags["p"] = ps;
  flags["exact_cov"] = exact_cov;
  flags["state_cap"] = state_cap;
  Json payload = to_json(rep);
  payload["budget_source"] = budget_source;
  emit_report(report_envelope("bound", std::move(flags), std::move(payload)),
              common.out);
  return 0;
}

// ---------------------------------------------------------------------------
// meanfield
// ---------------------------------------------------------------------------

int run_meanfield(const std::string& model_path, int restarts, double tol,
                  int max_iters, std::uint64_t seed, bool exact,
                  std::size_t state_cap, const CommonFlags& common) {
  auto loaded = load_model(model_path);
  const SpinModel& model = loaded.model;
  const int threads = resolve_threads(common.threads);

  MeanFieldSolution sol =
      mf_optimize(model, restarts, tol, max_iters, seed, threads);

  Json payload;
  payload["solution"] = to_json(sol);
  bool all_hold = true;
  if (exact) {
    DeficitReport def = deficit(model, sol, state_cap, threads);
    payload["deficit"] = to_json(def);

    const SymmetricMatrix j = flat_coupling(model);
    const SymmetricMatrix cov =
        covariance(gibbs_measure(model, state_cap, threads));
    BoundReport bounds = best_bound(j, cov.trace(), cov);
    payload["bounds"] = to_json(bounds);

    Json verdicts;
    const bool nonneg = def.value >= -1e-9;
    const bool within_logdet = def.value <= *bounds.logdet_bound + 1e-8;
    const bool within_s_js = def.value <= bounds.s_js_bound + 1e-8;
    const bool within_rank = def.value <= bounds.rank_bound + 1e-8;
    verdicts["deficit_nonnegative"] = nonneg;
    verdicts["deficit_leq_logdet_bound"] = within_logdet;
    verdicts["deficit_leq_s_js_bound"] = within_s_js;
    verdicts["deficit_leq_rank_bound"] = within_rank;
    all_hold = nonneg && within_logdet && within_s_js && within_rank;
    verdicts["all_hold"] = all_hold;
    payload["verdicts"] = std::move(verdicts);
  }

  Json flags;
  flags["model"] = model_path;
  flags["restarts"] = restarts;
  flags["tol"] = tol;
  flags["max_iters"] = max_iters;
  flags["seed"] = seed;
  flags["exact"] = exact;
  flags["state_cap"] = state_cap;
  emit_report(report_envelope("meanfield", std::move(flags), std::move(payload)),
              common.out);
  return all_hold ? 0 : 1;
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

SymmetricMatrix parse_l_matrix(const std::string& spec, Eigen::Index dim) {
  if (spec.rfind("eps:", 0) == 0) {
    const double eps = std::stod(spec.substr(4));
    if (!(eps > 0.0)) {
      throw std::runtime_error("--L eps value must be positive");
    }
    return SymmetricMatrix::scaled_identity(dim, eps);
  }
  SymmetricMatrix l = load_matrix(spec);
  if (l.dim() != dim) {
    throw std::runtime_error("--L matrix dimension does not match the measure");
  }
  return l;
}

StoppingSpec parse_stopping(const std::string& spec) {
  if (spec == "uniform") return StoppingSpec::uniform();
  if (spec.rfind("fixed:", 0) == 0) {
    return StoppingSpec::fixed(std::stod(spec.substr(6)));
  }
  throw std::runtime_error("--stopping must be 'uniform' or 'fixed:T'");
}

int run_decompose(const std::string& model_path, const std::string& measure_path,
                  const std::string& l_spec, const std::string& stopping_spec,
                  int trials, double dt, std::uint64_t seed,
                  const std::string& traj_out, int traj_every,
                  std::size_t state_cap, const CommonFlags& common) {
  if (model_path.empty() == measure_path.empty()) {
    throw std::runtime_error("decompose needs exactly one of --model / --measure");
  }
  const int threads = resolve_threads(common.threads);
  AtomicMeasure mu = model_path.empty()
                         ? load_measure(measure_path)
                         : gibbs_measure(load_model(model_path).model,
                                         state_cap, threads);

  const SymmetricMatrix l = parse_l_matrix(l_spec, mu.dim());
  LocalizationConfig cfg;
  cfg.dt = dt;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.stopping = parse_stopping(stopping_spec);

  auto samples = sample_decomposition(mu, l, cfg);
  cfg.driver = matrix_sqrt_psd(l);
  DecompositionReport rep = verify_theorem(mu, l, samples, cfg);
  MartingaleReport mart = martingale_check(mu, samples, cfg.driver, cfg.dt);

  if (!traj_out.empty()) {
    const double horizon = cfg.stopping.kind == StoppingSpec::Kind::fixed
                               ? cfg.stopping.t_fixed
                               : 2.0;
    auto traj = mean_trajectory(mu, cfg.driver, horizon, cfg, traj_every);
    std::ofstream csv(traj_out);
    if (!csv) throw std::runtime_error(traj_out + ": cannot open for writing");
    csv << "t,trace_qaq,entropy\n";
    for (const auto& row : traj) {
      csv << json_double(row.t) << "," << json_double(row.trace_qaq) << ","
          << json_double(row.entropy) << "\n";
    }
  }

  Json flags;
  flags["model"] = model_path;
  flags["measure"] = measure_path;
  flags["L"] = l_spec;
  flags["stopping"] = stopping_spec;
  flags["trials"] = trials;
  flags["dt"] = dt;
  flags["seed"] = seed;
  flags["traj_out"] = traj_out;
  flags["traj_every"] = traj_every;
  flags["state_cap"] = state_cap;
  Json payload;
  payload["decomposition"] = to_json(rep);
  payload["martingale"] = to_json(mart);
  const bool ok = rep.all_hold() && mart.all_hold();
  payload["all_hold"] = ok;
  emit_report(report_envelope("decompose", std::move(flags), std::move(payload)),
              common.out);
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// check suites
// ---------------------------------------------------------------------------

SpinModel seeded_random_ising(int n, std::uint64_t seed, std::uint64_t index) {
  Rng rng = Rng::stream(seed, index, 50);
  Eigen::MatrixXd j(n, n);
  for (int i = 0; i < n; ++i) {
    for (int jj = i; jj < n; ++jj) {
      const double v = (2.0 * rng.uniform01() - 1.0) / n;
      j(i, jj) = v;
      j(jj, i) = v;
    }
  }
  Eigen::MatrixXd h(n, 1);
  for (int i = 0; i < n; ++i) h(i, 0) = rng.uniform01() - 0.5;
  return make_spin_model(SpinSpace::ising(), SymmetricMatrix::from_dense(j), h);
}

int run_check(const std::string& suite, int cases, int trials,
              std::uint64_t seed, const CommonFlags& common) {
  Json payload;
  payload["suite"] = suite;
  Json rows = Json::array();
  bool all_pass = true;
  const int threads = resolve_threads(common.threads);

  if (suite == "lemma41") {
    for (int c = 0; c < cases; ++c) {
      Rng rng = Rng::stream(seed, c, 60);
      const int n = 1 + static_cast<int>(rng.uniform_below(6));
      Eigen::VectorXd alpha(n);
      for (int i = 0; i < n; ++i) {
        alpha(i) = std::exp(6.0 * (rng.uniform01() - 0.5));
      }
      const double s = std::exp(6.0 * (rng.uniform01() - 0.5));
      const double p =
          std::exp(std::log(0.1) + rng.uniform01() * std::log(160.0));
      const double wf = waterfill_s(alpha, s).value;
      const double bound = lemma41_bound(alpha, s, p);
      const double margin = bound - wf;
      const bool pass = margin >= -1e-8;
      all_pass = all_pass && pass;
      rows.push_back(Json{{"case", c}, {"p", p}, {"waterfill", wf},
                          {"bound", bound}, {"margin", margin}, {"pass", pass}});
      std::cout << "lemma41 case " << c << ": margin " << json_double(margin)
                << (pass ? " pass" : " FAIL") << "\n";
    }
  } else if (suite == "lemma42") {
    for (int c = 0; c < cases; ++c) {
      Rng rng = Rng::stream(seed, c, 61);
      const int n = 2 + static_cast<int>(rng.uniform_below(5));
      auto pd = [&](double ridge) {
        Eigen::MatrixXd g(n, n);
        for (int i = 0; i < n; ++i) {
          for (int jj = 0; jj < n; ++jj) g(i, jj) = rng.normal();
        }
        return SymmetricMatrix::from_dense(
            (g * g.transpose() / n +
             ridge * Eigen::MatrixXd::Identity(n, n)).eval(), 1e-8);
      };
      auto res = lemma42_check(pd(std::exp(-4.0 * rng.uniform01())),
                               pd(std::exp(-4.0 * rng.uniform01())));
      const double margin = res.rhs - res.lhs;
      all_pass = all_pass && res.holds;
      rows.push_back(Json{{"case", c}, {"lhs", res.lhs}, {"rhs", res.rhs},
                          {"margin", margin}, {"pass", res.holds}});
      std::cout << "lemma42 case " << c << ": margin " << json_double(margin)
                << (res.holds ? " pass" : " FAIL") << "\n";
    }
  } else if (suite == "entropy-identity") {
    Eigen::MatrixXd atoms(2, 1);
    atoms << 1.0, -1.0;
    auto mu = AtomicMeasure::counting(atoms, Eigen::VectorXd::Constant(2, 0.5));
    LocalizationConfig cfg;
    cfg.trials = trials;
    cfg.dt = 1e-3;
    cfg.seed = seed;
    cfg.threads = threads;
    auto res =
        entropy_identity_check(mu, SymmetricMatrix::identity(1), 1.0, cfg);
    const bool pass = res.rel_err <= 0.05;
    all_pass = pass;
    rows.push_back(Json{{"lhs", res.lhs}, {"rhs", res.rhs},
                        {"rel_err", res.rel_err}, {"pass", pass}});
    std::cout << "entropy-identity: lhs " << json_double(res.lhs) << " rhs "
              << json_double(res.rhs) << " rel_err " << json_double(res.rel_err)
              << (pass ? " pass" : " FAIL") << "\n";
  } else if (suite == "decay") {
    auto mu = gibbs_measure(seeded_random_ising(4, seed, 0));
    const auto q = SymmetricMatrix::identity(4);
    const auto cov0 = covariance(mu);
    auto spec = sym_eig(SymmetricMatrix::from_dense(
        (q.dense() * cov0.dense() * q.dense()).eval(), 1e-8));
    std::vector<Eigen::VectorXd> dirs;
    for (int i = 0; i < 3; ++i) dirs.push_back(spec.eigenvectors.col(i));
    LocalizationConfig cfg;
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.threads = threads;
    auto table = covariance_decay_check(mu, q, dirs, {0.5, 1.0, 2.0}, cfg);
    all_pass = table.all_hold();
    payload["table"] = to_json(table);
    for (const auto& cell : table.cells) {
      std::cout << "decay dir " << cell.direction << " t " << cell.t
                << ": estimate " << json_double(cell.estimate) << " bound "
                << json_double(cell.bound) << (cell.holds ? " pass" : " FAIL")
                << "\n";
    }
  } else if (suite == "martingale") {
    auto mu = gibbs_measure(seeded_random_ising(6, seed, 0));
    auto l = SymmetricMatrix::identity(6);
    LocalizationConfig cfg;
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.threads = threads;
    auto samples = sample_decomposition(mu, l, cfg);
    cfg.driver = matrix_sqrt_psd(l);
    auto rep = martingale_check(mu, samples, cfg.driver, cfg.dt);
    all_pass = rep.all_hold();
    payload["martingale"] = to_json(rep);
    std::cout << "martingale: worst mean excess "
              << json_double(rep.worst_mean_excess) << ", worst weight excess "
              << json_double(rep.worst_weight_excess) << ", total variance "
              << (rep.total_variance.holds ? "holds" : "FAILS")
              << (all_pass ? " pass" : " FAIL") << "\n";
  } else {
    throw std::runtime_error("unknown suite '" + suite + "'");
  }

  if (!rows.empty()) payload["cases"] = std::move(rows);
  payload["all_pass"] = all_pass;
  Json flags;
  flags["suite"] = suite;
  flags["cases"] = cases;
  flags["trials"] = trials;
  flags["seed"] = seed;
  emit_report(report_envelope("check", std::move(flags), std::move(payload)),
              common.out);
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic-localization decomposition and mean-field bound toolkit"};
  app.require_subcommand(1);

  CommonFlags common;

  // --- gen ---
  auto* gen = app.add_subcommand("gen", "generate a model file");
  gen->require_subcommand(1);
  GenArgs ga;
  auto* cw = gen->add_subcommand("curie-weiss", "uniform couplings beta/n");
  cw->add_option("--n", ga.n, "site count")->required();
  cw->add_option("--beta", ga.beta, "inverse temperature")->required();
  cw->add_option("--out", ga.out, "output model file");
  auto* torus = gen->add_subcommand("torus", "heat-kernel couplings on (Z/kZ)^d");
  torus->add_option("--k", ga.k, "torus side")->required();
  torus->add_option("--d", ga.d, "torus dimension")->required();
  torus->add_option("--alpha", ga.alpha, "walk length fraction (alpha*k integer)")
      ->required();
  torus->add_option("--beta", ga.beta, "coupling scale")->required();
  torus->add_option("--matrix-cap", ga.matrix_cap, "max matrix dimension");
  torus->add_option("--out", ga.out, "output model file");
  auto* expander = gen->add_subcommand("expander", "random d-regular graph");
  expander->add_option("--n", ga.n, "vertex count")->required();
  expander->add_option("--d", ga.d, "degree")->required();
  expander->add_option("--beta", ga.beta, "coupling scale")->required();
  expander->add_option("--seed", ga.seed, "generator seed");
  expander->add_option("--out", ga.out, "output model file");

  // --- bound ---
  auto* bound = app.add_subcommand("bound", "mean-field deficit bounds for a model");
  std::string bound_model;
  std::optional<double> bound_s;
  std::vector<double> bound_ps;
  bool bound_exact_cov = false;
  std::size_t state_cap = kDefaultStateCap;
  bound->add_option("--model", bound_model, "model file")->required();
  bound->add_option("--S", bound_s, "trace budget override");
  bound->add_option("--p", bound_ps, "Schatten exponents (repeatable)");
  bound->add_flag("--exact-cov", bound_exact_cov,
                  "use the exact Gibbs covariance (enumerates the state space)");
  bound->add_option("--state-cap", state_cap, "max enumerable configurations");
  bound->add_option("--out", common.out, "report path (stdout if omitted)");
  bound->add_option("--threads", common.threads, "worker threads");

  // --- meanfield ---
  auto* mf = app.add_subcommand("meanfield", "coordinate-ascent product optimum");
  std::string mf_model;
  int mf_restarts = 8;
  double mf_tol = 1e-10;
  int mf_max_iters = 10000;
  std::uint64_t mf_seed = 0;
  bool mf_exact = false;
  mf->add_option("--model", mf_model, "model file")->required();
  mf->add_option("--restarts", mf_restarts, "random restarts (plus uniform start)");
  mf->add_option("--tol", mf_tol, "marginal-change convergence tolerance");
  mf->add_option("--max-iters", mf_max_iters, "sweep cap per restart");
  mf->add_option("--seed", mf_seed, "restart seed");
  mf->add_flag("--exact", mf_exact, "also compute exact log Z, deficit and bounds");
  mf->add_option("--state-cap", state_cap, "max enumerable configurations");
  mf->add_option("--out", common.out, "report path (stdout if omitted)");
  mf->add_option("--threads", common.threads, "worker threads");

  // --- decompose ---
  auto* dec = app.add_subcommand("decompose",
                                 "stopped-tilt decomposition with verdicts");
  std::string dec_model, dec_measure, dec_l = "eps:1.0", dec_traj;
  std::string dec_stopping = "uniform";
  int dec_trials = 2000;
  double dec_dt = 1e-3;
  std::uint64_t dec_seed = 0;
  int dec_traj_every = 10;
  dec->add_option("--model", dec_model, "model file (Gibbs measure input)");
  dec->add_option("--measure", dec_measure, "raw atomic measure file");
  dec->add_option("--L", dec_l, "eps:VALUE or a matrix file")->required();
  dec->add_option("--stopping", dec_stopping, "uniform | fixed:T");
  dec->add_option("--trials", dec_trials, "Monte Carlo trials");
  dec->add_option("--dt", dec_dt, "Euler step");
  dec->add_option("--seed", dec_seed, "trial seed");
  dec->add_option("--traj-out", dec_traj, "mean-trajectory CSV path");
  dec->add_option("--traj-every", dec_traj_every, "trajectory cadence in steps");
  dec->add_option("--state-cap", state_cap, "max enumerable configurations");
  dec->add_option("--out", common.out, "report path (stdout if omitted)");
  dec->add_option("--threads", common.threads, "worker threads");

  // --- check ---
  auto* check = app.add_subcommand("check", "property suites with margins");
  std::string check_suite;
  int check_cases = 1000;
  int check_trials = 0;
  std::uint64_t check_seed = 0;
  check->add_option("--suite", check_suite,
                    "lemma41 | lemma42 | entropy-identity | decay | martingale")
      ->required();
  check->add_option("--cases", check_cases, "random instances (lemma suites)");
  check->add_option("--trials", check_trials,
                    "Monte Carlo trials (simulation suites; 0 = suite default)");
  check->add_option("--seed", check_seed, "suite seed");
  check->add_option("--out", common.out, "report path (stdout if omitted)");
  check->add_option("--threads", common.threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  const auto started = std::chrono::steady_clock::now();
  int rc = 0;
  try {
    if (gen->parsed()) {
      if (cw->parsed()) rc = run_gen("curie-weiss", ga);
      if (torus->parsed()) rc = run_gen("torus", ga);
      if (expander->parsed()) rc = run_gen("expander", ga);
    } else if (bound->parsed()) {
      rc = run_bound(bound_model, bound_s, bound_ps, bound_exact_cov, state_cap,
                     common);
    } else if (mf->parsed()) {
      rc = run_meanfield(mf_model, mf_restarts, mf_tol, mf_max_iters, mf_seed,
                         mf_exact, state_cap, common);
    } else if (dec->parsed()) {
      rc = run_decompose(dec_model, dec_measure, dec_l, dec_stopping, dec_trials,
                         dec_dt, dec_seed, dec_traj, dec_traj_every, state_cap,
                         common);
    } else if (check->parsed()) {
      int default_trials = 800;
      if (check_suite == "entropy-identity") default_trials = 4000;
      if (check_suite == "martingale") default_trials = 2000;
      rc = run_check(check_suite, check_cases,
                     check_trials > 0 ? check_trials : default_trials,
                     check_seed, common);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - started;
  std::cerr << "completed in " << elapsed.count() << " s\n";
  return rc;
}
