#include "localize/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "localize/parallel.hpp"
#include "localize/rng.hpp"

namespace localize {

namespace {

constexpr std::uint64_t kStopSubstream = 0;
constexpr std::uint64_t kNoiseSubstream = 1;

// Per-(mu0, Q) workspace: everything the step loop needs, precomputed once.
// mu_t = tilt(mu0, w, t, Q) has log-weights  log p0_i + <x_i, w> - t/2 |Q x_i|^2.
class TiltKernel {
 public:
  TiltKernel(const AtomicMeasure& mu0, const SymmetricMatrix& q)
      : x_(mu0.atoms()), q_(q.dense()), q2_(q.dense() * q.dense()) {
    const Eigen::Index m = x_.rows();
    qx_ = x_ * q_;  // row i = (Q x_i)^T, Q symmetric
    qnorm_ = qx_.rowwise().squaredNorm();
    logw0_.resize(m);
    lognu_.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double p = mu0.weights()(i);
      logw0_(i) = p > 0.0 ? std::log(p)
                          : -std::numeric_limits<double>::infinity();
      lognu_(i) = std::log(mu0.base_weights()(i));
    }
  }

  Eigen::Index dim() const { return x_.cols(); }
  Eigen::Index size() const { return x_.rows(); }
  const Eigen::MatrixXd& atoms() const { return x_; }
  const Eigen::MatrixXd& qx() const { return qx_; }
  const Eigen::MatrixXd& q() const { return q_; }
  const Eigen::MatrixXd& q2() const { return q2_; }

  // Normalized weights of mu_t at (w, t).
  void weights(const Eigen::VectorXd& w, double t, Eigen::VectorXd& p) const {
    p.noalias() = x_ * w;
    p -= (0.5 * t) * qnorm_;
    p += logw0_;
    const double mx = p.maxCoeff();
    p = (p.array() - mx).exp();
    p /= p.sum();
  }

  // Tr(Q A Q) of the measure with weights p: E|Q x|^2 - |E Q x|^2.
  double trace_qaq(const Eigen::VectorXd& p) const {
    return p.dot(qnorm_) - (qx_.transpose() * p).squaredNorm();
  }

  double entropy_of(const Eigen::VectorXd& p) const {
    double h = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p(i) > 0.0) h -= p(i) * (std::log(p(i)) - lognu_(i));
    }
    return h;
  }

 private:
  Eigen::MatrixXd x_;
  Eigen::MatrixXd q_, q2_;
  Eigen::MatrixXd qx_;
  Eigen::VectorXd qnorm_;
  Eigen::VectorXd logw0_;
  Eigen::VectorXd lognu_;
};

struct PathScratch {
  Eigen::VectorXd p, a, xi, drift;
  explicit PathScratch(const TiltKernel& k)
      : p(k.size()), a(k.dim()), xi(k.dim()), drift(k.dim()) {}
};

// Advances w from `t_from` by `h` using the weights already in s.p (which
// must correspond to (w, t_from)).
void advance(const TiltKernel& k, double h, Eigen::VectorXd& w, PathScratch& s,
             Rng& noise, std::uint64_t trial, double t_from) {
  s.a.noalias() = k.atoms().transpose() * s.p;
  noise.normal_fill(std::span<double>(s.xi.data(), static_cast<std::size_t>(s.xi.size())));
  s.drift.noalias() = k.q2() * s.a;
  w += h * s.drift;
  w.noalias() += std::sqrt(h) * (k.q() * s.xi);
  if (!w.allFinite()) {
    std::ostringstream msg;
    msg << "localization trial " << trial << ": non-finite tilt state at t = "
        << t_from + h;
    throw std::runtime_error(msg.str());
  }
}

// Runs the tilt process, truncating steps so that every checkpoint time is
// hit exactly; obs(index, t, p) fires at each checkpoint. Checkpoints must
// be ascending and nonnegative; a leading 0 checkpoint is observed before
// any step. Returns the final tilt vector.
template <class Obs>
Eigen::VectorXd run_checkpointed(const TiltKernel& k, double dt,
                                 const std::vector<double>& checkpoints,
                                 Rng& noise, std::uint64_t trial, Obs&& obs) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k.dim());
  PathScratch s(k);
  double t = 0.0;
  k.weights(w, t, s.p);
  std::size_t ci = 0;
  if (!checkpoints.empty() && checkpoints[0] == 0.0) {
    obs(std::size_t{0}, 0.0, s.p);
    ci = 1;
  }
  for (; ci < checkpoints.size(); ++ci) {
    const double target = checkpoints[ci];
    const auto full = static_cast<long>(std::floor((target - t) / dt));
    const double seg_start = t;
    for (long i = 0; i < full; ++i) {
      const double t_here = seg_start + static_cast<double>(i) * dt;
      advance(k, dt, w, s, noise, trial, t_here);
      k.weights(w, std::min(t_here + dt, target), s.p);
    }
    const double reached = seg_start + static_cast<double>(full) * dt;
    const double rem = target - reached;
    if (rem > 0.0) {
      advance(k, rem, w, s, noise, trial, reached);
    }
    t = target;
    k.weights(w, t, s.p);
    obs(ci, t, s.p);
  }
  return w;
}

struct NoObserver {
  void operator()(std::size_t, double, const Eigen::VectorXd&) const {}
};

double draw_tau(const LocalizationConfig& cfg, std::uint64_t trial) {
  if (cfg.stopping.kind == StoppingSpec::Kind::uniform_1_2) {
    Rng stop = Rng::stream(cfg.seed, trial, kStopSubstream);
    return 1.0 + stop.uniform01();
  }
  return cfg.stopping.t_fixed;
}

DecompositionSample run_trial_with_kernel(const TiltKernel& kernel,
                                          const AtomicMeasure& mu0,
                                          const LocalizationConfig& cfg,
                                          std::uint64_t trial) {
  const double tau = draw_tau(cfg, trial);
  Rng noise = Rng::stream(cfg.seed, trial, kNoiseSubstream);
  Eigen::VectorXd w;
  if (tau > 0.0) {
    w = run_checkpointed(kernel, cfg.dt, {tau}, noise, trial, NoObserver{});
  } else {
    w = Eigen::VectorXd::Zero(mu0.dim());
  }
  AtomicMeasure stopped = tilt(mu0, w, tau, cfg.driver);
  MomentSummary mom = moments(stopped);
  return DecompositionSample{tau, std::move(w), std::move(stopped),
                             std::move(mom)};
}

double sample_std_err(double sum, double sumsq, int t) {
  if (t < 2) return 0.0;
  const double mean = sum / t;
  const double var = std::max(0.0, (sumsq - t * mean * mean) / (t - 1));
  return std::sqrt(var / t);
}

// 10 * Tr(Q Cov(mu) Q); the discretization allowance is this times dt.
double allowance_coefficient(const SymmetricMatrix& q,
                             const SymmetricMatrix& cov0) {
  return 10.0 * (q.dense() * cov0.dense() * q.dense()).trace();
}

}  // namespace

void validate_config(const LocalizationConfig& cfg, Eigen::Index dim) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
    throw std::invalid_argument("LocalizationConfig: dt must be positive");
  }
  if (cfg.trials < 1) {
    throw std::invalid_argument("LocalizationConfig: trials must be >= 1");
  }
  if (cfg.driver.dim() != dim) {
    throw std::invalid_argument("LocalizationConfig: driver dimension mismatch");
  }
  if (cfg.stopping.kind == StoppingSpec::Kind::fixed &&
      (!(cfg.stopping.t_fixed >= 0.0) || !std::isfinite(cfg.stopping.t_fixed))) {
    throw std::invalid_argument("LocalizationConfig: fixed stopping time must be >= 0");
  }
  const double scale =
      1.0 + (cfg.driver.dim() > 0 ? cfg.driver.dense().cwiseAbs().maxCoeff() : 0.0);
  if (min_eigenvalue(cfg.driver) < -1e-10 * scale) {
    throw std::invalid_argument("LocalizationConfig: driver must be PSD");
  }
}

LocalizationState step(const LocalizationState& state, const AtomicMeasure& mu0,
                       const LocalizationConfig& cfg,
                       const Eigen::VectorXd& noise) {
  if (state.w.size() != mu0.dim() || noise.size() != mu0.dim()) {
    throw std::invalid_argument("step: dimension mismatch");
  }
  if (!state.w.allFinite() || !(state.t >= 0.0)) {
    throw std::invalid_argument("step: non-finite state");
  }
  const Eigen::VectorXd a = mean(tilt(mu0, state.w, state.t, cfg.driver));
  const Eigen::MatrixXd& q = cfg.driver.dense();
  LocalizationState out;
  out.t = state.t + cfg.dt;
  out.w = state.w + cfg.dt * (q * (q * a)) + std::sqrt(cfg.dt) * (q * noise);
  if (!out.w.allFinite()) {
    std::ostringstream msg;
    msg << "step: non-finite tilt state at t = " << out.t;
    throw std::runtime_error(msg.str());
  }
  return out;
}

DecompositionSample run_trial(const AtomicMeasure& mu0,
                              const LocalizationConfig& cfg,
                              std::uint64_t trial_index) {
  validate_config(cfg, mu0.dim());
  TiltKernel kernel(mu0, cfg.driver);
  return run_trial_with_kernel(kernel, mu0, cfg, trial_index);
}

std::vector<DecompositionSample> sample_decomposition(
    const AtomicMeasure& mu0, const SymmetricMatrix& l,
    LocalizationConfig cfg) {
  const double scale =
      1.0 + (l.dim() > 0 ? l.dense().cwiseAbs().maxCoeff() : 0.0);
  if (l.dim() != mu0.dim() || min_eigenvalue(l) <= 1e-12 * scale) {
    throw std::invalid_argument(
        "sample_decomposition: L must be positive-definite and match the measure dimension");
  }
  cfg.driver = matrix_sqrt_psd(l);
  validate_config(cfg, mu0.dim());

  TiltKernel kernel(mu0, cfg.driver);
  std::vector<std::optional<DecompositionSample>> slots(
      static_cast<std::size_t>(cfg.trials));
  parallel_for(slots.size(), cfg.threads, [&](std::size_t i) {
    slots[i] = run_trial_with_kernel(kernel, mu0, cfg, i);
  });

  std::vector<DecompositionSample> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

DecompositionReport verify_theorem(const AtomicMeasure& mu0,
                                   const SymmetricMatrix& l,
                                   const std::vector<DecompositionSample>& samples,
                                   const LocalizationConfig& cfg) {
  if (samples.empty()) {
    throw std::invalid_argument("verify_theorem: no samples");
  }
  const Eigen::Index n = mu0.dim();
  const int t = static_cast<int>(samples.size());
  const SymmetricMatrix cov0 = covariance(mu0);
  const SymmetricMatrix q = matrix_sqrt_psd(l);

  DecompositionReport rep;
  rep.trials = t;
  rep.dt = cfg.dt;
  rep.entropy_mu = entropy(mu0);
  rep.deficit_bound = logdet_plus_id(cov0, l);
  rep.allowance_c = allowance_coefficient(q, cov0);
  const double allowance = rep.allowance_c * cfg.dt;

  double h_sum = 0.0, h_sumsq = 0.0;
  Eigen::MatrixXd cov_sum = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd cov_sumsq = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd clc_sum = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd clc_sumsq = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : samples) {
    const double h = s.moments.entropy;
    h_sum += h;
    h_sumsq += h * h;
    const Eigen::MatrixXd& c = s.moments.covariance.dense();
    Eigen::MatrixXd clc = c * l.dense() * c;
    clc = 0.5 * (clc + clc.transpose());
    cov_sum += c;
    cov_sumsq += c.cwiseProduct(c);
    clc_sum += clc;
    clc_sumsq += clc.cwiseProduct(clc);
  }

  rep.mean_entropy.mean = h_sum / t;
  rep.mean_entropy.std_err = sample_std_err(h_sum, h_sumsq, t);

  auto finish = [&](const Eigen::MatrixXd& sum, const Eigen::MatrixXd& sumsq,
                    MatrixStat& stat) {
    stat.mean = sum / t;
    stat.std_err.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        stat.std_err(i, j) = sample_std_err(sum(i, j), sumsq(i, j), t);
      }
    }
    stat.max_std_err = stat.std_err.maxCoeff();
  };
  finish(cov_sum, cov_sumsq, rep.mean_cov);
  finish(clc_sum, clc_sumsq, rep.mean_cov_l_cov);

  rep.est_entropy.lhs = rep.entropy_mu - rep.mean_entropy.mean;
  rep.est_entropy.rhs = rep.deficit_bound;
  rep.est_entropy.tol = 3.0 * rep.mean_entropy.std_err + allowance;
  rep.est_entropy.holds =
      rep.est_entropy.lhs <= rep.est_entropy.rhs + rep.est_entropy.tol;

  const SymmetricMatrix mean_cov =
      SymmetricMatrix::from_dense(rep.mean_cov.mean, 1e-6);
  rep.est_cov_bound.tol = 3.0 * rep.mean_cov.max_std_err + allowance;
  PsdVerdict v2 = psd_leq(mean_cov, inverse_pd(l), rep.est_cov_bound.tol);
  rep.est_cov_bound.holds = v2.holds;
  rep.est_cov_bound.lambda_min = v2.lambda_min;

  const SymmetricMatrix mean_clc =
      SymmetricMatrix::from_dense(rep.mean_cov_l_cov.mean, 1e-6);
  rep.est_cov_l_cov.tol = 3.0 * rep.mean_cov_l_cov.max_std_err + allowance;
  PsdVerdict v3 = psd_leq(mean_clc, cov0, rep.est_cov_l_cov.tol);
  rep.est_cov_l_cov.holds = v3.holds;
  rep.est_cov_l_cov.lambda_min = v3.lambda_min;

  return rep;
}

MartingaleReport martingale_check(const AtomicMeasure& mu0,
                                  const std::vector<DecompositionSample>& samples,
                                  const SymmetricMatrix& q, double dt) {
  if (samples.empty()) {
    throw std::invalid_argument("martingale_check: no samples");
  }
  if (q.dim() != mu0.dim()) {
    throw std::invalid_argument("martingale_check: driver dimension mismatch");
  }
  const Eigen::Index n = mu0.dim();
  const Eigen::Index m = mu0.size();
  const int t = static_cast<int>(samples.size());
  const SymmetricMatrix cov0 = covariance(mu0);

  MartingaleReport rep;
  rep.a0 = mean(mu0);
  rep.allowance = allowance_coefficient(q, cov0) * dt;

  Eigen::VectorXd a_sum = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd a_sumsq = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd w_sumsq = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd cov_sum = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd cov_sumsq = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : samples) {
    a_sum += s.moments.mean;
    a_sumsq += s.moments.mean.cwiseProduct(s.moments.mean);
    w_sum += s.measure.weights();
    w_sumsq += s.measure.weights().cwiseProduct(s.measure.weights());
    cov_sum += s.moments.covariance.dense();
    cov_sumsq +=
        s.moments.covariance.dense().cwiseProduct(s.moments.covariance.dense());
  }

  rep.mean_a = a_sum / t;
  rep.se_a.resize(n);
  rep.mean_holds = true;
  rep.worst_mean_excess = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    rep.se_a(i) = sample_std_err(a_sum(i), a_sumsq(i), t);
    const double excess = std::abs(rep.mean_a(i) - rep.a0(i)) -
                          (3.0 * rep.se_a(i) + rep.allowance);
    rep.worst_mean_excess = std::max(rep.worst_mean_excess, excess);
    if (excess > 0.0) rep.mean_holds = false;
  }

  rep.mean_weights = w_sum / t;
  rep.se_weights.resize(m);
  rep.weights_hold = true;
  rep.worst_weight_excess = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m; ++i) {
    rep.se_weights(i) = sample_std_err(w_sum(i), w_sumsq(i), t);
    const double excess = std::abs(rep.mean_weights(i) - mu0.weights()(i)) -
                          (3.0 * rep.se_weights(i) + rep.allowance);
    rep.worst_weight_excess = std::max(rep.worst_weight_excess, excess);
    if (excess > 0.0) rep.weights_hold = false;
  }

  Eigen::MatrixXd mean_cov = cov_sum / t;
  double max_se = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      max_se = std::max(max_se, sample_std_err(cov_sum(i, j), cov_sumsq(i, j), t));
    }
  }
  rep.total_variance.tol = 3.0 * max_se + rep.allowance;
  PsdVerdict v = psd_leq(SymmetricMatrix::from_dense(mean_cov, 1e-6), cov0,
                         rep.total_variance.tol);
  rep.total_variance.holds = v.holds;
  rep.total_variance.lambda_min = v.lambda_min;
  return rep;
}

namespace {

// Shared fixed-chunk trial runner for the fixed-grid checks: runs
// cfg.trials paths to the last checkpoint, accumulating per-checkpoint
// statistics chunk by chunk so results do not depend on the thread count.
template <class PerTrial>
void run_trials_chunked(int trials, int threads, const PerTrial& per_trial) {
  const std::size_t chunks =
      std::min<std::size_t>(64, static_cast<std::size_t>(trials));
  auto range = [&](std::size_t c) {
    const auto tt = static_cast<std::size_t>(trials);
    return std::pair<std::size_t, std::size_t>(tt * c / chunks,
                                               tt * (c + 1) / chunks);
  };
  parallel_for(chunks, threads, [&](std::size_t c) {
    auto [lo, hi] = range(c);
    for (std::size_t trial = lo; trial < hi; ++trial) per_trial(c, trial);
  });
}

}  // namespace

EntropyIdentityResult entropy_identity_check(const AtomicMeasure& mu0,
                                             const SymmetricMatrix& q,
                                             double t_end,
                                             const LocalizationConfig& cfg) {
  LocalizationConfig local = cfg;
  local.driver = q;
  validate_config(local, mu0.dim());
  if (!(t_end >= 0.0)) {
    throw std::invalid_argument("entropy_identity_check: t_end must be >= 0");
  }

  // Step grid 0, dt, 2dt, ..., t_end.
  std::vector<double> grid{0.0};
  const auto full = static_cast<long>(std::floor(t_end / local.dt));
  for (long i = 1; i <= full; ++i) grid.push_back(static_cast<double>(i) * local.dt);
  if (grid.back() < t_end) grid.push_back(t_end);

  const TiltKernel kernel(mu0, q);
  const std::size_t k = grid.size();
  const std::size_t chunks =
      std::min<std::size_t>(64, static_cast<std::size_t>(local.trials));
  std::vector<Eigen::VectorXd> trace_sum(chunks, Eigen::VectorXd::Zero(k));
  std::vector<double> h_sum(chunks, 0.0), h_sumsq(chunks, 0.0);

  run_trials_chunked(local.trials, local.threads,
                     [&](std::size_t c, std::size_t trial) {
    Rng noise = Rng::stream(local.seed, trial, kNoiseSubstream);
    double h_end = 0.0;
    run_checkpointed(kernel, local.dt, grid, noise, trial,
                     [&](std::size_t ci, double, const Eigen::VectorXd& p) {
                       trace_sum[c](static_cast<Eigen::Index>(ci)) +=
                           kernel.trace_qaq(p);
                       if (ci + 1 == k) h_end = kernel.entropy_of(p);
                     });
    h_sum[c] += h_end;
    h_sumsq[c] += h_end * h_end;
  });

  Eigen::VectorXd mean_trace = Eigen::VectorXd::Zero(k);
  double hs = 0.0, hss = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    mean_trace += trace_sum[c];
    hs += h_sum[c];
    hss += h_sumsq[c];
  }
  mean_trace /= static_cast<double>(local.trials);

  EntropyIdentityResult res;
  res.end_entropy.mean = hs / local.trials;
  res.end_entropy.std_err = sample_std_err(hs, hss, local.trials);
  res.lhs = entropy(mu0) - res.end_entropy.mean;
  double integral = 0.0;
  for (std::size_t i = 1; i < k; ++i) {
    integral += 0.5 * (mean_trace(static_cast<Eigen::Index>(i)) +
                       mean_trace(static_cast<Eigen::Index>(i - 1))) *
                (grid[i] - grid[i - 1]);
  }
  res.rhs = 0.5 * integral;
  const double denom = std::max({std::abs(res.lhs), std::abs(res.rhs), 1e-300});
  res.rel_err = std::abs(res.lhs - res.rhs) / denom;
  return res;
}

DecayTable covariance_decay_check(const AtomicMeasure& mu0,
                                  const SymmetricMatrix& q,
                                  const std::vector<Eigen::VectorXd>& directions,
                                  const std::vector<double>& t_grid,
                                  const LocalizationConfig& cfg) {
  LocalizationConfig local = cfg;
  local.driver = q;
  validate_config(local, mu0.dim());
  for (const auto& th : directions) {
    if (th.size() != mu0.dim() || std::abs(th.norm() - 1.0) > 1e-8) {
      throw std::invalid_argument("covariance_decay_check: directions must be unit vectors");
    }
  }
  std::vector<double> grid = t_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (!grid.empty() && grid.front() < 0.0) {
    throw std::invalid_argument("covariance_decay_check: negative grid time");
  }

  DecayTable table;
  const SymmetricMatrix cov0 = covariance(mu0);
  table.allowance = allowance_coefficient(q, cov0) * local.dt;
  if (grid.empty() || directions.empty()) return table;

  const TiltKernel kernel(mu0, q);
  const std::size_t d = directions.size();
  const std::size_t k = grid.size();
  // y(i, dir) = <Q x_i, theta_dir>; <theta, Q A Q theta> = Var_p(y_dir).
  Eigen::MatrixXd y(kernel.size(), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) {
    y.col(static_cast<Eigen::Index>(j)) = kernel.qx() * directions[j];
  }
  const Eigen::MatrixXd y2 = y.cwiseProduct(y);

  const std::size_t chunks =
      std::min<std::size_t>(64, static_cast<std::size_t>(local.trials));
  std::vector<Eigen::MatrixXd> sum(chunks,
                                   Eigen::MatrixXd::Zero(k, d)),
      sumsq(chunks, Eigen::MatrixXd::Zero(k, d));

  run_trials_chunked(local.trials, local.threads,
                     [&](std::size_t c, std::size_t trial) {
    Rng noise = Rng::stream(local.seed, trial, kNoiseSubstream);
    run_checkpointed(kernel, local.dt, grid, noise, trial,
                     [&](std::size_t ci, double, const Eigen::VectorXd& p) {
                       for (std::size_t j = 0; j < d; ++j) {
                         const auto jj = static_cast<Eigen::Index>(j);
                         const double first = p.dot(y.col(jj));
                         const double val = p.dot(y2.col(jj)) - first * first;
                         sum[c](static_cast<Eigen::Index>(ci), jj) += val;
                         sumsq[c](static_cast<Eigen::Index>(ci), jj) += val * val;
                       }
                     });
  });

  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(k, d);
  Eigen::MatrixXd totalsq = Eigen::MatrixXd::Zero(k, d);
  for (std::size_t c = 0; c < chunks; ++c) {
    total += sum[c];
    totalsq += sumsq[c];
  }

  for (std::size_t j = 0; j < d; ++j) {
    const double y0 = std::max(
        0.0, directions[j].dot(q.dense() * cov0.dense() * q.dense() * directions[j]));
    for (std::size_t i = 0; i < k; ++i) {
      DecayCell cell;
      cell.direction = static_cast<int>(j);
      cell.t = grid[i];
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      cell.estimate = total(ii, jj) / local.trials;
      cell.std_err = sample_std_err(total(ii, jj), totalsq(ii, jj), local.trials);
      cell.bound = y0 > 0.0 ? 1.0 / (grid[i] + 1.0 / y0) : 0.0;
      cell.holds =
          cell.estimate <= cell.bound + 3.0 * cell.std_err + table.allowance;
      table.cells.push_back(cell);
    }
  }
  return table;
}

std::vector<TrajectoryPoint> mean_trajectory(const AtomicMeasure& mu0,
                                             const SymmetricMatrix& q,
                                             double t_end,
                                             const LocalizationConfig& cfg,
                                             int cadence) {
  LocalizationConfig local = cfg;
  local.driver = q;
  validate_config(local, mu0.dim());
  if (cadence < 1) throw std::invalid_argument("mean_trajectory: cadence >= 1");

  std::vector<double> grid{0.0};
  const double stride = local.dt * cadence;
  const auto full = static_cast<long>(std::floor(t_end / stride));
  for (long i = 1; i <= full; ++i) grid.push_back(static_cast<double>(i) * stride);
  if (grid.back() < t_end) grid.push_back(t_end);

  const TiltKernel kernel(mu0, q);
  const std::size_t k = grid.size();
  const std::size_t chunks =
      std::min<std::size_t>(64, static_cast<std::size_t>(local.trials));
  std::vector<Eigen::VectorXd> trace_sum(chunks, Eigen::VectorXd::Zero(k));
  std::vector<Eigen::VectorXd> trace_sumsq(chunks, Eigen::VectorXd::Zero(k));
  std::vector<Eigen::VectorXd> ent_sum(chunks, Eigen::VectorXd::Zero(k));

  run_trials_chunked(local.trials, local.threads,
                     [&](std::size_t c, std::size_t trial) {
    Rng noise = Rng::stream(local.seed, trial, kNoiseSubstream);
    run_checkpointed(kernel, local.dt, grid, noise, trial,
                     [&](std::size_t ci, double, const Eigen::VectorXd& p) {
                       const auto ii = static_cast<Eigen::Index>(ci);
                       const double tr = kernel.trace_qaq(p);
                       trace_sum[c](ii) += tr;
                       trace_sumsq[c](ii) += tr * tr;
                       ent_sum[c](ii) += kernel.entropy_of(p);
                     });
  });

  Eigen::VectorXd trace = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd tracesq = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd ent = Eigen::VectorXd::Zero(k);
  for (std::size_t c = 0; c < chunks; ++c) {
    trace += trace_sum[c];
    tracesq += trace_sumsq[c];
    ent += ent_sum[c];
  }

  std::vector<TrajectoryPoint> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out[i] = TrajectoryPoint{
        grid[i], trace(ii) / local.trials, ent(ii) / local.trials,
        sample_std_err(trace(ii), tracesq(ii), local.trials)};
  }
  return out;
}

}  // namespace localize
