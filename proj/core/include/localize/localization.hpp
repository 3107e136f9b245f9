#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "localize/measure.hpp"
#include "localize/spectral.hpp"

namespace localize {

// When the process stops: a uniform draw from [1, 2] (independent of the
// driving noise) or a fixed time.
struct StoppingSpec {
  enum class Kind { uniform_1_2, fixed };
  Kind kind = Kind::uniform_1_2;
  double t_fixed = 0.0;

  static StoppingSpec uniform() { return {Kind::uniform_1_2, 0.0}; }
  static StoppingSpec fixed(double t) { return {Kind::fixed, t}; }
};

struct LocalizationConfig {
  SymmetricMatrix driver;  // Q, PSD (Q = 0 is allowed for frozen-process tests)
  double dt = 1e-3;
  StoppingSpec stopping = StoppingSpec::uniform();
  int trials = 1;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Throws std::invalid_argument on bad dt/trials or a non-PSD driver.
void validate_config(const LocalizationConfig& cfg, Eigen::Index dim);

struct LocalizationState {
  double t = 0.0;
  Eigen::VectorXd w;
};

// One Euler-Maruyama step of the tilt process
//   w' = w + Q^2 a_t dt + sqrt(dt) Q xi,   a_t = mean(tilt(mu0, w, t, Q)),
// which drives the measure-valued process mu_t = tilt(mu0, w_t, t, Q).
// `noise` must be a standard-normal vector of dimension n.
LocalizationState step(const LocalizationState& state, const AtomicMeasure& mu0,
                       const LocalizationConfig& cfg,
                       const Eigen::VectorXd& noise);

struct DecompositionSample {
  double tau = 0.0;
  Eigen::VectorXd final_w;
  AtomicMeasure measure;
  MomentSummary moments;
};

// Runs one trial: draws tau from the stopping spec on the trial's own RNG
// stream, advances the tilt process with fresh Gaussian noise (final step
// truncated to land exactly on tau), and returns the stopped sample. The
// returned measure is tilt(mu0, w_tau, tau, Q) by construction.
DecompositionSample run_trial(const AtomicMeasure& mu0,
                              const LocalizationConfig& cfg,
                              std::uint64_t trial_index);

// Decomposition sampler with the driver set to L^{1/2}; L must be
// positive-definite. Deterministic given cfg.seed, independently of
// cfg.threads.
std::vector<DecompositionSample> sample_decomposition(
    const AtomicMeasure& mu0, const SymmetricMatrix& l,
    LocalizationConfig cfg);

struct ScalarStat {
  double mean = 0.0;
  double std_err = 0.0;
};

struct MatrixStat {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std_err;  // entrywise
  double max_std_err = 0.0;
};

struct InequalityVerdict {
  bool holds = false;
  double lhs = 0.0;   // estimate
  double rhs = 0.0;   // bound
  double tol = 0.0;   // 3 SE + discretization allowance
};

struct PsdStatVerdict {
  bool holds = false;
  double lambda_min = 0.0;  // of (bound - estimate + tol * Id), before tol
  double tol = 0.0;
};

// Monte Carlo aggregates and the three decomposition estimates:
//   (1) H(mu) - E H(mu_tau) <= log det(Cov(mu) L + Id),
//   (2) E Cov(mu_tau) <= L^{-1}  (Loewner),
//   (3) E[Cov(mu_tau) L Cov(mu_tau)] <= Cov(mu)  (Loewner).
// Every verdict uses tol = 3 * (aggregate standard error) + c * dt with
// c = 10 * Tr(Q Cov(mu) Q) recorded in the report.
struct DecompositionReport {
  int trials = 0;
  double dt = 0.0;
  double entropy_mu = 0.0;
  double deficit_bound = 0.0;  // log det(Cov(mu) L + Id)
  double allowance_c = 0.0;    // c in the c * dt allowance
  ScalarStat mean_entropy;
  MatrixStat mean_cov;
  MatrixStat mean_cov_l_cov;
  InequalityVerdict est_entropy;
  PsdStatVerdict est_cov_bound;      // (2)
  PsdStatVerdict est_cov_l_cov;      // (3)

  bool all_hold() const {
    return est_entropy.holds && est_cov_bound.holds && est_cov_l_cov.holds;
  }
};

DecompositionReport verify_theorem(const AtomicMeasure& mu0,
                                   const SymmetricMatrix& l,
                                   const std::vector<DecompositionSample>& samples,
                                   const LocalizationConfig& cfg);

// Martingale checks on a sample set: E a_tau = a_0 componentwise, per-atom
// E mu_tau({x}) = mu({x}), and the law-of-total-variance domination
// E Cov(mu_tau) <= Cov(mu). Tolerances are 3 SE + c * dt as above.
struct MartingaleReport {
  Eigen::VectorXd a0;
  Eigen::VectorXd mean_a;
  Eigen::VectorXd se_a;
  bool mean_holds = false;
  double worst_mean_excess = 0.0;  // max_i (|diff_i| - tol_i), <= 0 when holding
  Eigen::VectorXd mean_weights;
  Eigen::VectorXd se_weights;
  bool weights_hold = false;
  double worst_weight_excess = 0.0;
  PsdStatVerdict total_variance;
  double allowance = 0.0;  // c * dt

  bool all_hold() const {
    return mean_holds && weights_hold && total_variance.holds;
  }
};

MartingaleReport martingale_check(const AtomicMeasure& mu0,
                                  const std::vector<DecompositionSample>& samples,
                                  const SymmetricMatrix& q, double dt);

// Lemma-style entropy identity at a fixed horizon:
//   H(mu) - E H(mu_t) = 1/2 int_0^t E Tr(Q A_s Q) ds.
// lhs is estimated from the stopped entropies, rhs by trapezoidal
// integration of the Monte Carlo trace trajectory on the step grid.
struct EntropyIdentityResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_err = 0.0;
  ScalarStat end_entropy;
};

EntropyIdentityResult entropy_identity_check(const AtomicMeasure& mu0,
                                             const SymmetricMatrix& q,
                                             double t_end,
                                             const LocalizationConfig& cfg);

// Covariance decay along fixed directions: checks
//   E <theta, Q A_t Q theta> <= 1 / (t + 1 / <theta, Q A_0 Q theta>)
// at each grid time, at 3 SE + c * dt.
struct DecayCell {
  int direction = 0;
  double t = 0.0;
  double estimate = 0.0;
  double std_err = 0.0;
  double bound = 0.0;
  bool holds = false;
};

struct DecayTable {
  std::vector<DecayCell> cells;
  double allowance = 0.0;

  bool all_hold() const {
    for (const auto& c : cells) {
      if (!c.holds) return false;
    }
    return true;
  }
};

DecayTable covariance_decay_check(const AtomicMeasure& mu0,
                                  const SymmetricMatrix& q,
                                  const std::vector<Eigen::VectorXd>& directions,
                                  const std::vector<double>& t_grid,
                                  const LocalizationConfig& cfg);

// Monte Carlo mean of Tr(Q A_t Q) and H(mu_t) on the fixed step grid up to
// t_end; row format suits the trajectory CSV dump.
struct TrajectoryPoint {
  double t = 0.0;
  double trace_qaq = 0.0;
  double entropy = 0.0;
  double trace_std_err = 0.0;
};

std::vector<TrajectoryPoint> mean_trajectory(const AtomicMeasure& mu0,
                                             const SymmetricMatrix& q,
                                             double t_end,
                                             const LocalizationConfig& cfg,
                                             int cadence = 1);

}  // namespace localize
