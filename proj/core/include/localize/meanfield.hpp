#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "localize/measure.hpp"
#include "localize/spin_model.hpp"

namespace localize {

// Marginals of a product measure, one row per site.
//   ising:        an n x 1 matrix of means m_i in [-1, 1];
//   potts/atoms:  an n x A matrix of probability vectors over the alphabet.

// Variational objective  int f dxi + H(xi)  of the product measure with the
// given marginals, entropy taken against the counting base per site.
double mf_objective(const SpinModel& model, const Eigen::MatrixXd& marginals);

struct AscentResult {
  Eigen::MatrixXd marginals;
  double value = 0.0;
  int iterations = 0;           // full sweeps executed
  bool converged = false;
  double max_update_decrease = 0.0;  // largest single-update objective drop
};

// Coordinate ascent from the given feasible start. Each single-site update
// exactly maximizes the site's subproblem (tanh / softmax update), sweeping
// sites in index order until the largest marginal change drops below tol.
AscentResult coordinate_ascent(const SpinModel& model, Eigen::MatrixXd init,
                               double tol = 1e-10, int max_iters = 10000);

struct MeanFieldSolution {
  Eigen::MatrixXd marginals;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  int restart_index = 0;  // 0 = deterministic uniform start, 1.. = random
  double max_update_decrease = 0.0;
};

// Runs `restarts` random starts plus one deterministic uniform start and
// returns the best. Ties within 1e-9 break to the lexicographically
// smallest marginal matrix, so results are reproducible for a given seed.
MeanFieldSolution mf_optimize(const SpinModel& model, int restarts = 8,
                              double tol = 1e-10, int max_iters = 10000,
                              std::uint64_t seed = 0, int threads = 1);

// Uniform marginals for the model's spin space (the deterministic start).
Eigen::MatrixXd uniform_marginals(const SpinModel& model);

// Random feasible marginals (used for restarts and property tests).
Eigen::MatrixXd random_marginals(const SpinModel& model, std::uint64_t seed,
                                 std::uint64_t index);

// log Z by full enumeration with streaming log-sum-exp (counting base).
double exact_log_z(const SpinModel& model, std::size_t cap = kDefaultStateCap,
                   int threads = 1);

struct DeficitReport {
  double log_z = 0.0;
  double mf_value = 0.0;
  double value = 0.0;  // log_z - mf_value
};

DeficitReport deficit(const SpinModel& model, const MeanFieldSolution& mf,
                      std::size_t cap = kDefaultStateCap, int threads = 1);

}  // namespace localize
