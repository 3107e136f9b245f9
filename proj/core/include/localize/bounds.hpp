#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "localize/spectral.hpp"

namespace localize {

// Water-filling value  max { sum_i log(beta_i alpha_i + 1) : beta >= 0,
// sum beta <= S }  with the maximizing budget vector. Solved by bisection
// on the KKT multiplier; the budget residual ends far below 1e-12 relative.
struct Waterfill {
  double value = 0.0;
  Eigen::VectorXd beta;
  double level = 0.0;  // KKT multiplier nu (0 when no budget is assigned)
};

Waterfill waterfill_s(const Eigen::VectorXd& alphas, double s);

// Closed-form majorant of the water-filling value:
//   (3 (p+1) / p) * (S ||alpha||_p)^{p/(p+1)}.
double lemma41_bound(const Eigen::VectorXd& alphas, double s, double p);

// Mean-field deficit bound 3 log det(Cov J~ + Id), J~ = (J^2)^{1/2}.
double logdet_mf_bound(const SymmetricMatrix& cov, const SymmetricMatrix& j);

// 10 ((p+1)/p) (S ||J||_{S_p})^{p/(p+1)}.
double schatten_mf_bound(const SymmetricMatrix& j, double s, double p);

// 3 Rank(J) log(S ||J||_{S_inf} + 1), rank with relative cutoff.
double rank_mf_bound(const SymmetricMatrix& j, double s);

struct BoundReport {
  double budget_s = 0.0;
  Eigen::VectorXd eigenvalues;               // of J, descending
  double s_js_bound = 0.0;                   // 3 * waterfill value
  Eigen::VectorXd beta;                      // the water-filling budgets
  std::vector<std::pair<double, double>> schatten_bounds;  // (p, value)
  int rank = 0;
  double rank_bound = 0.0;
  std::optional<double> logdet_bound;        // needs the exact covariance
  std::string best_name;
  double best_value = 0.0;
};

// The default p grid used by best_bound when none is supplied.
const std::vector<double>& default_p_grid();

// Evaluates every bound (the log-det one only when cov_exact is present)
// and reports the minimum.
BoundReport best_bound(const SymmetricMatrix& j, double s,
                       const std::optional<SymmetricMatrix>& cov_exact = {},
                       const std::vector<double>& p_grid = default_p_grid());

// log det(AB + Id) <= waterfill(spec(A), Tr(B)) for positive-definite A, B.
struct Lemma42Result {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

Lemma42Result lemma42_check(const SymmetricMatrix& a, const SymmetricMatrix& b);

}  // namespace localize
