#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "localize/spectral.hpp"

namespace localize {

// Single-site state space. Every spin is a point in R^k drawn from a finite
// alphabet: {+1, -1} for Ising (k = 1), the standard basis vectors of R^k
// for Potts, or an arbitrary user-supplied point set.
class SpinSpace {
 public:
  enum class Kind { ising, potts, atoms };

  static SpinSpace ising();
  static SpinSpace potts(int k);
  static SpinSpace atoms(Eigen::MatrixXd points);  // rows = alphabet points

  Kind kind() const { return kind_; }
  Eigen::Index k() const { return points_.cols(); }
  Eigen::Index alphabet_size() const { return points_.rows(); }
  const Eigen::MatrixXd& points() const { return points_; }

  // Max pairwise distance between alphabet points (the diameter D).
  double diameter() const;

 private:
  SpinSpace(Kind kind, Eigen::MatrixXd points)
      : kind_(kind), points_(std::move(points)) {}
  Kind kind_;
  Eigen::MatrixXd points_;
};

// n sites, symmetric site-coupling matrix J (n x n), external field h
// (n x k). The Hamiltonian is the full double sum
//   f(sigma) = sum_{i,j} J_ij sigma_i . sigma_j + sum_i h_i . sigma_i,
// diagonal terms included.
struct SpinModel {
  Eigen::Index n = 0;
  SpinSpace space = SpinSpace::ising();
  SymmetricMatrix coupling;
  Eigen::MatrixXd field;
};

// Validates dimensions (J is n x n, h is n x k) and returns the model.
SpinModel make_spin_model(SpinSpace space, SymmetricMatrix coupling,
                          Eigen::MatrixXd field);

// f(sigma) for sigma given as an n x k matrix of spin rows. Every row must
// be exactly one of the alphabet points.
double hamiltonian(const SpinModel& model, const Eigen::MatrixXd& sigma);

// Site coupling lifted to the flattened R^{n k} coordinates (J replaced by
// the Kronecker product J x Id_k). Identity for k = 1.
SymmetricMatrix flat_coupling(const SpinModel& model);

// |alphabet|^n, throwing (and naming the required count) if it exceeds cap.
std::size_t state_count_checked(const SpinModel& model, std::size_t cap);

// Little-endian alphabet digits of the configuration index.
void config_digits(std::size_t index, Eigen::Index n, Eigen::Index alphabet,
                   std::vector<int>& out);

// Configuration flattened to R^{n k}.
Eigen::VectorXd flatten_config(const SpinModel& model,
                               const std::vector<int>& digits);

// Precomputed dot-product tables for fast enumeration of f over all
// configurations.
struct HamiltonianTables {
  Eigen::MatrixXd dot;        // alphabet x alphabet: x_a . x_b
  Eigen::MatrixXd field_dot;  // n x alphabet: h_i . x_a

  explicit HamiltonianTables(const SpinModel& model);

  double energy(const SpinModel& model, const std::vector<int>& digits) const {
    const Eigen::Index n = model.n;
    const Eigen::MatrixXd& j = model.coupling.dense();
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int ci = digits[static_cast<std::size_t>(i)];
      f += j(i, i) * dot(ci, ci) + field_dot(i, ci);
      for (Eigen::Index jj = i + 1; jj < n; ++jj) {
        f += 2.0 * j(i, jj) * dot(ci, digits[static_cast<std::size_t>(jj)]);
      }
    }
    return f;
  }
};

}  // namespace localize
