#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "localize/spectral.hpp"

namespace localize {

struct SpinModel;

inline constexpr std::size_t kDefaultStateCap = std::size_t{1} << 20;

// Finite-support probability measure on R^n with a strictly positive
// background (base) measure on the same atoms. Atoms are rows of an m x n
// matrix, pairwise distinct; weights are nonnegative and sum to 1 within
// 1e-12.
class AtomicMeasure {
 public:
  // Validating constructor for externally supplied data.
  static AtomicMeasure create(Eigen::MatrixXd atoms, Eigen::VectorXd weights,
                              Eigen::VectorXd base_weights);

  // Counting base measure (all base weights 1).
  static AtomicMeasure counting(Eigen::MatrixXd atoms, Eigen::VectorXd weights);

  // Single atom at x.
  static AtomicMeasure point_mass(const Eigen::VectorXd& x);

  Eigen::Index size() const { return atoms_.rows(); }
  Eigen::Index dim() const { return atoms_.cols(); }
  const Eigen::MatrixXd& atoms() const { return atoms_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::VectorXd& base_weights() const { return base_weights_; }

 private:
  friend AtomicMeasure tilt(const AtomicMeasure&, const Eigen::VectorXd&,
                            double, const SymmetricMatrix&);
  friend AtomicMeasure gibbs_measure(const SpinModel&, std::size_t, int);
  AtomicMeasure(Eigen::MatrixXd atoms, Eigen::VectorXd weights,
                Eigen::VectorXd base_weights)
      : atoms_(std::move(atoms)),
        weights_(std::move(weights)),
        base_weights_(std::move(base_weights)) {}

  Eigen::MatrixXd atoms_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd base_weights_;
};

struct MomentSummary {
  Eigen::VectorXd mean;
  SymmetricMatrix covariance;
  double entropy = 0.0;
};

// -sum_i p_i log(p_i / nu_i) with the 0 log 0 = 0 convention.
double entropy(const AtomicMeasure& mu);

Eigen::VectorXd mean(const AtomicMeasure& mu);

// Weighted second moment about the mean; PSD up to roundoff by construction.
SymmetricMatrix covariance(const AtomicMeasure& mu);

MomentSummary moments(const AtomicMeasure& mu);

// Reweights by exp(<w, x> - (t/2) |Q x|^2) and renormalizes. Atoms and base
// weights are unchanged. Stabilized by max-subtraction, so arbitrarily large
// exponents are fine. (w = 0, t = 0) returns the measure unchanged.
AtomicMeasure tilt(const AtomicMeasure& mu, const Eigen::VectorXd& w, double t,
                   const SymmetricMatrix& q);

// Gibbs measure of a spin model: one atom per configuration (flattened to
// R^{n*k}), weights proportional to exp(f(sigma)), counting base measure.
// Throws if the state space exceeds `cap`, naming the required count.
AtomicMeasure gibbs_measure(const SpinModel& model,
                            std::size_t cap = kDefaultStateCap,
                            int threads = 1);

}  // namespace localize
