#include "localize/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "localize/parallel.hpp"
#include "localize/spin_model.hpp"

namespace localize {

namespace {

double kahan_sum(const Eigen::VectorXd& v) {
  double sum = 0.0, carry = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double y = v(i) - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

void check_atoms_distinct(const Eigen::MatrixXd& atoms) {
  const Eigen::Index m = atoms.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto row_less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < atoms.cols(); ++j) {
      if (atoms(a, j) != atoms(b, j)) return atoms(a, j) < atoms(b, j);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), row_less);
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (atoms.row(order[i - 1]) == atoms.row(order[i])) {
      std::ostringstream msg;
      msg << "AtomicMeasure: atoms " << order[i - 1] << " and " << order[i]
          << " coincide";
      throw std::invalid_argument(msg.str());
    }
  }
}

}  // namespace

AtomicMeasure AtomicMeasure::create(Eigen::MatrixXd atoms,
                                    Eigen::VectorXd weights,
                                    Eigen::VectorXd base_weights) {
  if (atoms.rows() < 1 || atoms.cols() < 1) {
    throw std::invalid_argument("AtomicMeasure: need at least one atom in R^n, n >= 1");
  }
  if (!atoms.allFinite()) {
    throw std::invalid_argument("AtomicMeasure: non-finite atom coordinates");
  }
  if (weights.size() != atoms.rows() || base_weights.size() != atoms.rows()) {
    throw std::invalid_argument("AtomicMeasure: weight vectors must match atom count");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw std::invalid_argument("AtomicMeasure: weights must be finite and nonnegative");
  }
  if (!base_weights.allFinite() || (base_weights.array() <= 0.0).any()) {
    throw std::invalid_argument("AtomicMeasure: base weights must be strictly positive");
  }
  const double total = kahan_sum(weights);
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "AtomicMeasure: weights sum to " << total << ", expected 1";
    throw std::invalid_argument(msg.str());
  }
  check_atoms_distinct(atoms);
  return AtomicMeasure(std::move(atoms), std::move(weights),
                       std::move(base_weights));
}

AtomicMeasure AtomicMeasure::counting(Eigen::MatrixXd atoms,
                                      Eigen::VectorXd weights) {
  Eigen::VectorXd base = Eigen::VectorXd::Ones(atoms.rows());
  return create(std::move(atoms), std::move(weights), std::move(base));
}

AtomicMeasure AtomicMeasure::point_mass(const Eigen::VectorXd& x) {
  Eigen::MatrixXd atoms(1, x.size());
  atoms.row(0) = x;
  return counting(std::move(atoms), Eigen::VectorXd::Ones(1));
}

double entropy(const AtomicMeasure& mu) {
  const Eigen::VectorXd& p = mu.weights();
  const Eigen::VectorXd& nu = mu.base_weights();
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * (std::log(p(i)) - std::log(nu(i)));
  }
  return h;
}

Eigen::VectorXd mean(const AtomicMeasure& mu) {
  return mu.atoms().transpose() * mu.weights();
}

SymmetricMatrix covariance(const AtomicMeasure& mu) {
  const Eigen::Index n = mu.dim();
  const Eigen::VectorXd a = mean(mu);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double p = mu.weights()(i);
    if (p == 0.0) continue;
    d = mu.atoms().row(i).transpose() - a;
    c.selfadjointView<Eigen::Lower>().rankUpdate(d, p);
  }
  c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
  return SymmetricMatrix::from_dense(c, 1e-9);
}

MomentSummary moments(const AtomicMeasure& mu) {
  return MomentSummary{mean(mu), covariance(mu), entropy(mu)};
}

AtomicMeasure tilt(const AtomicMeasure& mu, const Eigen::VectorXd& w, double t,
                   const SymmetricMatrix& q) {
  if (w.size() != mu.dim() || q.dim() != mu.dim()) {
    throw std::invalid_argument("tilt: dimension mismatch");
  }
  if (!(t >= 0.0)) throw std::invalid_argument("tilt: time must be >= 0");
  if (!w.allFinite()) throw std::invalid_argument("tilt: non-finite tilt vector");
  if (t == 0.0 && w.isZero(0.0)) return mu;  // exact identity tilt

  const Eigen::Index m = mu.size();
  Eigen::VectorXd logits(m);
  const Eigen::MatrixXd& x = mu.atoms();
  const Eigen::VectorXd xw = x * w;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double p = mu.weights()(i);
    if (p == 0.0) {
      logits(i) = -std::numeric_limits<double>::infinity();
      continue;
    }
    const double qx2 = (q.dense() * x.row(i).transpose()).squaredNorm();
    logits(i) = std::log(p) + xw(i) - 0.5 * t * qx2;
  }
  const double mx = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - mx).exp();
  const double s = kahan_sum(p);
  // Max-subtraction guarantees at least one weight is exactly 1.
  if (!(s > 0.0)) throw std::logic_error("tilt: all weights underflowed");
  p /= s;
  return AtomicMeasure(mu.atoms(), std::move(p), mu.base_weights());
}

AtomicMeasure gibbs_measure(const SpinModel& model, std::size_t cap,
                            int threads) {
  const std::size_t count = state_count_checked(model, cap);
  const Eigen::Index n_flat = model.n * model.space.k();
  const HamiltonianTables tables(model);

  Eigen::MatrixXd atoms(static_cast<Eigen::Index>(count), n_flat);
  Eigen::VectorXd f(static_cast<Eigen::Index>(count));

  // Fixed chunking keeps every reduction independent of the thread count.
  const std::size_t chunks = std::min<std::size_t>(64, count);
  auto chunk_range = [&](std::size_t c) {
    const std::size_t lo = count * c / chunks;
    const std::size_t hi = count * (c + 1) / chunks;
    return std::pair<std::size_t, std::size_t>(lo, hi);
  };

  parallel_for(chunks, threads, [&](std::size_t c) {
    auto [lo, hi] = chunk_range(c);
    std::vector<int> digits;
    for (std::size_t idx = lo; idx < hi; ++idx) {
      config_digits(idx, model.n, model.space.alphabet_size(), digits);
      f(static_cast<Eigen::Index>(idx)) = tables.energy(model, digits);
      atoms.row(static_cast<Eigen::Index>(idx)) =
          flatten_config(model, digits);
    }
  });

  // Streaming log-sum-exp per chunk, then a fixed-order combine.
  std::vector<double> chunk_max(chunks), chunk_sum(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    auto [lo, hi] = chunk_range(c);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t idx = lo; idx < hi; ++idx) {
      mx = std::max(mx, f(static_cast<Eigen::Index>(idx)));
    }
    double s = 0.0;
    for (std::size_t idx = lo; idx < hi; ++idx) {
      s += std::exp(f(static_cast<Eigen::Index>(idx)) - mx);
    }
    chunk_max[c] = mx;
    chunk_sum[c] = s;
  });
  const double global_max =
      *std::max_element(chunk_max.begin(), chunk_max.end());
  double z = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    z += chunk_sum[c] * std::exp(chunk_max[c] - global_max);
  }
  const double log_z = global_max + std::log(z);

  Eigen::VectorXd weights = (f.array() - log_z).exp();
  weights /= kahan_sum(weights);
  return AtomicMeasure(std::move(atoms), std::move(weights),
                       Eigen::VectorXd::Ones(static_cast<Eigen::Index>(count)));
}

}  // namespace localize
