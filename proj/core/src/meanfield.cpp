#include "localize/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "localize/parallel.hpp"
#include "localize/rng.hpp"

namespace localize {

namespace {

constexpr double kTanhClamp = 36.0;

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// Binary entropy of a +/-1 spin with mean m, counting base.
double binary_entropy(double m) {
  return -xlogx(0.5 * (1.0 + m)) - xlogx(0.5 * (1.0 - m));
}

double prob_entropy(const Eigen::RowVectorXd& q) {
  double h = 0.0;
  for (Eigen::Index a = 0; a < q.size(); ++a) h -= xlogx(q(a));
  return h;
}

void check_marginals(const SpinModel& model, const Eigen::MatrixXd& marg) {
  if (model.space.kind() == SpinSpace::Kind::ising) {
    if (marg.rows() != model.n || marg.cols() != 1) {
      throw std::invalid_argument("marginals: expected an n x 1 mean vector");
    }
    if (!marg.allFinite() || (marg.array().abs() > 1.0 + 1e-12).any()) {
      throw std::invalid_argument("marginals: means must lie in [-1, 1]");
    }
    return;
  }
  const Eigen::Index a = model.space.alphabet_size();
  if (marg.rows() != model.n || marg.cols() != a) {
    throw std::invalid_argument("marginals: expected an n x |alphabet| matrix");
  }
  if (!marg.allFinite() || (marg.array() < -1e-15).any()) {
    throw std::invalid_argument("marginals: probabilities must be nonnegative");
  }
  for (Eigen::Index i = 0; i < marg.rows(); ++i) {
    if (std::abs(marg.row(i).sum() - 1.0) > 1e-10) {
      std::ostringstream msg;
      msg << "marginals: row " << i << " sums to " << marg.row(i).sum();
      throw std::invalid_argument(msg.str());
    }
  }
}

}  // namespace

double mf_objective(const SpinModel& model, const Eigen::MatrixXd& marginals) {
  check_marginals(model, marginals);
  const Eigen::MatrixXd& j = model.coupling.dense();
  const Eigen::Index n = model.n;

  if (model.space.kind() == SpinSpace::Kind::ising) {
    const Eigen::VectorXd m = marginals.col(0);
    double energy = m.dot(j * m);
    for (Eigen::Index i = 0; i < n; ++i) {
      energy += j(i, i) * (1.0 - m(i) * m(i));  // E[sigma_i^2] = 1
    }
    energy += model.field.col(0).dot(m);
    double ent = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ent += binary_entropy(m(i));
    return energy + ent;
  }

  const Eigen::MatrixXd& pts = model.space.points();
  const Eigen::MatrixXd means = marginals * pts;           // n x k
  const Eigen::VectorXd diag_dot = (pts.array() * pts.array()).rowwise().sum();
  const Eigen::MatrixXd gram = means * means.transpose();  // mu_i . mu_j
  double energy = (j.array() * gram.array()).sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double second_moment = marginals.row(i).dot(diag_dot);
    energy += j(i, i) * (second_moment - gram(i, i));
  }
  energy += (model.field.array() * means.array()).sum();
  double ent = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) ent += prob_entropy(marginals.row(i));
  return energy + ent;
}

AscentResult coordinate_ascent(const SpinModel& model, Eigen::MatrixXd init,
                               double tol, int max_iters) {
  check_marginals(model, init);
  const Eigen::MatrixXd& j = model.coupling.dense();
  const Eigen::Index n = model.n;

  AscentResult res;
  res.max_update_decrease = 0.0;

  if (model.space.kind() == SpinSpace::Kind::ising) {
    Eigen::VectorXd m = init.col(0);
    Eigen::VectorXd s = j * m;  // s_i = sum_j J_ij m_j, kept incremental
    const Eigen::VectorXd h = model.field.col(0);
    int sweep = 0;
    for (; sweep < max_iters; ++sweep) {
      double max_change = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double c = 2.0 * (s(i) - j(i, i) * m(i)) + h(i);
        const double next = std::tanh(std::clamp(c, -kTanhClamp, kTanhClamp));
        const double delta = c * (next - m(i)) + binary_entropy(next) -
                             binary_entropy(m(i));
        if (delta < -res.max_update_decrease) res.max_update_decrease = -delta;
        max_change = std::max(max_change, std::abs(next - m(i)));
        s += j.col(i) * (next - m(i));
        m(i) = next;
      }
      if (max_change < tol) {
        res.converged = true;
        ++sweep;
        break;
      }
    }
    res.iterations = sweep;
    res.marginals = m;
    res.value = mf_objective(model, res.marginals);
    return res;
  }

  const Eigen::MatrixXd& pts = model.space.points();
  const Eigen::Index a = model.space.alphabet_size();
  const Eigen::VectorXd diag_dot = (pts.array() * pts.array()).rowwise().sum();
  Eigen::MatrixXd q = init;
  Eigen::MatrixXd means = q * pts;        // n x k
  Eigen::MatrixXd s = j * means;          // n x k, kept incremental
  int sweep = 0;
  Eigen::VectorXd coeff(a), next(a);
  for (; sweep < max_iters; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::RowVectorXd v =
          2.0 * (s.row(i) - j(i, i) * means.row(i));
      coeff = pts * v.transpose() + pts * model.field.row(i).transpose() +
              j(i, i) * diag_dot;
      const double mx = coeff.maxCoeff();
      next = (coeff.array() - mx).exp();
      next /= next.sum();
      const double delta = coeff.dot(next - q.row(i).transpose()) +
                           prob_entropy(next.transpose()) -
                           prob_entropy(q.row(i));
      if (delta < -res.max_update_decrease) res.max_update_decrease = -delta;
      max_change =
          std::max(max_change, (next.transpose() - q.row(i)).cwiseAbs().maxCoeff());
      const Eigen::RowVectorXd new_mean = next.transpose() * pts;
      s += j.col(i) * (new_mean - means.row(i));
      means.row(i) = new_mean;
      q.row(i) = next;
    }
    if (max_change < tol) {
      res.converged = true;
      ++sweep;
      break;
    }
  }
  res.iterations = sweep;
  res.marginals = q;
  res.value = mf_objective(model, res.marginals);
  return res;
}

Eigen::MatrixXd uniform_marginals(const SpinModel& model) {
  if (model.space.kind() == SpinSpace::Kind::ising) {
    return Eigen::MatrixXd::Zero(model.n, 1);
  }
  const Eigen::Index a = model.space.alphabet_size();
  return Eigen::MatrixXd::Constant(model.n, a, 1.0 / static_cast<double>(a));
}

Eigen::MatrixXd random_marginals(const SpinModel& model, std::uint64_t seed,
                                 std::uint64_t index) {
  Rng rng = Rng::stream(seed, index, /*substream=*/10);
  if (model.space.kind() == SpinSpace::Kind::ising) {
    Eigen::MatrixXd m(model.n, 1);
    for (Eigen::Index i = 0; i < model.n; ++i) {
      m(i, 0) = 2.0 * rng.uniform01() - 1.0;
    }
    return m;
  }
  const Eigen::Index a = model.space.alphabet_size();
  Eigen::MatrixXd q(model.n, a);
  for (Eigen::Index i = 0; i < model.n; ++i) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < a; ++c) {
      q(i, c) = -std::log(rng.uniform_open01());  // Dirichlet(1,...,1)
      sum += q(i, c);
    }
    q.row(i) /= sum;
  }
  return q;
}

namespace {

bool lex_less(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) != b(i, j)) return a(i, j) < b(i, j);
    }
  }
  return false;
}

}  // namespace

MeanFieldSolution mf_optimize(const SpinModel& model, int restarts, double tol,
                              int max_iters, std::uint64_t seed, int threads) {
  if (restarts < 1) throw std::invalid_argument("mf_optimize: restarts >= 1");
  const int runs = restarts + 1;  // index 0 is the uniform start
  std::vector<AscentResult> results(static_cast<std::size_t>(runs));
  parallel_for(static_cast<std::size_t>(runs), threads, [&](std::size_t r) {
    Eigen::MatrixXd init = r == 0 ? uniform_marginals(model)
                                  : random_marginals(model, seed, r);
    results[r] = coordinate_ascent(model, std::move(init), tol, max_iters);
  });

  int best = 0;
  for (int r = 1; r < runs; ++r) {
    if (results[static_cast<std::size_t>(r)].value >
        results[static_cast<std::size_t>(best)].value) {
      best = r;
    }
  }
  // Among near-ties, prefer the lexicographically smallest marginals.
  const double best_value = results[static_cast<std::size_t>(best)].value;
  for (int r = 0; r < runs; ++r) {
    const auto& cand = results[static_cast<std::size_t>(r)];
    if (cand.value >= best_value - 1e-9 &&
        lex_less(cand.marginals,
                 results[static_cast<std::size_t>(best)].marginals)) {
      best = r;
    }
  }

  const auto& win = results[static_cast<std::size_t>(best)];
  MeanFieldSolution sol;
  sol.marginals = win.marginals;
  sol.value = win.value;
  sol.iterations = win.iterations;
  sol.converged = win.converged;
  sol.restart_index = best;
  sol.max_update_decrease = win.max_update_decrease;
  return sol;
}

double exact_log_z(const SpinModel& model, std::size_t cap, int threads) {
  const std::size_t count = state_count_checked(model, cap);
  const HamiltonianTables tables(model);

  const std::size_t chunks = std::min<std::size_t>(64, count);
  auto chunk_range = [&](std::size_t c) {
    return std::pair<std::size_t, std::size_t>(count * c / chunks,
                                               count * (c + 1) / chunks);
  };
  std::vector<double> chunk_max(chunks), chunk_sum(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    auto [lo, hi] = chunk_range(c);
    std::vector<int> digits;
    // Streaming log-sum-exp: running max with rescaled partial sum.
    double mx = -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (std::size_t idx = lo; idx < hi; ++idx) {
      config_digits(idx, model.n, model.space.alphabet_size(), digits);
      const double f = tables.energy(model, digits);
      if (f <= mx) {
        s += std::exp(f - mx);
      } else {
        s = s * std::exp(mx - f) + 1.0;
        mx = f;
      }
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
  return global_max + std::log(z);
}

DeficitReport deficit(const SpinModel& model, const MeanFieldSolution& mf,
                      std::size_t cap, int threads) {
  DeficitReport rep;
  rep.log_z = exact_log_z(model, cap, threads);
  rep.mf_value = mf.value;
  rep.value = rep.log_z - rep.mf_value;
  return rep;
}

}  // namespace localize
