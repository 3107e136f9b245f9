#include "localize/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "localize/rng.hpp"
#include "localize/spectral.hpp"

namespace localize {

GeneratedModel gen_curie_weiss(int n, double beta) {
  if (n < 1) throw std::invalid_argument("gen_curie_weiss: n >= 1");
  Eigen::MatrixXd j = Eigen::MatrixXd::Constant(n, n, beta / n);
  GeneratedModel out{
      make_spin_model(SpinSpace::ising(), SymmetricMatrix::from_dense(j),
                      Eigen::MatrixXd::Zero(n, 1)),
      {"curie-weiss", {{"n", static_cast<double>(n)}, {"beta", beta}}}};
  return out;
}

namespace {

Eigen::MatrixXd matrix_power(Eigen::MatrixXd base, long exponent) {
  Eigen::MatrixXd result =
      Eigen::MatrixXd::Identity(base.rows(), base.cols());
  while (exponent > 0) {
    if (exponent & 1) result = (result * base).eval();
    base = (base * base).eval();
    exponent >>= 1;
  }
  return result;
}

}  // namespace

GeneratedModel gen_torus_heat_kernel(int k, int d, double alpha, double beta,
                                     Eigen::Index size_cap) {
  if (k < 3) throw std::invalid_argument("gen_torus_heat_kernel: k >= 3");
  if (d < 1) throw std::invalid_argument("gen_torus_heat_kernel: d >= 1");
  const double steps_real = alpha * k;
  const long steps = std::lround(steps_real);
  if (steps < 1 || std::abs(steps_real - static_cast<double>(steps)) > 1e-9) {
    std::ostringstream msg;
    msg << "gen_torus_heat_kernel: alpha*k = " << steps_real
        << " must be a positive integer";
    throw std::invalid_argument(msg.str());
  }
  double size_real = 1.0;
  for (int i = 0; i < d; ++i) size_real *= k;
  if (size_real > static_cast<double>(size_cap)) {
    std::ostringstream msg;
    msg << "gen_torus_heat_kernel: k^d = " << size_real << " exceeds cap "
        << size_cap;
    throw std::invalid_argument(msg.str());
  }
  const auto n = static_cast<Eigen::Index>(size_real);

  // Coordinates of site index x in base k.
  auto digit = [&](Eigen::Index x, int coord) {
    for (int c = 0; c < coord; ++c) x /= k;
    return static_cast<int>(x % k);
  };
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  const double weight = std::pow(0.5, d);
  for (Eigen::Index x = 0; x < n; ++x) {
    for (Eigen::Index y = 0; y < n; ++y) {
      bool neighbor = true;
      for (int c = 0; c < d && neighbor; ++c) {
        const int diff = std::abs(digit(x, c) - digit(y, c));
        neighbor = (diff == 1 || diff == k - 1);
      }
      if (neighbor) l(x, y) = weight;
    }
  }

  Eigen::MatrixXd j = beta * matrix_power(l, steps);
  GeneratedModel out{
      make_spin_model(SpinSpace::ising(), SymmetricMatrix::from_dense(j, 1e-9),
                      Eigen::MatrixXd::Zero(n, 1)),
      {"torus-heat-kernel",
       {{"k", static_cast<double>(k)},
        {"d", static_cast<double>(d)},
        {"alpha", alpha},
        {"beta", beta}}}};
  return out;
}

namespace {

using Edge = std::pair<int, int>;

Edge normalized(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

bool pairing_valid(const std::vector<int>& stubs) {
  std::set<Edge> seen;
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    const int a = stubs[i], b = stubs[i + 1];
    if (a == b) return false;
    if (!seen.insert(normalized(a, b)).second) return false;
  }
  return true;
}

// Switch-based repair: swap partners between a bad edge and a random edge
// until the pairing is simple.
void repair_pairing(std::vector<int>& stubs, Rng& rng) {
  const std::size_t edges = stubs.size() / 2;
  for (long attempt = 0; attempt < 2'000'000; ++attempt) {
    std::set<Edge> seen;
    std::size_t bad = edges;
    for (std::size_t e = 0; e < edges; ++e) {
      const int a = stubs[2 * e], b = stubs[2 * e + 1];
      if (a == b || !seen.insert(normalized(a, b)).second) {
        bad = e;
        break;
      }
    }
    if (bad == edges) return;  // simple
    const std::size_t other = rng.uniform_below(edges);
    if (other == bad) continue;
    std::swap(stubs[2 * bad + 1], stubs[2 * other + 1]);
  }
  throw std::runtime_error("gen_expander: pairing repair did not converge");
}

}  // namespace

GeneratedModel gen_expander(int n, int d, double beta, std::uint64_t seed) {
  if (n < 2 || d < 1 || d >= n) {
    throw std::invalid_argument("gen_expander: need 1 <= d < n");
  }
  if ((static_cast<long>(n) * d) % 2 != 0) {
    throw std::invalid_argument("gen_expander: n*d must be even");
  }

  Rng rng = Rng::stream(seed, 0, /*substream=*/20);
  std::vector<int> stubs;
  stubs.reserve(static_cast<std::size_t>(n) * d);
  for (int v = 0; v < n; ++v) {
    for (int c = 0; c < d; ++c) stubs.push_back(v);
  }

  auto shuffle = [&]() {
    for (std::size_t i = stubs.size() - 1; i > 0; --i) {
      std::swap(stubs[i], stubs[rng.uniform_below(i + 1)]);
    }
  };

  bool simple = false;
  for (int attempt = 0; attempt < 200 && !simple; ++attempt) {
    shuffle();
    simple = pairing_valid(stubs);
  }
  if (!simple) repair_pairing(stubs, rng);

  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    adj(stubs[i], stubs[i + 1]) = 1.0;
    adj(stubs[i + 1], stubs[i]) = 1.0;
  }

  SymmetricMatrix a = SymmetricMatrix::from_dense(adj);
  Eigen::VectorXd lam = sym_eig(a).eigenvalues;
  std::vector<double> abs_lam(lam.data(), lam.data() + lam.size());
  std::sort(abs_lam.begin(), abs_lam.end(),
            [](double x, double y) { return std::abs(x) > std::abs(y); });
  const double lambda2 = abs_lam.size() > 1 ? std::abs(abs_lam[1]) : 0.0;

  Eigen::MatrixXd j = (beta / d) * adj;
  GeneratedModel out{
      make_spin_model(SpinSpace::ising(), SymmetricMatrix::from_dense(j),
                      Eigen::MatrixXd::Zero(n, 1)),
      {"expander",
       {{"n", static_cast<double>(n)},
        {"d", static_cast<double>(d)},
        {"beta", beta},
        {"seed", static_cast<double>(seed)},
        {"lambda2_abs", lambda2}}}};
  return out;
}

}  // namespace localize
