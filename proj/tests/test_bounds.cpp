#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "localize/bounds.hpp"
#include "localize/meanfield.hpp"
#include "localize/models.hpp"
#include "localize/rng.hpp"

using namespace localize;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Eigen::MatrixXd random_pd(Rng& rng, int n, double ridge) {
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  }
  return g * g.transpose() / n + ridge * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("waterfill: single level, symmetric split, hand KKT") {
  auto one = waterfill_s(vec({1.0}), 1.0);
  CHECK(one.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(one.beta(0) == doctest::Approx(1.0).epsilon(1e-9));

  auto equal = waterfill_s(vec({2.5, 2.5}), 3.0);
  CHECK(equal.beta(0) == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(equal.beta(1) == doctest::Approx(1.5).epsilon(1e-9));

  // alpha = (4, 1), S = 1: KKT gives beta = (0.875, 0.125)
  auto kkt = waterfill_s(vec({4.0, 1.0}), 1.0);
  CHECK(kkt.beta(0) == doctest::Approx(0.875).epsilon(1e-8));
  CHECK(kkt.beta(1) == doctest::Approx(0.125).epsilon(1e-8));
  CHECK(kkt.value ==
        doctest::Approx(std::log(4.5) + std::log(1.125)).epsilon(1e-10));
  CHECK(kkt.value == doctest::Approx(1.6219).epsilon(1e-4));
}

TEST_CASE("waterfill: degenerate budgets and levels") {
  auto zero_s = waterfill_s(vec({3.0, 1.0}), 0.0);
  CHECK(zero_s.value == 0.0);
  CHECK(zero_s.beta.cwiseAbs().maxCoeff() == 0.0);

  auto zero_alpha = waterfill_s(vec({0.0, 0.0}), 5.0);
  CHECK(zero_alpha.value == 0.0);

  // zero eigenvalues receive no budget
  auto mixed = waterfill_s(vec({2.0, 0.0, 1.0}), 2.0);
  CHECK(mixed.beta(1) == 0.0);
  CHECK(mixed.beta.sum() <= 2.0 + 1e-12);

  CHECK_THROWS_AS(waterfill_s(vec({-1.0}), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(waterfill_s(vec({1.0}), -1.0), std::invalid_argument);
}

TEST_CASE("waterfill optimality certificate against random feasible budgets") {
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + static_cast<int>(rng.uniform_below(5));
    Eigen::VectorXd alpha(n);
    for (int i = 0; i < n; ++i) alpha(i) = std::exp(3.0 * (rng.uniform01() - 0.5));
    const double s = std::exp(3.0 * (rng.uniform01() - 0.5));
    auto wf = waterfill_s(alpha, s);

    // any random feasible beta scores no better
    Eigen::VectorXd beta(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      beta(i) = rng.uniform01();
      total += beta(i);
    }
    beta *= s * rng.uniform01() / total;
    double value = 0.0;
    for (int i = 0; i < n; ++i) value += std::log1p(alpha(i) * beta(i));
    CHECK(wf.value >= value - 1e-10);

    // monotone in the budget and in each level
    CHECK(waterfill_s(alpha, s * 1.1).value >= wf.value - 1e-12);
    Eigen::VectorXd bumped = alpha;
    bumped(0) += 0.5;
    CHECK(waterfill_s(bumped, s).value >= wf.value - 1e-12);
  }
}

TEST_CASE("lemma41_bound: closed form and domination of waterfill") {
  CHECK(lemma41_bound(vec({1.0, 2.0}), 0.0, 1.0) == 0.0);
  CHECK(lemma41_bound(vec({1.0}), 1.0, 1.0) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK_THROWS_AS(lemma41_bound(vec({1.0}), 1.0, 0.0), std::invalid_argument);

  Rng rng(5);
  for (int rep = 0; rep < 300; ++rep) {
    const int n = 1 + static_cast<int>(rng.uniform_below(6));
    Eigen::VectorXd alpha(n);
    for (int i = 0; i < n; ++i) alpha(i) = std::exp(6.0 * (rng.uniform01() - 0.5));
    const double s = std::exp(6.0 * (rng.uniform01() - 0.5));
    const double wf = waterfill_s(alpha, s).value;
    for (double p : {0.1, 0.3, 1.0, 2.0, 8.0}) {
      CHECK(wf <= lemma41_bound(alpha, s, p) + 1e-8);
    }
  }
}

TEST_CASE("logdet_mf_bound: zeros and determinant oracle") {
  CHECK(logdet_mf_bound(SymmetricMatrix::identity(3), SymmetricMatrix::zero(3)) ==
        doctest::Approx(0.0));
  CHECK(logdet_mf_bound(SymmetricMatrix::zero(3), SymmetricMatrix::identity(3)) ==
        doctest::Approx(0.0));

  auto gen = gen_curie_weiss(2, 0.5);
  auto cov = covariance(gibbs_measure(gen.model));
  auto j_abs = matrix_abs(gen.model.coupling);
  const double direct = std::log(
      (cov.dense() * j_abs.dense() + Eigen::MatrixXd::Identity(2, 2))
          .determinant());
  CHECK(logdet_mf_bound(cov, gen.model.coupling) ==
        doctest::Approx(3.0 * direct).epsilon(1e-8));
  CHECK(logdet_mf_bound(cov, gen.model.coupling) > 0.0);
}

TEST_CASE("schatten_mf_bound: zero, identity, sweep shape") {
  CHECK(schatten_mf_bound(SymmetricMatrix::zero(4), 4.0, 1.0) == 0.0);
  const int n = 5;
  CHECK(schatten_mf_bound(SymmetricMatrix::identity(n), n, 1.0) ==
        doctest::Approx(20.0 * n).epsilon(1e-12));
  CHECK_THROWS_AS(schatten_mf_bound(SymmetricMatrix::identity(2), 2.0, 0.0),
                  std::invalid_argument);

  // p-sweep on Curie-Weiss: small p wins (observed, not asserted exactly)
  auto cw = gen_curie_weiss(64, 1.0).model;
  const double small_p = schatten_mf_bound(cw.coupling, 64.0, 0.1);
  const double large_p = schatten_mf_bound(cw.coupling, 64.0, 16.0);
  CHECK(small_p < large_p);
}

TEST_CASE("rank_mf_bound: zero, Curie-Weiss rank-1, constructed rank-2") {
  CHECK(rank_mf_bound(SymmetricMatrix::zero(3), 3.0) == 0.0);

  auto cw = gen_curie_weiss(12, 1.0).model;
  CHECK(rank_tol(cw.coupling) == 1);
  CHECK(rank_mf_bound(cw.coupling, 12.0) ==
        doctest::Approx(3.0 * std::log1p(12.0)).epsilon(1e-10));

  Rng rng(7);
  Eigen::VectorXd u(6), v(6);
  for (int i = 0; i < 6; ++i) {
    u(i) = rng.normal();
    v(i) = rng.normal();
  }
  auto two = SymmetricMatrix::from_dense(
      (u * u.transpose() + v * v.transpose()).eval(), 1e-8);
  const double lmax = sym_eig(two).eigenvalues.cwiseAbs().maxCoeff();
  CHECK(rank_mf_bound(two, 2.0) ==
        doctest::Approx(2.0 * 3.0 * std::log1p(2.0 * lmax)).epsilon(1e-10));
}

TEST_CASE("best_bound: zero coupling, Curie-Weiss winner, report coherence") {
  auto zero_rep = best_bound(SymmetricMatrix::zero(4), 4.0);
  CHECK(zero_rep.best_value == 0.0);
  CHECK(zero_rep.s_js_bound == 0.0);
  CHECK(zero_rep.rank_bound == 0.0);

  auto cw = gen_curie_weiss(64, 1.0).model;
  auto rep = best_bound(cw.coupling, 64.0);
  // rank-1 coupling: rank bound and 3 S(J,S) coincide at 3 log(S beta + 1)
  CHECK(rep.best_value == doctest::Approx(3.0 * std::log(65.0)).epsilon(1e-9));
  CHECK(rep.best_name == "rank");
  CHECK(rep.rank == 1);
  for (const auto& [p, v] : rep.schatten_bounds) {
    CHECK(rep.best_value <= v + 1e-12);
  }

  auto torus = gen_torus_heat_kernel(8, 1, 0.25, 1.0).model;
  auto trep = best_bound(torus.coupling, 8.0);
  CHECK(trep.schatten_bounds.size() == default_p_grid().size());
  CHECK(trep.best_value > 0.0);
}

TEST_CASE("torus p-sweep: larger tori favor smaller exponents") {
  auto argmin_p = [](int k) {
    auto torus = gen_torus_heat_kernel(k, 1, 0.25, 1.0).model;
    auto rep = best_bound(torus.coupling, static_cast<double>(k));
    double best = 1e300, best_p = 0.0;
    for (const auto& [p, v] : rep.schatten_bounds) {
      if (v < best) {
        best = v;
        best_p = p;
      }
    }
    return best_p;
  };
  const double small = argmin_p(8), large = argmin_p(64);
  MESSAGE("optimizing p: k=8 -> ", small, ", k=64 -> ", large);
  CHECK(large < small);
}

TEST_CASE("lemma42_check: equality case, vanishing B, random PD pairs") {
  auto eq = lemma42_check(SymmetricMatrix::identity(2),
                          SymmetricMatrix::identity(2));
  CHECK(eq.holds);
  CHECK(eq.lhs == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-10));
  CHECK(eq.rhs == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-9));

  auto tiny = lemma42_check(SymmetricMatrix::identity(3),
                            SymmetricMatrix::scaled_identity(3, 1e-12));
  CHECK(tiny.holds);
  CHECK(tiny.lhs == doctest::Approx(0.0).epsilon(1e-9));

  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_below(5));
    auto a = SymmetricMatrix::from_dense(random_pd(rng, n, 1e-3), 1e-8);
    auto b = SymmetricMatrix::from_dense(random_pd(rng, n, 1e-3), 1e-8);
    auto res = lemma42_check(a, b);
    CHECK(res.holds);
  }
}

TEST_CASE("corollary chain: logdet bound <= 3 S(J, Tr cov)") {
  Rng rng(13);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_below(4));
    auto cov = SymmetricMatrix::from_dense(random_pd(rng, n, 1e-6), 1e-8);
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
    }
    auto coupling = SymmetricMatrix::from_dense((0.5 * (g + g.transpose())).eval(), 1e-8);
    const double lhs = logdet_mf_bound(cov, coupling);
    const double rhs =
        3.0 * waterfill_s(sym_eig(coupling).eigenvalues.cwiseAbs(), cov.trace())
                  .value;
    CHECK(lhs <= rhs + 1e-8);
  }
}
