#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "localize/measure.hpp"
#include "localize/models.hpp"
#include "localize/rng.hpp"
#include "localize/spin_model.hpp"

using namespace localize;

namespace {

AtomicMeasure uniform_pm1() {
  Eigen::MatrixXd atoms(2, 1);
  atoms << 1.0, -1.0;
  return AtomicMeasure::counting(atoms, Eigen::VectorXd::Constant(2, 0.5));
}

AtomicMeasure random_measure(Rng& rng, int m, int n) {
  Eigen::MatrixXd atoms(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) atoms(i, j) = rng.normal();
  }
  Eigen::VectorXd w(m);
  double sum = 0.0;
  for (int i = 0; i < m; ++i) {
    w(i) = rng.uniform_open01();
    sum += w(i);
  }
  w /= sum;
  w(m - 1) += 1.0 - w.sum();  // make the sum land exactly on 1
  return AtomicMeasure::counting(atoms, w);
}

}  // namespace

TEST_CASE("entropy: uniform, point mass, two-point") {
  Eigen::MatrixXd atoms(4, 1);
  atoms << 0, 1, 2, 3;
  auto uni = AtomicMeasure::counting(atoms, Eigen::VectorXd::Constant(4, 0.25));
  CHECK(entropy(uni) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  Eigen::VectorXd dirac(4);
  dirac << 1, 0, 0, 0;
  auto point = AtomicMeasure::counting(atoms, dirac);
  CHECK(entropy(point) == doctest::Approx(0.0).epsilon(1e-15));

  Eigen::MatrixXd two(2, 1);
  two << 0, 1;
  Eigen::VectorXd w(2);
  w << 0.75, 0.25;
  auto skew = AtomicMeasure::counting(two, w);
  const double expected = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  CHECK(entropy(skew) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(entropy(skew) == doctest::Approx(0.5623).epsilon(1e-4));
}

TEST_CASE("entropy respects the base measure") {
  Eigen::MatrixXd atoms(2, 1);
  atoms << 0, 1;
  Eigen::VectorXd w(2), nu(2);
  w << 0.5, 0.5;
  nu << 2.0, 2.0;
  auto mu = AtomicMeasure::create(atoms, w, nu);
  CHECK(entropy(mu) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("mean and covariance: two-point, point mass, product") {
  auto mu = uniform_pm1();
  CHECK(mean(mu)(0) == doctest::Approx(0.0));
  CHECK(covariance(mu)(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

  Eigen::VectorXd x(3);
  x << 1.0, -2.0, 0.5;
  auto point = AtomicMeasure::point_mass(x);
  CHECK((mean(point) - x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(covariance(point).dense().cwiseAbs().maxCoeff() == 0.0);

  // uniform on {+-1}^2: covariance is the identity (enumeration by hand)
  Eigen::MatrixXd atoms(4, 2);
  atoms << 1, 1, 1, -1, -1, 1, -1, -1;
  auto cube = AtomicMeasure::counting(atoms, Eigen::VectorXd::Constant(4, 0.25));
  CHECK((covariance(cube).dense() - Eigen::MatrixXd::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
}

TEST_CASE("tilt: identity, point mass, two-atom formula") {
  auto mu = uniform_pm1();
  const auto q1 = SymmetricMatrix::identity(1);

  auto same = tilt(mu, Eigen::VectorXd::Zero(1), 0.0, q1);
  CHECK(same.weights() == mu.weights());

  Eigen::VectorXd x(2);
  x << 3.0, -1.0;
  auto point = AtomicMeasure::point_mass(x);
  Eigen::VectorXd w2(2);
  w2 << 5.0, -2.0;
  auto tp = tilt(point, w2, 1.7, SymmetricMatrix::identity(2));
  CHECK(tp.weights()(0) == 1.0);

  const double c = 0.8;
  auto tilted = tilt(mu, Eigen::VectorXd::Constant(1, c), 0.0, q1);
  const double z = std::exp(c) + std::exp(-c);
  CHECK(tilted.weights()(0) == doctest::Approx(std::exp(c) / z).epsilon(1e-14));
  CHECK(tilted.weights()(1) == doctest::Approx(std::exp(-c) / z).epsilon(1e-14));
}

TEST_CASE("tilt: no overflow for large exponents") {
  auto mu = uniform_pm1();
  auto big = tilt(mu, Eigen::VectorXd::Constant(1, 700.0), 0.0,
                  SymmetricMatrix::identity(1));
  CHECK(big.weights().allFinite());
  CHECK(big.weights()(0) == doctest::Approx(1.0));
}

TEST_CASE("tilt properties: normalization and composition") {
  Rng rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    auto mu = random_measure(rng, 6, 3);
    Eigen::MatrixXd g(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) g(i, j) = rng.normal();
    }
    auto q = SymmetricMatrix::from_dense((g * g.transpose()).eval(), 1e-8);
    Eigen::VectorXd w1(3), w2(3);
    for (int i = 0; i < 3; ++i) {
      w1(i) = rng.normal();
      w2(i) = rng.normal();
    }
    const double t1 = rng.uniform01(), t2 = rng.uniform01();

    auto once = tilt(mu, w1, t1, q);
    CHECK(std::abs(once.weights().sum() - 1.0) <= 1e-12);

    auto twice = tilt(once, w2, t2, q);
    // tilting by (w1,t1) then (w2,t2) equals tilting by (w1+w2, t1+t2)
    auto direct = tilt(mu, w1 + w2, t1 + t2, q);
    CHECK((twice.weights() - direct.weights()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("covariance is PSD for random measures") {
  Rng rng(7);
  for (int rep = 0; rep < 40; ++rep) {
    auto mu = random_measure(rng, 2 + static_cast<int>(rng.uniform_below(8)), 4);
    CHECK(min_eigenvalue(covariance(mu)) >= -1e-10);
  }
}

TEST_CASE("entropy bounded by log of total base mass") {
  Rng rng(11);
  for (int rep = 0; rep < 40; ++rep) {
    const int m = 2 + static_cast<int>(rng.uniform_below(16));
    auto mu = random_measure(rng, m, 2);
    CHECK(entropy(mu) <= std::log(static_cast<double>(m)) + 1e-12);
  }
}

TEST_CASE("validation rejects malformed measures") {
  Eigen::MatrixXd atoms(2, 1);
  atoms << 0, 1;
  Eigen::VectorXd bad_sum(2);
  bad_sum << 0.6, 0.6;
  CHECK_THROWS_AS(AtomicMeasure::counting(atoms, bad_sum), std::invalid_argument);

  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  Eigen::VectorXd bad_base(2);
  bad_base << 1.0, 0.0;
  CHECK_THROWS_AS(AtomicMeasure::create(atoms, w, bad_base), std::invalid_argument);

  Eigen::VectorXd negative(2);
  negative << 1.5, -0.5;
  CHECK_THROWS_AS(AtomicMeasure::counting(atoms, negative), std::invalid_argument);

  Eigen::MatrixXd dup(2, 1);
  dup << 1.0, 1.0;
  CHECK_THROWS_AS(AtomicMeasure::counting(dup, w), std::invalid_argument);

  auto mu = uniform_pm1();
  CHECK_THROWS_AS(tilt(mu, Eigen::VectorXd::Zero(2), 0.0, SymmetricMatrix::identity(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(tilt(mu, Eigen::VectorXd::Zero(1), -1.0, SymmetricMatrix::identity(1)),
                  std::invalid_argument);
}

TEST_CASE("gibbs measure: free spin, field, potts shape") {
  auto free_model = make_spin_model(SpinSpace::ising(),
                                    SymmetricMatrix::zero(1),
                                    Eigen::MatrixXd::Zero(1, 1));
  auto uniform = gibbs_measure(free_model);
  CHECK(uniform.size() == 2);
  CHECK(uniform.weights()(0) == doctest::Approx(0.5).epsilon(1e-14));

  Eigen::MatrixXd h(1, 1);
  h << 1.0;
  auto field_model = make_spin_model(SpinSpace::ising(),
                                     SymmetricMatrix::zero(1), h);
  auto tilted = gibbs_measure(field_model);
  const double z = std::exp(1.0) + std::exp(-1.0);
  // first configuration is sigma = +1 (alphabet order)
  CHECK(tilted.weights()(0) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-13));
  CHECK(tilted.weights()(1) == doctest::Approx(std::exp(-1.0) / z).epsilon(1e-13));

  auto potts = make_spin_model(SpinSpace::potts(2), SymmetricMatrix::zero(2),
                               Eigen::MatrixXd::Zero(2, 2));
  auto pg = gibbs_measure(potts);
  CHECK(pg.size() == 4);
  CHECK(pg.dim() == 4);
}

TEST_CASE("gibbs measure: cap exceeded names the required count") {
  auto model = gen_curie_weiss(8, 0.5).model;
  CHECK_THROWS_WITH_AS(gibbs_measure(model, 100),
                       doctest::Contains("256"), std::invalid_argument);
}

TEST_CASE("gibbs measure matches the hamiltonian") {
  auto gen = gen_curie_weiss(3, 0.7);
  auto mu = gibbs_measure(gen.model);
  // weight of the all-plus configuration: exp(f) / Z by direct evaluation
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Ones(3, 1);
  const double f_plus = hamiltonian(gen.model, sigma);
  double z = 0.0;
  for (int c = 0; c < 8; ++c) {
    Eigen::MatrixXd s(3, 1);
    for (int i = 0; i < 3; ++i) s(i, 0) = (c >> i) & 1 ? -1.0 : 1.0;
    z += std::exp(hamiltonian(gen.model, s));
  }
  CHECK(mu.weights()(0) == doctest::Approx(std::exp(f_plus) / z).epsilon(1e-12));
}
