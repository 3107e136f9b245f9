#include "localize/spin_model.hpp"

#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace localize {

SpinSpace SpinSpace::ising() {
  Eigen::MatrixXd pts(2, 1);
  pts << 1.0, -1.0;
  return SpinSpace(Kind::ising, std::move(pts));
}

SpinSpace SpinSpace::potts(int k) {
  if (k < 2) throw std::invalid_argument("SpinSpace::potts: need k >= 2");
  return SpinSpace(Kind::potts, Eigen::MatrixXd::Identity(k, k));
}

SpinSpace SpinSpace::atoms(Eigen::MatrixXd points) {
  if (points.rows() < 1 || points.cols() < 1) {
    throw std::invalid_argument("SpinSpace::atoms: empty alphabet");
  }
  if (!points.allFinite()) {
    throw std::invalid_argument("SpinSpace::atoms: non-finite points");
  }
  for (Eigen::Index a = 0; a < points.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < points.rows(); ++b) {
      if (points.row(a) == points.row(b)) {
        throw std::invalid_argument("SpinSpace::atoms: duplicate alphabet points");
      }
    }
  }
  return SpinSpace(Kind::atoms, std::move(points));
}

double SpinSpace::diameter() const {
  double d2 = 0.0;
  for (Eigen::Index a = 0; a < points_.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < points_.rows(); ++b) {
      d2 = std::max(d2, (points_.row(a) - points_.row(b)).squaredNorm());
    }
  }
  return std::sqrt(d2);
}

SpinModel make_spin_model(SpinSpace space, SymmetricMatrix coupling,
                          Eigen::MatrixXd field) {
  SpinModel m{coupling.dim(), std::move(space), std::move(coupling),
              std::move(field)};
  if (m.field.rows() != m.n || m.field.cols() != m.space.k()) {
    std::ostringstream msg;
    msg << "make_spin_model: field must be " << m.n << " x " << m.space.k()
        << ", got " << m.field.rows() << " x " << m.field.cols();
    throw std::invalid_argument(msg.str());
  }
  if (!m.field.allFinite()) {
    throw std::invalid_argument("make_spin_model: non-finite field");
  }
  return m;
}

namespace {

int alphabet_index_of(const SpinSpace& space, const Eigen::RowVectorXd& row) {
  for (Eigen::Index a = 0; a < space.alphabet_size(); ++a) {
    if (space.points().row(a) == row) return static_cast<int>(a);
  }
  return -1;
}

}  // namespace

double hamiltonian(const SpinModel& model, const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != model.n || sigma.cols() != model.space.k()) {
    throw std::invalid_argument("hamiltonian: configuration has wrong shape");
  }
  for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
    if (alphabet_index_of(model.space, sigma.row(i)) < 0) {
      std::ostringstream msg;
      msg << "hamiltonian: row " << i << " is not an alphabet point";
      throw std::invalid_argument(msg.str());
    }
  }
  const Eigen::MatrixXd gram = sigma * sigma.transpose();  // sigma_i . sigma_j
  double f = (model.coupling.dense().array() * gram.array()).sum();
  f += (model.field.array() * sigma.array()).sum();
  return f;
}

SymmetricMatrix flat_coupling(const SpinModel& model) {
  const Eigen::Index k = model.space.k();
  if (k == 1) return model.coupling;
  const Eigen::Index n = model.n;
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n * k, n * k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = model.coupling(i, j);
      for (Eigen::Index a = 0; a < k; ++a) big(i * k + a, j * k + a) = v;
    }
  }
  return SymmetricMatrix::from_dense(big);
}

std::size_t state_count_checked(const SpinModel& model, std::size_t cap) {
  const std::size_t a = static_cast<std::size_t>(model.space.alphabet_size());
  std::size_t count = 1;
  bool too_large = false;
  for (Eigen::Index i = 0; i < model.n && !too_large; ++i) {
    too_large = count > cap / a;
    count *= a;
  }
  if (too_large || count > cap) {
    const double required =
        std::pow(static_cast<double>(a), static_cast<double>(model.n));
    std::ostringstream msg;
    msg << "state space too large: need " << std::setprecision(15) << required
        << " configurations, cap is " << cap;
    throw std::invalid_argument(msg.str());
  }
  return count;
}

void config_digits(std::size_t index, Eigen::Index n, Eigen::Index alphabet,
                   std::vector<int>& out) {
  out.resize(static_cast<std::size_t>(n));
  const std::size_t a = static_cast<std::size_t>(alphabet);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(index % a);
    index /= a;
  }
}

Eigen::VectorXd flatten_config(const SpinModel& model,
                               const std::vector<int>& digits) {
  const Eigen::Index k = model.space.k();
  Eigen::VectorXd x(model.n * k);
  for (Eigen::Index i = 0; i < model.n; ++i) {
    x.segment(i * k, k) =
        model.space.points().row(digits[static_cast<std::size_t>(i)]);
  }
  return x;
}

HamiltonianTables::HamiltonianTables(const SpinModel& model) {
  const Eigen::MatrixXd& pts = model.space.points();
  dot = pts * pts.transpose();
  field_dot = model.field * pts.transpose();
}

}  // namespace localize
