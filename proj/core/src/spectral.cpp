#include "localize/spectral.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace localize {

SymmetricMatrix SymmetricMatrix::zero(Eigen::Index n) {
  return SymmetricMatrix(Eigen::MatrixXd::Zero(n, n));
}

SymmetricMatrix SymmetricMatrix::identity(Eigen::Index n) {
  return SymmetricMatrix(Eigen::MatrixXd::Identity(n, n));
}

SymmetricMatrix SymmetricMatrix::scaled_identity(Eigen::Index n, double s) {
  return SymmetricMatrix(s * Eigen::MatrixXd::Identity(n, n));
}

SymmetricMatrix SymmetricMatrix::from_dense(const Eigen::MatrixXd& dense,
                                            double asym_tol) {
  if (dense.rows() != dense.cols()) {
    throw std::invalid_argument("SymmetricMatrix: matrix is not square");
  }
  if (!dense.allFinite()) {
    throw std::invalid_argument("SymmetricMatrix: non-finite entries");
  }
  const double scale = 1.0 + (dense.size() > 0 ? dense.cwiseAbs().maxCoeff() : 0.0);
  const double asym =
      dense.size() > 0 ? (dense - dense.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > asym_tol * scale) {
    std::ostringstream msg;
    msg << "SymmetricMatrix: asymmetry " << asym << " exceeds tolerance "
        << asym_tol * scale;
    throw std::invalid_argument(msg.str());
  }
  return SymmetricMatrix(((dense + dense.transpose()) * 0.5).eval());
}

Spectrum sym_eig(const SymmetricMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.dense());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("sym_eig: eigensolver did not converge");
  }
  const Eigen::Index n = a.dim();
  Spectrum s;
  s.eigenvalues = solver.eigenvalues().reverse();
  s.eigenvectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    s.eigenvectors.col(j) = solver.eigenvectors().col(n - 1 - j);
  }
  return s;
}

SymmetricMatrix matrix_abs(const SymmetricMatrix& a) {
  Spectrum s = sym_eig(a);
  Eigen::MatrixXd m = s.eigenvectors *
                      s.eigenvalues.cwiseAbs().asDiagonal() *
                      s.eigenvectors.transpose();
  return SymmetricMatrix::from_dense(m, 1e-9);
}

SymmetricMatrix matrix_sqrt_psd(const SymmetricMatrix& a) {
  Spectrum s = sym_eig(a);
  Eigen::VectorXd lam = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd m =
      s.eigenvectors * lam.asDiagonal() * s.eigenvectors.transpose();
  return SymmetricMatrix::from_dense(m, 1e-9);
}

SymmetricMatrix inverse_pd(const SymmetricMatrix& a) {
  Spectrum s = sym_eig(a);
  const double top = s.eigenvalues.size() > 0 ? s.eigenvalues(0) : 0.0;
  const double floor = 1e-12 * std::max(1.0, top);
  if (s.eigenvalues.size() == 0 || s.eigenvalues.minCoeff() <= floor) {
    throw std::invalid_argument("inverse_pd: matrix is not positive-definite");
  }
  Eigen::MatrixXd m = s.eigenvectors *
                      s.eigenvalues.cwiseInverse().asDiagonal() *
                      s.eigenvectors.transpose();
  return SymmetricMatrix::from_dense(m, 1e-9);
}

double schatten_norm(const SymmetricMatrix& a, double p) {
  if (!(p > 0.0)) {
    throw std::invalid_argument("schatten_norm: p must be positive");
  }
  Eigen::VectorXd lam = sym_eig(a).eigenvalues.cwiseAbs();
  if (lam.size() == 0) return 0.0;
  if (std::isinf(p)) return lam.maxCoeff();
  double sum = 0.0;
  for (double v : lam) sum += std::pow(v, p);
  return std::pow(sum, 1.0 / p);
}

namespace {

void require_psd(const SymmetricMatrix& m, const char* what) {
  if (m.dim() == 0) return;
  Eigen::VectorXd lam = sym_eig(m).eigenvalues;
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  if (lam.minCoeff() < -1e-9 * scale) {
    std::ostringstream msg;
    msg << what << ": matrix is not PSD (lambda_min = " << lam.minCoeff()
        << ")";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

double logdet_plus_id(const SymmetricMatrix& c, const SymmetricMatrix& l) {
  if (c.dim() != l.dim()) {
    throw std::invalid_argument("logdet_plus_id: dimension mismatch");
  }
  require_psd(c, "logdet_plus_id(C)");
  require_psd(l, "logdet_plus_id(L)");
  SymmetricMatrix lh = matrix_sqrt_psd(l);
  Eigen::MatrixXd m = lh.dense() * c.dense() * lh.dense();
  Spectrum s = sym_eig(SymmetricMatrix::from_dense(m, 1e-8));
  double out = 0.0;
  for (double v : s.eigenvalues) out += std::log1p(std::max(v, 0.0));
  return out;
}

PsdVerdict psd_leq(const SymmetricMatrix& a, const SymmetricMatrix& b,
                   double tol) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("psd_leq: dimension mismatch");
  }
  Spectrum s = sym_eig(SymmetricMatrix::from_dense(b.dense() - a.dense(), 1e-8));
  PsdVerdict v;
  const Eigen::Index n = s.eigenvalues.size();
  v.lambda_min = n > 0 ? s.eigenvalues(n - 1) : 0.0;
  v.witness = n > 0 ? Eigen::VectorXd(s.eigenvectors.col(n - 1))
                    : Eigen::VectorXd();
  v.holds = v.lambda_min >= -tol;
  return v;
}

int rank_tol(const SymmetricMatrix& a) {
  Eigen::VectorXd lam = sym_eig(a).eigenvalues.cwiseAbs();
  if (lam.size() == 0) return 0;
  const double cutoff = 1e-10 * lam.maxCoeff();
  int r = 0;
  for (double v : lam) {
    if (v > cutoff) ++r;
  }
  return r;
}

double min_eigenvalue(const SymmetricMatrix& a) {
  Eigen::VectorXd lam = sym_eig(a).eigenvalues;
  return lam.size() > 0 ? lam(lam.size() - 1) : 0.0;
}

}  // namespace localize
