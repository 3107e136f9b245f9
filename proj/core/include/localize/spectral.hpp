#pragma once

#include <Eigen/Dense>

namespace localize {

// Dense symmetric matrix. Construction symmetrizes the input and rejects
// anything whose asymmetry exceeds `asym_tol * (1 + max|entry|)`.
class SymmetricMatrix {
 public:
  SymmetricMatrix() : m_(0, 0) {}
  static SymmetricMatrix zero(Eigen::Index n);
  static SymmetricMatrix identity(Eigen::Index n);
  static SymmetricMatrix scaled_identity(Eigen::Index n, double s);

  // Throws std::invalid_argument if `dense` is not square or not symmetric
  // within tolerance. The stored matrix is always (A + A^T)/2.
  static SymmetricMatrix from_dense(const Eigen::MatrixXd& dense,
                                    double asym_tol = 1e-10);

  Eigen::Index dim() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  const Eigen::MatrixXd& dense() const { return m_; }
  double trace() const { return m_.trace(); }

 private:
  explicit SymmetricMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {}
  Eigen::MatrixXd m_;
};

// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending,
// eigenvector columns in matching order.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

Spectrum sym_eig(const SymmetricMatrix& a);

// (A^2)^{1/2}: eigenvalues replaced by their absolute values.
SymmetricMatrix matrix_abs(const SymmetricMatrix& a);

// Principal square root of a PSD matrix (eigenvalues clamped at zero).
SymmetricMatrix matrix_sqrt_psd(const SymmetricMatrix& a);

// Inverse of a positive-definite matrix; throws if any eigenvalue is not
// strictly positive (relative to the spectral radius).
SymmetricMatrix inverse_pd(const SymmetricMatrix& a);

// (sum |lambda_i|^p)^{1/p}; p = infinity gives max |lambda_i|. For p < 1
// this is the quasi-norm, computed by the same formula. Rejects p <= 0.
double schatten_norm(const SymmetricMatrix& a, double p);

// log det(C L + Id) for PSD C and L, evaluated through the eigenvalues of
// L^{1/2} C L^{1/2} so the result is a sum of log1p of nonnegative numbers.
double logdet_plus_id(const SymmetricMatrix& c, const SymmetricMatrix& l);

struct PsdVerdict {
  bool holds = false;
  double lambda_min = 0.0;     // smallest eigenvalue of B - A
  Eigen::VectorXd witness;     // its eigenvector
};

// Loewner comparison A <= B up to tol: holds iff lambda_min(B - A) >= -tol.
PsdVerdict psd_leq(const SymmetricMatrix& a, const SymmetricMatrix& b,
                   double tol);

// Eigenvalue count above the relative cutoff 1e-10 * max|lambda|.
int rank_tol(const SymmetricMatrix& a);

// lambda_min(A), for PSD checks.
double min_eigenvalue(const SymmetricMatrix& a);

}  // namespace localize
