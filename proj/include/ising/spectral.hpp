#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "ising/model.hpp"

namespace ising {

// Decomposition J = J_plus - J_minus with J_plus = J_par + J_perp,
// spike subspace V = span(Q) (eigenvalues of J_plus above 1 - 1/c),
// and factor X = (n J_plus)^{1/2} so that (1/n) X X^T = J_plus.
// X is the symmetric PSD square root, which makes X^T = X and lets it
// commute with the spike projector.
struct SpectralSplit {
  int n = 0;
  double c = std::numeric_limits<double>::infinity();
  int d = 0;
  Matrix J_plus, J_minus;
  Matrix X;
  Matrix Q;        // n x d, orthonormal columns
  Matrix J_par, J_perp;
  Matrix A;        // X^T Q = X Q, n x d; grid field contribution is A y
  Vector eigvals;  // eigenvalues of J, ascending (diagnostics)
  double op_norm = 0.0;
  double perp_op_norm = 0.0;
  double minus_trace = 0.0;

  bool has_negative_part() const { return minus_trace > 0.0; }
  double spike_threshold() const { return 1.0 - 1.0 / c; }
};

// Eigenvalues within this of zero (or of the spike threshold) are treated
// as bulk rather than opening a spurious J_minus / spike direction.
inline constexpr double kEigClampTol = 1e-12;

inline double op_norm_of(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double default_threshold_c(const Matrix& J) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(J, Eigen::EigenvaluesOnly);
  return (es.eigenvalues().minCoeff() < -kEigClampTol)
             ? 2.0
             : std::numeric_limits<double>::infinity();
}

inline SpectralSplit decompose(const Matrix& J, double c,
                               double sym_tol = kSymTol) {
  if (J.rows() != J.cols()) throw InvalidInputError("decompose: J not square");
  if ((J - J.transpose()).cwiseAbs().maxCoeff() > sym_tol)
    throw InvalidInputError("decompose: J not symmetric within tolerance");
  if (!(c > 1.0))
    throw InvalidInputError("decompose: c must be in (1, inf]");
  const int n = static_cast<int>(J.rows());

  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  if (es.info() != Eigen::Success)
    throw NumericError("decompose: eigensolver did not converge");
  const Vector lam = es.eigenvalues();  // ascending
  const Matrix& U = es.eigenvectors();

  SpectralSplit s;
  s.n = n;
  s.c = c;
  s.eigvals = lam;
  s.op_norm = std::max(std::abs(lam[0]), std::abs(lam[n - 1]));

  Vector lam_plus(n), lam_minus(n), lam_spike(n);
  const double thr = s.spike_threshold();
  int d = 0;
  for (int i = 0; i < n; ++i) {
    double l = lam[i];
    if (l < 0.0 && l > -kEigClampTol) l = 0.0;
    lam_plus[i] = std::max(l, 0.0);
    lam_minus[i] = std::max(-l, 0.0);
    const bool spike = lam_plus[i] > thr + kEigClampTol;
    lam_spike[i] = spike ? lam_plus[i] : 0.0;
    if (spike) ++d;
  }
  s.d = d;
  s.J_plus = U * lam_plus.asDiagonal() * U.transpose();
  s.J_minus = U * lam_minus.asDiagonal() * U.transpose();
  s.X = U * Vector(static_cast<double>(n) * lam_plus).cwiseSqrt().asDiagonal() *
        U.transpose();
  s.J_par = U * lam_spike.asDiagonal() * U.transpose();
  s.J_perp = s.J_plus - s.J_par;
  s.Q.resize(n, d);
  s.A.resize(n, d);
  int col = 0;
  for (int i = 0; i < n; ++i) {
    if (lam_spike[i] > 0.0) {
      s.Q.col(col) = U.col(i);
      s.A.col(col) = std::sqrt(n * lam_plus[i]) * U.col(i);
      ++col;
    }
  }
  double perp = 0.0;
  for (int i = 0; i < n; ++i)
    if (lam_spike[i] == 0.0) perp = std::max(perp, lam_plus[i]);
  s.perp_op_norm = perp;
  s.minus_trace = lam_minus.sum();
  // Reconstruction round-off would otherwise mask exact structural zeros
  // (rank-deficient J_perp / absent negative part) that downstream code
  // exploits for ladder collapse and product sampling.
  const double zero_tol = 1e-13 * std::max(1.0, s.op_norm);
  if (s.perp_op_norm <= zero_tol && s.J_perp.norm() <= zero_tol * n) {
    s.J_perp.setZero();
    s.perp_op_norm = 0.0;
  }
  if (s.minus_trace <= zero_tol * n && s.J_minus.norm() <= zero_tol * n) {
    s.J_minus.setZero();
    s.minus_trace = 0.0;
  }
  return s;
}

struct SplitDiagnostics {
  double reconstruction_err = 0.0;  // ||J_plus - J_minus - J||_F
  double psd_slack = 0.0;           // most negative eigenvalue of J_plus/J_minus
  double cross_product_norm = 0.0;  // ||J_plus J_minus||_F
  double orthonormality_defect = 0.0;  // ||Q^T Q - I||_max
  double factor_err = 0.0;             // ||(1/n) X^T X - J_plus||_F
  double par_err = 0.0;                // ||(1/n) X^T P X - J_par||_F
  double perp_op_norm = 0.0;
  bool ok = true;
};

inline SplitDiagnostics validate_split(const SpectralSplit& s, const Matrix& J) {
  if (J.rows() != s.n) throw InvalidInputError("validate_split: shape mismatch");
  SplitDiagnostics r;
  r.reconstruction_err = (s.J_plus - s.J_minus - J).norm();
  Eigen::SelfAdjointEigenSolver<Matrix> ep(s.J_plus, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> em(s.J_minus, Eigen::EigenvaluesOnly);
  r.psd_slack = std::min(ep.eigenvalues().minCoeff(),
                         em.eigenvalues().minCoeff());
  r.cross_product_norm = (s.J_plus * s.J_minus).norm();
  if (s.d > 0) {
    r.orthonormality_defect =
        (s.Q.transpose() * s.Q - Matrix::Identity(s.d, s.d))
            .cwiseAbs()
            .maxCoeff();
  }
  r.factor_err = ((1.0 / s.n) * s.X.transpose() * s.X - s.J_plus).norm();
  Matrix P = s.d > 0 ? Matrix(s.Q * s.Q.transpose()) : Matrix::Zero(s.n, s.n);
  r.par_err = ((1.0 / s.n) * s.X.transpose() * P * s.X - s.J_par).norm();
  r.perp_op_norm = s.perp_op_norm;
  r.ok = r.reconstruction_err <= 1e-8 && r.psd_slack >= -1e-10 &&
         r.cross_product_norm <= 1e-8 && r.orthonormality_defect <= 1e-10 &&
         r.factor_err <= 1e-8 &&
         r.perp_op_norm <= s.spike_threshold() + 1e-8;
  return r;
}

inline nlohmann::json diagnostics_to_json(const SplitDiagnostics& r) {
  return nlohmann::json{{"reconstruction_err", r.reconstruction_err},
                        {"psd_slack", r.psd_slack},
                        {"cross_product_norm", r.cross_product_norm},
                        {"orthonormality_defect", r.orthonormality_defect},
                        {"factor_err", r.factor_err},
                        {"par_err", r.par_err},
                        {"perp_op_norm", r.perp_op_norm},
                        {"ok", r.ok}};
}

}  // namespace ising
