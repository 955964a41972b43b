#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "netcert/lti.hpp"

namespace netcert {

// Matrix sign function iteration on the Hamiltonian, with determinant scaling.
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                           const Eigen::MatrixXd& R) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd Z(2 * n, 2 * n);
  Z << A, -B * R.ldlt().solve(B.transpose()), -Q, -A.transpose();

  for (int iter = 0; iter < 100; ++iter) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Z);
    const double logdet = lu.matrixLU().diagonal().array().abs().log().sum();
    const double c = std::exp(-logdet / static_cast<double>(2 * n));
    Eigen::MatrixXd next = 0.5 * (c * Z + lu.inverse() / c);
    const double change = (next - Z).norm();
    Z = std::move(next);
    if (change <= 1e-13 * Z.norm()) break;
  }

  // sign(H) [I; X] = -[I; X]
  Eigen::MatrixXd lhs(2 * n, n), rhs(2 * n, n);
  lhs << Z.topRightCorner(n, n), Z.bottomRightCorner(n, n) + Eigen::MatrixXd::Identity(n, n);
  rhs << Z.topLeftCorner(n, n) + Eigen::MatrixXd::Identity(n, n), Z.bottomLeftCorner(n, n);
  Eigen::MatrixXd X = lhs.colPivHouseholderQr().solve(-rhs);
  return 0.5 * (X + X.transpose());
}

Eigen::MatrixXd lqr_feedback(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::Index n = A.rows(), m = B.cols();
  Eigen::MatrixXd X = solve_care(A, B, Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(m, m));
  return -B.transpose() * X;
}

bool stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double margin) {
  const Eigen::Index n = A.rows();
  if (n == 0) return true;
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  const double scale = std::max(1.0, A.norm() + B.norm());
  for (Eigen::Index i = 0; i < n; ++i) {
    std::complex<double> lambda = es.eigenvalues()(i);
    if (lambda.real() < -margin) continue;
    Eigen::MatrixXcd pbh(n, n + B.cols());
    pbh.leftCols(n) = -A.cast<std::complex<double>>();
    pbh.leftCols(n).diagonal().array() += lambda;
    pbh.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    if (svd.singularValues()(n - 1) < 1e-9 * scale) return false;
  }
  return true;
}

// Ackermann's formula on the input direction B 1 (or the first column that
// yields a controllable pair).
Eigen::MatrixXd place_feedback(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                               std::span<const std::complex<double>> poles) {
  const Eigen::Index n = A.rows(), m = B.cols();
  std::vector<std::complex<double>> target(poles.begin(), poles.end());
  if (target.empty()) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto lambda = es.eigenvalues()(i);
      target.emplace_back(-std::max(std::abs(lambda.real()), 1.0), lambda.imag());
    }
  }
  if (static_cast<Eigen::Index>(target.size()) != n) {
    throw LtiError(LtiError::Kind::DimensionMismatch, "pole placement needs one pole per state");
  }

  // characteristic polynomial coefficients, ascending: c0 + c1 s + ... + s^n
  Eigen::VectorXcd coeff = Eigen::VectorXcd::Zero(n + 1);
  coeff(0) = 1.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = k + 1; j > 0; --j) coeff(j) = coeff(j - 1) - target[k] * coeff(j);
    coeff(0) = -target[k] * coeff(0);
  }
  Eigen::VectorXd c = coeff.real();

  std::vector<Eigen::VectorXd> directions{Eigen::VectorXd::Ones(m)};
  for (Eigen::Index j = 0; j < m; ++j) directions.push_back(Eigen::VectorXd::Unit(m, j));
  for (const auto& v : directions) {
    Eigen::VectorXd b = B * v;
    Eigen::MatrixXd ctrb(n, n);
    ctrb.col(0) = b;
    for (Eigen::Index k = 1; k < n; ++k) ctrb.col(k) = A * ctrb.col(k - 1);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ctrb);
    if (lu.rank() < n) continue;
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index k = 0; k <= n; ++k) {
      phi += c(k) * power;
      power = power * A;
    }
    Eigen::RowVectorXd last = Eigen::RowVectorXd::Unit(n, n - 1);
    Eigen::RowVectorXd k_row = last * lu.inverse() * phi;
    return -v * k_row;
  }
  throw LtiError(LtiError::Kind::Unstabilizable, "no single input direction makes (A, B) controllable");
}

}  // namespace netcert
