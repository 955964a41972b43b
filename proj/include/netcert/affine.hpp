#pragma once

// Matrices that depend affinely on a real decision vector:
//   X(y) = X0 + sum_v y_v X_v.
// Variable ids index the decision vector of the enclosing problem.

#include <map>
#include <span>

#include <Eigen/Dense>

namespace netcert {

class AffineMatrix {
 public:
  AffineMatrix() = default;
  AffineMatrix(Eigen::Index rows, Eigen::Index cols);
  explicit AffineMatrix(Eigen::MatrixXd constant);

  static AffineMatrix variable(int id, Eigen::MatrixXd coefficient);
  static AffineMatrix zero(Eigen::Index rows, Eigen::Index cols) { return AffineMatrix(rows, cols); }

  Eigen::Index rows() const { return constant_.rows(); }
  Eigen::Index cols() const { return constant_.cols(); }

  const Eigen::MatrixXd& constant() const { return constant_; }
  /// Coefficient matrices keyed by variable id, in ascending id order.
  const std::map<int, Eigen::MatrixXd>& terms() const { return terms_; }
  bool depends_on(int id) const { return terms_.contains(id); }

  Eigen::MatrixXd evaluate(std::span<const double> y) const;

  AffineMatrix transpose() const;
  AffineMatrix block(Eigen::Index row, Eigen::Index col, Eigen::Index rows, Eigen::Index cols) const;
  void set_block(Eigen::Index row, Eigen::Index col, const AffineMatrix& value);
  void add_term(int id, const Eigen::MatrixXd& coefficient);

  AffineMatrix& operator+=(const AffineMatrix& other);
  AffineMatrix& operator-=(const AffineMatrix& other);
  AffineMatrix& operator*=(double s);

  friend AffineMatrix operator+(AffineMatrix a, const AffineMatrix& b) { return a += b; }
  friend AffineMatrix operator-(AffineMatrix a, const AffineMatrix& b) { return a -= b; }
  friend AffineMatrix operator*(double s, AffineMatrix a) { return a *= s; }
  friend AffineMatrix operator*(const Eigen::MatrixXd& left, const AffineMatrix& x);
  friend AffineMatrix operator*(const AffineMatrix& x, const Eigen::MatrixXd& right);

 private:
  Eigen::MatrixXd constant_;
  std::map<int, Eigen::MatrixXd> terms_;
};

/// S' X S
AffineMatrix congruence(const Eigen::MatrixXd& S, const AffineMatrix& X);

/// Block-diagonal stack.
AffineMatrix direct_sum(std::span<const AffineMatrix> blocks);

}  // namespace netcert
