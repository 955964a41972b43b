#include "netcert/affine.hpp"

#include <stdexcept>

namespace netcert {

AffineMatrix::AffineMatrix(Eigen::Index rows, Eigen::Index cols) : constant_(Eigen::MatrixXd::Zero(rows, cols)) {}

AffineMatrix::AffineMatrix(Eigen::MatrixXd constant) : constant_(std::move(constant)) {}

AffineMatrix AffineMatrix::variable(int id, Eigen::MatrixXd coefficient) {
  AffineMatrix out(coefficient.rows(), coefficient.cols());
  out.terms_.emplace(id, std::move(coefficient));
  return out;
}

Eigen::MatrixXd AffineMatrix::evaluate(std::span<const double> y) const {
  Eigen::MatrixXd out = constant_;
  for (const auto& [id, coef] : terms_) {
    if (id < 0 || static_cast<std::size_t>(id) >= y.size()) throw std::out_of_range("decision vector too short");
    out += y[id] * coef;
  }
  return out;
}

AffineMatrix AffineMatrix::transpose() const {
  AffineMatrix out(constant_.transpose());
  for (const auto& [id, coef] : terms_) out.terms_.emplace(id, coef.transpose());
  return out;
}

AffineMatrix AffineMatrix::block(Eigen::Index row, Eigen::Index col, Eigen::Index rows, Eigen::Index cols) const {
  AffineMatrix out(constant_.block(row, col, rows, cols));
  for (const auto& [id, coef] : terms_) {
    Eigen::MatrixXd part = coef.block(row, col, rows, cols);
    if (!part.isZero(0.0)) out.terms_.emplace(id, std::move(part));
  }
  return out;
}

void AffineMatrix::set_block(Eigen::Index row, Eigen::Index col, const AffineMatrix& value) {
  constant_.block(row, col, value.rows(), value.cols()) = value.constant_;
  for (auto& [id, coef] : terms_) coef.block(row, col, value.rows(), value.cols()).setZero();
  for (const auto& [id, coef] : value.terms_) {
    auto [it, inserted] = terms_.try_emplace(id, Eigen::MatrixXd::Zero(rows(), cols()));
    it->second.block(row, col, value.rows(), value.cols()) = coef;
  }
}

void AffineMatrix::add_term(int id, const Eigen::MatrixXd& coefficient) {
  if (coefficient.rows() != rows() || coefficient.cols() != cols()) {
    throw std::invalid_argument("affine term has the wrong shape");
  }
  auto [it, inserted] = terms_.try_emplace(id, coefficient);
  if (!inserted) it->second += coefficient;
}

AffineMatrix& AffineMatrix::operator+=(const AffineMatrix& other) {
  if (other.rows() != rows() || other.cols() != cols()) throw std::invalid_argument("affine sum shape mismatch");
  constant_ += other.constant_;
  for (const auto& [id, coef] : other.terms_) add_term(id, coef);
  return *this;
}

AffineMatrix& AffineMatrix::operator-=(const AffineMatrix& other) {
  AffineMatrix neg = other;
  neg *= -1.0;
  return *this += neg;
}

AffineMatrix& AffineMatrix::operator*=(double s) {
  constant_ *= s;
  for (auto& [id, coef] : terms_) coef *= s;
  return *this;
}

AffineMatrix operator*(const Eigen::MatrixXd& left, const AffineMatrix& x) {
  if (left.cols() != x.rows()) throw std::invalid_argument("affine product shape mismatch");
  AffineMatrix out(left * x.constant_);
  for (const auto& [id, coef] : x.terms_) out.terms_.emplace(id, left * coef);
  return out;
}

AffineMatrix operator*(const AffineMatrix& x, const Eigen::MatrixXd& right) {
  if (x.cols() != right.rows()) throw std::invalid_argument("affine product shape mismatch");
  AffineMatrix out(x.constant_ * right);
  for (const auto& [id, coef] : x.terms_) out.terms_.emplace(id, coef * right);
  return out;
}

AffineMatrix congruence(const Eigen::MatrixXd& S, const AffineMatrix& X) { return S.transpose() * X * S; }

AffineMatrix direct_sum(std::span<const AffineMatrix> blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  AffineMatrix out(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.set_block(r, c, b);
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace netcert
