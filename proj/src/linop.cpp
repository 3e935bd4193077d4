#include "gradvi/linop.hpp"

#include <cmath>

#include "gradvi/errors.hpp"

namespace gradvi {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

// In-place running sum, forward and reverse.
void cumsum(Eigen::Ref<VectorXd> x) {
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) x[i] = (acc += x[i]);
}

void rcumsum(Eigen::Ref<VectorXd> x) {
  double acc = 0.0;
  for (Index i = x.size() - 1; i >= 0; --i) x[i] = (acc += x[i]);
}

}  // namespace

// ---------------------------------------------------------- LinearOperator

void LinearOperator::matvec(const Eigen::Ref<const VectorXd>& v, Eigen::Ref<VectorXd> out) const {
  require(v.size() == cols(), "matvec: input length does not match operator columns");
  require(out.size() == rows(), "matvec: output length does not match operator rows");
  do_matvec(v, out);
}

VectorXd LinearOperator::matvec(const Eigen::Ref<const VectorXd>& v) const {
  VectorXd out(rows());
  matvec(v, out);
  return out;
}

void LinearOperator::rmatvec(const Eigen::Ref<const VectorXd>& w, Eigen::Ref<VectorXd> out) const {
  require(w.size() == rows(), "rmatvec: input length does not match operator rows");
  require(out.size() == cols(), "rmatvec: output length does not match operator columns");
  do_rmatvec(w, out);
}

VectorXd LinearOperator::rmatvec(const Eigen::Ref<const VectorXd>& w) const {
  VectorXd out(cols());
  rmatvec(w, out);
  return out;
}

double LinearOperator::column_dot(Index j, const Eigen::Ref<const VectorXd>& r) const {
  require(j >= 0 && j < cols(), "column_dot: column index out of range");
  require(r.size() == rows(), "column_dot: vector length does not match operator rows");
  return do_column_dot(j, r);
}

void LinearOperator::axpy_column(Index j, double alpha, Eigen::Ref<VectorXd> r) const {
  require(j >= 0 && j < cols(), "axpy_column: column index out of range");
  require(r.size() == rows(), "axpy_column: vector length does not match operator rows");
  do_axpy_column(j, alpha, r);
}

double LinearOperator::do_column_dot(Index j, const Eigen::Ref<const VectorXd>& r) const {
  VectorXd e = VectorXd::Zero(cols());
  e[j] = 1.0;
  return matvec(e).dot(r);
}

void LinearOperator::do_axpy_column(Index j, double alpha, Eigen::Ref<VectorXd> r) const {
  VectorXd e = VectorXd::Zero(cols());
  e[j] = 1.0;
  r += alpha * matvec(e);
}

// ----------------------------------------------------------- DenseOperator

DenseOperator::DenseOperator(RowMatrixXd X) : X_(std::move(X)) {
  require(X_.rows() >= 1 && X_.cols() >= 1, "dense operator needs at least one row and column");
}

void DenseOperator::do_matvec(const Eigen::Ref<const VectorXd>& v, Eigen::Ref<VectorXd> out) const {
  out.noalias() = X_ * v;
}

void DenseOperator::do_rmatvec(const Eigen::Ref<const VectorXd>& w, Eigen::Ref<VectorXd> out) const {
  out.noalias() = X_.transpose() * w;
}

VectorXd DenseOperator::do_column_sq_norms() const {
  return X_.colwise().squaredNorm().transpose();
}

double DenseOperator::do_column_dot(Index j, const Eigen::Ref<const VectorXd>& r) const {
  return X_.col(j).dot(r);
}

void DenseOperator::do_axpy_column(Index j, double alpha, Eigen::Ref<VectorXd> r) const {
  r += alpha * X_.col(j);
}

// ----------------------------------------------------- TrendFilterOperator

TrendFilterOperator::TrendFilterOperator(Index n, int order, bool scaled)
    : n_(n), order_(order), scaled_(scaled) {
  if (order < 0 || order > 2)
    throw DomainError("trend filtering order must be 0, 1 or 2, got " + std::to_string(order));
  if (n < order + 2)
    throw DomainError("trend filtering needs n >= order + 2");

  binom_.resize(n_);
  for (Index m = 0; m < n_; ++m) {
    const double x = static_cast<double>(m);
    switch (order_) {
      case 0: binom_[m] = 1.0; break;
      case 1: binom_[m] = x + 1.0; break;
      default: binom_[m] = (x + 1.0) * (x + 2.0) / 2.0; break;
    }
  }
  // norm^2_j = sum_{m=0}^{n-1-j} C(m+k, k)^2, via prefix sums of the squares.
  VectorXd prefix(n_);
  double acc = 0.0;
  for (Index m = 0; m < n_; ++m) prefix[m] = (acc += binom_[m] * binom_[m]);
  unscaled_sq_norms_.resize(n_);
  for (Index j = 0; j < n_; ++j) unscaled_sq_norms_[j] = prefix[n_ - 1 - j];

  scale_ = VectorXd::Ones(n_);
  if (scaled_) {
    const double top = unscaled_sq_norms_.maxCoeff();
    for (Index j = 0; j < n_; ++j) scale_[j] = std::sqrt(top / unscaled_sq_norms_[j]);
  }
}

void TrendFilterOperator::do_matvec(const Eigen::Ref<const VectorXd>& v,
                                    Eigen::Ref<VectorXd> out) const {
  if (scaled_)
    out = v.cwiseProduct(scale_);
  else
    out = v;
  for (int pass = 0; pass <= order_; ++pass) cumsum(out);
}

void TrendFilterOperator::do_rmatvec(const Eigen::Ref<const VectorXd>& w,
                                     Eigen::Ref<VectorXd> out) const {
  out = w;
  for (int pass = 0; pass <= order_; ++pass) rcumsum(out);
  if (scaled_) out.array() *= scale_.array();
}

VectorXd TrendFilterOperator::do_column_sq_norms() const {
  if (!scaled_) return unscaled_sq_norms_;
  return unscaled_sq_norms_.cwiseProduct(scale_.cwiseAbs2());
}

double TrendFilterOperator::do_column_dot(Index j, const Eigen::Ref<const VectorXd>& r) const {
  const Index len = n_ - j;
  return scale_[j] * binom_.head(len).dot(r.tail(len));
}

void TrendFilterOperator::do_axpy_column(Index j, double alpha, Eigen::Ref<VectorXd> r) const {
  const Index len = n_ - j;
  r.tail(len) += (alpha * scale_[j]) * binom_.head(len);
}

std::shared_ptr<const TrendFilterOperator> tf_operator(Index n, int order, bool scaled) {
  return std::make_shared<const TrendFilterOperator>(n, order, scaled);
}

// ---------------------------------------------------- StandardizedOperator

StandardizedOperator::StandardizedOperator(std::shared_ptr<const LinearOperator> base)
    : base_(std::move(base)) {
  require(base_ != nullptr, "standardized operator needs a base operator");
  const double n = static_cast<double>(base_->rows());
  mean_ = base_->rmatvec(VectorXd::Ones(base_->rows())) / n;
  const VectorXd sq = base_->column_sq_norms();
  sd_.resize(mean_.size());
  for (Index j = 0; j < mean_.size(); ++j) {
    const double centred = sq[j] - n * mean_[j] * mean_[j];
    if (!(centred > 0.0))
      throw DomainError("cannot standardize constant column " + std::to_string(j));
    sd_[j] = std::sqrt(centred / n);
  }
}

void StandardizedOperator::do_matvec(const Eigen::Ref<const VectorXd>& v,
                                     Eigen::Ref<VectorXd> out) const {
  const VectorXd scaled = v.cwiseQuotient(sd_);
  base_->matvec(scaled, out);
  out.array() -= mean_.dot(scaled);
}

void StandardizedOperator::do_rmatvec(const Eigen::Ref<const VectorXd>& w,
                                      Eigen::Ref<VectorXd> out) const {
  base_->rmatvec(w, out);
  out -= mean_ * w.sum();
  out.array() /= sd_.array();
}

VectorXd StandardizedOperator::do_column_sq_norms() const {
  return VectorXd::Constant(cols(), static_cast<double>(rows()));
}

double StandardizedOperator::do_column_dot(Index j, const Eigen::Ref<const VectorXd>& r) const {
  return (base_->column_dot(j, r) - mean_[j] * r.sum()) / sd_[j];
}

void StandardizedOperator::do_axpy_column(Index j, double alpha, Eigen::Ref<VectorXd> r) const {
  const double a = alpha / sd_[j];
  base_->axpy_column(j, a, r);
  r.array() -= a * mean_[j];
}

RowMatrixXd to_dense(const LinearOperator& op) {
  RowMatrixXd M(op.rows(), op.cols());
  VectorXd e = VectorXd::Zero(op.cols());
  for (Index j = 0; j < op.cols(); ++j) {
    e[j] = 1.0;
    M.col(j) = op.matvec(e);
    e[j] = 0.0;
  }
  return M;
}

}  // namespace gradvi
