#pragma once

// Matrix-free design operators R^p -> R^n.

#include <Eigen/Core>
#include <memory>
#include <string>

namespace gradvi {

using Eigen::Index;
using Eigen::VectorXd;
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Abstract linear map with forward and adjoint products.
///
/// Public entry points validate dimensions and forward to the private
/// virtuals, so implementations can assume well-formed arguments.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual std::string kind() const = 0;

  /// out = A v
  void matvec(const Eigen::Ref<const VectorXd>& v, Eigen::Ref<VectorXd> out) const;
  VectorXd matvec(const Eigen::Ref<const VectorXd>& v) const;
  /// out = A^T w
  void rmatvec(const Eigen::Ref<const VectorXd>& w, Eigen::Ref<VectorXd> out) const;
  VectorXd rmatvec(const Eigen::Ref<const VectorXd>& w) const;

  /// ||A e_j||^2 for every column.
  VectorXd column_sq_norms() const { return do_column_sq_norms(); }

  /// Column-wise access used by coordinate ascent: x_j^T r and r += alpha x_j.
  double column_dot(Index j, const Eigen::Ref<const VectorXd>& r) const;
  void axpy_column(Index j, double alpha, Eigen::Ref<VectorXd> r) const;

 private:
  virtual void do_matvec(const Eigen::Ref<const VectorXd>& v, Eigen::Ref<VectorXd> out) const = 0;
  virtual void do_rmatvec(const Eigen::Ref<const VectorXd>& w, Eigen::Ref<VectorXd> out) const = 0;
  virtual VectorXd do_column_sq_norms() const = 0;
  // Defaults go through a full product with e_j.
  virtual double do_column_dot(Index j, const Eigen::Ref<const VectorXd>& r) const;
  virtual void do_axpy_column(Index j, double alpha, Eigen::Ref<VectorXd> r) const;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(RowMatrixXd X);

  Index rows() const override { return X_.rows(); }
  Index cols() const override { return X_.cols(); }
  std::string kind() const override { return "dense"; }
  const RowMatrixXd& matrix() const noexcept { return X_; }

 private:
  void do_matvec(const Eigen::Ref<const VectorXd>& v, Eigen::Ref<VectorXd> out) const override;
  void do_rmatvec(const Eigen::Ref<const VectorXd>& w, Eigen::Ref<VectorXd> out) const override;
  VectorXd do_column_sq_norms() const override;
  double do_column_dot(Index j, const Eigen::Ref<const VectorXd>& r) const override;
  void do_axpy_column(Index j, double alpha, Eigen::Ref<VectorXd> r) const override;

  RowMatrixXd X_;
};

/// H^(k+1) diag(s): the (k+1)-fold cumulative-sum operator on R^n, with an
/// optional per-column scale chosen so every column has the largest column
/// norm. Column j has entries C(i - j + k, k) for i >= j.
class TrendFilterOperator final : public LinearOperator {
 public:
  TrendFilterOperator(Index n, int order, bool scaled);

  Index rows() const override { return n_; }
  Index cols() const override { return n_; }
  std::string kind() const override { return "trendfilter"; }
  int order() const noexcept { return order_; }
  bool scaled() const noexcept { return scaled_; }
  /// Per-column scale factors (all ones when unscaled).
  const VectorXd& scales() const noexcept { return scale_; }

 private:
  void do_matvec(const Eigen::Ref<const VectorXd>& v, Eigen::Ref<VectorXd> out) const override;
  void do_rmatvec(const Eigen::Ref<const VectorXd>& w, Eigen::Ref<VectorXd> out) const override;
  VectorXd do_column_sq_norms() const override;
  double do_column_dot(Index j, const Eigen::Ref<const VectorXd>& r) const override;
  void do_axpy_column(Index j, double alpha, Eigen::Ref<VectorXd> r) const override;

  Index n_;
  int order_;
  bool scaled_;
  VectorXd scale_;
  VectorXd unscaled_sq_norms_;
  VectorXd binom_;  // C(m + k, k), m = 0..n-1
};

/// Centres every column (and scales it to unit variance) without touching the
/// wrapped operator.
class StandardizedOperator final : public LinearOperator {
 public:
  explicit StandardizedOperator(std::shared_ptr<const LinearOperator> base);

  Index rows() const override { return base_->rows(); }
  Index cols() const override { return base_->cols(); }
  std::string kind() const override { return "standardized " + base_->kind(); }
  const VectorXd& column_means() const noexcept { return mean_; }
  const VectorXd& column_scales() const noexcept { return sd_; }

 private:
  void do_matvec(const Eigen::Ref<const VectorXd>& v, Eigen::Ref<VectorXd> out) const override;
  void do_rmatvec(const Eigen::Ref<const VectorXd>& w, Eigen::Ref<VectorXd> out) const override;
  VectorXd do_column_sq_norms() const override;
  double do_column_dot(Index j, const Eigen::Ref<const VectorXd>& r) const override;
  void do_axpy_column(Index j, double alpha, Eigen::Ref<VectorXd> r) const override;

  std::shared_ptr<const LinearOperator> base_;
  VectorXd mean_;
  VectorXd sd_;
};

/// Requires k in {0, 1, 2} and n >= k + 2.
std::shared_ptr<const TrendFilterOperator> tf_operator(Index n, int order, bool scaled);

/// Explicit matrix of any operator, column by column (tests and small n only).
RowMatrixXd to_dense(const LinearOperator& op);

}  // namespace gradvi
