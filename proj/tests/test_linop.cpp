#include <random>

#include "doctest.h"
#include "gradvi/errors.hpp"
#include "gradvi/linop.hpp"
#include "support.hpp"

using namespace gradvi;

namespace {

// Lower-triangular ones matrix raised to the power k + 1.
RowMatrixXd dense_tf(Index n, int k) {
  RowMatrixXd L = RowMatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j <= i; ++j) L(i, j) = 1.0;
  RowMatrixXd H = L;
  for (int r = 0; r < k; ++r) H = (H * L).eval();
  return H;
}

}  // namespace

TEST_CASE("cumulative sum examples") {
  const auto h0 = tf_operator(3, 0, false);
  const VectorXd v = (VectorXd(3) << 1, 2, 3).finished();
  CHECK(h0->matvec(v) == (VectorXd(3) << 1, 3, 6).finished());
  CHECK(h0->rmatvec(v) == (VectorXd(3) << 6, 5, 3).finished());
  CHECK(h0->column_sq_norms() == (VectorXd(3) << 3, 2, 1).finished());

  const auto h1 = tf_operator(3, 1, false);
  CHECK(h1->matvec(VectorXd::Unit(3, 0)) == (VectorXd(3) << 1, 2, 3).finished());
  CHECK(h1->column_sq_norms() == (VectorXd(3) << 14, 5, 1).finished());
}

TEST_CASE("trend-filter operator matches the dense matrix") {
  std::mt19937_64 rng(1);
  for (int k = 0; k <= 2; ++k) {
    for (Index n : {5, 64, 300}) {
      const RowMatrixXd H = dense_tf(n, k);
      const auto op = tf_operator(n, k, false);
      const double scale = H.cwiseAbs().maxCoeff();
      for (int t = 0; t < 10; ++t) {
        const VectorXd v = testing::random_vector(rng, n);
        CHECK((op->matvec(v) - H * v).cwiseAbs().maxCoeff() <= 1e-12 * scale * n);
        CHECK((op->rmatvec(v) - H.transpose() * v).cwiseAbs().maxCoeff() <= 1e-12 * scale * n);
      }
      const VectorXd norms = H.colwise().squaredNorm().transpose();
      CHECK((op->column_sq_norms() - norms).cwiseAbs().maxCoeff() <= 1e-10 * norms.maxCoeff());
      CHECK((to_dense(*op) - H).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("adjoint identity and scaling") {
  std::mt19937_64 rng(2);
  const auto op = tf_operator(64, 2, true);
  const VectorXd v = testing::random_vector(rng, 64), w = testing::random_vector(rng, 64);
  const double lhs = op->matvec(v).dot(w), rhs = v.dot(op->rmatvec(w));
  CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));

  const auto scaled = tf_operator(64, 0, true);
  const VectorXd norms = scaled->column_sq_norms();
  CHECK((norms.array() - norms[0]).abs().maxCoeff() <= 1e-12 * norms[0]);
  const RowMatrixXd D = to_dense(*scaled);
  CHECK((D.colwise().squaredNorm().transpose() - norms).cwiseAbs().maxCoeff() <= 1e-10 * norms[0]);
}

TEST_CASE("column access agrees with full products") {
  std::mt19937_64 rng(3);
  const auto tf = tf_operator(40, 1, true);
  const auto dense = std::make_shared<const DenseOperator>(testing::random_matrix(rng, 30, 12));
  const auto stdz = std::make_shared<const StandardizedOperator>(dense);
  for (const LinearOperator* op : {static_cast<const LinearOperator*>(tf.get()),
                                   static_cast<const LinearOperator*>(dense.get()),
                                   static_cast<const LinearOperator*>(stdz.get())}) {
    const VectorXd r = testing::random_vector(rng, op->rows());
    const VectorXd at = op->rmatvec(r);
    for (Index j = 0; j < op->cols(); ++j) {
      CHECK(op->column_dot(j, r) == doctest::Approx(at[j]).epsilon(1e-12));
      VectorXd a = r, b = r;
      op->axpy_column(j, 0.7, a);
      b += 0.7 * op->matvec(VectorXd::Unit(op->cols(), j));
      CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + b.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("standardized operator") {
  std::mt19937_64 rng(4);
  RowMatrixXd X = testing::random_matrix(rng, 25, 6);
  X.col(2).array() += 5.0;
  const auto stdz = StandardizedOperator(std::make_shared<const DenseOperator>(X));
  const RowMatrixXd Z = to_dense(stdz);
  for (Index j = 0; j < 6; ++j) {
    CHECK(std::abs(Z.col(j).mean()) <= 1e-12);
    CHECK(Z.col(j).squaredNorm() / 25.0 == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK((stdz.column_sq_norms() - Z.colwise().squaredNorm().transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  const VectorXd w = testing::random_vector(rng, 25);
  CHECK((stdz.rmatvec(w) - Z.transpose() * w).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("operator errors") {
  CHECK_THROWS_AS(tf_operator(10, 3, false), DomainError);
  CHECK_THROWS_AS(tf_operator(1, 0, false), DomainError);
  const auto op = tf_operator(5, 0, false);
  CHECK_THROWS_AS(op->matvec(VectorXd::Zero(4)), DomainError);
  CHECK_THROWS_AS(op->rmatvec(VectorXd::Zero(6)), DomainError);
  RowMatrixXd constant = RowMatrixXd::Ones(4, 2);
  CHECK_THROWS_AS(StandardizedOperator(std::make_shared<const DenseOperator>(constant)), DomainError);
}
