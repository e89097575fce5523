#include <vector>

#include "kernel_rows.hpp"
#include "refinekit/error.hpp"
#include "refinekit/kernels.hpp"

namespace refinekit::kernels::serial {

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}
}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) detail::matmul_row(a, b, c, i);
  return c;
}

Matrix matmul_abt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_abt: feature dimensions differ");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) detail::matmul_abt_row(a, b, c, i);
  return c;
}

Matrix matmul_atb(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_atb: batch dimensions differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.cols(); ++r) detail::matmul_atb_row(a, b, c, r);
  return c;
}

Matrix normalize_rows(const Matrix& m, std::vector<double>* norms) {
  std::vector<double> n(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    n[i] = detail::row_norm(m, i);
    if (!(n[i] >= 1e-12)) throw Error(ErrorCode::ZeroNorm, "row has (near-)zero norm", i);
  }
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t k = 0; k < m.cols(); ++k) out(i, k) = m(i, k) / n[i];
  }
  if (norms) *norms = std::move(n);
  return out;
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) detail::log_softmax_row(logits, out, i);
  return out;
}

std::vector<double> column_sum(const Matrix& m) {
  std::vector<double> sum(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) sum[j] = detail::column_sum(m, j);
  return sum;
}

std::vector<double> column_mean(const Matrix& m) {
  std::vector<double> mean(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) mean[j] = detail::column_sum(m, j) / static_cast<double>(m.rows());
  return mean;
}

double rbf_pair_sum(const Matrix& rows, double gamma) {
  std::vector<double> partial(rows.rows());
  for (std::size_t a = 0; a < rows.rows(); ++a) partial[a] = detail::rbf_upper_row(rows, a, gamma);
  return static_cast<double>(rows.rows()) + 2.0 * detail::ordered_sum(partial.data(), partial.size());
}

double paired_sq_dist_sum(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "paired_sq_dist_sum: shapes differ");
  std::vector<double> partial(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) partial[i] = detail::paired_sq_dist_row(a, b, i);
  return detail::ordered_sum(partial.data(), partial.size());
}

}  // namespace refinekit::kernels::serial
