#include "refinekit/kernels.hpp"

#include <cmath>
#include <vector>

#include "kernel_rows.hpp"
#include "refinekit/error.hpp"
#include "refinekit/parallel.hpp"

namespace refinekit::kernels {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

// Rows of a kernel are independent, so a signed loop index is all OpenMP needs.
using omp_index = long long;

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  const auto m = static_cast<omp_index>(a.rows());
#pragma omp parallel for schedule(static)
  for (omp_index i = 0; i < m; ++i) detail::matmul_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

Matrix matmul_abt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_abt: feature dimensions differ");
  Matrix c(a.rows(), b.rows());
  const auto m = static_cast<omp_index>(a.rows());
#pragma omp parallel for schedule(static)
  for (omp_index i = 0; i < m; ++i) detail::matmul_abt_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

Matrix matmul_atb(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_atb: batch dimensions differ");
  Matrix c(a.cols(), b.cols());
  const auto m = static_cast<omp_index>(a.cols());
#pragma omp parallel for schedule(static)
  for (omp_index r = 0; r < m; ++r) detail::matmul_atb_row(a, b, c, static_cast<std::size_t>(r));
  return c;
}

Matrix normalize_rows(const Matrix& m, std::vector<double>* norms) {
  std::vector<double> n(m.rows());
  const auto rows = static_cast<omp_index>(m.rows());
#pragma omp parallel for schedule(static)
  for (omp_index i = 0; i < rows; ++i) n[i] = detail::row_norm(m, static_cast<std::size_t>(i));
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] >= 1e-12)) throw Error(ErrorCode::ZeroNorm, "row has (near-)zero norm", i);
  }
  Matrix out(m.rows(), m.cols());
#pragma omp parallel for schedule(static)
  for (omp_index i = 0; i < rows; ++i) {
    auto src = m.row(static_cast<std::size_t>(i));
    auto dst = out.row(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k] / n[i];
  }
  if (norms) *norms = std::move(n);
  return out;
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  const auto rows = static_cast<omp_index>(logits.rows());
#pragma omp parallel for schedule(static)
  for (omp_index i = 0; i < rows; ++i) detail::log_softmax_row(logits, out, static_cast<std::size_t>(i));
  return out;
}

std::vector<double> column_sum(const Matrix& m) {
  std::vector<double> sum(m.cols());
  const auto cols = static_cast<omp_index>(m.cols());
#pragma omp parallel for schedule(static)
  for (omp_index j = 0; j < cols; ++j) sum[j] = detail::column_sum(m, static_cast<std::size_t>(j));
  return sum;
}

std::vector<double> column_mean(const Matrix& m) {
  std::vector<double> mean(m.cols());
  const auto cols = static_cast<omp_index>(m.cols());
  const double n = static_cast<double>(m.rows());
#pragma omp parallel for schedule(static)
  for (omp_index j = 0; j < cols; ++j) mean[j] = detail::column_sum(m, static_cast<std::size_t>(j)) / n;
  return mean;
}

double rbf_pair_sum(const Matrix& rows, double gamma) {
  const auto n = static_cast<omp_index>(rows.rows());
  double upper = 0.0;
  if (execution_policy().deterministic) {
    std::vector<double> partial(rows.rows());
    // Row a costs O(n - a); dynamic scheduling balances the triangle.
#pragma omp parallel for schedule(dynamic, 16)
    for (omp_index a = 0; a < n; ++a) partial[a] = detail::rbf_upper_row(rows, static_cast<std::size_t>(a), gamma);
    upper = detail::ordered_sum(partial.data(), partial.size());
  } else {
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : upper)
    for (omp_index a = 0; a < n; ++a) upper += detail::rbf_upper_row(rows, static_cast<std::size_t>(a), gamma);
  }
  return static_cast<double>(rows.rows()) + 2.0 * upper;
}

double paired_sq_dist_sum(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "paired_sq_dist_sum: shapes differ");
  const auto n = static_cast<omp_index>(a.rows());
  if (execution_policy().deterministic) {
    std::vector<double> partial(a.rows());
#pragma omp parallel for schedule(static)
    for (omp_index i = 0; i < n; ++i) partial[i] = detail::paired_sq_dist_row(a, b, static_cast<std::size_t>(i));
    return detail::ordered_sum(partial.data(), partial.size());
  }
  double total = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : total)
  for (omp_index i = 0; i < n; ++i) total += detail::paired_sq_dist_row(a, b, static_cast<std::size_t>(i));
  return total;
}

}  // namespace refinekit::kernels
