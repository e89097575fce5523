#pragma once

// Per-row bodies shared by the parallel kernels and their serial twins. Both
// drivers call exactly these functions, which is what makes their results
// bitwise comparable.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "refinekit/matrix.hpp"

namespace refinekit::kernels::detail {

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const std::size_t k_dim = a.cols();
  const std::size_t n = b.cols();
  double* out = c.row(i).data();
  for (std::size_t k = 0; k < k_dim; ++k) {
    const double a_ik = a(i, k);
    const double* b_row = b.row(k).data();
    for (std::size_t j = 0; j < n; ++j) out[j] += a_ik * b_row[j];
  }
}

inline void matmul_abt_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const std::size_t k_dim = a.cols();
  const double* a_row = a.row(i).data();
  for (std::size_t j = 0; j < b.rows(); ++j) {
    const double* b_row = b.row(j).data();
    double acc = 0.0;
    for (std::size_t k = 0; k < k_dim; ++k) acc += a_row[k] * b_row[k];
    c(i, j) = acc;
  }
}

inline void matmul_atb_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t r) {
  const std::size_t n = b.cols();
  double* out = c.row(r).data();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double a_kr = a(k, r);
    const double* b_row = b.row(k).data();
    for (std::size_t j = 0; j < n; ++j) out[j] += a_kr * b_row[j];
  }
}

inline double row_norm(const Matrix& m, std::size_t i) {
  double acc = 0.0;
  for (double v : m.row(i)) acc += v * v;
  return std::sqrt(acc);
}

inline void log_softmax_row(const Matrix& logits, Matrix& out, std::size_t i) {
  const auto in = logits.row(i);
  const double mx = *std::max_element(in.begin(), in.end());
  double denom = 0.0;
  for (double v : in) denom += std::exp(v - mx);
  const double log_denom = std::log(denom);
  auto o = out.row(i);
  for (std::size_t j = 0; j < in.size(); ++j) o[j] = (in[j] - mx) - log_denom;
}

inline double column_sum(const Matrix& m, std::size_t j) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) acc += m(i, j);
  return acc;
}

// Σ_{b>a} exp(-gamma·‖row_a − row_b‖²).
inline double rbf_upper_row(const Matrix& m, std::size_t a, double gamma) {
  const double* ra = m.row(a).data();
  const std::size_t d = m.cols();
  double acc = 0.0;
  for (std::size_t b = a + 1; b < m.rows(); ++b) {
    const double* rb = m.row(b).data();
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = ra[k] - rb[k];
      sq += diff * diff;
    }
    acc += std::exp(-gamma * sq);
  }
  return acc;
}

inline double paired_sq_dist_row(const Matrix& a, const Matrix& b, std::size_t i) {
  const double* ra = a.row(i).data();
  const double* rb = b.row(i).data();
  double sq = 0.0;
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double diff = ra[k] - rb[k];
    sq += diff * diff;
  }
  return sq;
}

inline double ordered_sum(const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += v[i];
  return acc;
}

}  // namespace refinekit::kernels::detail
