#pragma once

#include <cstddef>
#include <vector>

#include "refinekit/matrix.hpp"

// Dense numeric kernels shared by the model, losses and metrics.
//
// The functions in `refinekit::kernels` are OpenMP-parallel over output rows.
// Each has a twin in `refinekit::kernels::serial` that performs the same
// floating-point operations in the same order on one thread; the two must
// agree bitwise whenever the execution policy is deterministic. The serial
// twins exist for testing and benchmarking.
namespace refinekit::kernels {

// C = A·B, A is m×k, B is k×n.
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A·Bᵀ, A is m×k, B is n×k. Used for in-batch similarity logits.
Matrix matmul_abt(const Matrix& a, const Matrix& b);
// C = Aᵀ·B, A is k×m, B is k×n. Used for parameter gradients.
Matrix matmul_atb(const Matrix& a, const Matrix& b);

// Divides each row by its L2 norm; `norms` receives the pre-division norms.
// Throws Error(ZeroNorm, row) when a norm is below 1e-12.
Matrix normalize_rows(const Matrix& m, std::vector<double>* norms = nullptr);

// Row-wise log-softmax computed from max-shifted logits.
Matrix log_softmax_rows(const Matrix& logits);

std::vector<double> column_sum(const Matrix& m);
std::vector<double> column_mean(const Matrix& m);

// Σ over all ordered row pairs (a, b), self-pairs included, of
// exp(-gamma·‖row_a − row_b‖²).
double rbf_pair_sum(const Matrix& rows, double gamma);

// Σ_i ‖a_i − b_i‖² over paired rows.
double paired_sq_dist_sum(const Matrix& a, const Matrix& b);

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_abt(const Matrix& a, const Matrix& b);
Matrix matmul_atb(const Matrix& a, const Matrix& b);
Matrix normalize_rows(const Matrix& m, std::vector<double>* norms = nullptr);
Matrix log_softmax_rows(const Matrix& logits);
std::vector<double> column_sum(const Matrix& m);
std::vector<double> column_mean(const Matrix& m);
double rbf_pair_sum(const Matrix& rows, double gamma);
double paired_sq_dist_sum(const Matrix& a, const Matrix& b);

}  // namespace serial

}  // namespace refinekit::kernels
