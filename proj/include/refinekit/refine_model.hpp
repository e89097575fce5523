#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refinekit/embedding_store.hpp"
#include "refinekit/matrix.hpp"

namespace refinekit {

// Residual MLP over a frozen embedding:
//   u = x / ‖x‖
//   r = u + GELU(u·W1 + b1)·W2 + b2
//   z = r / ‖r‖
// W1 is d×h, W2 is h×d. With W2 = 0 and b2 = 0 the head reproduces the frozen
// (normalized) embedding exactly.
struct RefineHead {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;

  RefineHead() = default;
  RefineHead(std::size_t dim, std::size_t hidden);

  std::size_t dim() const noexcept { return w1.rows(); }
  std::size_t hidden() const noexcept { return w1.cols(); }
  std::size_t parameter_count() const noexcept { return w1.size() + b1.size() + w2.size() + b2.size(); }

  // Parameter blocks in declaration order (W1, b1, W2, b2).
  std::array<std::span<double>, 4> blocks();
  std::array<std::span<const double>, 4> blocks() const;

  friend bool operator==(const RefineHead&, const RefineHead&) = default;
};

// Intermediates kept by forward_cached() for backward().
struct ForwardCache {
  Matrix unit_in;
  Matrix pre;
  Matrix hidden;
  Matrix residual;
  std::vector<double> residual_norm;
  Matrix out;
};

// Student forward on a B×d batch of raw rows. Throws ZeroNorm on a raw row
// (or residual) with norm < 1e-12.
Matrix forward(const RefineHead& head, const Matrix& raw);
ForwardCache forward_cached(const RefineHead& head, const Matrix& raw);

// Reverse pass. `grad_out` is ∂L/∂z for every output row; `grad_residual`,
// when given, is an extra ∂L/∂r on the pre-normalization residual. Returns
// ∂L/∂θ in the head's own layout.
RefineHead backward(const RefineHead& head, const ForwardCache& cache, const Matrix& grad_out,
                    const Matrix* grad_residual = nullptr);

// W1 ~ N(0, 1/d), b1 = W2 = b2 = 0.
RefineHead init_identity(std::size_t dim, std::size_t hidden, std::uint64_t seed);

double gelu(double x);
double gelu_derivative(double x);

// "RHD1", u32 version, u32 d, u32 h, then W1, b1, W2, b2 as LE float64.
inline constexpr std::uint32_t kHeadVersion = 1;
std::vector<std::uint8_t> serialize_head(const RefineHead& head);
RefineHead deserialize_head(std::span<const std::uint8_t> bytes, std::optional<std::size_t> expected_dim = std::nullopt);
void save_head(const RefineHead& head, const std::filesystem::path& path);
RefineHead load_head(const std::filesystem::path& path, std::optional<std::size_t> expected_dim = std::nullopt);

// SHA-256 of the serialized head.
std::string head_checksum(const RefineHead& head);

// Frozen, unit-normalized embeddings of the pre-trained encoders. Row i of
// `images` and `texts` belong to pair i of the dataset it was built from.
struct TeacherBank {
  Matrix images;
  Matrix texts;

  static TeacherBank from(const PairedDataset& data);
};

}  // namespace refinekit
