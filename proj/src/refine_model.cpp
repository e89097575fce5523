#include "refinekit/refine_model.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include "refinekit/error.hpp"
#include "refinekit/io_util.hpp"
#include "refinekit/kernels.hpp"
#include "refinekit/random.hpp"

namespace refinekit {

namespace {
using omp_index = long long;
}

RefineHead::RefineHead(std::size_t dim, std::size_t hidden)
    : w1(dim, hidden), b1(hidden, 0.0), w2(hidden, dim), b2(dim, 0.0) {}

std::array<std::span<double>, 4> RefineHead::blocks() {
  return {w1.flat(), std::span<double>(b1), w2.flat(), std::span<double>(b2)};
}

std::array<std::span<const double>, 4> RefineHead::blocks() const {
  return {w1.flat(), std::span<const double>(b1), w2.flat(), std::span<const double>(b2)};
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

ForwardCache forward_cached(const RefineHead& head, const Matrix& raw) {
  if (raw.cols() != head.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "batch dim " + std::to_string(raw.cols()) + " != head dim " + std::to_string(head.dim()));
  }
  ForwardCache c;
  c.unit_in = kernels::normalize_rows(raw);
  c.pre = kernels::matmul(c.unit_in, head.w1);
  const auto rows = static_cast<omp_index>(raw.rows());
  c.hidden = Matrix(c.pre.rows(), c.pre.cols());
#pragma omp parallel for schedule(static)
  for (omp_index i = 0; i < rows; ++i) {
    auto pre = c.pre.row(static_cast<std::size_t>(i));
    auto hid = c.hidden.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < pre.size(); ++j) {
      pre[j] += head.b1[j];
      hid[j] = gelu(pre[j]);
    }
  }
  c.residual = kernels::matmul(c.hidden, head.w2);
#pragma omp parallel for schedule(static)
  for (omp_index i = 0; i < rows; ++i) {
    auto r = c.residual.row(static_cast<std::size_t>(i));
    auto u = c.unit_in.row(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = (u[k] + r[k]) + head.b2[k];
  }
  c.out = kernels::normalize_rows(c.residual, &c.residual_norm);
  return c;
}

Matrix forward(const RefineHead& head, const Matrix& raw) { return forward_cached(head, raw).out; }

RefineHead backward(const RefineHead& head, const ForwardCache& cache, const Matrix& grad_out,
                    const Matrix* grad_residual) {
  if (!grad_out.same_shape(cache.out)) throw Error(ErrorCode::ShapeMismatch, "grad_out shape differs from forward output");
  if (grad_residual && !grad_residual->same_shape(cache.out)) {
    throw Error(ErrorCode::ShapeMismatch, "grad_residual shape differs from forward output");
  }
  const auto rows = static_cast<omp_index>(grad_out.rows());

  // Through z = r/‖r‖: ∂L/∂r = (g − z(z·g)) / ‖r‖.
  Matrix d_res(grad_out.rows(), grad_out.cols());
#pragma omp parallel for schedule(static)
  for (omp_index ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto z = cache.out.row(i);
    const auto g = grad_out.row(i);
    double zg = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) zg += z[k] * g[k];
    auto dr = d_res.row(i);
    for (std::size_t k = 0; k < z.size(); ++k) dr[k] = (g[k] - z[k] * zg) / cache.residual_norm[i];
    if (grad_residual) {
      const auto extra = grad_residual->row(i);
      for (std::size_t k = 0; k < z.size(); ++k) dr[k] += extra[k];
    }
  }

  RefineHead grad;
  grad.w2 = kernels::matmul_atb(cache.hidden, d_res);
  grad.b2 = kernels::column_sum(d_res);

  Matrix d_pre = kernels::matmul_abt(d_res, head.w2);
#pragma omp parallel for schedule(static)
  for (omp_index ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto dp = d_pre.row(i);
    const auto pre = cache.pre.row(i);
    for (std::size_t j = 0; j < dp.size(); ++j) dp[j] *= gelu_derivative(pre[j]);
  }
  grad.w1 = kernels::matmul_atb(cache.unit_in, d_pre);
  grad.b1 = kernels::column_sum(d_pre);
  return grad;
}

RefineHead init_identity(std::size_t dim, std::size_t hidden, std::uint64_t seed) {
  if (dim == 0 || hidden == 0) throw Error(ErrorCode::InvalidArgument, "head dims must be positive");
  RefineHead head(dim, hidden);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& w : head.w1.flat()) w = scale * rng.normal();
  return head;
}

std::vector<std::uint8_t> serialize_head(const RefineHead& head) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + 8 * head.parameter_count());
  out.insert(out.end(), {'R', 'H', 'D', '1'});
  io::put_u32(out, kHeadVersion);
  io::put_u32(out, static_cast<std::uint32_t>(head.dim()));
  io::put_u32(out, static_cast<std::uint32_t>(head.hidden()));
  for (const auto block : head.blocks()) {
    for (double v : block) io::put_f64(out, v);
  }
  return out;
}

RefineHead deserialize_head(std::span<const std::uint8_t> bytes, std::optional<std::size_t> expected_dim) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "RHD1", 4) != 0) throw Error(ErrorCode::BadMagic, "missing RHD1 magic", 0);
  if (bytes.size() < 16) throw Error(ErrorCode::TruncatedFile, "head header cut short", bytes.size());
  const std::uint32_t version = io::get_u32(bytes.data() + 4);
  if (version != kHeadVersion) throw Error(ErrorCode::VersionMismatch, "unsupported head version " + std::to_string(version), 4);
  const std::size_t dim = io::get_u32(bytes.data() + 8);
  const std::size_t hidden = io::get_u32(bytes.data() + 12);
  if (dim == 0 || hidden == 0) throw Error(ErrorCode::BadFormat, "head dims must be positive", 8);
  if (expected_dim && *expected_dim != dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "head dim " + std::to_string(dim) + " != data dim " + std::to_string(*expected_dim));
  }
  RefineHead head(dim, hidden);
  if (bytes.size() != 16 + 8 * head.parameter_count()) {
    throw Error(ErrorCode::TruncatedFile, "head parameter block has wrong length", bytes.size());
  }
  std::size_t off = 16;
  std::size_t idx = 0;
  for (auto block : head.blocks()) {
    for (double& v : block) {
      v = io::get_f64(bytes.data() + off);
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "non-finite head parameter", idx);
      off += 8;
      ++idx;
    }
  }
  return head;
}

void save_head(const RefineHead& head, const std::filesystem::path& path) {
  io::write_atomic(path, serialize_head(head));
}

RefineHead load_head(const std::filesystem::path& path, std::optional<std::size_t> expected_dim) {
  return deserialize_head(io::read_file(path), expected_dim);
}

std::string head_checksum(const RefineHead& head) { return io::sha256_hex(serialize_head(head)); }

TeacherBank TeacherBank::from(const PairedDataset& data) {
  return TeacherBank{kernels::normalize_rows(data.images.to_matrix()), kernels::normalize_rows(data.texts.to_matrix())};
}

}  // namespace refinekit
