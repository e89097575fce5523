#include "refinekit/priors.hpp"

#include <cmath>

#include "refinekit/error.hpp"
#include "refinekit/kernels.hpp"

namespace refinekit {

std::string_view to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::StandardGaussian: return "standard_gaussian";
    case PriorKind::Uniform01: return "uniform01";
    case PriorKind::GaussianMoments: return "gaussian_moments";
    case PriorKind::ScaledGaussian: return "scaled_gaussian";
  }
  return "unknown";
}

void PriorSpec::validate(std::size_t dim) const {
  if (kind == PriorKind::GaussianMoments) {
    if (mu.size() != dim || sigma.size() != dim) {
      throw Error(ErrorCode::MissingMoments, "gaussian_moments prior needs mu and sigma of length " + std::to_string(dim));
    }
    for (std::size_t k = 0; k < dim; ++k) {
      if (!(sigma[k] >= 0.0) || !std::isfinite(mu[k])) throw Error(ErrorCode::MissingMoments, "invalid moment entry", k);
    }
  }
  if (kind == PriorKind::ScaledGaussian && !(beta >= 0.0)) {
    throw Error(ErrorCode::NegativeBeta, "beta must be nonnegative");
  }
}

Matrix sample(const PriorSpec& spec, std::size_t rows, std::size_t dim, Rng& rng) {
  spec.validate(dim);
  Matrix out(rows, dim);
  switch (spec.kind) {
    case PriorKind::StandardGaussian:
      for (double& v : out.flat()) v = rng.normal();
      break;
    case PriorKind::Uniform01:
      for (double& v : out.flat()) v = rng.uniform01();
      break;
    case PriorKind::GaussianMoments:
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t k = 0; k < dim; ++k) out(i, k) = spec.mu[k] + spec.sigma[k] * rng.normal();
      }
      break;
    case PriorKind::ScaledGaussian: {
      // β = 0 is the degenerate N(0, 0I): an exact zero matrix, no draws.
      if (spec.beta == 0.0) break;
      const double scale = std::sqrt(spec.beta);
      for (double& v : out.flat()) v = scale * rng.normal();
      break;
    }
  }
  return out;
}

Moments fit_moments(std::span<const Matrix* const> tables, bool normalize) {
  std::size_t total = 0;
  std::size_t dim = 0;
  for (const Matrix* t : tables) {
    if (total == 0 && t->rows() > 0) dim = t->cols();
    if (t->rows() > 0 && t->cols() != dim) throw Error(ErrorCode::DimensionMismatch, "tables differ in dim");
    total += t->rows();
  }
  if (total < 2) throw Error(ErrorCode::InsufficientData, "need at least 2 rows to fit moments");

  Moments m{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  std::vector<Matrix> prepared;
  prepared.reserve(tables.size());
  for (const Matrix* t : tables) prepared.push_back(normalize ? kernels::normalize_rows(*t) : *t);

  // Two passes: mean, then mean squared deviation (population convention).
  for (const auto& t : prepared) {
    for (std::size_t i = 0; i < t.rows(); ++i) {
      for (std::size_t k = 0; k < dim; ++k) m.mu[k] += t(i, k);
    }
  }
  for (double& v : m.mu) v /= static_cast<double>(total);
  for (const auto& t : prepared) {
    for (std::size_t i = 0; i < t.rows(); ++i) {
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = t(i, k) - m.mu[k];
        m.sigma[k] += d * d;
      }
    }
  }
  for (double& v : m.sigma) v = std::sqrt(v / static_cast<double>(total));
  return m;
}

Moments fit_moments(const Matrix& table, bool normalize) {
  const Matrix* one[] = {&table};
  return fit_moments(std::span<const Matrix* const>(one), normalize);
}

}  // namespace refinekit
