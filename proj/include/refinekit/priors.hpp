#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "refinekit/matrix.hpp"
#include "refinekit/random.hpp"

namespace refinekit {

enum class PriorKind { StandardGaussian, Uniform01, GaussianMoments, ScaledGaussian };

std::string_view to_string(PriorKind kind);

// Shared prior p(z) for RaFA reference vectors.
struct PriorSpec {
  PriorKind kind = PriorKind::StandardGaussian;
  std::vector<double> mu;     // GaussianMoments only
  std::vector<double> sigma;  // GaussianMoments only, entries ≥ 0
  double beta = 1.0;          // ScaledGaussian only: N(0, βI)

  static PriorSpec standard_gaussian() { return {}; }
  static PriorSpec uniform01() { return {PriorKind::Uniform01, {}, {}, 1.0}; }
  static PriorSpec scaled_gaussian(double beta) { return {PriorKind::ScaledGaussian, {}, {}, beta}; }
  static PriorSpec gaussian_moments(std::vector<double> mu, std::vector<double> sigma) {
    return {PriorKind::GaussianMoments, std::move(mu), std::move(sigma), 1.0};
  }

  // Throws MissingMoments / NegativeBeta on an incomplete spec for `dim`.
  void validate(std::size_t dim) const;
};

// Draws a fresh rows×dim matrix of reference vectors, advancing `rng`.
Matrix sample(const PriorSpec& spec, std::size_t rows, std::size_t dim, Rng& rng);

struct Moments {
  std::vector<double> mu;
  std::vector<double> sigma;
};

// Per-coordinate mean and population standard deviation over the union of
// `tables` (rows optionally L2-normalized first). Throws InsufficientData if
// fewer than 2 rows in total.
Moments fit_moments(std::span<const Matrix* const> tables, bool normalize);
Moments fit_moments(const Matrix& table, bool normalize);

}  // namespace refinekit
