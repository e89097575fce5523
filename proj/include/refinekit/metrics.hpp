#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "refinekit/matrix.hpp"

namespace refinekit {

struct MetricsReport {
  double modality_gap = 0.0;
  double alignment = 0.0;
  double uniformity = 0.0;
  std::size_t n_test = 0;
  std::string notes;
};

enum class RetrievalDirection { TextToImage, ImageToText };
std::string_view to_string(RetrievalDirection d);

struct RetrievalReport {
  RetrievalDirection direction = RetrievalDirection::TextToImage;
  std::map<std::size_t, double> recall_at;
};

// ‖mean(img) − mean(txt)‖²; the means are not re-normalized.
double modality_gap(const Matrix& img, const Matrix& txt);

// mean_i ‖img_i − txt_i‖² over paired rows.
double alignment_score(const Matrix& img, const Matrix& txt);

// (1/(2N)) Σ_{f1,f2 ∈ F} exp(−2‖f1 − f2‖²) with F = img ∪ txt (N pairs).
// Sums every ordered pair, self-pairs included.
double uniformity_score(const Matrix& img, const Matrix& txt);
// Same with F given directly; the normalizer is 1/|F|.
double uniformity_score(const Matrix& features);

MetricsReport feature_metrics(const Matrix& img, const Matrix& txt);

// Dot-product ranking of `gallery` for every query; query q's true match is
// gallery row truth[q]. Ties are broken toward the lower gallery index.
RetrievalReport recall_at_k(const Matrix& queries, const Matrix& gallery, std::span<const std::size_t> truth,
                            std::span<const std::size_t> ks, RetrievalDirection direction);

// 0-based rank of each query's true match under the rule above.
std::vector<std::size_t> true_match_ranks(const Matrix& queries, const Matrix& gallery,
                                          std::span<const std::size_t> truth);

struct ZeroShotResult {
  double accuracy = 0.0;
  std::vector<std::size_t> predictions;
};

// Predicts argmax_c img_i · prompt_c (lowest class index on ties). Throws
// LabelMismatch when labels and images disagree in count or a label is out
// of range.
ZeroShotResult zeroshot_classify(const Matrix& img, const Matrix& prompts, std::span<const std::size_t> labels);

struct PcaResult {
  Matrix coords;      // N×k
  Matrix components;  // k×d, unit rows
  std::vector<double> explained_ratio;
  std::vector<double> variances;
};

// Top principal directions by power iteration with deflation on the
// covariance matrix. Each component's first non-negligible coordinate is
// made positive. Throws InsufficientData for N < 3 and ConvergenceFailure
// when an eigenvector does not settle to 1e-9 within 1000 iterations.
PcaResult pca_project(const Matrix& features, std::size_t n_components = 2);

}  // namespace refinekit
