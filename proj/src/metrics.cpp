#include "refinekit/metrics.hpp"

#include <cmath>

#include "refinekit/error.hpp"
#include "refinekit/kernels.hpp"

namespace refinekit {

namespace {

using omp_index = long long;

void require_nonempty(const Matrix& m, const char* what) {
  if (m.rows() == 0) throw Error(ErrorCode::EmptySet, std::string(what) + ": empty feature set");
}

Matrix stack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  std::copy(a.flat().begin(), a.flat().end(), out.flat().begin());
  std::copy(b.flat().begin(), b.flat().end(), out.flat().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

double frobenius(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.flat()) acc += v * v;
  return std::sqrt(acc);
}

void normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
}

std::vector<double> mat_vec(const Matrix& m, const std::vector<double>& v) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t k = 0; k < m.cols(); ++k) out[i] += m(i, k) * v[k];
  }
  return out;
}

// A unit vector orthogonal to `previous`, from the first standard basis
// vector that survives Gram-Schmidt. Used when the remaining spectrum is zero.
std::vector<double> orthogonal_fill(const std::vector<std::vector<double>>& previous, std::size_t dim) {
  for (std::size_t e = 0; e < dim; ++e) {
    std::vector<double> v(dim, 0.0);
    v[e] = 1.0;
    for (const auto& p : previous) {
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += p[k] * v[k];
      for (std::size_t k = 0; k < dim; ++k) v[k] -= dot * p[k];
    }
    double n = 0.0;
    for (double x : v) n += x * x;
    if (n > 1e-6) {
      normalize(v);
      return v;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "more components requested than dimensions");
}

}  // namespace

std::string_view to_string(RetrievalDirection d) {
  return d == RetrievalDirection::TextToImage ? "T2I" : "I2T";
}

double modality_gap(const Matrix& img, const Matrix& txt) {
  require_nonempty(img, "modality_gap");
  require_nonempty(txt, "modality_gap");
  if (img.cols() != txt.cols()) throw Error(ErrorCode::ShapeMismatch, "modality_gap: dims differ");
  const auto mi = kernels::column_mean(img);
  const auto mt = kernels::column_mean(txt);
  double gap = 0.0;
  for (std::size_t k = 0; k < mi.size(); ++k) gap += (mi[k] - mt[k]) * (mi[k] - mt[k]);
  return gap;
}

double alignment_score(const Matrix& img, const Matrix& txt) {
  require_nonempty(img, "alignment_score");
  if (!img.same_shape(txt)) throw Error(ErrorCode::ShapeMismatch, "alignment_score: shapes differ");
  return kernels::paired_sq_dist_sum(img, txt) / static_cast<double>(img.rows());
}

double uniformity_score(const Matrix& features) {
  require_nonempty(features, "uniformity_score");
  return kernels::rbf_pair_sum(features, 2.0) / static_cast<double>(features.rows());
}

double uniformity_score(const Matrix& img, const Matrix& txt) {
  require_nonempty(img, "uniformity_score");
  if (!img.same_shape(txt)) throw Error(ErrorCode::ShapeMismatch, "uniformity_score: shapes differ");
  return uniformity_score(stack(img, txt));
}

MetricsReport feature_metrics(const Matrix& img, const Matrix& txt) {
  MetricsReport r;
  r.modality_gap = modality_gap(img, txt);
  r.alignment = alignment_score(img, txt);
  r.uniformity = uniformity_score(img, txt);
  r.n_test = img.rows();
  return r;
}

std::vector<std::size_t> true_match_ranks(const Matrix& queries, const Matrix& gallery,
                                          std::span<const std::size_t> truth) {
  if (queries.cols() != gallery.cols()) throw Error(ErrorCode::ShapeMismatch, "retrieval: dims differ");
  if (truth.size() != queries.rows()) throw Error(ErrorCode::ShapeMismatch, "retrieval: one truth index per query");
  for (std::size_t q = 0; q < truth.size(); ++q) {
    if (truth[q] >= gallery.rows()) throw Error(ErrorCode::ShapeMismatch, "retrieval: truth index out of range", q);
  }
  const Matrix sims = kernels::matmul_abt(queries, gallery);
  std::vector<std::size_t> ranks(queries.rows());
  const auto n = static_cast<omp_index>(queries.rows());
#pragma omp parallel for schedule(static)
  for (omp_index qi = 0; qi < n; ++qi) {
    const auto q = static_cast<std::size_t>(qi);
    const std::size_t t = truth[q];
    const double target = sims(q, t);
    std::size_t ahead = 0;
    for (std::size_t g = 0; g < gallery.rows(); ++g) {
      const double s = sims(q, g);
      if (s > target || (s == target && g < t)) ++ahead;
    }
    ranks[q] = ahead;
  }
  return ranks;
}

RetrievalReport recall_at_k(const Matrix& queries, const Matrix& gallery, std::span<const std::size_t> truth,
                            std::span<const std::size_t> ks, RetrievalDirection direction) {
  require_nonempty(queries, "recall_at_k");
  const auto ranks = true_match_ranks(queries, gallery, truth);
  RetrievalReport report;
  report.direction = direction;
  for (std::size_t k : ks) {
    std::size_t hits = 0;
    for (std::size_t r : ranks) hits += r < k ? 1 : 0;
    report.recall_at[k] = static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  return report;
}

ZeroShotResult zeroshot_classify(const Matrix& img, const Matrix& prompts, std::span<const std::size_t> labels) {
  require_nonempty(img, "zeroshot_classify");
  if (labels.size() != img.rows()) throw Error(ErrorCode::LabelMismatch, "one label per image required");
  if (prompts.rows() < 2) throw Error(ErrorCode::LabelMismatch, "need at least 2 class prompts");
  if (prompts.cols() != img.cols()) throw Error(ErrorCode::ShapeMismatch, "prompt dim differs from image dim");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= prompts.rows()) throw Error(ErrorCode::LabelMismatch, "label out of range", i);
  }
  const Matrix sims = kernels::matmul_abt(img, prompts);
  ZeroShotResult out;
  out.predictions.resize(img.rows());
  const auto n = static_cast<omp_index>(img.rows());
#pragma omp parallel for schedule(static)
  for (omp_index ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::size_t best = 0;
    for (std::size_t c = 1; c < prompts.rows(); ++c) {
      if (sims(i, c) > sims(i, best)) best = c;
    }
    out.predictions[i] = best;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += out.predictions[i] == labels[i] ? 1 : 0;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  return out;
}

PcaResult pca_project(const Matrix& features, std::size_t n_components) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n < 3) throw Error(ErrorCode::InsufficientData, "PCA needs at least 3 points");
  if (n_components == 0 || n_components > d) throw Error(ErrorCode::InvalidArgument, "invalid component count");

  const auto mean = kernels::column_mean(features);
  Matrix centered(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) centered(i, k) = features(i, k) - mean[k];
  }
  Matrix cov = kernels::matmul_atb(centered, centered);
  for (double& v : cov.flat()) v /= static_cast<double>(n);
  double total_var = 0.0;
  for (std::size_t k = 0; k < d; ++k) total_var += cov(k, k);

  constexpr double kTol = 1e-9;
  constexpr int kMaxIter = 1000;
  // Repeated squaring raises the eigenvalue ratio to the 2^10-th power per
  // application, so near-degenerate spectra still settle quickly.
  constexpr int kSquarings = 10;

  PcaResult out;
  out.components = Matrix(n_components, d);
  std::vector<std::vector<double>> found;
  Matrix deflated = cov;
  for (std::size_t c = 0; c < n_components; ++c) {
    std::vector<double> v;
    const double scale = frobenius(deflated);
    if (!(scale > 1e-14 * std::max(total_var, 1e-300))) {
      v = orthogonal_fill(found, d);
    } else {
      Matrix op = deflated;
      for (double& x : op.flat()) x /= scale;
      for (int s = 0; s < kSquarings; ++s) {
        op = kernels::matmul(op, op);
        const double f = frobenius(op);
        if (!(f > 0.0)) break;
        for (double& x : op.flat()) x /= f;
      }
      // The powered operator is close to rank one; its heaviest column is a
      // good starting vector.
      std::size_t best_col = 0;
      double best_norm = -1.0;
      for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += op(i, k) * op(i, k);
        if (s > best_norm) {
          best_norm = s;
          best_col = k;
        }
      }
      v.assign(d, 0.0);
      for (std::size_t i = 0; i < d; ++i) v[i] = op(i, best_col);
      if (!(best_norm > 0.0)) v = orthogonal_fill(found, d);
      normalize(v);
      bool converged = false;
      for (int it = 0; it < kMaxIter; ++it) {
        auto next = mat_vec(op, v);
        double nn = 0.0;
        for (double x : next) nn += x * x;
        if (!(nn > 0.0)) {
          converged = true;
          break;
        }
        normalize(next);
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += next[k] * v[k];
        if (dot < 0.0) {
          for (double& x : next) x = -x;
        }
        double diff = 0.0;
        for (std::size_t k = 0; k < d; ++k) diff += (next[k] - v[k]) * (next[k] - v[k]);
        v = std::move(next);
        if (std::sqrt(diff) < kTol) {
          converged = true;
          break;
        }
      }
      if (!converged) throw Error(ErrorCode::ConvergenceFailure, "power iteration did not converge", c);
      // Re-orthogonalize against earlier components to shed deflation error.
      for (const auto& p : found) {
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += p[k] * v[k];
        for (std::size_t k = 0; k < d; ++k) v[k] -= dot * p[k];
      }
      normalize(v);
    }
    for (double x : v) {
      if (std::abs(x) > 1e-12) {
        if (x < 0.0) {
          for (double& y : v) y = -y;
        }
        break;
      }
    }
    const auto cv = mat_vec(cov, v);
    double lambda = 0.0;
    for (std::size_t k = 0; k < d; ++k) lambda += v[k] * cv[k];
    lambda = std::max(lambda, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k < d; ++k) deflated(i, k) -= lambda * v[i] * v[k];
    }
    std::copy(v.begin(), v.end(), out.components.row(c).begin());
    out.variances.push_back(lambda);
    out.explained_ratio.push_back(total_var > 0.0 ? lambda / total_var : 0.0);
    found.push_back(std::move(v));
  }
  out.coords = kernels::matmul_abt(centered, out.components);
  return out;
}

}  // namespace refinekit
