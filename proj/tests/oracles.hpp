#pragma once

// Brute-force reference implementations used as test oracles. Everything
// here is written directly from the definitions with plain loops and shares
// no code with the library kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "refinekit/matrix.hpp"
#include "refinekit/refine_model.hpp"

namespace oracle {

using refinekit::Matrix;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (double& x : m.flat()) x = nd(gen);
  return m;
}

inline Matrix unit_rows(Matrix m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < m.cols(); ++k) s += m(i, k) * m(i, k);
    s = std::sqrt(s);
    for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) /= s;
  }
  return m;
}

inline Matrix random_unit(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
  return unit_rows(random_matrix(rows, cols, gen));
}

inline double dot(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
  return s;
}

inline double sq_dist(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.cols(); ++k) s += (a(i, k) - b(j, k)) * (a(i, k) - b(j, k));
  return s;
}

// Row-wise softmax of (za·zbᵀ)/tau as explicit probabilities.
inline Matrix softmax_sim(const Matrix& za, const Matrix& zb, double tau) {
  const std::size_t n = za.rows();
  Matrix p(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, dot(za, i, zb, j) / tau);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(dot(za, i, zb, j) / tau - mx);
    for (std::size_t j = 0; j < n; ++j) p(i, j) = std::exp(dot(za, i, zb, j) / tau - mx) / z;
  }
  return p;
}

inline double kl(const Matrix& t, const Matrix& s) {
  double v = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      if (t(i, j) > 0.0) v += t(i, j) * std::log(t(i, j) / s(i, j));
    }
  }
  return v / static_cast<double>(t.rows());
}

inline double align(const Matrix& a, const Matrix& t) {
  double v = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) v += sq_dist(a, i, t, i);
  return v / static_cast<double>(a.rows());
}

inline double rafa(const Matrix& a, const Matrix& t, const Matrix& r) {
  double v = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) v += 0.5 * (sq_dist(a, i, r, i) + sq_dist(t, i, r, i));
  return v / static_cast<double>(a.rows());
}

inline double contrastive(const Matrix& a, const Matrix& t, double tau) {
  const Matrix p_it = softmax_sim(a, t, tau);
  const Matrix p_ti = softmax_sim(t, a, tau);
  double v = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) v += -std::log(p_it(i, i)) - std::log(p_ti(i, i));
  return 0.5 * v / static_cast<double>(a.rows());
}

inline Matrix blend(const Matrix& q, double alpha) {
  Matrix out(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < q.cols(); ++j) out(i, j) = alpha * (i == j ? 1.0 : 0.0) + (1.0 - alpha) * q(i, j);
  }
  return out;
}

inline double hycd(const Matrix& a, const Matrix& t, const Matrix& ta, const Matrix& tt, double tau, double alpha) {
  const Matrix q_it = blend(softmax_sim(ta, tt, tau), alpha);
  const Matrix q_ti = blend(softmax_sim(tt, ta, tau), alpha);
  return 0.5 * (kl(q_it, softmax_sim(a, t, tau)) + kl(q_ti, softmax_sim(t, a, tau)));
}

// Central finite-difference gradient of f with respect to every entry of x.
inline Matrix fd_gradient(const std::function<double(const Matrix&)>& f, Matrix x, double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double keep = x.flat()[k];
    x.flat()[k] = keep + h;
    const double up = f(x);
    x.flat()[k] = keep - h;
    const double down = f(x);
    x.flat()[k] = keep;
    g.flat()[k] = (up - down) / (2.0 * h);
  }
  return g;
}

// max_k |a_k − n_k| / max(|a_k|, |n_k|, floor).
inline double max_rel_err(const Matrix& analytic, const Matrix& numeric, double floor = 1e-3) {
  double worst = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const double a = analytic.flat()[k];
    const double n = numeric.flat()[k];
    worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
  }
  return worst;
}

inline double erf_gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

struct HeadOut {
  Matrix residual;
  Matrix out;
};

// Residual head written out per element.
inline HeadOut head_forward(const refinekit::RefineHead& h, const Matrix& raw) {
  const std::size_t n = raw.rows(), d = h.dim(), hid = h.hidden();
  const Matrix u = unit_rows(raw);
  HeadOut o{Matrix(n, d), Matrix(n, d)};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> act(hid);
    for (std::size_t j = 0; j < hid; ++j) {
      double s = h.b1[j];
      for (std::size_t k = 0; k < d; ++k) s += u(i, k) * h.w1(k, j);
      act[j] = erf_gelu(s);
    }
    for (std::size_t k = 0; k < d; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < hid; ++j) s += act[j] * h.w2(j, k);
      o.residual(i, k) = u(i, k) + s + h.b2[k];
    }
  }
  o.out = unit_rows(o.residual);
  return o;
}

// Population moments by the two-pass formula.
inline void moments(const std::vector<const Matrix*>& tables, std::vector<double>& mu, std::vector<double>& sigma) {
  const std::size_t d = tables.front()->cols();
  mu.assign(d, 0.0);
  sigma.assign(d, 0.0);
  std::size_t n = 0;
  for (const Matrix* t : tables) {
    for (std::size_t i = 0; i < t->rows(); ++i, ++n) {
      for (std::size_t k = 0; k < d; ++k) mu[k] += (*t)(i, k);
    }
  }
  for (double& m : mu) m /= static_cast<double>(n);
  for (const Matrix* t : tables) {
    for (std::size_t i = 0; i < t->rows(); ++i) {
      for (std::size_t k = 0; k < d; ++k) sigma[k] += ((*t)(i, k) - mu[k]) * ((*t)(i, k) - mu[k]);
    }
  }
  for (double& s : sigma) s = std::sqrt(s / static_cast<double>(n));
}

inline double modality_gap(const Matrix& a, const Matrix& t) {
  double g = 0.0;
  for (std::size_t k = 0; k < a.cols(); ++k) {
    double ma = 0.0, mt = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) ma += a(i, k);
    for (std::size_t i = 0; i < t.rows(); ++i) mt += t(i, k);
    const double diff = ma / static_cast<double>(a.rows()) - mt / static_cast<double>(t.rows());
    g += diff * diff;
  }
  return g;
}

inline double uniformity(const Matrix& a, const Matrix& t) {
  Matrix f(a.rows() + t.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) f(i, k) = a(i, k);
  }
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) f(a.rows() + i, k) = t(i, k);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < f.rows(); ++i) {
    for (std::size_t j = 0; j < f.rows(); ++j) s += std::exp(-2.0 * sq_dist(f, i, f, j));
  }
  return s / (2.0 * static_cast<double>(a.rows()));
}

// Rank of the true match after a full sort by (score desc, index asc).
inline std::vector<std::size_t> ranks(const Matrix& q, const Matrix& g, const std::vector<std::size_t>& truth) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::vector<std::size_t> order(g.rows());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      const double sx = dot(q, i, g, x), sy = dot(q, i, g, y);
      return sx != sy ? sx > sy : x < y;
    });
    out.push_back(static_cast<std::size_t>(std::find(order.begin(), order.end(), truth[i]) - order.begin()));
  }
  return out;
}

inline double recall(const std::vector<std::size_t>& r, std::size_t k) {
  std::size_t hit = 0;
  for (auto x : r) hit += x < k ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(r.size());
}

inline double zeroshot_accuracy(const Matrix& img, const Matrix& prompts, const std::vector<std::size_t>& labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < img.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < prompts.rows(); ++c) {
      if (dot(img, i, prompts, c) > dot(img, i, prompts, best)) best = c;
    }
    correct += best == labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(img.rows());
}

// One scalar AdamW step, straight from the update rule.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double p, double g, double lr, double wd, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
    ++t;
    p -= lr * wd * p;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return p - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace oracle
