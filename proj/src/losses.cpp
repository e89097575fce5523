#include "refinekit/losses.hpp"

#include <cmath>

#include "refinekit/error.hpp"
#include "refinekit/kernels.hpp"

namespace refinekit {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                                              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                              "x" + std::to_string(b.cols()));
  }
}

void require_nonempty(const Matrix& a, const char* what) {
  if (a.rows() == 0 || a.cols() == 0) throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": empty batch");
}

Matrix scaled(Matrix m, double s) {
  for (double& v : m.flat()) v *= s;
  return m;
}

Matrix logits(const Matrix& za, const Matrix& zb, double tau) {
  Matrix s = kernels::matmul_abt(za, zb);
  for (double& v : s.flat()) v /= tau;
  return s;
}

Matrix exp_entries(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = std::exp(m.data()[i]);
  return out;
}

// Log of the blended target α·I + (1 − α)·q, evaluated from log q so that
// underflowed teacher entries stay exact. Entries whose target is exactly
// zero are marked -inf and skipped by the KL sum.
Matrix blended_log_target(const Matrix& log_q, double alpha) {
  Matrix out(log_q.rows(), log_q.cols());
  if (alpha == 0.0) return log_q;
  const double log_keep = alpha < 1.0 ? std::log1p(-alpha) : -INFINITY;
  for (std::size_t i = 0; i < log_q.rows(); ++i) {
    for (std::size_t j = 0; j < log_q.cols(); ++j) {
      if (i == j) {
        out(i, j) = std::log(alpha + (1.0 - alpha) * std::exp(log_q(i, j)));
      } else {
        out(i, j) = log_keep + log_q(i, j);
      }
    }
  }
  return out;
}

struct DirectionalKl {
  double value = 0.0;
  Matrix grad_logits;  // ∂value/∂logits
};

// (1/B) Σ_ij t_ij (log t_ij − log p_ij) with p = softmax(logits) per row.
// The gradient w.r.t. the logits is (rowsum(t)·p − t)/B.
DirectionalKl kl_on_logits(const Matrix& log_target, const Matrix& logit_matrix) {
  const std::size_t b = logit_matrix.rows();
  const Matrix log_p = kernels::log_softmax_rows(logit_matrix);
  DirectionalKl out;
  out.grad_logits = Matrix(b, logit_matrix.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double row_value = 0.0;
    double row_mass = 0.0;
    for (std::size_t j = 0; j < logit_matrix.cols(); ++j) {
      const double lt = log_target(i, j);
      if (lt == -INFINITY) continue;
      const double t = std::exp(lt);
      row_value += t * (lt - log_p(i, j));
      row_mass += t;
    }
    total += row_value;
    for (std::size_t j = 0; j < logit_matrix.cols(); ++j) {
      const double lt = log_target(i, j);
      const double t = lt == -INFINITY ? 0.0 : std::exp(lt);
      out.grad_logits(i, j) = (row_mass * std::exp(log_p(i, j)) - t) / static_cast<double>(b);
    }
  }
  out.value = total / static_cast<double>(b);
  return out;
}

// Chains ∂L/∂S for S = za·zbᵀ/τ (image→text logits) and ∂L/∂S' for
// S' = zb·zaᵀ/τ (text→image logits) into feature gradients.
PairLoss feature_grads(double value, const Matrix& grad_it, const Matrix& grad_ti, const Matrix& z_img,
                       const Matrix& z_txt, double tau) {
  Matrix combined(grad_it.rows(), grad_it.cols());
  for (std::size_t i = 0; i < combined.rows(); ++i) {
    for (std::size_t j = 0; j < combined.cols(); ++j) combined(i, j) = grad_it(i, j) + grad_ti(j, i);
  }
  PairLoss out;
  out.value = value;
  out.grad_img = scaled(kernels::matmul(combined, z_txt), 1.0 / tau);
  out.grad_txt = scaled(kernels::matmul_atb(combined, z_img), 1.0 / tau);
  return out;
}

void accumulate(Matrix& dst, const Matrix& src, double weight) {
  if (dst.empty()) {
    dst = Matrix(src.rows(), src.cols());
  }
  for (std::size_t i = 0; i < src.size(); ++i) dst.data()[i] += weight * src.data()[i];
}

}  // namespace

std::string_view to_string(LossMode mode) {
  switch (mode) {
    case LossMode::Align: return "align";
    case LossMode::Rafa: return "rafa";
    case LossMode::Contrastive: return "contrastive";
    case LossMode::SelfKd: return "self_kd";
    case LossMode::Hycd: return "hycd";
    case LossMode::HycdPlusAlign: return "hycd_plus_align";
    case LossMode::ClipRefine: return "clip_refine";
  }
  return "unknown";
}

LossMode parse_loss_mode(std::string_view name) {
  for (auto m : {LossMode::Align, LossMode::Rafa, LossMode::Contrastive, LossMode::SelfKd, LossMode::Hycd,
                 LossMode::HycdPlusAlign, LossMode::ClipRefine}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::ConfigError, "unknown loss mode '" + std::string(name) + "'");
}

void LossConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  if (!(lambda_rafa >= 0.0) || !(lambda_hycd >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambdas must be nonnegative");
}

BatchDistribution::BatchDistribution(Matrix probs) : probs_(std::move(probs)) {
  for (std::size_t i = 0; i < probs_.rows(); ++i) {
    double sum = 0.0;
    for (double v : probs_.row(i)) {
      if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "distribution entry is negative or NaN", i);
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "distribution row does not sum to 1", i);
  }
}

PairLoss align_loss(const Matrix& z_img, const Matrix& z_txt) {
  require_same_shape(z_img, z_txt, "align_loss");
  require_nonempty(z_img, "align_loss");
  const double b = static_cast<double>(z_img.rows());
  PairLoss out;
  out.value = kernels::paired_sq_dist_sum(z_img, z_txt) / b;
  out.grad_img = Matrix(z_img.rows(), z_img.cols());
  out.grad_txt = Matrix(z_img.rows(), z_img.cols());
  for (std::size_t i = 0; i < z_img.size(); ++i) {
    const double g = 2.0 / b * (z_img.data()[i] - z_txt.data()[i]);
    out.grad_img.data()[i] = g;
    out.grad_txt.data()[i] = -g;
  }
  return out;
}

PairLoss rafa_loss(const Matrix& z_img, const Matrix& z_txt, const Matrix& z_ref) {
  require_same_shape(z_img, z_txt, "rafa_loss");
  require_same_shape(z_img, z_ref, "rafa_loss reference");
  require_nonempty(z_img, "rafa_loss");
  const double b = static_cast<double>(z_img.rows());
  PairLoss out;
  const double img_part = kernels::paired_sq_dist_sum(z_img, z_ref);
  const double txt_part = kernels::paired_sq_dist_sum(z_txt, z_ref);
  out.value = 0.5 * (img_part + txt_part) / b;
  out.grad_img = Matrix(z_img.rows(), z_img.cols());
  out.grad_txt = Matrix(z_img.rows(), z_img.cols());
  for (std::size_t i = 0; i < z_img.size(); ++i) {
    out.grad_img.data()[i] = (z_img.data()[i] - z_ref.data()[i]) / b;
    out.grad_txt.data()[i] = (z_txt.data()[i] - z_ref.data()[i]) / b;
  }
  return out;
}

BatchDistribution similarity_softmax(const Matrix& za, const Matrix& zb, double tau) {
  require_same_shape(za, zb, "similarity_softmax");
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  return BatchDistribution(exp_entries(kernels::log_softmax_rows(logits(za, zb, tau))));
}

BatchDistribution hybrid_teacher(const BatchDistribution& q, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  Matrix out(q.size(), q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = 0; j < q.size(); ++j) out(i, j) = alpha * (i == j ? 1.0 : 0.0) + (1.0 - alpha) * q(i, j);
  }
  return BatchDistribution(std::move(out));
}

KlResult kd_kl(const BatchDistribution& target, const BatchDistribution& student) {
  if (target.size() != student.size()) throw Error(ErrorCode::ShapeMismatch, "kd_kl: distribution sizes differ");
  const std::size_t b = target.size();
  KlResult out;
  out.grad_student = Matrix(b, b);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double t = target(i, j);
      if (t == 0.0) continue;
      const double s = student(i, j);
      total += t * (std::log(t) - std::log(s));
      out.grad_student(i, j) = -t / (s * static_cast<double>(b));
    }
  }
  out.value = total / static_cast<double>(b);
  return out;
}

PairLoss hycd_loss(const Matrix& z_img, const Matrix& z_txt, const Matrix& teacher_img, const Matrix& teacher_txt,
                   const LossConfig& cfg) {
  require_same_shape(z_img, z_txt, "hycd_loss");
  require_same_shape(z_img, teacher_img, "hycd_loss teacher_img");
  require_same_shape(z_img, teacher_txt, "hycd_loss teacher_txt");
  require_nonempty(z_img, "hycd_loss");
  cfg.validate();

  const Matrix log_q_it = kernels::log_softmax_rows(logits(teacher_img, teacher_txt, cfg.tau));
  const Matrix log_q_ti = kernels::log_softmax_rows(logits(teacher_txt, teacher_img, cfg.tau));
  const auto it = kl_on_logits(blended_log_target(log_q_it, cfg.alpha), logits(z_img, z_txt, cfg.tau));
  const auto ti = kl_on_logits(blended_log_target(log_q_ti, cfg.alpha), logits(z_txt, z_img, cfg.tau));
  return feature_grads(0.5 * (it.value + ti.value), scaled(it.grad_logits, 0.5), scaled(ti.grad_logits, 0.5), z_img,
                       z_txt, cfg.tau);
}

PairLoss self_kd_loss(const Matrix& z_img, const Matrix& z_txt, const Matrix& teacher_img, const Matrix& teacher_txt,
                      const LossConfig& cfg) {
  LossConfig kd = cfg;
  kd.alpha = 0.0;
  return hycd_loss(z_img, z_txt, teacher_img, teacher_txt, kd);
}

PairLoss contrastive_loss(const Matrix& z_img, const Matrix& z_txt, double tau) {
  require_same_shape(z_img, z_txt, "contrastive_loss");
  require_nonempty(z_img, "contrastive_loss");
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  const std::size_t b = z_img.rows();
  const double inv_b = 1.0 / static_cast<double>(b);
  const Matrix log_p_it = kernels::log_softmax_rows(logits(z_img, z_txt, tau));
  const Matrix log_p_ti = kernels::log_softmax_rows(logits(z_txt, z_img, tau));

  double nll_it = 0.0;
  double nll_ti = 0.0;
  Matrix g_it(b, b);
  Matrix g_ti(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    nll_it -= log_p_it(i, i);
    nll_ti -= log_p_ti(i, i);
    for (std::size_t j = 0; j < b; ++j) {
      const double eye = i == j ? 1.0 : 0.0;
      g_it(i, j) = 0.5 * inv_b * (std::exp(log_p_it(i, j)) - eye);
      g_ti(i, j) = 0.5 * inv_b * (std::exp(log_p_ti(i, j)) - eye);
    }
  }
  return feature_grads(0.5 * (nll_it * inv_b + nll_ti * inv_b), g_it, g_ti, z_img, z_txt, tau);
}

PairLoss clip_refine_objective(const Matrix& z_img, const Matrix& z_txt, const Matrix& teacher_img,
                               const Matrix& teacher_txt, const Matrix& z_ref, const LossConfig& cfg) {
  cfg.validate();
  PairLoss out;
  out.grad_img = Matrix(z_img.rows(), z_img.cols());
  out.grad_txt = Matrix(z_txt.rows(), z_txt.cols());
  bool first = true;
  auto add = [&](const PairLoss& part, double weight) {
    if (first) {
      out.value = weight * part.value;
      for (std::size_t i = 0; i < part.grad_img.size(); ++i) {
        out.grad_img.data()[i] = weight * part.grad_img.data()[i];
        out.grad_txt.data()[i] = weight * part.grad_txt.data()[i];
      }
      first = false;
      return;
    }
    out.value += weight * part.value;
    for (std::size_t i = 0; i < part.grad_img.size(); ++i) {
      out.grad_img.data()[i] += weight * part.grad_img.data()[i];
      out.grad_txt.data()[i] += weight * part.grad_txt.data()[i];
    }
  };
  if (cfg.lambda_rafa != 0.0) add(rafa_loss(z_img, z_txt, z_ref), cfg.lambda_rafa);
  if (cfg.lambda_hycd != 0.0) add(hycd_loss(z_img, z_txt, teacher_img, teacher_txt, cfg), cfg.lambda_hycd);
  return out;
}

bool objective_uses_rafa(const LossConfig& cfg) {
  return (cfg.mode == LossMode::Rafa) || (cfg.mode == LossMode::ClipRefine && cfg.lambda_rafa != 0.0);
}

bool objective_is_degenerate(const LossConfig& cfg) {
  switch (cfg.mode) {
    case LossMode::ClipRefine:
    case LossMode::HycdPlusAlign: return cfg.lambda_rafa == 0.0 && cfg.lambda_hycd == 0.0;
    default: return false;
  }
}

ObjectiveTerms evaluate_objective(const ObjectiveInputs& in, const LossConfig& cfg) {
  cfg.validate();
  ObjectiveTerms out;
  const Matrix& rafa_img = in.rafa_img ? *in.rafa_img : in.z_img;
  const Matrix& rafa_txt = in.rafa_txt ? *in.rafa_txt : in.z_txt;
  const bool split_rafa = in.rafa_img != nullptr;

  auto add_rafa = [&](double weight) {
    if (!in.z_ref) throw Error(ErrorCode::InvalidArgument, "RaFA term requires reference vectors");
    const auto r = rafa_loss(rafa_img, rafa_txt, *in.z_ref);
    out.rafa = r.value;
    out.total += weight * r.value;
    accumulate(split_rafa ? out.grad_rafa_img : out.grad_img, r.grad_img, weight);
    accumulate(split_rafa ? out.grad_rafa_txt : out.grad_txt, r.grad_txt, weight);
  };
  auto add_pair = [&](const PairLoss& p, double weight, double& slot) {
    slot = p.value;
    out.total += weight * p.value;
    accumulate(out.grad_img, p.grad_img, weight);
    accumulate(out.grad_txt, p.grad_txt, weight);
  };

  switch (cfg.mode) {
    case LossMode::Align: add_pair(align_loss(in.z_img, in.z_txt), 1.0, out.align); break;
    case LossMode::Rafa: add_rafa(1.0); break;
    case LossMode::Contrastive: add_pair(contrastive_loss(in.z_img, in.z_txt, cfg.tau), 1.0, out.contrastive); break;
    case LossMode::SelfKd:
      add_pair(self_kd_loss(in.z_img, in.z_txt, in.teacher_img, in.teacher_txt, cfg), 1.0, out.hycd);
      break;
    case LossMode::Hycd: add_pair(hycd_loss(in.z_img, in.z_txt, in.teacher_img, in.teacher_txt, cfg), 1.0, out.hycd); break;
    case LossMode::HycdPlusAlign:
      if (cfg.lambda_rafa != 0.0) add_pair(align_loss(in.z_img, in.z_txt), cfg.lambda_rafa, out.align);
      if (cfg.lambda_hycd != 0.0) {
        add_pair(hycd_loss(in.z_img, in.z_txt, in.teacher_img, in.teacher_txt, cfg), cfg.lambda_hycd, out.hycd);
      }
      break;
    case LossMode::ClipRefine:
      if (cfg.lambda_rafa != 0.0) add_rafa(cfg.lambda_rafa);
      if (cfg.lambda_hycd != 0.0) {
        add_pair(hycd_loss(in.z_img, in.z_txt, in.teacher_img, in.teacher_txt, cfg), cfg.lambda_hycd, out.hycd);
      }
      break;
  }
  if (out.grad_img.empty()) out.grad_img = Matrix(in.z_img.rows(), in.z_img.cols());
  if (out.grad_txt.empty()) out.grad_txt = Matrix(in.z_txt.rows(), in.z_txt.cols());
  return out;
}

}  // namespace refinekit
