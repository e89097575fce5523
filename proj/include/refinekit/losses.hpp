#pragma once

#include <string>
#include <string_view>

#include "refinekit/matrix.hpp"

namespace refinekit {

enum class LossMode { Align, Rafa, Contrastive, SelfKd, Hycd, HycdPlusAlign, ClipRefine };

std::string_view to_string(LossMode mode);
LossMode parse_loss_mode(std::string_view name);

struct LossConfig {
  double tau = 0.01;
  double alpha = 0.5;
  double lambda_rafa = 1.0;
  double lambda_hycd = 1.0;
  LossMode mode = LossMode::ClipRefine;
  // RaFA acts on the pre-normalization residual; false applies it to the
  // unit feature instead.
  bool rafa_prenorm = true;

  // Throws InvalidArgument unless tau > 0, alpha ∈ [0,1], lambdas ≥ 0.
  void validate() const;
};

// B×B row-stochastic matrix (student p, teacher q, or blended q̂).
class BatchDistribution {
 public:
  BatchDistribution() = default;
  // Throws InvalidArgument if any entry is negative or a row sum is off by
  // more than 1e-9.
  explicit BatchDistribution(Matrix probs);

  const Matrix& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return probs_(i, j); }

 private:
  Matrix probs_;
};

// Scalar loss with ∂L/∂z for both feature batches.
struct PairLoss {
  double value = 0.0;
  Matrix grad_img;
  Matrix grad_txt;
};

// mean_i ‖a_i − t_i‖².
PairLoss align_loss(const Matrix& z_img, const Matrix& z_txt);

// mean_i ½(‖a_i − r_i‖² + ‖t_i − r_i‖²); reference row i is shared by pair i.
PairLoss rafa_loss(const Matrix& z_img, const Matrix& z_txt, const Matrix& z_ref);

// Row i = softmax_j(za_i · zb_j / tau).
BatchDistribution similarity_softmax(const Matrix& za, const Matrix& zb, double tau);

// q̂_ij = α·[i = j] + (1 − α)·q_ij.
BatchDistribution hybrid_teacher(const BatchDistribution& q, double alpha);

struct KlResult {
  double value = 0.0;
  // ∂value/∂student_ij.
  Matrix grad_student;
};

// (1/B) Σ_ij target_ij · log(target_ij / student_ij), with 0·log 0 = 0.
KlResult kd_kl(const BatchDistribution& target, const BatchDistribution& student);

// ½(KL(q̂_I→T ‖ p_I→T) + KL(q̂_T→I ‖ p_T→I)) where q comes from the frozen
// teacher features and is blended toward the identity by cfg.alpha. Teacher
// features receive no gradient.
PairLoss hycd_loss(const Matrix& z_img, const Matrix& z_txt, const Matrix& teacher_img,
                   const Matrix& teacher_txt, const LossConfig& cfg);

// hycd_loss with alpha forced to 0: pure distillation from the teacher.
PairLoss self_kd_loss(const Matrix& z_img, const Matrix& z_txt, const Matrix& teacher_img,
                      const Matrix& teacher_txt, const LossConfig& cfg);

// Symmetric InfoNCE: ½(mean_i −log p_I→T[i,i] + mean_i −log p_T→I[i,i]).
PairLoss contrastive_loss(const Matrix& z_img, const Matrix& z_txt, double tau);

// λ_RaFA·rafa_loss + λ_HyCD·hycd_loss. A term whose weight is zero is not
// evaluated.
PairLoss clip_refine_objective(const Matrix& z_img, const Matrix& z_txt, const Matrix& teacher_img,
                               const Matrix& teacher_txt, const Matrix& z_ref, const LossConfig& cfg);

// Inputs to the mode dispatcher. `rafa_img`/`rafa_txt` are the features the
// RaFA term acts on (the residuals under rafa_prenorm); null means z itself.
struct ObjectiveInputs {
  const Matrix& z_img;
  const Matrix& z_txt;
  const Matrix& teacher_img;
  const Matrix& teacher_txt;
  const Matrix* z_ref = nullptr;
  const Matrix* rafa_img = nullptr;
  const Matrix* rafa_txt = nullptr;
};

struct ObjectiveTerms {
  double rafa = 0.0;
  double hycd = 0.0;
  double align = 0.0;
  double contrastive = 0.0;
  double total = 0.0;
  Matrix grad_img;  // ∂total/∂z_img
  Matrix grad_txt;
  // ∂total/∂rafa features when they are distinct from z (prenorm RaFA).
  Matrix grad_rafa_img;
  Matrix grad_rafa_txt;
};

// Evaluates the objective selected by cfg.mode:
//   Align          align
//   Rafa           rafa
//   Contrastive    contrastive
//   SelfKd         hycd with α = 0
//   Hycd           hycd
//   HycdPlusAlign  λ_RaFA·align + λ_HyCD·hycd
//   ClipRefine     λ_RaFA·rafa + λ_HyCD·hycd
ObjectiveTerms evaluate_objective(const ObjectiveInputs& in, const LossConfig& cfg);

// True when the selected objective is identically zero (all active weights 0).
bool objective_is_degenerate(const LossConfig& cfg);

// Whether cfg.mode uses the RaFA term with a nonzero weight.
bool objective_uses_rafa(const LossConfig& cfg);

}  // namespace refinekit
