#include "refinekit/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "refinekit/error.hpp"
#include "refinekit/parallel.hpp"
#include "refinekit/random.hpp"

namespace refinekit {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::AdamW ? "adamw" : "plain_sgd";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adamw") return OptimizerKind::AdamW;
  if (name == "plain_sgd" || name == "sgd") return OptimizerKind::PlainSgd;
  throw Error(ErrorCode::ConfigError, "unknown optimizer '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be ≥ 1");
  if (!(lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "lr must be positive");
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be ≥ 1");
  if (!(weight_decay >= 0.0)) throw Error(ErrorCode::InvalidArgument, "weight_decay must be nonnegative");
  loss.validate();
}

void adamw_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
                double weight_decay, double beta1, double beta2, double eps) {
  if (params.size() != grads.size()) throw Error(ErrorCode::ShapeMismatch, "adamw_step: params and grads differ");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "adamw_step: state size differs");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= lr * weight_decay * params[i];
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

std::vector<std::vector<std::size_t>> shuffle_batches(std::size_t n, std::size_t batch, std::uint64_t seed,
                                                      std::size_t epoch) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "cannot batch an empty dataset");
  if (batch == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::derive_seed(seed, streams::kShuffle), epoch);
  // Fisher-Yates with an explicit draw so the permutation does not depend on
  // the standard library's shuffle implementation.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.engine()() % (i + 1));
    std::swap(order[i], order[j]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t stop = std::min(n, start + batch);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

std::string TrainReport::steps_jsonl() const {
  std::string out;
  for (const auto& s : steps) {
    nlohmann::ordered_json j;
    j["step"] = s.step;
    j["epoch"] = s.epoch;
    j["batch_size"] = s.batch_size;
    j["rafa"] = s.rafa;
    j["hycd"] = s.hycd;
    j["align"] = s.align;
    j["contrastive"] = s.contrastive;
    j["total"] = s.total;
    out += j.dump();
    out += '\n';
  }
  return out;
}

HeadPair init_heads(std::size_t dim, std::size_t hidden, std::uint64_t seed) {
  return HeadPair{init_identity(dim, hidden, Rng::derive_seed(seed, streams::kImageHeadInit)),
                  init_identity(dim, hidden, Rng::derive_seed(seed, streams::kTextHeadInit))};
}

namespace {

void sgd_step(RefineHead& head, const RefineHead& grad, double step) {
  auto p = head.blocks();
  const auto g = grad.blocks();
  for (std::size_t b = 0; b < p.size(); ++b) {
    for (std::size_t i = 0; i < p[b].size(); ++i) p[b][i] -= step * g[b][i];
  }
}

struct HeadOptimizerState {
  std::array<AdamState, 4> blocks;
};

void adamw_head(RefineHead& head, const RefineHead& grad, HeadOptimizerState& state, const TrainConfig& cfg) {
  auto p = head.blocks();
  const auto g = grad.blocks();
  for (std::size_t b = 0; b < p.size(); ++b) {
    adamw_step(p[b], g[b], state.blocks[b], cfg.lr, cfg.weight_decay, cfg.beta1, cfg.beta2, cfg.eps);
  }
}

}  // namespace

TrainResult train(const PairedDataset& data, HeadPair heads, const TrainConfig& cfg) {
  cfg.validate();
  if (heads.image.dim() != data.dim() || heads.text.dim() != data.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "head dim does not match dataset dim " + std::to_string(data.dim()));
  }
  cfg.prior.validate(data.dim());
  ScopedExecutionPolicy policy(ExecutionPolicy{cfg.deterministic});
  const auto started = std::chrono::steady_clock::now();

  const TeacherBank teacher = TeacherBank::from(data);
  const bool degenerate = objective_is_degenerate(cfg.loss);
  const bool needs_ref = objective_uses_rafa(cfg.loss);
  Rng prior_rng(cfg.seed, streams::kPrior);
  HeadOptimizerState img_state;
  HeadOptimizerState txt_state;

  TrainResult result;
  result.report.seed = cfg.seed;
  result.report.updates_skipped = degenerate;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& batch : shuffle_batches(data.count(), cfg.batch_size, cfg.seed, epoch)) {
      const Matrix raw_img = data.images.gather(batch);
      const Matrix raw_txt = data.texts.gather(batch);
      Matrix t_img(batch.size(), data.dim());
      Matrix t_txt(batch.size(), data.dim());
      for (std::size_t r = 0; r < batch.size(); ++r) {
        std::copy_n(teacher.images.row(batch[r]).begin(), data.dim(), t_img.row(r).begin());
        std::copy_n(teacher.texts.row(batch[r]).begin(), data.dim(), t_txt.row(r).begin());
      }

      const ForwardCache c_img = forward_cached(heads.image, raw_img);
      const ForwardCache c_txt = forward_cached(heads.text, raw_txt);
      Matrix z_ref;
      if (needs_ref) z_ref = sample(cfg.prior, batch.size(), data.dim(), prior_rng);

      ObjectiveInputs in{c_img.out, c_txt.out, t_img, t_txt, needs_ref ? &z_ref : nullptr};
      if (cfg.loss.rafa_prenorm) {
        in.rafa_img = &c_img.residual;
        in.rafa_txt = &c_txt.residual;
      }
      const ObjectiveTerms terms = evaluate_objective(in, cfg.loss);
      if (!std::isfinite(terms.total)) throw Error(ErrorCode::NonFiniteLoss, "loss is not finite", step);

      result.report.steps.push_back(StepRecord{step, epoch, batch.size(), terms.rafa, terms.hycd, terms.align,
                                               terms.contrastive, terms.total});
      ++step;
      if (degenerate) continue;

      const bool split = cfg.loss.rafa_prenorm && !terms.grad_rafa_img.empty();
      const RefineHead g_img = backward(heads.image, c_img, terms.grad_img, split ? &terms.grad_rafa_img : nullptr);
      const RefineHead g_txt = backward(heads.text, c_txt, terms.grad_txt, split ? &terms.grad_rafa_txt : nullptr);
      if (cfg.optimizer == OptimizerKind::PlainSgd) {
        sgd_step(heads.image, g_img, cfg.lr / 2.0);
        sgd_step(heads.text, g_txt, cfg.lr / 2.0);
      } else {
        adamw_head(heads.image, g_img, img_state, cfg);
        adamw_head(heads.text, g_txt, txt_state, cfg);
      }
    }
  }

  result.report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.report.image_head_checksum = head_checksum(heads.image);
  result.report.text_head_checksum = head_checksum(heads.text);
  result.heads = std::move(heads);
  return result;
}

}  // namespace refinekit
