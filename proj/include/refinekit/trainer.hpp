#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "refinekit/embedding_store.hpp"
#include "refinekit/losses.hpp"
#include "refinekit/priors.hpp"
#include "refinekit/refine_model.hpp"

namespace refinekit {

enum class OptimizerKind { AdamW, PlainSgd };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct TrainConfig {
  std::size_t batch_size = 512;
  double lr = 1.0e-6;
  std::size_t epochs = 1;
  OptimizerKind optimizer = OptimizerKind::AdamW;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  bool deterministic = true;
  LossConfig loss;
  PriorSpec prior;

  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

// One decoupled-weight-decay Adam update in place:
//   θ ← θ − lr·wd·θ
//   m ← β1·m + (1 − β1)·g,  v ← β2·v + (1 − β2)·g²
//   θ ← θ − lr·m̂ / (√v̂ + eps)   with bias-corrected m̂, v̂.
void adamw_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
                double weight_decay, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Seeded permutation of 0..n−1 for `epoch`, cut into consecutive chunks of
// `batch` (the last chunk may be short).
std::vector<std::vector<std::size_t>> shuffle_batches(std::size_t n, std::size_t batch, std::uint64_t seed,
                                                      std::size_t epoch);

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::size_t batch_size = 0;
  double rafa = 0.0;
  double hycd = 0.0;
  double align = 0.0;
  double contrastive = 0.0;
  double total = 0.0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct TrainReport {
  std::vector<StepRecord> steps;
  double wall_time_seconds = 0.0;
  std::string image_head_checksum;
  std::string text_head_checksum;
  std::uint64_t seed = 0;
  bool updates_skipped = false;

  // One JSON object per optimization step.
  std::string steps_jsonl() const;
};

struct HeadPair {
  RefineHead image;
  RefineHead text;

  friend bool operator==(const HeadPair&, const HeadPair&) = default;
};

// Identity-initialized heads for both modalities, seeded from `seed`.
HeadPair init_heads(std::size_t dim, std::size_t hidden, std::uint64_t seed);

struct TrainResult {
  HeadPair heads;
  TrainReport report;
};

// Post-pre-training loop. Per batch: student forward, teacher lookup, prior
// draw, loss evaluation, reverse pass into both heads, then the update
// (AdamW on both heads jointly, or θ ← θ − (η/2)·∇ for PlainSgd). When the
// objective is identically zero the heads are returned untouched.
//
// Throws DimensionMismatch when heads and data disagree, and
// NonFiniteLoss(step) on a non-finite loss.
TrainResult train(const PairedDataset& data, HeadPair heads, const TrainConfig& cfg);

}  // namespace refinekit
