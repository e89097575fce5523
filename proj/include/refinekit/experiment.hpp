#pragma once

#include <optional>
#include <span>
#include <vector>

#include "refinekit/embedding_store.hpp"
#include "refinekit/metrics.hpp"
#include "refinekit/run_config.hpp"
#include "refinekit/trainer.hpp"

namespace refinekit {

// Loads and pairs the tables named by `paths`.
PairedDataset load_dataset(const DataPaths& paths);

// Resolves the prior, builds identity-initialized heads and trains.
TrainResult run_training(const RunConfig& cfg, const PairedDataset& train);

struct Features {
  Matrix images;
  Matrix texts;
};

// Unit features for a dataset: student heads when given, otherwise the
// frozen teacher (normalized raw embeddings).
Features embed(const HeadPair* heads, const PairedDataset& data);

struct EvalSummary {
  MetricsReport metrics;
  RetrievalReport t2i;
  RetrievalReport i2t;
};

inline constexpr std::size_t kDefaultKs[] = {1, 5, 10};

// Feature metrics plus recall@k in both directions (identity pairing).
EvalSummary evaluate(const Features& f, std::span<const std::size_t> ks = kDefaultKs);

}  // namespace refinekit
