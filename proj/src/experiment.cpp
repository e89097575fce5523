#include "refinekit/experiment.hpp"

#include <numeric>

#include "refinekit/kernels.hpp"

namespace refinekit {

PairedDataset load_dataset(const DataPaths& paths) {
  const auto manifest = load_manifest(paths.manifest);
  return make_pairs(load_table(paths.images), load_table(paths.texts), manifest, paths.caption_index);
}

TrainResult run_training(const RunConfig& cfg, const PairedDataset& train) {
  TrainConfig tc = cfg.train;
  tc.prior = resolve_prior(cfg.prior, train);
  const std::size_t hidden = cfg.hidden == 0 ? train.dim() : cfg.hidden;
  return refinekit::train(train, init_heads(train.dim(), hidden, tc.seed), tc);
}

Features embed(const HeadPair* heads, const PairedDataset& data) {
  const Matrix img = data.images.to_matrix();
  const Matrix txt = data.texts.to_matrix();
  if (!heads) return Features{kernels::normalize_rows(img), kernels::normalize_rows(txt)};
  return Features{forward(heads->image, img), forward(heads->text, txt)};
}

EvalSummary evaluate(const Features& f, std::span<const std::size_t> ks) {
  EvalSummary s;
  s.metrics = feature_metrics(f.images, f.texts);
  std::vector<std::size_t> identity(f.images.rows());
  std::iota(identity.begin(), identity.end(), 0);
  s.t2i = recall_at_k(f.texts, f.images, identity, ks, RetrievalDirection::TextToImage);
  s.i2t = recall_at_k(f.images, f.texts, identity, ks, RetrievalDirection::ImageToText);
  return s;
}

}  // namespace refinekit
