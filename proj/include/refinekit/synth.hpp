#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "refinekit/embedding_store.hpp"

namespace refinekit {

// Paired synthetic embeddings with a controllable modality gap. Each pair
// shares a latent unit vector ℓ; the views are
//   image = normalize(ℓ + gap·e_img + noise·ε),  text = normalize(ℓ + gap·e_txt + noise·ε')
// with e_img = e₀ ⟂ e_txt = e₁ and ε, ε' ~ N(0, I). With classes > 0 the
// latents cluster around per-class centers and class prompts are emitted.
struct SynthConfig {
  std::size_t n = 2000;
  std::size_t dim = 32;
  double gap = 0.5;
  double noise = 0.1;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  std::size_t classes = 0;
};

struct SynthSplit {
  EmbeddingTable images;
  EmbeddingTable texts;
  PairingManifest manifest;
  std::vector<std::size_t> labels;  // class per pair when classes > 0

  PairedDataset paired() const { return PairedDataset{images, texts}; }
};

struct SynthData {
  SynthSplit train;
  SynthSplit test;
  std::optional<ClassPromptTable> prompts;
};

SynthData generate_synthetic(const SynthConfig& cfg);

struct SynthFiles {
  std::filesystem::path train_images, train_texts, train_manifest;
  std::filesystem::path test_images, test_texts, test_manifest;
  std::filesystem::path prompts, train_labels, test_labels;  // empty without classes
};

SynthFiles synth_file_names(const std::string& prefix);
SynthFiles write_synthetic(const SynthData& data, const std::string& prefix);

// {"labels": {"<image id>": "<class label>", ...}}
void save_labels(const SynthSplit& split, const ClassPromptTable& prompts, const std::filesystem::path& path);
// Class index per image row, looked up by image id in the labels file.
std::vector<std::size_t> load_labels(const std::filesystem::path& path, const EmbeddingTable& images,
                                     const ClassPromptTable& prompts);

}  // namespace refinekit
