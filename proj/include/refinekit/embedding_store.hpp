#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "refinekit/matrix.hpp"

namespace refinekit {

// N×d float32 embeddings with one stable string id per row. Values are raw
// encoder outputs; normalization happens in the model.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // Validates the invariants (count ≥ 1, dim ≥ 1, finite values, unique ids)
  // and throws Error on violation.
  EmbeddingTable(std::size_t dim, std::vector<float> data, std::vector<std::string> ids);

  std::size_t count() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  // Row index of `id`, or count() if absent.
  std::size_t find(const std::string& id) const;

  // Rows as float64 (selected subset when `rows` is non-empty).
  Matrix to_matrix() const;
  Matrix gather(std::span<const std::size_t> rows) const;

  EmbeddingTable select(std::span<const std::size_t> rows) const;

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::vector<std::string> ids_;
};

// Row i of `images` is paired with row i of `texts`.
struct PairedDataset {
  EmbeddingTable images;
  EmbeddingTable texts;

  std::size_t count() const noexcept { return images.count(); }
  std::size_t dim() const noexcept { return images.dim(); }
};

// Class-prompt text embeddings; labels are the table ids.
struct ClassPromptTable {
  EmbeddingTable prompts;
  const std::vector<std::string>& labels() const noexcept { return prompts.ids(); }
};

// One image id and its caption ids in manifest order.
struct ManifestEntry {
  std::string image;
  std::vector<std::string> texts;
};

struct PairingManifest {
  std::vector<ManifestEntry> entries;
};

// EMB1 layout: "EMB1", u32 version=1, u64 count, u32 dim, u32 dtype (0 = f32),
// count·dim little-endian floats, then a UTF-8 JSON trailer
// {"crc32": <crc of the data block>, "ids": [...]} running to end of file.
inline constexpr std::size_t kEmb1HeaderBytes = 24;
inline constexpr std::uint32_t kEmb1Version = 1;

EmbeddingTable load_table(const std::filesystem::path& path);
EmbeddingTable parse_table(std::span<const std::uint8_t> bytes);
void save_table(const EmbeddingTable& table, const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_table(const EmbeddingTable& table);

ClassPromptTable load_prompts(const std::filesystem::path& path);

// {"pairs": [{"image": id, "text": id | [id, ...]}, ...]}. Repeated image ids
// accumulate captions in file order.
PairingManifest load_manifest(const std::filesystem::path& path);
PairingManifest parse_manifest(const std::string& json_text);
void save_manifest(const PairingManifest& manifest, const std::filesystem::path& path);

// Builds an index-aligned dataset following the image table's row order;
// each image takes caption `caption_index` (clamped to its last caption).
// Throws UnmatchedId naming every image without a manifest entry or any
// manifest id missing from its table, DimensionMismatch on differing dims.
PairedDataset make_pairs(const EmbeddingTable& images, const EmbeddingTable& texts,
                         const PairingManifest& manifest, std::size_t caption_index = 0);

}  // namespace refinekit
