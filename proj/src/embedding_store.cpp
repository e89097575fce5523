#include "refinekit/embedding_store.hpp"

#include <cmath>
#include <cstring>
#include <nlohmann/json.hpp>
#include <unordered_map>
#include <unordered_set>

#include "refinekit/error.hpp"
#include "refinekit/io_util.hpp"

namespace refinekit {

using nlohmann::json;

EmbeddingTable::EmbeddingTable(std::size_t dim, std::vector<float> data, std::vector<std::string> ids)
    : dim_(dim), data_(std::move(data)), ids_(std::move(ids)) {
  if (ids_.empty()) throw Error(ErrorCode::InvalidArgument, "table must have at least one row");
  if (dim_ == 0) throw Error(ErrorCode::InvalidArgument, "table dim must be positive");
  if (data_.size() != ids_.size() * dim_) {
    throw Error(ErrorCode::ShapeMismatch, "data length " + std::to_string(data_.size()) + " != count·dim");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) throw Error(ErrorCode::NonFiniteValue, "non-finite value", i / dim_);
  }
  std::unordered_set<std::string> seen;
  seen.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!seen.insert(ids_[i]).second) throw Error(ErrorCode::DuplicateId, "duplicate id '" + ids_[i] + "'", i);
  }
}

std::size_t EmbeddingTable::find(const std::string& id) const {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == id) return i;
  }
  return ids_.size();
}

Matrix EmbeddingTable::to_matrix() const {
  Matrix m(count(), dim_);
  for (std::size_t i = 0; i < data_.size(); ++i) m.data()[i] = data_[i];
  return m;
}

Matrix EmbeddingTable::gather(std::span<const std::size_t> rows) const {
  Matrix m(rows.size(), dim_);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = row(rows[r]);
    auto dst = m.row(r);
    for (std::size_t k = 0; k < dim_; ++k) dst[k] = src[k];
  }
  return m;
}

EmbeddingTable EmbeddingTable::select(std::span<const std::size_t> rows) const {
  std::vector<float> data;
  data.reserve(rows.size() * dim_);
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (std::size_t r : rows) {
    const auto src = row(r);
    data.insert(data.end(), src.begin(), src.end());
    ids.push_back(ids_[r]);
  }
  return EmbeddingTable(dim_, std::move(data), std::move(ids));
}

std::vector<std::uint8_t> serialize_table(const EmbeddingTable& table) {
  if (table.count() == 0) throw Error(ErrorCode::InvalidArgument, "refusing to write an empty table");
  std::vector<std::uint8_t> out;
  out.reserve(kEmb1HeaderBytes + table.data().size() * 4 + 64 + table.count() * 16);
  out.insert(out.end(), {'E', 'M', 'B', '1'});
  io::put_u32(out, kEmb1Version);
  io::put_u64(out, table.count());
  io::put_u32(out, static_cast<std::uint32_t>(table.dim()));
  io::put_u32(out, 0);
  const std::size_t data_begin = out.size();
  for (float v : table.data()) io::put_f32(out, v);
  const std::uint32_t crc = io::crc32(std::span(out).subspan(data_begin));
  const json trailer = {{"crc32", crc}, {"ids", table.ids()}};
  const std::string text = trailer.dump();
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

void save_table(const EmbeddingTable& table, const std::filesystem::path& path) {
  io::write_atomic(path, serialize_table(table));
}

EmbeddingTable parse_table(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "EMB1", 4) != 0) {
    throw Error(ErrorCode::BadMagic, "missing EMB1 magic", 0);
  }
  if (bytes.size() < kEmb1HeaderBytes) throw Error(ErrorCode::TruncatedFile, "header cut short", bytes.size());
  const std::uint32_t version = io::get_u32(bytes.data() + 4);
  const std::uint64_t count = io::get_u64(bytes.data() + 8);
  const std::uint32_t dim = io::get_u32(bytes.data() + 16);
  const std::uint32_t dtype = io::get_u32(bytes.data() + 20);
  if (version != kEmb1Version) throw Error(ErrorCode::VersionMismatch, "unsupported EMB1 version " + std::to_string(version), 4);
  if (dtype != 0) throw Error(ErrorCode::BadFormat, "unsupported dtype code " + std::to_string(dtype), 20);
  if (count == 0 || dim == 0) throw Error(ErrorCode::BadFormat, "count and dim must be positive", 8);

  const std::uint64_t payload = bytes.size() - kEmb1HeaderBytes;
  if (count > payload / 4 / dim) {
    // Report the byte offset of the first row that is not fully present.
    const std::uint64_t full_rows = payload / (4ull * dim);
    throw Error(ErrorCode::TruncatedFile, "data block shorter than count·dim floats",
                kEmb1HeaderBytes + full_rows * 4ull * dim);
  }
  const std::size_t n_values = static_cast<std::size_t>(count) * dim;
  const auto data_block = bytes.subspan(kEmb1HeaderBytes, n_values * 4);
  const std::size_t trailer_offset = kEmb1HeaderBytes + n_values * 4;

  std::vector<float> data(n_values);
  for (std::size_t i = 0; i < n_values; ++i) {
    data[i] = io::get_f32(data_block.data() + 4 * i);
    if (!std::isfinite(data[i])) throw Error(ErrorCode::NonFiniteValue, "non-finite value", i / dim);
  }

  const auto trailer_bytes = bytes.subspan(trailer_offset);
  if (trailer_bytes.empty()) throw Error(ErrorCode::TruncatedFile, "missing id trailer", trailer_offset);
  json trailer;
  try {
    trailer = json::parse(trailer_bytes.begin(), trailer_bytes.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::TruncatedFile, std::string("unreadable id trailer: ") + e.what(), trailer_offset);
  }
  if (!trailer.contains("ids") || !trailer.contains("crc32") || !trailer["ids"].is_array()) {
    throw Error(ErrorCode::BadFormat, "trailer lacks ids/crc32", trailer_offset);
  }
  const auto expected_crc = trailer["crc32"].get<std::uint32_t>();
  if (io::crc32(data_block) != expected_crc) {
    throw Error(ErrorCode::ChecksumMismatch, "data block CRC32 does not match trailer", kEmb1HeaderBytes);
  }
  auto ids = trailer["ids"].get<std::vector<std::string>>();
  if (ids.size() != count) {
    throw Error(ErrorCode::ShapeMismatch, "trailer lists " + std::to_string(ids.size()) + " ids for " +
                                              std::to_string(count) + " rows");
  }
  return EmbeddingTable(dim, std::move(data), std::move(ids));
}

EmbeddingTable load_table(const std::filesystem::path& path) { return parse_table(io::read_file(path)); }

ClassPromptTable load_prompts(const std::filesystem::path& path) {
  ClassPromptTable t{load_table(path)};
  if (t.prompts.count() < 2) throw Error(ErrorCode::InsufficientData, "class prompt table needs at least 2 classes");
  return t;
}

PairingManifest parse_manifest(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadFormat, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.contains("pairs") || !doc["pairs"].is_array()) throw Error(ErrorCode::BadFormat, "manifest lacks a pairs array");
  PairingManifest manifest;
  std::unordered_map<std::string, std::size_t> slot;
  std::size_t idx = 0;
  for (const auto& p : doc["pairs"]) {
    if (!p.contains("image") || !p.contains("text")) throw Error(ErrorCode::BadFormat, "pair entry lacks image/text", idx);
    const auto image = p["image"].get<std::string>();
    std::vector<std::string> texts;
    if (p["text"].is_array()) {
      texts = p["text"].get<std::vector<std::string>>();
    } else {
      texts.push_back(p["text"].get<std::string>());
    }
    auto [it, fresh] = slot.emplace(image, manifest.entries.size());
    if (fresh) manifest.entries.push_back({image, {}});
    auto& dst = manifest.entries[it->second].texts;
    dst.insert(dst.end(), texts.begin(), texts.end());
    ++idx;
  }
  return manifest;
}

PairingManifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::IoError, "manifest not found: " + path.string());
  return parse_manifest(io::read_text(path));
}

void save_manifest(const PairingManifest& manifest, const std::filesystem::path& path) {
  json pairs = json::array();
  for (const auto& e : manifest.entries) {
    for (const auto& t : e.texts) pairs.push_back({{"image", e.image}, {"text", t}});
  }
  io::write_atomic(path, json{{"pairs", pairs}}.dump(1) + "\n");
}

PairedDataset make_pairs(const EmbeddingTable& images, const EmbeddingTable& texts,
                         const PairingManifest& manifest, std::size_t caption_index) {
  if (images.dim() != texts.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "image dim " + std::to_string(images.dim()) + " != text dim " +
                                                  std::to_string(texts.dim()));
  }
  std::unordered_map<std::string, std::size_t> text_row;
  for (std::size_t i = 0; i < texts.count(); ++i) text_row.emplace(texts.ids()[i], i);
  const std::unordered_set<std::string> image_ids(images.ids().begin(), images.ids().end());
  std::unordered_map<std::string, const ManifestEntry*> by_image;
  std::vector<std::string> unmatched;
  for (const auto& e : manifest.entries) {
    if (!image_ids.contains(e.image)) unmatched.push_back("image:" + e.image);
    for (const auto& t : e.texts) {
      if (!text_row.contains(t)) unmatched.push_back("text:" + t);
    }
    by_image.emplace(e.image, &e);
  }

  std::vector<std::size_t> text_order;
  text_order.reserve(images.count());
  for (const auto& id : images.ids()) {
    auto it = by_image.find(id);
    if (it == by_image.end() || it->second->texts.empty()) {
      unmatched.push_back("image:" + id);
      continue;
    }
    const auto& caps = it->second->texts;
    const auto& chosen = caps[std::min(caption_index, caps.size() - 1)];
    auto tr = text_row.find(chosen);
    if (tr != text_row.end()) text_order.push_back(tr->second);
  }
  if (!unmatched.empty()) {
    std::string list;
    for (const auto& u : unmatched) list += (list.empty() ? "" : ", ") + u;
    throw Error(ErrorCode::UnmatchedId, "unmatched ids: " + list);
  }
  std::unordered_set<std::size_t> used(text_order.begin(), text_order.end());
  if (used.size() != text_order.size()) {
    throw Error(ErrorCode::UnmatchedId, "a text row is paired with more than one image");
  }
  return PairedDataset{images, texts.select(text_order)};
}

}  // namespace refinekit
