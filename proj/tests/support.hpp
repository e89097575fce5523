#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "refinekit/embedding_store.hpp"
#include "refinekit/io_util.hpp"

namespace testsupport {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("refinekit_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline refinekit::EmbeddingTable random_table(std::size_t n, std::size_t d, std::mt19937_64& gen,
                                              const std::string& prefix) {
  std::normal_distribution<float> nd(0.0f, 1.0f);
  std::vector<float> data(n * d);
  for (float& x : data) x = nd(gen);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return refinekit::EmbeddingTable(d, std::move(data), std::move(ids));
}

inline refinekit::PairingManifest identity_manifest(const refinekit::EmbeddingTable& img,
                                                    const refinekit::EmbeddingTable& txt) {
  refinekit::PairingManifest m;
  for (std::size_t i = 0; i < img.count(); ++i) m.entries.push_back({img.ids()[i], {txt.ids()[i]}});
  return m;
}

inline bool files_equal(const std::filesystem::path& a, const std::filesystem::path& b) {
  return refinekit::io::read_file(a) == refinekit::io::read_file(b);
}

}  // namespace testsupport
