#include "refinekit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <unordered_map>

#include "refinekit/error.hpp"
#include "refinekit/io_util.hpp"
#include "refinekit/random.hpp"

namespace refinekit {

namespace {

std::vector<double> unit_gaussian(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double n = 0.0;
  for (double& x : v) {
    x = rng.normal();
    n += x * x;
  }
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

void append_view(std::vector<float>& out, const std::vector<double>& latent, std::size_t offset_axis, double gap,
                 double noise, Rng& rng) {
  std::vector<double> v = latent;
  v[offset_axis] += gap;
  if (noise != 0.0) {
    for (double& x : v) x += noise * rng.normal();
  }
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double x : v) out.push_back(static_cast<float>(x / n));
}

std::string pad_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%06zu", prefix, i);
  return buf;
}

}  // namespace

SynthData generate_synthetic(const SynthConfig& cfg) {
  if (cfg.n < 4) throw Error(ErrorCode::InvalidArgument, "synthetic n must be ≥ 4");
  if (cfg.dim < 2) throw Error(ErrorCode::InvalidArgument, "synthetic dim must be ≥ 2");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
  }
  Rng rng(cfg.seed, streams::kSynth);
  std::vector<std::vector<double>> centers;
  for (std::size_t c = 0; c < cfg.classes; ++c) centers.push_back(unit_gaussian(rng, cfg.dim));

  const std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.train_fraction * cfg.n)));
  SynthData out;
  for (int part = 0; part < 2; ++part) {
    const std::size_t begin = part == 0 ? 0 : n_train;
    const std::size_t end = part == 0 ? n_train : cfg.n;
    std::vector<float> img, txt;
    std::vector<std::string> img_ids, txt_ids;
    PairingManifest manifest;
    std::vector<std::size_t> labels;
    for (std::size_t i = begin; i < end; ++i) {
      std::vector<double> latent;
      if (cfg.classes > 0) {
        const std::size_t label = static_cast<std::size_t>(rng.engine()() % cfg.classes);
        latent = centers[label];
        const double spread = 0.6 / std::sqrt(static_cast<double>(cfg.dim));
        double n = 0.0;
        for (double& x : latent) {
          x += spread * rng.normal();
          n += x * x;
        }
        n = std::sqrt(n);
        for (double& x : latent) x /= n;
        labels.push_back(label);
      } else {
        latent = unit_gaussian(rng, cfg.dim);
      }
      append_view(img, latent, 0, cfg.gap, cfg.noise, rng);
      append_view(txt, latent, 1, cfg.gap, cfg.noise, rng);
      img_ids.push_back(pad_id("img", i));
      txt_ids.push_back(pad_id("txt", i));
      manifest.entries.push_back({img_ids.back(), {txt_ids.back()}});
    }
    SynthSplit split{EmbeddingTable(cfg.dim, std::move(img), std::move(img_ids)),
                     EmbeddingTable(cfg.dim, std::move(txt), std::move(txt_ids)), std::move(manifest),
                     std::move(labels)};
    (part == 0 ? out.train : out.test) = std::move(split);
  }

  if (cfg.classes > 0) {
    std::vector<float> data;
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < cfg.classes; ++c) {
      Rng unused(0);
      append_view(data, centers[c], 1, cfg.gap, 0.0, unused);
      labels.push_back(pad_id("class", c));
    }
    out.prompts = ClassPromptTable{EmbeddingTable(cfg.dim, std::move(data), std::move(labels))};
  }
  return out;
}

SynthFiles synth_file_names(const std::string& prefix) {
  SynthFiles f;
  f.train_images = prefix + "train_images.emb";
  f.train_texts = prefix + "train_texts.emb";
  f.train_manifest = prefix + "train_manifest.json";
  f.test_images = prefix + "test_images.emb";
  f.test_texts = prefix + "test_texts.emb";
  f.test_manifest = prefix + "test_manifest.json";
  return f;
}

void save_labels(const SynthSplit& split, const ClassPromptTable& prompts, const std::filesystem::path& path) {
  nlohmann::ordered_json labels = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < split.images.count(); ++i) {
    labels[split.images.ids()[i]] = prompts.labels()[split.labels[i]];
  }
  io::write_atomic(path, nlohmann::ordered_json{{"labels", labels}}.dump(1) + "\n");
}

std::vector<std::size_t> load_labels(const std::filesystem::path& path, const EmbeddingTable& images,
                                     const ClassPromptTable& prompts) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadFormat, std::string("labels file is not valid JSON: ") + e.what());
  }
  if (!doc.contains("labels") || !doc["labels"].is_object()) throw Error(ErrorCode::BadFormat, "labels file lacks a labels object");
  std::unordered_map<std::string, std::size_t> class_index;
  for (std::size_t c = 0; c < prompts.labels().size(); ++c) class_index.emplace(prompts.labels()[c], c);
  std::vector<std::size_t> out;
  out.reserve(images.count());
  for (std::size_t i = 0; i < images.count(); ++i) {
    const auto& id = images.ids()[i];
    if (!doc["labels"].contains(id)) throw Error(ErrorCode::LabelMismatch, "no label for image '" + id + "'", i);
    const auto label = doc["labels"][id].get<std::string>();
    auto it = class_index.find(label);
    if (it == class_index.end()) throw Error(ErrorCode::LabelMismatch, "unknown class '" + label + "'", i);
    out.push_back(it->second);
  }
  return out;
}

SynthFiles write_synthetic(const SynthData& data, const std::string& prefix) {
  SynthFiles f = synth_file_names(prefix);
  save_table(data.train.images, f.train_images);
  save_table(data.train.texts, f.train_texts);
  save_manifest(data.train.manifest, f.train_manifest);
  save_table(data.test.images, f.test_images);
  save_table(data.test.texts, f.test_texts);
  save_manifest(data.test.manifest, f.test_manifest);
  if (data.prompts) {
    f.prompts = prefix + "prompts.emb";
    f.train_labels = prefix + "train_labels.json";
    f.test_labels = prefix + "test_labels.json";
    save_table(data.prompts->prompts, f.prompts);
    save_labels(data.train, *data.prompts, f.train_labels);
    save_labels(data.test, *data.prompts, f.test_labels);
  }
  return f;
}

}  // namespace refinekit
