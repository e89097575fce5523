#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refinekit/embedding_store.hpp"
#include "refinekit/priors.hpp"
#include "refinekit/trainer.hpp"

namespace refinekit {

struct DataPaths {
  std::filesystem::path images;
  std::filesystem::path texts;
  std::filesystem::path manifest;
  std::size_t caption_index = 0;
};

// Prior as written in a config. Moment-matched priors name the teacher
// features they are fitted on ("img", "txt" or "all") unless mu/sigma are
// given explicitly.
struct PriorConfig {
  PriorKind kind = PriorKind::StandardGaussian;
  double beta = 1.0;
  std::string moments_source = "all";
  std::vector<double> mu;
  std::vector<double> sigma;
};

// Parses the short names used on the command line: std, uniform,
// moments-img, moments-txt, moments-all, beta=<x>.
PriorConfig parse_prior_name(const std::string& name);

// Resolves a PriorConfig against the training data (fits moments on the
// unit-normalized teacher features when needed).
PriorSpec resolve_prior(const PriorConfig& pc, const PairedDataset& train);

// Run-config file:
// {
//   "data":  {"images": ..., "texts": ..., "manifest": ..., "caption_index": 0},
//   "eval":  {"images": ..., "texts": ..., "manifest": ...},          (optional)
//   "model": {"hidden": h},                                           (0 = d)
//   "loss":  {"mode", "tau", "alpha", "lambda_rafa", "lambda_hycd", "rafa_prenorm"},
//   "prior": {"kind", "beta", "moments", "mu", "sigma"},
//   "train": {"batch_size", "lr", "epochs", "optimizer", "weight_decay",
//             "betas", "eps", "seed", "deterministic"}
// }
// Relative paths resolve against the config file's directory.
struct RunConfig {
  DataPaths data;
  std::optional<DataPaths> eval;
  std::size_t hidden = 0;
  TrainConfig train;
  PriorConfig prior;
};

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Fully resolved config as JSON (paths absolute); hashing this gives the
// resolved-config hash.
nlohmann::ordered_json to_json(const RunConfig& cfg);

}  // namespace refinekit
