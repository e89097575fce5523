#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "refinekit/experiment.hpp"

namespace refinekit {

enum class SweepParam { Batch, Alpha, Lambda, Prior, Beta };

std::string_view to_string(SweepParam p);
SweepParam parse_sweep_param(std::string_view name);

// Base config with one field replaced. Values: batch → integer, alpha → real,
// lambda → "r:h", prior → a prior name (std, uniform, moments-txt, ...),
// beta → real (selects the scaled Gaussian prior). Throws ConfigError or
// NegativeBeta on a bad value.
RunConfig apply_sweep_value(const RunConfig& base, SweepParam param, const std::string& value);

struct RunOutcome {
  EvalSummary eval;
  double final_total = 0.0;
  TrainResult train;
};

// Trains on `train` and evaluates the refined features on `eval`.
RunOutcome train_and_evaluate(const RunConfig& cfg, const PairedDataset& train, const PairedDataset& eval);

struct SweepRow {
  std::string param;
  std::string value;
  EvalSummary eval;
  double final_total = 0.0;
};

// One train+eval per value on the base config's data; evaluation uses the
// eval section when present, otherwise the training pairs. Up to `jobs` runs
// execute concurrently; rows come back in value order and do not depend on
// `jobs`.
std::vector<SweepRow> run_sweep(const RunConfig& base, SweepParam param, const std::vector<std::string>& values,
                                std::size_t jobs = 1);

// Header plus one row per setting. Reals are written in shortest
// round-trip form.
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace refinekit
