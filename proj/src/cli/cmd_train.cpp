#include <filesystem>
#include <optional>

#include "commands.hpp"
#include "refinekit/io_util.hpp"

namespace refinekit::cli {

namespace fs = std::filesystem;

namespace {

struct TrainArgs {
  std::string config;
  std::string out_dir;
  std::optional<bool> rafa_prenorm;
};

nlohmann::ordered_json hash_inputs(const RunConfig& cfg) {
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  auto add = [&](const DataPaths& d) {
    for (const auto& p : {d.images, d.texts, d.manifest}) inputs[p.string()] = io::sha256_hex(io::read_file(p));
  };
  add(cfg.data);
  if (cfg.eval) add(*cfg.eval);
  return inputs;
}

int run_train(const TrainArgs& a, Streams st) {
  RunConfig cfg = load_run_config(a.config);
  if (a.rafa_prenorm) cfg.train.loss.rafa_prenorm = *a.rafa_prenorm;
  const std::string resolved = to_json(cfg).dump();

  const fs::path out_dir(a.out_dir);
  fs::create_directories(out_dir);
  const fs::path image_path = out_dir / "image_head.rhd";
  const fs::path text_path = out_dir / "text_head.rhd";
  const fs::path report_path = out_dir / "train_report.jsonl";
  const fs::path summary_path = out_dir / "train_summary.json";
  const fs::path manifest_path = out_dir / "run_manifest.json";

  nlohmann::ordered_json manifest;
  manifest["command"] = "train";
  manifest["config_path"] = fs::absolute(a.config).string();
  manifest["config_sha256"] = io::sha256_hex(io::read_file(a.config));
  manifest["resolved_config_sha256"] = io::sha256_hex(resolved);
  manifest["resolved_config"] = nlohmann::ordered_json::parse(resolved);
  manifest["inputs"] = hash_inputs(cfg);
  manifest["outputs"] = {image_path.string(), text_path.string(), report_path.string(), summary_path.string()};
  manifest["status"] = "running";
  manifest["started_at"] = utc_timestamp();
  io::write_atomic(manifest_path, manifest.dump(2) + "\n");

  if (objective_is_degenerate(cfg.train.loss)) {
    st.err << "warning: lambda_rafa and lambda_hycd are both zero; heads are left unchanged\n";
  }

  const PairedDataset data = load_dataset(cfg.data);
  const TrainResult result = run_training(cfg, data);
  const TrainReport& rep = result.report;

  save_head(result.heads.image, image_path);
  save_head(result.heads.text, text_path);
  io::write_atomic(report_path, rep.steps_jsonl());
  nlohmann::ordered_json summary;
  summary["seed"] = rep.seed;
  summary["steps"] = rep.steps.size();
  summary["updates_skipped"] = rep.updates_skipped;
  summary["image_head_sha256"] = rep.image_head_checksum;
  summary["text_head_sha256"] = rep.text_head_checksum;
  summary["final_total"] = rep.steps.empty() ? 0.0 : rep.steps.back().total;
  io::write_atomic(summary_path, summary.dump(2) + "\n");

  manifest["status"] = "completed";
  manifest["finished_at"] = utc_timestamp();
  manifest["wall_time_seconds"] = rep.wall_time_seconds;
  io::write_atomic(manifest_path, manifest.dump(2) + "\n");
  st.out << summary.dump() << "\n";
  return 0;
}

}  // namespace

Action add_train(CLI::App& app, Streams st) {
  auto args = std::make_shared<TrainArgs>();
  auto* sub = app.add_subcommand("train", "Train refinement heads from a run config");
  sub->add_option("--config", args->config, "Run-config JSON")->required();
  sub->add_option("--out", args->out_dir, "Output directory")->required();
  sub->add_option("--rafa-prenorm", args->rafa_prenorm,
                  "Override loss.rafa_prenorm: RaFA on the residual (true) or the unit feature (false)");
  return [args, st] { return run_train(*args, st); };
}

}  // namespace refinekit::cli
