#include "commands.hpp"
#include "refinekit/synth.hpp"

namespace refinekit::cli {

namespace {

struct SynthArgs {
  SynthConfig cfg;
  std::string prefix;
};

int run_synth(const SynthArgs& a, Streams st) {
  const SynthData data = generate_synthetic(a.cfg);
  const SynthFiles f = write_synthetic(data, a.prefix);
  nlohmann::ordered_json j;
  j["train"] = {{"images", f.train_images.string()},
                {"texts", f.train_texts.string()},
                {"manifest", f.train_manifest.string()},
                {"count", data.train.images.count()}};
  j["test"] = {{"images", f.test_images.string()},
               {"texts", f.test_texts.string()},
               {"manifest", f.test_manifest.string()},
               {"count", data.test.images.count()}};
  if (data.prompts) {
    j["prompts"] = f.prompts.string();
    j["train"]["labels"] = f.train_labels.string();
    j["test"]["labels"] = f.test_labels.string();
  }
  st.out << j.dump(2) << "\n";
  return 0;
}

}  // namespace

Action add_synth(CLI::App& app, Streams st) {
  auto a = std::make_shared<SynthArgs>();
  auto* sub = app.add_subcommand("synth", "Generate paired synthetic embeddings with a modality gap");
  sub->add_option("--n", a->cfg.n, "Number of pairs")->capture_default_str();
  sub->add_option("--d", a->cfg.dim, "Embedding dimension")->capture_default_str();
  sub->add_option("--gap", a->cfg.gap, "Offset along the modality directions")->capture_default_str();
  sub->add_option("--noise", a->cfg.noise, "Per-coordinate noise scale")->capture_default_str();
  sub->add_option("--seed", a->cfg.seed, "Random seed")->capture_default_str();
  sub->add_option("--classes", a->cfg.classes, "Cluster latents into classes and emit prompts")->capture_default_str();
  sub->add_option("--train-fraction", a->cfg.train_fraction, "Share of pairs in the training split")
      ->capture_default_str();
  sub->add_option("--out-prefix", a->prefix, "Prefix for every written file")->required();
  return [a, st] { return run_synth(*a, st); };
}

}  // namespace refinekit::cli
