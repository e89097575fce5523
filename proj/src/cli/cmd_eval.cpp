#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "commands.hpp"
#include "refinekit/io_util.hpp"
#include "refinekit/kernels.hpp"
#include "refinekit/synth.hpp"

namespace refinekit::cli {

namespace fs = std::filesystem;

namespace {

struct EvalArgs {
  std::string heads;
  std::string data;
  std::string images, texts, manifest;
  std::size_t caption_index = 0;
  std::string prompts;
  std::string labels;
  std::string tasks = "metrics,retrieval";
  std::string ks = "1,5,10";
  std::string out;
  std::string pca_out;
  bool pretty = false;
};

// --data names either a bare data section or a run config (its eval
// section when present, otherwise its training data).
DataPaths resolve_data(const EvalArgs& a) {
  if (a.data.empty()) {
    if (a.images.empty() || a.texts.empty() || a.manifest.empty()) {
      throw Error(ErrorCode::InvalidArgument, "eval needs --data or all of --images, --texts, --manifest");
    }
    return DataPaths{a.images, a.texts, a.manifest, a.caption_index};
  }
  const std::string text = io::read_text(a.data);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("--data is not valid JSON: ") + e.what());
  }
  const fs::path base = fs::absolute(a.data).parent_path();
  if (j.contains("images")) {
    const RunConfig rc = parse_run_config(nlohmann::json{{"data", j}}.dump(), base);
    return rc.data;
  }
  const RunConfig rc = parse_run_config(text, base);
  return rc.eval ? *rc.eval : rc.data;
}

std::string fixed(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::string render_pretty(const nlohmann::ordered_json& r) {
  std::ostringstream os;
  os << "n_test        " << r["n_test"].get<std::size_t>() << "\n";
  if (r.contains("metrics")) {
    for (const auto& [k, v] : r["metrics"].items()) {
      os << k << std::string(14 - std::min<std::size_t>(13, k.size()), ' ') << fixed(v.get<double>(), 8) << "\n";
    }
  }
  if (r.contains("retrieval")) {
    for (const auto& [dir, ks] : r["retrieval"].items()) {
      os << dir;
      for (const auto& [k, v] : ks.items()) os << "  " << k << "=" << fixed(v.get<double>(), 4);
      os << "\n";
    }
  }
  if (r.contains("zeroshot")) os << "zero-shot     " << fixed(r["zeroshot"]["accuracy"].get<double>(), 4) << "\n";
  if (r.contains("pca")) {
    os << "pca ratio    ";
    for (const auto& v : r["pca"]["explained_ratio"]) os << " " << fixed(v.get<double>(), 4);
    os << "\n";
  }
  return os.str();
}

void write_pca_csv(const PcaResult& pca, const PairedDataset& data, const fs::path& path) {
  std::string csv = "id,modality,pc1,pc2\n";
  const std::size_t n = data.count();
  for (std::size_t r = 0; r < pca.coords.rows(); ++r) {
    const bool image = r < n;
    const auto& id = image ? data.images.ids()[r] : data.texts.ids()[r - n];
    csv += id + (image ? ",image," : ",text,") + io::format_double(pca.coords(r, 0)) + "," +
           io::format_double(pca.coords.cols() > 1 ? pca.coords(r, 1) : 0.0) + "\n";
  }
  io::write_atomic(path, csv);
}

int run_eval(const EvalArgs& a, Streams st) {
  const auto tasks = split(a.tasks, ',');
  if (tasks.empty()) throw Error(ErrorCode::InvalidArgument, "--tasks is empty");
  for (const auto& t : tasks) {
    if (t != "metrics" && t != "retrieval" && t != "zeroshot" && t != "pca") {
      throw Error(ErrorCode::InvalidArgument, "unknown task '" + t + "'");
    }
  }
  auto wants = [&](const char* t) { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); };
  const auto ks = parse_size_list(a.ks);

  const PairedDataset data = load_dataset(resolve_data(a));
  std::optional<HeadPair> heads;
  if (!a.heads.empty()) {
    const fs::path dir(a.heads);
    heads = HeadPair{load_head(dir / "image_head.rhd", data.dim()), load_head(dir / "text_head.rhd", data.dim())};
  }
  const Features f = embed(heads ? &*heads : nullptr, data);

  nlohmann::ordered_json report;
  report["n_test"] = data.count();
  report["features"] = heads ? "heads" : "teacher";
  if (wants("metrics")) report["metrics"] = metrics_json(feature_metrics(f.images, f.texts));
  if (wants("retrieval")) {
    const EvalSummary s = evaluate(f, ks);
    report["retrieval"] = {{"t2i", retrieval_json(s.t2i)}, {"i2t", retrieval_json(s.i2t)}};
  }
  if (wants("zeroshot")) {
    if (a.prompts.empty() || a.labels.empty()) {
      throw Error(ErrorCode::InvalidArgument, "zeroshot needs --prompts and --labels");
    }
    const ClassPromptTable prompts = load_prompts(a.prompts);
    if (prompts.prompts.dim() != data.dim()) {
      throw Error(ErrorCode::DimensionMismatch, "prompt dim " + std::to_string(prompts.prompts.dim()) +
                                                    " differs from data dim " + std::to_string(data.dim()));
    }
    const auto labels = load_labels(a.labels, data.images, prompts);
    const Matrix raw = prompts.prompts.to_matrix();
    const Matrix p = heads ? forward(heads->text, raw) : kernels::normalize_rows(raw);
    const ZeroShotResult zs = zeroshot_classify(f.images, p, labels);
    report["zeroshot"] = {{"accuracy", zs.accuracy}, {"classes", prompts.labels().size()}};
  }
  if (wants("pca")) {
    Matrix both(2 * data.count(), data.dim());
    for (std::size_t i = 0; i < data.count(); ++i) {
      for (std::size_t k = 0; k < data.dim(); ++k) {
        both(i, k) = f.images(i, k);
        both(data.count() + i, k) = f.texts(i, k);
      }
    }
    const PcaResult pca = pca_project(both, 2);
    report["pca"] = {{"explained_ratio", pca.explained_ratio}, {"variances", pca.variances}};
    if (!a.pca_out.empty()) write_pca_csv(pca, data, a.pca_out);
  }

  const std::string text = a.pretty ? render_pretty(report) : report.dump(2) + "\n";
  if (a.out.empty()) {
    st.out << text;
  } else {
    io::write_atomic(a.out, text);
  }
  return 0;
}

}  // namespace

Action add_eval(CLI::App& app, Streams st) {
  auto a = std::make_shared<EvalArgs>();
  auto* sub = app.add_subcommand("eval", "Evaluate teacher or refined features");
  sub->add_option("--heads", a->heads, "Directory with image_head.rhd and text_head.rhd (omit for teacher features)");
  sub->add_option("--data", a->data, "Data-section or run-config JSON");
  sub->add_option("--images", a->images, "Image EMB1 table");
  sub->add_option("--texts", a->texts, "Text EMB1 table");
  sub->add_option("--manifest", a->manifest, "Pairing manifest");
  sub->add_option("--caption-index", a->caption_index, "Caption used for multi-caption images");
  sub->add_option("--prompts", a->prompts, "Class-prompt EMB1 table (zeroshot)");
  sub->add_option("--labels", a->labels, "Image labels JSON (zeroshot)");
  sub->add_option("--tasks", a->tasks, "Comma list of metrics,retrieval,zeroshot,pca")->capture_default_str();
  sub->add_option("--ks", a->ks, "Comma list of recall cutoffs")->capture_default_str();
  sub->add_option("--out", a->out, "Write the report here instead of stdout");
  sub->add_option("--pca-out", a->pca_out, "CSV of 2-D PCA coordinates");
  sub->add_flag("--pretty", a->pretty, "Human-readable table instead of JSON");
  return [a, st] { return run_eval(*a, st); };
}

}  // namespace refinekit::cli
