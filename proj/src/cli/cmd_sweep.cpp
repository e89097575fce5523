#include "commands.hpp"
#include "refinekit/io_util.hpp"
#include "refinekit/sweep.hpp"

namespace refinekit::cli {

namespace {

struct SweepArgs {
  std::string param;
  std::vector<std::string> values;
  std::string config;
  std::string out;
  std::size_t jobs = 1;
};

int run_sweep(const SweepArgs& a, Streams st) {
  std::vector<std::string> values;
  for (const auto& v : a.values) {
    for (auto& part : split(v, ',')) values.push_back(std::move(part));
  }
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "--values is empty");
  const SweepParam param = parse_sweep_param(a.param);
  const RunConfig base = load_run_config(a.config);
  // Reject every bad value before spending time on training.
  for (const auto& v : values) apply_sweep_value(base, param, v);

  const std::string csv = sweep_csv(run_sweep(base, param, values, a.jobs));
  if (a.out.empty()) {
    st.out << csv;
  } else {
    io::write_atomic(a.out, csv);
  }
  return 0;
}

}  // namespace

Action add_sweep(CLI::App& app, Streams st) {
  auto a = std::make_shared<SweepArgs>();
  auto* sub = app.add_subcommand("sweep", "Train and evaluate once per value of one hyperparameter");
  sub->add_option("--param", a->param, "batch, alpha, lambda, prior or beta")->required();
  sub->add_option("--values", a->values, "Comma- or space-separated values (lambda takes r:h)")->expected(0, -1);
  sub->add_option("--config", a->config, "Base run config")->required();
  sub->add_option("--out", a->out, "CSV output path (default stdout)");
  sub->add_option("--jobs", a->jobs, "Concurrent runs")->capture_default_str()->check(CLI::PositiveNumber);
  return [a, st] { return run_sweep(*a, st); };
}

}  // namespace refinekit::cli
