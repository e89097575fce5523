#include "refinekit/sweep.hpp"

#include <atomic>
#include <exception>
#include <thread>

#include "refinekit/error.hpp"
#include "refinekit/io_util.hpp"

namespace refinekit {

namespace {

double parse_real(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ConfigError, "expected a number, got '" + s + "'");
}

}  // namespace

std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::Batch: return "batch";
    case SweepParam::Alpha: return "alpha";
    case SweepParam::Lambda: return "lambda";
    case SweepParam::Prior: return "prior";
    case SweepParam::Beta: return "beta";
  }
  return "?";
}

SweepParam parse_sweep_param(std::string_view name) {
  for (auto p : {SweepParam::Batch, SweepParam::Alpha, SweepParam::Lambda, SweepParam::Prior, SweepParam::Beta}) {
    if (to_string(p) == name) return p;
  }
  throw Error(ErrorCode::ConfigError, "unknown sweep parameter '" + std::string(name) + "'");
}

RunConfig apply_sweep_value(const RunConfig& base, SweepParam param, const std::string& value) {
  RunConfig cfg = base;
  switch (param) {
    case SweepParam::Batch: {
      const double b = parse_real(value);
      if (!(b >= 1.0) || b != static_cast<double>(static_cast<std::size_t>(b))) {
        throw Error(ErrorCode::ConfigError, "batch size must be a positive integer, got '" + value + "'");
      }
      cfg.train.batch_size = static_cast<std::size_t>(b);
      break;
    }
    case SweepParam::Alpha:
      cfg.train.loss.alpha = parse_real(value);
      break;
    case SweepParam::Lambda: {
      const auto colon = value.find(':');
      if (colon == std::string::npos) throw Error(ErrorCode::ConfigError, "lambda values take the form r:h");
      cfg.train.loss.lambda_rafa = parse_real(value.substr(0, colon));
      cfg.train.loss.lambda_hycd = parse_real(value.substr(colon + 1));
      break;
    }
    case SweepParam::Prior:
      cfg.prior = parse_prior_name(value);
      break;
    case SweepParam::Beta:
      cfg.prior = PriorConfig{};
      cfg.prior.kind = PriorKind::ScaledGaussian;
      cfg.prior.beta = parse_real(value);
      if (cfg.prior.beta < 0.0) throw Error(ErrorCode::NegativeBeta, "beta must be nonnegative, got " + value);
      break;
  }
  try {
    cfg.train.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) throw Error(ErrorCode::ConfigError, e.what());
    throw;
  }
  return cfg;
}

RunOutcome train_and_evaluate(const RunConfig& cfg, const PairedDataset& train, const PairedDataset& eval) {
  RunOutcome out;
  out.train = run_training(cfg, train);
  out.eval = evaluate(embed(&out.train.heads, eval));
  out.final_total = out.train.report.steps.empty() ? 0.0 : out.train.report.steps.back().total;
  return out;
}

std::vector<SweepRow> run_sweep(const RunConfig& base, SweepParam param, const std::vector<std::string>& values,
                                std::size_t jobs) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one value");
  std::vector<RunConfig> configs;
  for (const auto& v : values) configs.push_back(apply_sweep_value(base, param, v));

  const PairedDataset train = load_dataset(base.data);
  const PairedDataset eval = base.eval ? load_dataset(*base.eval) : train;

  std::vector<SweepRow> rows(values.size());
  std::vector<std::exception_ptr> failures(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      try {
        const RunOutcome r = train_and_evaluate(configs[i], train, eval);
        rows[i] = SweepRow{std::string(to_string(param)), values[i], r.eval, r.final_total};
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, values.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string csv = "param,value,modality_gap,alignment,uniformity";
  std::vector<std::size_t> ks;
  if (!rows.empty()) {
    for (const auto& [k, v] : rows.front().eval.t2i.recall_at) ks.push_back(k);
  }
  for (auto k : ks) csv += ",r" + std::to_string(k) + "_t2i";
  for (auto k : ks) csv += ",r" + std::to_string(k) + "_i2t";
  csv += ",final_total\n";
  for (const auto& r : rows) {
    const auto& m = r.eval.metrics;
    csv += r.param + "," + r.value + "," + io::format_double(m.modality_gap) + "," + io::format_double(m.alignment) +
           "," + io::format_double(m.uniformity);
    for (auto k : ks) csv += "," + io::format_double(r.eval.t2i.recall_at.at(k));
    for (auto k : ks) csv += "," + io::format_double(r.eval.i2t.recall_at.at(k));
    csv += "," + io::format_double(r.final_total) + "\n";
  }
  return csv;
}

}  // namespace refinekit
