#include "refinekit/run_config.hpp"

#include "refinekit/error.hpp"
#include "refinekit/io_util.hpp"

namespace refinekit {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

DataPaths parse_data(const json& j, const std::filesystem::path& base, const char* section) {
  for (const char* key : {"images", "texts", "manifest"}) {
    if (!j.contains(key)) throw Error(ErrorCode::ConfigError, std::string(section) + "." + key + " is required");
  }
  DataPaths d;
  d.images = resolve(base, j["images"].get<std::string>());
  d.texts = resolve(base, j["texts"].get<std::string>());
  d.manifest = resolve(base, j["manifest"].get<std::string>());
  d.caption_index = j.value("caption_index", std::size_t{0});
  return d;
}

json data_json(const DataPaths& d) {
  return {{"images", d.images.string()},
          {"texts", d.texts.string()},
          {"manifest", d.manifest.string()},
          {"caption_index", d.caption_index}};
}

PriorKind parse_prior_kind(const std::string& s) {
  if (s == "standard_gaussian" || s == "std") return PriorKind::StandardGaussian;
  if (s == "uniform01" || s == "uniform") return PriorKind::Uniform01;
  if (s == "gaussian_moments" || s == "moments") return PriorKind::GaussianMoments;
  if (s == "scaled_gaussian") return PriorKind::ScaledGaussian;
  throw Error(ErrorCode::ConfigError, "unknown prior kind '" + s + "'");
}

}  // namespace

PriorConfig parse_prior_name(const std::string& name) {
  PriorConfig pc;
  if (name == "std") {
    pc.kind = PriorKind::StandardGaussian;
  } else if (name == "uniform") {
    pc.kind = PriorKind::Uniform01;
  } else if (name.rfind("moments-", 0) == 0) {
    pc.kind = PriorKind::GaussianMoments;
    pc.moments_source = name.substr(8);
    if (pc.moments_source != "img" && pc.moments_source != "txt" && pc.moments_source != "all") {
      throw Error(ErrorCode::ConfigError, "unknown moments source in '" + name + "'");
    }
  } else if (name.rfind("beta=", 0) == 0) {
    pc.kind = PriorKind::ScaledGaussian;
    try {
      pc.beta = std::stod(name.substr(5));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "bad beta in '" + name + "'");
    }
  } else {
    throw Error(ErrorCode::ConfigError, "unknown prior '" + name + "'");
  }
  return pc;
}

PriorSpec resolve_prior(const PriorConfig& pc, const PairedDataset& train) {
  switch (pc.kind) {
    case PriorKind::StandardGaussian: return PriorSpec::standard_gaussian();
    case PriorKind::Uniform01: return PriorSpec::uniform01();
    case PriorKind::ScaledGaussian: return PriorSpec::scaled_gaussian(pc.beta);
    case PriorKind::GaussianMoments: break;
  }
  if (!pc.mu.empty() || !pc.sigma.empty()) return PriorSpec::gaussian_moments(pc.mu, pc.sigma);
  const Matrix img = train.images.to_matrix();
  const Matrix txt = train.texts.to_matrix();
  Moments m;
  if (pc.moments_source == "img") {
    m = fit_moments(img, true);
  } else if (pc.moments_source == "txt") {
    m = fit_moments(txt, true);
  } else {
    const Matrix* both[] = {&img, &txt};
    m = fit_moments(std::span<const Matrix* const>(both), true);
  }
  return PriorSpec::gaussian_moments(std::move(m.mu), std::move(m.sigma));
}

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  try {
    RunConfig cfg;
    if (!j.contains("data")) throw Error(ErrorCode::ConfigError, "config.data is required");
    cfg.data = parse_data(j["data"], base_dir, "data");
    if (j.contains("eval")) cfg.eval = parse_data(j["eval"], base_dir, "eval");
    if (j.contains("model")) cfg.hidden = j["model"].value("hidden", std::size_t{0});

    auto& loss = cfg.train.loss;
    if (j.contains("loss")) {
      const auto& l = j["loss"];
      if (l.contains("mode")) loss.mode = parse_loss_mode(l["mode"].get<std::string>());
      loss.tau = l.value("tau", loss.tau);
      loss.alpha = l.value("alpha", loss.alpha);
      loss.lambda_rafa = l.value("lambda_rafa", loss.lambda_rafa);
      loss.lambda_hycd = l.value("lambda_hycd", loss.lambda_hycd);
      loss.rafa_prenorm = l.value("rafa_prenorm", loss.rafa_prenorm);
    }
    if (j.contains("prior")) {
      const auto& p = j["prior"];
      if (p.contains("kind")) cfg.prior.kind = parse_prior_kind(p["kind"].get<std::string>());
      cfg.prior.beta = p.value("beta", cfg.prior.beta);
      cfg.prior.moments_source = p.value("moments", cfg.prior.moments_source);
      if (p.contains("mu")) cfg.prior.mu = p["mu"].get<std::vector<double>>();
      if (p.contains("sigma")) cfg.prior.sigma = p["sigma"].get<std::vector<double>>();
      if (cfg.prior.kind == PriorKind::ScaledGaussian && cfg.prior.beta < 0.0) {
        throw Error(ErrorCode::NegativeBeta, "prior.beta must be nonnegative");
      }
    }
    auto& t = cfg.train;
    if (j.contains("train")) {
      const auto& tr = j["train"];
      t.batch_size = tr.value("batch_size", t.batch_size);
      t.lr = tr.value("lr", t.lr);
      t.epochs = tr.value("epochs", t.epochs);
      if (tr.contains("optimizer")) t.optimizer = parse_optimizer(tr["optimizer"].get<std::string>());
      t.weight_decay = tr.value("weight_decay", t.weight_decay);
      if (tr.contains("betas")) {
        const auto b = tr["betas"].get<std::vector<double>>();
        if (b.size() != 2) throw Error(ErrorCode::ConfigError, "train.betas must have two entries");
        t.beta1 = b[0];
        t.beta2 = b[1];
      }
      t.eps = tr.value("eps", t.eps);
      t.seed = tr.value("seed", t.seed);
      t.deterministic = tr.value("deterministic", t.deterministic);
    }
    t.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config field has the wrong type: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) throw Error(ErrorCode::ConfigError, e.what());
    throw;
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const Error&) {
    throw Error(ErrorCode::ConfigError, "cannot read config " + path.string());
  }
  return parse_run_config(text, std::filesystem::absolute(path).parent_path());
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["data"] = data_json(cfg.data);
  if (cfg.eval) j["eval"] = data_json(*cfg.eval);
  j["model"] = {{"hidden", cfg.hidden}};
  const auto& l = cfg.train.loss;
  j["loss"] = {{"mode", std::string(to_string(l.mode))}, {"tau", l.tau},
               {"alpha", l.alpha}, {"lambda_rafa", l.lambda_rafa},
               {"lambda_hycd", l.lambda_hycd}, {"rafa_prenorm", l.rafa_prenorm}};
  nlohmann::ordered_json prior;
  prior["kind"] = std::string(to_string(cfg.prior.kind));
  prior["beta"] = cfg.prior.beta;
  prior["moments"] = cfg.prior.moments_source;
  if (!cfg.prior.mu.empty()) prior["mu"] = cfg.prior.mu;
  if (!cfg.prior.sigma.empty()) prior["sigma"] = cfg.prior.sigma;
  j["prior"] = prior;
  const auto& t = cfg.train;
  j["train"] = {{"batch_size", t.batch_size}, {"lr", t.lr},
                {"epochs", t.epochs}, {"optimizer", std::string(to_string(t.optimizer))},
                {"weight_decay", t.weight_decay}, {"betas", {t.beta1, t.beta2}},
                {"eps", t.eps}, {"seed", t.seed},
                {"deterministic", t.deterministic}};
  return j;
}

}  // namespace refinekit
