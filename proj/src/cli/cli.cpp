#include "refinekit/cli.hpp"

#include <ctime>
#include <map>

#include "commands.hpp"
#include "refinekit/parallel.hpp"

namespace refinekit {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::MissingMoments:
    case ErrorCode::NegativeBeta:
      return kExitConfig;
    case ErrorCode::NonFiniteLoss:
      return kExitNonFinite;
    default:
      return kExitData;
  }
}

namespace cli {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& p : split(text, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(p, &used);
      if (used != p.size() || v <= 0) throw std::invalid_argument(p);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "expected a positive integer, got '" + p + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty integer list");
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json retrieval_json(const RetrievalReport& r) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.recall_at) j["R@" + std::to_string(k)] = v;
  return j;
}

nlohmann::ordered_json metrics_json(const MetricsReport& m) {
  return {{"modality_gap", m.modality_gap}, {"alignment", m.alignment}, {"uniformity", m.uniformity}};
}

}  // namespace cli

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  apply_thread_cap_from_env();
  CLI::App app{"Post-pre-training of dual-encoder embeddings", "refine-kit"};
  app.require_subcommand(1);
  cli::Streams st{out, err};
  std::map<const CLI::App*, cli::Action> actions;
  auto reg = [&](cli::Action (*add)(CLI::App&, cli::Streams)) {
    const std::size_t before = app.get_subcommands({}).size();
    cli::Action a = add(app, st);
    actions.emplace(app.get_subcommands({})[before], std::move(a));
  };
  reg(cli::add_train);
  reg(cli::add_eval);
  reg(cli::add_synth);
  reg(cli::add_sweep);
  reg(cli::add_convert);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  try {
    return actions.at(chosen)();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace refinekit
