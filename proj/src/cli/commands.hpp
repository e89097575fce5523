#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "refinekit/error.hpp"
#include "refinekit/experiment.hpp"

namespace refinekit::cli {

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

using Action = std::function<int()>;

// Each registers one subcommand on `app` and returns the action to run when
// that subcommand is selected.
Action add_train(CLI::App& app, Streams st);
Action add_eval(CLI::App& app, Streams st);
Action add_synth(CLI::App& app, Streams st);
Action add_sweep(CLI::App& app, Streams st);
Action add_convert(CLI::App& app, Streams st);

// Shared helpers.
std::vector<std::size_t> parse_size_list(const std::string& text);
std::vector<std::string> split(const std::string& text, char sep);
std::string utc_timestamp();
nlohmann::ordered_json retrieval_json(const RetrievalReport& r);
nlohmann::ordered_json metrics_json(const MetricsReport& m);

}  // namespace refinekit::cli
