#pragma once

#include "mgproto/config.hpp"
#include "mgproto/data.hpp"
#include "mgproto/serialization.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mgproto::cli {

/// Exit statuses.
inline constexpr int exit_ok = 0;
inline constexpr int exit_runtime = 1;
inline constexpr int exit_usage = 2;

/// Environment variable naming the default output root for `train`.
inline constexpr const char* output_root_env = "MGPROTO_OUTPUT_ROOT";

struct DatasetSource
{
  std::string csv_path;
  std::string label_column = "label";
  std::optional<GaussianHierarchyParams> synthetic;
};

/// Everything `train` needs: paths, data source, split, seeds and the
/// training hyper-parameters.
struct RunConfig
{
  std::string taxonomy_path;
  DatasetSource dataset;
  double test_fraction = 0.5;
  std::uint64_t split_seed = 0;
  std::vector<std::uint64_t> seeds{0};
  std::string aggregation = "median";
  std::string output_dir;
  std::string scheme = "max-prob";
  TrainConfig train;
};

/// Relative paths are resolved against `base_dir`.
RunConfig run_config_from_json(const Json& j, const std::string& base_dir = "");
Json to_json(const RunConfig& config);

/// Runs one command line (argv[0] is the program name) and returns its exit
/// status. Diagnostics go to `err`, summaries to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mgproto::cli
