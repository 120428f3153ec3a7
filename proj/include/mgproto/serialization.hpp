#pragma once

#include "mgproto/config.hpp"
#include "mgproto/evaluation.hpp"
#include "mgproto/metric_core.hpp"
#include "mgproto/model.hpp"
#include "mgproto/taxonomy.hpp"
#include "mgproto/train.hpp"

#include <json.hpp>

#include <string>

namespace mgproto {

using Json = nlohmann::ordered_json;

inline constexpr int checkpoint_version = 1;

Json to_json(const DistortionReport& report);
Json to_json(const EvalReport& report);
Json to_json(const TrainHistory& history);
Json to_json(const DistanceSpec& spec);
Json to_json(const TrainConfig& config);
Json to_json(const Taxonomy& tax);

DistanceSpec distance_spec_from_json(const Json& j);
/// Fields missing from `j` keep their value from `base`.
TrainConfig train_config_from_json(const Json& j, const TrainConfig& base = {});
Taxonomy taxonomy_from_json(const Json& j);

/// Row-major matrix as {"rows", "cols", "data"}.
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

struct Checkpoint
{
  Classifier classifier;
  Taxonomy taxonomy;
};

/// Versioned checkpoint: head, distance, architecture, flat parameters,
/// prototype matrix and class map, plus the taxonomy it was trained on.
Json checkpoint_to_json(const Classifier& classifier, const Taxonomy& tax);
Checkpoint checkpoint_from_json(const Json& j);
Checkpoint load_checkpoint(const std::string& path);

/// Confusion counts with true classes as rows.
std::string confusion_csv(const EvalReport& report);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

} // namespace mgproto
