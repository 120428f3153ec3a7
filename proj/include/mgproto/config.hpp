#pragma once

#include "mgproto/geometry.hpp"
#include "mgproto/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mgproto {

enum class Regularizer { Disto, DistoFixedScale, Rank, None };
enum class Schedule { Joint, FixedProto };

std::string to_string(Regularizer reg);
std::string to_string(Schedule schedule);
Regularizer regularizer_from_string(const std::string& name);
Schedule schedule_from_string(const std::string& name);

struct OptimizerConfig
{
  enum class Kind { Sgd, Adam };
  Kind kind = Kind::Adam;
  double lr = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct ModelConfig
{
  Architecture architecture = Architecture::Mlp;
  std::vector<int> hidden{32, 32};
  Activation activation = Activation::Relu;
};

struct TrainConfig
{
  /// Weight of the prototype regularizer in the total loss.
  double lambda = 1.0;
  Regularizer regularizer = Regularizer::Disto;
  Head head = Head::Prototypes;
  /// Inverse temperature of the soft-label targets.
  double beta = 10.0;
  DistanceSpec distance;
  int embedding_dim = 64;
  bool include_internal_prototypes = false;
  Schedule schedule = Schedule::Joint;
  OptimizerConfig optimizer;
  ModelConfig model;
  int epochs = 50;
  int batch_size = 64;
  std::uint64_t seed = 0;
  /// Triplets drawn per step by the rank regularizer.
  int triplet_count = 10;
};

/// Throws ValidationError when a field is out of range.
void validate(const TrainConfig& config);

} // namespace mgproto
