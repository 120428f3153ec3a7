#include "mgproto/config.hpp"

#include "mgproto/error.hpp"

#include <cmath>

namespace mgproto {

std::string to_string(Regularizer reg)
{
  switch (reg) {
  case Regularizer::Disto: return "disto";
  case Regularizer::DistoFixedScale: return "disto-fixed-scale";
  case Regularizer::Rank: return "rank";
  case Regularizer::None: return "none";
  }
  return "unknown";
}

std::string to_string(Schedule schedule)
{
  return schedule == Schedule::Joint ? "joint" : "fixed-proto";
}

Regularizer regularizer_from_string(const std::string& name)
{
  if (name == "disto")
    return Regularizer::Disto;
  if (name == "disto-fixed-scale")
    return Regularizer::DistoFixedScale;
  if (name == "rank")
    return Regularizer::Rank;
  if (name == "none")
    return Regularizer::None;
  throw ValidationError("unknown regularizer '" + name + "'");
}

Schedule schedule_from_string(const std::string& name)
{
  if (name == "joint")
    return Schedule::Joint;
  if (name == "fixed-proto")
    return Schedule::FixedProto;
  throw ValidationError("unknown schedule '" + name + "'");
}

void validate(const TrainConfig& c)
{
  if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda))
    throw ValidationError("config: lambda must be >= 0");
  if (c.epochs < 1)
    throw ValidationError("config: epochs must be >= 1");
  if (c.batch_size < 1)
    throw ValidationError("config: batch_size must be >= 1");
  if (c.regularizer == Regularizer::Rank && c.triplet_count < 1)
    throw ValidationError("config: triplet_count must be >= 1 for the rank regularizer");
  if (!(c.beta > 0.0))
    throw ValidationError("config: beta must be > 0");
  if (c.embedding_dim < 1)
    throw ValidationError("config: embedding_dim must be >= 1");
  if (!(c.optimizer.lr > 0.0))
    throw ValidationError("config: learning rate must be > 0");
  validate(c.distance);
  for (int h : c.model.hidden)
    if (h < 1)
      throw ValidationError("config: hidden layer sizes must be positive");
}

} // namespace mgproto
