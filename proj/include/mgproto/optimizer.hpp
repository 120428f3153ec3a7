#pragma once

#include "mgproto/config.hpp"

#include <Eigen/Core>

#include <vector>

namespace mgproto {

/// First-order optimizer over several parameter blocks. State is kept per
/// block index; call begin_step() once per iteration before the updates.
class Optimizer
{
public:
  explicit Optimizer(OptimizerConfig config);

  void begin_step();
  void update(std::size_t block, Eigen::Ref<Eigen::VectorXd> params,
              const Eigen::Ref<const Eigen::VectorXd>& grads);

  const OptimizerConfig& config() const { return config_; }
  long step_count() const { return step_; }

private:
  struct State
  {
    Eigen::VectorXd first;
    Eigen::VectorXd second;
  };

  OptimizerConfig config_;
  std::vector<State> states_;
  long step_ = 0;
};

} // namespace mgproto
