#pragma once

#include "mgproto/config.hpp"
#include "mgproto/geometry.hpp"
#include "mgproto/metric_core.hpp"
#include "mgproto/model.hpp"
#include "mgproto/taxonomy.hpp"

#include <Eigen/Core>

#include <optional>
#include <random>
#include <vector>

namespace mgproto {

/// Softmin over prototype distances: p_k proportional to exp(-d(e, pi_k)).
/// Rows of `prototypes` are the leaf prototypes.
Eigen::VectorXd posterior(const VectorRef& embedding, const Eigen::MatrixXd& prototypes,
                          const DistanceSpec& spec);

Eigen::VectorXd softmax(const VectorRef& logits);

/// log(sum(exp(values))) with max-subtraction.
double log_sum_exp(const VectorRef& values);

struct LabeledBatch
{
  Eigen::MatrixXd features;
  /// Leaf class indices.
  std::vector<int> labels;
};

struct EmbeddingNll
{
  double value = 0.0;
  /// dLoss/dEmbedding, one row per sample.
  Eigen::MatrixXd embedding_grads;
  /// dLoss/dPrototype for the leaf prototypes.
  Eigen::MatrixXd prototype_grads;
};

/// Mean over samples of d(e, pi_z) + log sum_l exp(-d(e, pi_l)).
EmbeddingNll embedding_nll(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                           const Eigen::MatrixXd& prototypes, const DistanceSpec& spec);

struct DataLoss
{
  double value = 0.0;
  Eigen::VectorXd model_grads;
  /// Same shape as the full prototype matrix; internal rows stay zero.
  Eigen::MatrixXd prototype_grads;
};

/// Prototypical negative log-likelihood of the true leaf classes.
DataLoss data_loss(const LabeledBatch& batch, const EmbeddingModel& model, const PrototypeSet& pi,
                   const DistanceSpec& spec);

struct LossBreakdown
{
  double l_data = 0.0;
  double l_reg = 0.0;
  double total = 0.0;
  std::optional<double> s_star;
};

struct TotalLoss
{
  LossBreakdown breakdown;
  Eigen::VectorXd model_grads;
  Eigen::MatrixXd prototype_grads;
};

/// Regularizer value and prototype gradient for the configured kind.
/// `rng` supplies fresh triplets for the rank regularizer.
struct RegularizerValue
{
  double value = 0.0;
  std::optional<double> s_star;
  Eigen::MatrixXd grads;
};

RegularizerValue regularizer_loss(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                                  const DistanceSpec& spec, Regularizer kind, int triplet_count,
                                  std::mt19937_64& rng);

/// l_data + lambda * l_reg for the prototype head. `costs` covers every
/// prototype row (leaves, or all nodes with internal prototypes).
TotalLoss total_loss(const LabeledBatch& batch, const EmbeddingModel& model, const PrototypeSet& pi,
                     const Eigen::MatrixXd& costs, const TrainConfig& config, std::mt19937_64& rng);

/// Softmin of costs to the true class: t_l proportional to exp(-beta * D[l, z]).
Eigen::VectorXd soft_label_targets(const Eigen::MatrixXd& costs, int true_class, double beta);

struct LogitLoss
{
  double value = 0.0;
  Eigen::VectorXd embedding_grads;
  Eigen::VectorXd head_grads;
};

/// Cross-entropy between softmax(head(embedding(x))) and per-sample targets
/// (rows of `targets`).
LogitLoss logit_loss(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                     const EmbeddingModel& embedding, const EmbeddingModel& head);

/// One-hot (cross-entropy) or soft-label target rows for a batch.
Eigen::MatrixXd target_rows(const std::vector<int>& labels, const Eigen::MatrixXd& costs, Head head,
                            double beta);

} // namespace mgproto
