#pragma once

#include "mgproto/geometry.hpp"
#include "mgproto/metric_core.hpp"

#include <Eigen/Core>

#include <random>
#include <string>
#include <vector>

namespace mgproto {

enum class Architecture { Identity, Linear, Mlp };
enum class Activation { Relu, Tanh };

std::string to_string(Architecture arch);
std::string to_string(Activation act);
Architecture architecture_from_string(const std::string& name);
Activation activation_from_string(const std::string& name);

/// Activations kept by forward_batch for the backward pass.
struct ForwardCache
{
  /// Input to each layer (samples are rows).
  std::vector<Eigen::MatrixXd> inputs;
  /// Pre-activation output of each layer.
  std::vector<Eigen::MatrixXd> pre_activations;
};

/// Map from raw features to the embedding space. Parameters are one flat
/// vector; each layer stores its (out x in) weight matrix column-major,
/// followed by its bias. The activation is applied after every layer except
/// the last.
class EmbeddingModel
{
public:
  static EmbeddingModel identity(int dim);
  static EmbeddingModel linear(int input_dim, int output_dim);
  /// `layer_sizes` lists input, hidden and output widths (at least two).
  static EmbeddingModel mlp(std::vector<int> layer_sizes, Activation activation);

  Architecture architecture() const { return arch_; }
  Activation activation() const { return activation_; }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  std::size_t layer_count() const { return arch_ == Architecture::Identity ? 0 : sizes_.size() - 1; }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  /// Replaces the parameters; throws ValidationError on size mismatch or
  /// non-finite values.
  void set_parameters(Eigen::VectorXd params);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init_random(std::mt19937_64& rng);

  Eigen::VectorXd forward(const VectorRef& x) const;
  /// Rows of `inputs` are samples. Throws NumericError on non-finite output.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs, ForwardCache* cache = nullptr) const;
  /// Parameter gradient given dLoss/dOutput for the cached batch. Writes
  /// dLoss/dInput to `input_grad` when given.
  Eigen::VectorXd backward(const ForwardCache& cache, const Eigen::MatrixXd& output_grad,
                           Eigen::MatrixXd* input_grad = nullptr) const;

private:
  static std::size_t count_parameters(const std::vector<int>& sizes);

  Architecture arch_ = Architecture::Identity;
  Activation activation_ = Activation::Relu;
  std::vector<int> sizes_;
  Eigen::VectorXd params_;
};

enum class Head { Prototypes, CrossEntropy, SoftLabels };
std::string to_string(Head head);
Head head_from_string(const std::string& name);

/// A trained system: embedding network plus either prototypes or a linear
/// logit head.
struct Classifier
{
  Head head = Head::Prototypes;
  DistanceSpec distance;
  EmbeddingModel embedding = EmbeddingModel::identity(1);
  /// Linear map embedding -> K logits; only used by the logit heads.
  EmbeddingModel logits = EmbeddingModel::identity(1);
  PrototypeSet prototypes;
  /// Leaf class names in label order.
  std::vector<std::string> class_names;

  std::size_t class_count() const { return class_names.size(); }
  Eigen::MatrixXd embed(const Eigen::MatrixXd& features) const;
  /// Leaf posteriors for each row (rows sum to one).
  Eigen::MatrixXd posteriors(const Eigen::MatrixXd& features) const;
};

} // namespace mgproto
