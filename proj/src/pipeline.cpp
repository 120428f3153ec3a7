#include "mgproto/pipeline.hpp"

#include "mgproto/error.hpp"

#include <algorithm>

namespace mgproto {

EvalReport evaluate_classifier(const Classifier& classifier, const Taxonomy& tax, const Dataset& data,
                               Scheme scheme, bool use_index)
{
  validate(data);
  if (data.class_names != classifier.class_names)
    throw ValidationError("evaluate: dataset classes do not match the classifier");
  const Predictor predictor(classifier, tax, scheme, use_index);
  const auto predictions = predictor.predict(data.features);
  const auto& metric = predictor.candidate_metric();

  std::vector<int> predicted;
  std::vector<int> labels;
  predicted.reserve(predictions.size());
  for (const auto& p : predictions)
    predicted.push_back(p.candidate);
  for (int z : data.labels)
    labels.push_back(scheme == Scheme::AnyNode ? tax.leaves()[static_cast<std::size_t>(z)] : z);

  EvalOptions options;
  options.distance = classifier.distance;
  if (scheme == Scheme::AnyNode) {
    options.any_node = true;
    for (std::size_t id = 0; id < tax.size(); ++id)
      options.leaf_mask.push_back(tax.is_leaf(static_cast<int>(id)));
  }
  if (classifier.head == Head::Prototypes) {
    options.prototype_coords = classifier.prototypes.coords;
    options.prototype_costs = classifier.prototypes.includes_internal
                                  ? cost_matrix(tax, NodeSelection::AllNodes).costs
                                  : predictor.leaf_metric().costs;
  } else {
    // class means need every class present in the evaluated data
    std::vector<bool> seen(classifier.class_count(), false);
    for (int z : data.labels)
      seen[static_cast<std::size_t>(z)] = true;
    if (std::find(seen.begin(), seen.end(), false) == seen.end()) {
      options.prototype_coords = class_mean_embeddings(classifier.embed(data.features), data.labels,
                                                       static_cast<int>(classifier.class_count()));
      options.prototype_costs = predictor.leaf_metric().costs;
    }
  }
  return evaluate(predicted, labels, metric, options);
}

} // namespace mgproto
