#pragma once

#include "mgproto/data.hpp"
#include "mgproto/evaluation.hpp"
#include "mgproto/inference.hpp"
#include "mgproto/model.hpp"
#include "mgproto/taxonomy.hpp"

namespace mgproto {

/// Predicts `data` with the given scheme and scores it. The distortion
/// report uses the prototypes, or class-mean embeddings for logit heads.
EvalReport evaluate_classifier(const Classifier& classifier, const Taxonomy& tax, const Dataset& data,
                               Scheme scheme, bool use_index = true);

} // namespace mgproto
