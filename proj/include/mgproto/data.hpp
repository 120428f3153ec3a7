#pragma once

#include "mgproto/taxonomy.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mgproto {

/// Labeled features; labels index `class_names` (the taxonomy leaves).
struct Dataset
{
  Eigen::MatrixXd features;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return labels.size(); }
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

/// Throws ValidationError when labels or features break the invariants.
void validate(const Dataset& data);

struct GaussianHierarchyParams
{
  int per_class = 100;
  int dims = 2;
  /// Offset length between the root and its children.
  double root_spread = 4.0;
  /// Offset length shrinks by this factor per level.
  double decay = 0.5;
  /// Standard deviation of the per-sample noise.
  double noise = 1.0;
  std::uint64_t seed = 0;
};

/// Leaf means are built top-down: the root sits at the origin and each child
/// is offset from its parent by a random unit direction scaled by
/// root_spread * decay^(parent depth). Samples are leaf mean + noise * N(0, I),
/// grouped by leaf in leaf order.
Dataset gen_hierarchical_gaussians(const Taxonomy& tax, const GaussianHierarchyParams& params);

/// Node means used by the generator (one row per taxonomy node).
Eigen::MatrixXd hierarchical_means(const Taxonomy& tax, const GaussianHierarchyParams& params,
                                   std::mt19937_64& rng);

/// Reads a header-first CSV. Every column except `label_column` must be
/// numeric; labels are resolved against `leaf_names`. An empty
/// `label_column` reads features only (labels left empty).
Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::vector<std::string>& leaf_names);

/// Writes features as x0..x{m-1} plus a `label` column of class names.
std::string dataset_csv(const Dataset& data);

struct SplitResult
{
  Dataset train;
  Dataset test;
  std::vector<std::string> warnings;
};

/// Stratified split: each class contributes round(fraction * n_c) test rows,
/// kept within [1, n_c - 1]. Classes with fewer than two samples go to the
/// training side with a warning.
SplitResult split(const Dataset& data, double test_fraction, std::uint64_t seed);

/// Names of the taxonomy leaves in leaf order.
std::vector<std::string> leaf_names(const Taxonomy& tax);

} // namespace mgproto
