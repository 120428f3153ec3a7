#pragma once

#include "mgproto/geometry.hpp"
#include "mgproto/taxonomy.hpp"

#include <Eigen/Core>

#include <random>
#include <span>
#include <vector>

namespace mgproto {

/// Learnable class prototypes, one row per covered taxonomy node.
struct PrototypeSet
{
  Eigen::MatrixXd coords;
  /// Taxonomy node id of each row.
  std::vector<int> node_ids;
  /// Rows holding leaf classes, in leaf order. Equals 0..K-1 unless
  /// internal-node prototypes are included.
  std::vector<int> leaf_rows;
  bool includes_internal = false;

  Eigen::Index count() const { return coords.rows(); }
  Eigen::Index dim() const { return coords.cols(); }
  Eigen::MatrixXd leaf_coords() const;

  /// Rows drawn i.i.d. from N(0, 1). Covers leaves only or every node.
  static PrototypeSet random(const Taxonomy& tax, Eigen::Index dim, bool include_internal,
                             std::mt19937_64& rng);
};

/// Throws ValidationError if the set is malformed (fewer than 2 rows,
/// non-finite entries, inconsistent maps).
void validate(const PrototypeSet& prototypes);

struct DistortionReport
{
  double distortion = 0.0;
  double scale_free_distortion = 0.0;
  /// Minimizer of the L1 scaled distortion.
  double s_star_l1 = 1.0;
  /// Closed-form minimizer of the squared surrogate.
  double s_star_l2 = 1.0;
  /// Unordered prototype pairs entering the sums.
  std::size_t pair_count = 0;
};

/// Mean relative deviation |d - D| / D over ordered pairs k != l.
double distortion(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                  const DistanceSpec& spec);

/// Same, with every prototype distance multiplied by `scale`.
double scaled_distortion(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                         const DistanceSpec& spec, double scale);

/// Ratios d(pi_k, pi_l) / D[k, l] for k < l in row-major pair order.
std::vector<double> distance_ratios(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                                    const DistanceSpec& spec);

struct L1ScaleSolution
{
  double s_star = 1.0;
  /// Position of the pivot ratio within `sorted_ratios`.
  std::size_t pivot = 0;
  std::vector<double> sorted_ratios;
};

/// Minimizes sum_i |s * ratio_i - 1| over s > 0: sort ratios ascending and take
/// the first index where the prefix sum reaches the remaining suffix sum.
/// Throws NumericError when every ratio is zero.
L1ScaleSolution solve_l1_scale(std::span<const double> ratios);

double optimal_scale_l1(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                        const DistanceSpec& spec);

double scale_free_distortion(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                             const DistanceSpec& spec);

/// Closed-form minimizer sum(r) / sum(r^2) of sum_i (s * r_i - 1)^2.
double optimal_scale_l2(std::span<const double> ratios);

DistortionReport distortion_report(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                                   const DistanceSpec& spec);

enum class ScaleMode { Optimal, Fixed };

struct DistoLoss
{
  double value = 0.0;
  double s_star = 1.0;
  Eigen::MatrixXd grads;
};

/// Smooth distortion surrogate: mean over ordered pairs of
/// ((s * d - D) / D)^2 with s at its closed-form optimum (or 1 when fixed).
/// Gradients hold s constant, which is exact at the optimum.
DistoLoss disto_loss(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                     const DistanceSpec& spec, ScaleMode mode = ScaleMode::Optimal);

struct Triplet
{
  int anchor;
  int near;
  int far;
};

struct TripletBatch
{
  std::vector<Triplet> triplets;
  std::size_t size() const { return triplets.size(); }
};

/// S ordered triples of distinct classes, uniform with replacement.
TripletBatch sample_triplets(int classes, std::size_t count, std::mt19937_64& rng);

/// All K(K-1)(K-2) ordered triples, lexicographic.
TripletBatch all_triplets(int classes);

struct RankLoss
{
  double value = 0.0;
  Eigen::MatrixXd grads;
};

/// Binary cross-entropy between the soft ranking
/// sigmoid(d(k,l) - d(k,m)) and the hard ranking [D(k,l) > D(k,m)].
RankLoss rank_loss(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                   const DistanceSpec& spec, const TripletBatch& batch);

inline double distortion(const PrototypeSet& pi, const FiniteMetric& D, const DistanceSpec& spec)
{
  return distortion(pi.coords, D.costs, spec);
}

inline double scale_free_distortion(const PrototypeSet& pi, const FiniteMetric& D,
                                    const DistanceSpec& spec)
{
  return scale_free_distortion(pi.coords, D.costs, spec);
}

inline DistortionReport distortion_report(const PrototypeSet& pi, const FiniteMetric& D,
                                          const DistanceSpec& spec)
{
  return distortion_report(pi.coords, D.costs, spec);
}

} // namespace mgproto
