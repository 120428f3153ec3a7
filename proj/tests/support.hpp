#pragma once

#include "mgproto/taxonomy.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <queue>
#include <random>
#include <string>
#include <vector>

namespace mgproto::testing {

/// Random rooted tree on n nodes; node i > 0 hangs below a uniformly chosen
/// earlier node. Unit weights unless `weighted`.
inline Taxonomy random_tree(int n, std::mt19937_64& rng, bool weighted = false)
{
  std::vector<TaxonomyNode> nodes;
  std::uniform_real_distribution<double> w(0.5, 3.0);
  for (int i = 0; i < n; ++i) {
    TaxonomyNode node{"n" + std::to_string(i), std::nullopt, 1.0};
    if (i > 0) {
      node.parent = std::uniform_int_distribution<int>(0, i - 1)(rng);
      if (weighted)
        node.weight = w(rng);
    }
    nodes.push_back(node);
  }
  return Taxonomy::from_nodes(std::move(nodes));
}

/// Random tree with at least `min_leaves` leaves.
inline Taxonomy random_tree_with_leaves(int n, int min_leaves, std::mt19937_64& rng)
{
  for (;;) {
    Taxonomy t = random_tree(n, rng);
    if (static_cast<int>(t.leaves().size()) >= min_leaves)
      return t;
  }
}

/// Hop counts between all node pairs by breadth-first search over the
/// undirected tree.
inline Eigen::MatrixXd bfs_distances(const Taxonomy& tax)
{
  const int n = static_cast<int>(tax.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (auto p = tax.node(i).parent) {
      adj[static_cast<std::size_t>(i)].push_back(*p);
      adj[static_cast<std::size_t>(*p)].push_back(i);
    }
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(n, n, -1.0);
  for (int s = 0; s < n; ++s) {
    std::queue<int> q;
    q.push(s);
    out(s, s) = 0.0;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[static_cast<std::size_t>(u)]) {
        if (out(s, v) < 0.0) {
          out(s, v) = out(s, u) + 1.0;
          q.push(v);
        }
      }
    }
  }
  return out;
}

/// The tree a1->A, a2->A, b1->B, A->root, B->root.
inline const char* toy_edges = "a1\tA\na2\tA\nb1\tB\nA\troot\nB\troot\n";

/// Balanced binary tree of the given depth with 2^depth leaves.
inline Taxonomy binary_tree(int depth)
{
  std::vector<TaxonomyNode> nodes{{"root", std::nullopt, 1.0}};
  std::vector<int> frontier{0};
  for (int d = 0; d < depth; ++d) {
    std::vector<int> next;
    for (int p : frontier) {
      for (int c = 0; c < 2; ++c) {
        nodes.push_back({nodes[static_cast<std::size_t>(p)].name + std::to_string(c), p, 1.0});
        next.push_back(static_cast<int>(nodes.size()) - 1);
      }
    }
    frontier = next;
  }
  return Taxonomy::from_nodes(std::move(nodes));
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng)
{
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = n(rng);
  return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
  auto dir = std::filesystem::temp_directory_path() / ("mgproto_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace mgproto::testing
