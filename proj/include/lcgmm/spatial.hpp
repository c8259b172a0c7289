#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lcgmm/geometry.hpp"

namespace lcgmm {

struct Neighbor {
  Index index = -1;
  double squared_distance = 0.0;

  double distance() const;
};

/// Orders by squared distance, then by index. Every query in this module
/// resolves ties toward the lower index.
inline bool closer(const Neighbor& a, const Neighbor& b) {
  return a.squared_distance < b.squared_distance ||
         (a.squared_distance == b.squared_distance && a.index < b.index);
}

/// Exact kd-tree over a fixed point set. Read-only after construction, so
/// concurrent queries are safe.
class KdTree {
 public:
  explicit KdTree(PointCloud points, Index leaf_size = 12);

  Index size() const { return points_.rows(); }
  const PointCloud& points() const { return points_; }

  Neighbor nearest(const Eigen::Vector3d& query) const;

  /// The k closest points ordered by closer(); `exclude` (if >= 0) is
  /// skipped by index, not by position.
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, Index k, Index exclude = -1) const;

 private:
  struct Node {
    Index begin = 0, end = 0;     // range into order_
    int axis = -1;                // -1 marks a leaf
    double split = 0.0;
    Index left = -1, right = -1;
  };

  Index build(Index begin, Index end);
  template <typename Visitor>
  void search(Index node, const Eigen::Vector3d& q, Visitor& visit) const;

  PointCloud points_;
  Index leaf_size_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
};

/// Exact nearest neighbor of `query` with lowest-index tie-break.
inline Neighbor nearest(const KdTree& index, const Eigen::Vector3d& query) {
  return index.nearest(query);
}

/// Symmetric 0/1 adjacency stored as sorted unordered pairs (i < j).
struct NeighborGraph {
  Index n = 0;
  std::vector<std::pair<Index, Index>> edges;

  std::vector<Index> degrees() const;
  bool contains(Index i, Index j) const;
};

/// Union-symmetrized kNN graph: {i,j} is an edge iff j is among the k
/// nearest of i or i among the k nearest of j. k is capped at n - 1.
NeighborGraph build_knn_graph(const PointCloud& cloud, Index k);

/// Graph Laplacian times a dense matrix: (L A)_i = sum_j w_ij (A_i - A_j).
Eigen::MatrixXd apply_laplacian(const NeighborGraph& graph, const Eigen::MatrixXd& a);

}  // namespace lcgmm
