#include "lcgmm/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace lcgmm {

double Neighbor::distance() const { return std::sqrt(squared_distance); }

KdTree::KdTree(PointCloud points, Index leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<Index>(leaf_size, 1)) {
  validate_cloud(points_, "kd-tree input");
  order_.resize(static_cast<std::size_t>(points_.rows()));
  std::iota(order_.begin(), order_.end(), Index{0});
  if (points_.rows() > 0) {
    nodes_.reserve(static_cast<std::size_t>(2 * points_.rows() / leaf_size_ + 1));
    build(0, points_.rows());
  }
}

Index KdTree::build(Index begin, Index end) {
  const Index id = static_cast<Index>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(INFINITY);
  Eigen::Vector3d hi = Eigen::Vector3d::Constant(-INFINITY);
  for (Index i = begin; i < end; ++i) {
    const Eigen::Vector3d p = points_.row(order_[i]).transpose();
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi(axis) - lo(axis) <= 0.0) return id;  // all coincident: keep as leaf

  const Index mid = begin + (end - begin) / 2;
  auto first = order_.begin() + begin;
  std::nth_element(first, order_.begin() + mid, order_.begin() + end, [&](Index a, Index b) {
    return points_(a, axis) < points_(b, axis);
  });
  const double split = points_(order_[mid], axis);

  nodes_[id].axis = axis;
  nodes_[id].split = split;
  const Index left = build(begin, mid);
  const Index right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

// Left subtree holds coordinates <= split, right holds >= split. The
// visitor reports the current pruning radius; subtrees whose slab distance
// equals it are still visited so lower-index ties are never missed.
template <typename Visitor>
void KdTree::search(Index node_id, const Eigen::Vector3d& q, Visitor& visit) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (Index i = node.begin; i < node.end; ++i) {
      const Index idx = order_[i];
      visit.offer(idx, (points_.row(idx).transpose() - q).squaredNorm());
    }
    return;
  }
  const double diff = q(node.axis) - node.split;
  const Index near = diff <= 0.0 ? node.left : node.right;
  const Index far = diff <= 0.0 ? node.right : node.left;
  search(near, q, visit);
  if (diff * diff <= visit.radius()) search(far, q, visit);
}

namespace {

struct NearestVisitor {
  Neighbor best{-1, INFINITY};
  void offer(Index idx, double d2) {
    const Neighbor cand{idx, d2};
    if (best.index < 0 || closer(cand, best)) best = cand;
  }
  double radius() const { return best.squared_distance; }
};

struct KnnVisitor {
  Index k;
  Index exclude;
  // max-heap under closer(): top is the current worst neighbor
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(&closer)> heap{&closer};

  void offer(Index idx, double d2) {
    if (idx == exclude) return;
    const Neighbor cand{idx, d2};
    if (static_cast<Index>(heap.size()) < k) {
      heap.push(cand);
    } else if (closer(cand, heap.top())) {
      heap.pop();
      heap.push(cand);
    }
  }
  double radius() const {
    return static_cast<Index>(heap.size()) < k ? INFINITY : heap.top().squared_distance;
  }
};

}  // namespace

Neighbor KdTree::nearest(const Eigen::Vector3d& query) const {
  if (points_.rows() == 0) throw InputError("nearest: empty index");
  NearestVisitor v;
  search(0, query, v);
  return v.best;
}

std::vector<Neighbor> KdTree::knn(const Eigen::Vector3d& query, Index k, Index exclude) const {
  std::vector<Neighbor> out;
  if (k <= 0 || points_.rows() == 0) return out;
  KnnVisitor v{k, exclude};
  search(0, query, v);
  out.reserve(v.heap.size());
  while (!v.heap.empty()) {
    out.push_back(v.heap.top());
    v.heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<Index> NeighborGraph::degrees() const {
  std::vector<Index> deg(static_cast<std::size_t>(n), 0);
  for (const auto& [i, j] : edges) {
    ++deg[i];
    ++deg[j];
  }
  return deg;
}

bool NeighborGraph::contains(Index i, Index j) const {
  const auto key = std::minmax(i, j);
  return std::binary_search(edges.begin(), edges.end(), std::pair<Index, Index>(key.first, key.second));
}

NeighborGraph build_knn_graph(const PointCloud& cloud, Index k) {
  if (k < 1) throw InputError("build_knn_graph: k must be >= 1");
  if (cloud.rows() < 2) throw InputError("build_knn_graph: need at least 2 points");
  const Index n = cloud.rows();
  const Index keff = std::min(k, n - 1);
  const KdTree tree(cloud);

  NeighborGraph graph;
  graph.n = n;
  graph.edges.reserve(static_cast<std::size_t>(n * keff));
  for (Index i = 0; i < n; ++i) {
    for (const Neighbor& nb : tree.knn(cloud.row(i).transpose(), keff, i)) {
      graph.edges.emplace_back(std::min(i, nb.index), std::max(i, nb.index));
    }
  }
  std::sort(graph.edges.begin(), graph.edges.end());
  graph.edges.erase(std::unique(graph.edges.begin(), graph.edges.end()), graph.edges.end());
  return graph;
}

Eigen::MatrixXd apply_laplacian(const NeighborGraph& graph, const Eigen::MatrixXd& a) {
  if (a.rows() != graph.n) throw InputError("apply_laplacian: row count must equal vertex count");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (const auto& [i, j] : graph.edges) {
    const Eigen::RowVectorXd diff = a.row(i) - a.row(j);
    out.row(i) += diff;
    out.row(j) -= diff;
  }
  return out;
}

}  // namespace lcgmm
