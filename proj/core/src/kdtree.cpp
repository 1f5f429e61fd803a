#include "corgs/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace corgs {

KdTree3::KdTree3(std::span<const Eigen::Vector3d> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(points_.size());
    root_ = build(0, static_cast<std::uint32_t>(order_.size()), 0);
}

std::int32_t KdTree3::build(std::uint32_t begin, std::uint32_t end, int depth) {
    if (begin >= end) {
        return -1;
    }
    // Split along the axis of largest spread.
    Eigen::Vector3d lo = points_[order_[begin]];
    Eigen::Vector3d hi = lo;
    for (std::uint32_t i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    (void)depth;

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double pa = points_[a][axis];
                         const double pb = points_[b][axis];
                         return pa < pb || (pa == pb && a < b);
                     });
    const auto node = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({mid, -1, -1, static_cast<std::uint8_t>(axis)});
    const std::int32_t left = build(begin, mid, depth + 1);
    const std::int32_t right = build(mid + 1, end, depth + 1);
    nodes_[node].left = left;
    nodes_[node].right = right;
    return node;
}

KdTree3::Neighbor KdTree3::nearest(const Eigen::Vector3d& query) const {
    Neighbor best;
    if (root_ >= 0) {
        search(root_, query, best);
    }
    return best;
}

void KdTree3::search(std::int32_t node_index, const Eigen::Vector3d& query, Neighbor& best) const {
    const Node& node = nodes_[node_index];
    const std::uint32_t index = order_[node.point];
    const Eigen::Vector3d& p = points_[index];
    const double d2 = (p - query).squaredNorm();
    if (d2 < best.squared_distance || (d2 == best.squared_distance && static_cast<std::int64_t>(index) < best.index)) {
        best.squared_distance = d2;
        best.index = index;
    }
    const double diff = query[node.axis] - p[node.axis];
    const std::int32_t near_child = diff <= 0.0 ? node.left : node.right;
    const std::int32_t far_child = diff <= 0.0 ? node.right : node.left;
    if (near_child >= 0) {
        search(near_child, query, best);
    }
    // <= keeps equal-distance candidates with a lower index reachable.
    if (far_child >= 0 && diff * diff <= best.squared_distance) {
        search(far_child, query, best);
    }
}

}  // namespace corgs
