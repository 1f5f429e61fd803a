#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace corgs {

/// Static 3-d tree over a point set for exact 1-nearest-neighbor queries.
/// Ties in distance resolve to the lowest point index, matching a linear
/// scan that keeps the first minimum.
class KdTree3 {
public:
    struct Neighbor {
        std::int64_t index = -1;
        double squared_distance = std::numeric_limits<double>::infinity();
    };

    KdTree3() = default;
    explicit KdTree3(std::span<const Eigen::Vector3d> points);

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    /// Nearest stored point; index -1 and infinite distance on an empty tree.
    Neighbor nearest(const Eigen::Vector3d& query) const;

private:
    struct Node {
        std::uint32_t point;  // index into order_
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint8_t axis = 0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end, int depth);
    void search(std::int32_t node, const Eigen::Vector3d& query, Neighbor& best) const;

    std::vector<Eigen::Vector3d> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

}  // namespace corgs
