#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace symfocus::cluster {

using Feature = std::array<double, 3>;

/// Static 3-d tree over a fixed point set. Points are referenced by their
/// position in the span passed at construction; the span must outlive the tree.
class KdTree {
public:
    explicit KdTree(std::span<const Feature> points, std::size_t leaf_size = 8);

    struct Neighbor {
        std::size_t index;
        double distance;
    };

    /// Nearest point to query, skipping `exclude`. Empty if no eligible point.
    std::optional<Neighbor> nearest(const Feature& query,
                                    std::optional<std::size_t> exclude = std::nullopt) const;

    /// Calls visit(index) for every point with distance(query, p) <= radius.
    void radius_search(const Feature& query, double radius,
                       const std::function<void(std::size_t)>& visit) const;

    std::size_t size() const noexcept { return points_.size(); }

private:
    struct Node {
        std::uint32_t begin;
        std::uint32_t end;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint8_t axis = 0;
        double split = 0.0;
        Feature lo{};
        Feature hi{};
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void nearest_in(std::int32_t node, const Feature& q, std::optional<std::size_t> exclude,
                    std::optional<Neighbor>& best, double& best_sq) const;
    void radius_in(std::int32_t node, const Feature& q, double radius_sq,
                   const std::function<void(std::size_t)>& visit) const;
    double box_distance_sq(const Node& node, const Feature& q) const;

    std::span<const Feature> points_;
    std::size_t leaf_size_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

double squared_distance(const Feature& a, const Feature& b);

}  // namespace symfocus::cluster
