#include "symfocus/kd_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace symfocus::cluster {

double squared_distance(const Feature& a, const Feature& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

KdTree::KdTree(std::span<const Feature> points, std::size_t leaf_size)
    : points_(points), leaf_size_(std::max<std::size_t>(leaf_size, 1)), order_(points.size()) {
    std::iota(order_.begin(), order_.end(), 0u);
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
        build(0, static_cast<std::uint32_t>(points_.size()));
    }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    Feature lo;
    Feature hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (std::uint32_t i = begin; i < end; ++i) {
        const Feature& p = points_[order_[i]];
        for (int d = 0; d < 3; ++d) {
            lo[d] = std::min(lo[d], p[d]);
            hi[d] = std::max(hi[d], p[d]);
        }
    }
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    if (end - begin <= leaf_size_) return id;

    std::uint8_t axis = 0;
    double widest = hi[0] - lo[0];
    for (std::uint8_t d = 1; d < 3; ++d) {
        if (hi[d] - lo[d] > widest) {
            widest = hi[d] - lo[d];
            axis = d;
        }
    }
    if (widest <= 0.0) return id;  // all points coincide

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double pa = points_[a][axis];
                         const double pb = points_[b][axis];
                         return pa < pb || (pa == pb && a < b);
                     });
    nodes_[id].axis = axis;
    nodes_[id].split = points_[order_[mid]][axis];
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

double KdTree::box_distance_sq(const Node& node, const Feature& q) const {
    double s = 0.0;
    for (int d = 0; d < 3; ++d) {
        double e = 0.0;
        if (q[d] < node.lo[d]) {
            e = node.lo[d] - q[d];
        } else if (q[d] > node.hi[d]) {
            e = q[d] - node.hi[d];
        }
        s += e * e;
    }
    return s;
}

std::optional<KdTree::Neighbor> KdTree::nearest(const Feature& query,
                                                std::optional<std::size_t> exclude) const {
    std::optional<Neighbor> best;
    double best_sq = std::numeric_limits<double>::infinity();
    if (!nodes_.empty()) nearest_in(0, query, exclude, best, best_sq);
    if (best) best->distance = std::sqrt(best_sq);
    return best;
}

void KdTree::nearest_in(std::int32_t id, const Feature& q, std::optional<std::size_t> exclude,
                        std::optional<Neighbor>& best, double& best_sq) const {
    const Node& node = nodes_[id];
    if (box_distance_sq(node, q) > best_sq) return;
    if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const std::size_t idx = order_[i];
            if (exclude && *exclude == idx) continue;
            const double d = squared_distance(points_[idx], q);
            if (d < best_sq || (d == best_sq && best && idx < best->index)) {
                best_sq = d;
                best = Neighbor{idx, 0.0};
            }
        }
        return;
    }
    const bool go_left = q[node.axis] < node.split;
    nearest_in(go_left ? node.left : node.right, q, exclude, best, best_sq);
    nearest_in(go_left ? node.right : node.left, q, exclude, best, best_sq);
}

void KdTree::radius_search(const Feature& query, double radius,
                           const std::function<void(std::size_t)>& visit) const {
    if (nodes_.empty() || !(radius >= 0.0)) return;
    radius_in(0, query, radius * radius, visit);
}

void KdTree::radius_in(std::int32_t id, const Feature& q, double radius_sq,
                       const std::function<void(std::size_t)>& visit) const {
    const Node& node = nodes_[id];
    if (box_distance_sq(node, q) > radius_sq) return;
    if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            if (squared_distance(points_[order_[i]], q) <= radius_sq) visit(order_[i]);
        }
        return;
    }
    radius_in(node.left, q, radius_sq, visit);
    radius_in(node.right, q, radius_sq, visit);
}

}  // namespace symfocus::cluster
