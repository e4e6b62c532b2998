#include <algorithm>
#include <cmath>

#include "symfocus/error.hpp"
#include "symfocus/symclust.hpp"

namespace symfocus::cluster {
namespace {

double norm(const Feature& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

}  // namespace

void ClusteringConfig::validate() const {
    auto fail = [](const char* what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (!(spatial_weight >= 0.0) || !(intensity_weight >= 0.0)) fail("feature weights must be >= 0");
    if (spatial_weight == 0.0 && intensity_weight == 0.0) fail("feature weights cannot both be 0");
    if (!(theta > 0.0 && theta < 1.0)) fail("theta must lie in (0,1)");
    if (max_iter < 1) fail("max_iter must be >= 1");
    if (!(tol > 0.0)) fail("tol must be > 0");
}

Feature make_feature(int row, int col, double value, int height, int width,
                     const ClusteringConfig& cfg) {
    const double row_norm = height > 1 ? static_cast<double>(row) / (height - 1) : 0.0;
    const double col_norm = width > 1 ? static_cast<double>(col) / (width - 1) : 0.0;
    return {cfg.spatial_weight * row_norm, cfg.spatial_weight * col_norm,
            cfg.intensity_weight * (value / 255.0)};
}

FeatureSet features_from_pixels(const RasterImage& img, std::span<const std::size_t> pixels,
                                const ClusteringConfig& cfg) {
    FeatureSet out;
    out.reserve(pixels.size());
    const auto w = static_cast<std::size_t>(img.width());
    for (std::size_t p : pixels) {
        const int row = static_cast<int>(p / w);
        const int col = static_cast<int>(p % w);
        out.push_back(make_feature(row, col, img.at(row, col, 0), img.height(), img.width(), cfg));
    }
    return out;
}

double symmetry_ratio(const Feature& x, const Feature& c, const Feature& y) {
    const Feature dx{x[0] - c[0], x[1] - c[1], x[2] - c[2]};
    const Feature dy{y[0] - c[0], y[1] - c[1], y[2] - c[2]};
    const double den = norm(dx) + norm(dy);
    if (den == 0.0) return 0.0;
    return norm(Feature{dx[0] + dy[0], dx[1] + dy[1], dx[2] + dy[2]}) / den;
}

double point_symmetry_distance(const Feature& x, const Feature& c,
                               std::span<const Feature> cluster_points) {
    if (cluster_points.empty()) {
        throw Error(ErrorCode::DegenerateCluster, "point symmetry distance over an empty cluster");
    }
    const auto self = std::find(cluster_points.begin(), cluster_points.end(), x);
    const std::size_t partners = cluster_points.size() - (self != cluster_points.end() ? 1 : 0);
    if (partners == 0) return 1.0;
    if (x == c) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (auto it = cluster_points.begin(); it != cluster_points.end(); ++it) {
        if (it == self) continue;
        best = std::min(best, symmetry_ratio(x, c, *it));
    }
    return best;
}

SymmetryDistance::SymmetryDistance(std::span<const Feature> members)
    : members_(members), tree_(members) {}

double SymmetryDistance::operator()(const Feature& x, const Feature& c,
                                    std::optional<std::size_t> self) const {
    if (members_.empty()) {
        throw Error(ErrorCode::DegenerateCluster, "point symmetry distance over an empty cluster");
    }
    if (members_.size() == (self ? 1u : 0u)) return 1.0;
    if (x == c) return 0.0;

    const Feature reflected{c[0] + (c[0] - x[0]), c[1] + (c[1] - x[1]), c[2] + (c[2] - x[2])};
    const auto nn = tree_.nearest(reflected, self);
    const double best = symmetry_ratio(x, c, members_[nn->index]);
    if (best == 0.0) return 0.0;
    return search(x, c, self, best, best);
}

double SymmetryDistance::below(const Feature& x, const Feature& c,
                               std::optional<std::size_t> self, double limit) const {
    if (members_.empty()) {
        throw Error(ErrorCode::DegenerateCluster, "point symmetry distance over an empty cluster");
    }
    if (members_.size() == (self ? 1u : 0u)) return 1.0;
    if (x == c) return 0.0;
    if (limit >= 1.0) return (*this)(x, c, self);
    if (!(limit > 0.0)) return std::numeric_limits<double>::infinity();
    return search(x, c, self, std::numeric_limits<double>::infinity(), limit);
}

// Minimum ratio over members, starting from `best`, examining only
// candidates that could produce a ratio below `bound`.
double SymmetryDistance::search(const Feature& x, const Feature& c,
                                std::optional<std::size_t> self, double best,
                                double bound) const {
    auto consider = [&](std::size_t idx) {
        if (self && *self == idx) return;
        best = std::min(best, symmetry_ratio(x, c, members_[idx]));
    };
    if (bound >= 1.0) {
        for (std::size_t i = 0; i < members_.size(); ++i) consider(i);
        return best;
    }
    // For a candidate at distance t from the reflected point 2c - x the ratio
    // is at least t / (2|x - c| + t), so only t < 2|x - c| bound / (1 - bound) can win.
    const Feature reflected{c[0] + (c[0] - x[0]), c[1] + (c[1] - x[1]), c[2] + (c[2] - x[2])};
    const double a = std::sqrt(squared_distance(x, c));
    const double radius = 2.0 * a * bound / (1.0 - bound);
    tree_.radius_search(reflected, radius * (1.0 + 1e-9) + 1e-12 * (1.0 + a), consider);
    return best;
}

}  // namespace symfocus::cluster
