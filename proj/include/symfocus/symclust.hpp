#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "symfocus/kd_tree.hpp"
#include "symfocus/raster.hpp"

namespace symfocus::cluster {

using FeatureSet = std::vector<Feature>;

/// How per-cluster symmetry distances are folded into epsilon_K.
enum class EpsilonMode {
    Sum,   ///< plain sum over every member of every cluster
    Mean,  ///< per-cluster mean, summed over clusters
};

struct ClusteringConfig {
    double spatial_weight = 1.0;
    double intensity_weight = 2.0;
    /// Below this point-symmetry distance a point joins a cluster by symmetry.
    double theta = 0.18;
    int max_iter = 100;
    /// Phase-1 stop threshold on the largest center displacement.
    double tol = 1e-6;
    std::uint64_t seed = 0;
    EpsilonMode epsilon_mode = EpsilonMode::Sum;

    /// Throws Error(InvalidConfig) when a field is out of range.
    void validate() const;
};

/// Stand-in for an infinite Sym(K) when epsilon_K vanishes.
inline constexpr double kMaxSym = std::numeric_limits<double>::max();
inline constexpr double kEpsilonFloor = 1e-12;

struct ClusterModel {
    int k = 0;
    std::vector<Feature> centers;
    std::vector<int> assignments;
    double epsilon_k = 0.0;
    double d_k = 0.0;
    double sym_index = 0.0;
    /// Set when epsilon_K < kEpsilonFloor and sym_index holds kMaxSym.
    bool perfectly_symmetric = false;

    bool operator==(const ClusterModel&) const = default;
};

struct SymIndexEntry {
    int k;
    double sym_index;
    ClusterModel model;
};

struct SymIndexReport {
    std::vector<SymIndexEntry> entries;
    int k_star = 0;

    const ClusterModel& best() const;
};

/// (w_s * row/(H-1), w_s * col/(W-1), w_i * value/255); a unit dimension maps to 0.
Feature make_feature(int row, int col, double value, int height, int width,
                     const ClusteringConfig& cfg);

/// Features of the listed pixels (row-major indices) of channel 0 of img.
FeatureSet features_from_pixels(const RasterImage& img, std::span<const std::size_t> pixels,
                                const ClusteringConfig& cfg);

/// Point-symmetry distance of x about c with respect to cluster_points:
///   min over y != x of |(x - c) + (y - c)| / (|x - c| + |y - c|).
/// One occurrence of x (if present) is excluded from the candidates. Returns
/// 1.0 when no partner remains, 0.0 when x == c. Throws DegenerateCluster on
/// an empty cluster.
double point_symmetry_distance(const Feature& x, const Feature& c,
                               std::span<const Feature> cluster_points);

/// Kd-tree accelerated point-symmetry distance over one cluster's members.
/// Searches around the reflected point 2c - x, then widens to the radius that
/// can still beat the best ratio found, so the result equals the exhaustive
/// minimum exactly.
class SymmetryDistance {
public:
    explicit SymmetryDistance(std::span<const Feature> members);

    /// `self` is the position of x inside members when x is itself a member.
    double operator()(const Feature& x, const Feature& c,
                      std::optional<std::size_t> self = std::nullopt) const;

    /// Exact distance when it is below `limit`; otherwise some value >= limit.
    double below(const Feature& x, const Feature& c, std::optional<std::size_t> self,
                 double limit) const;

    std::size_t size() const noexcept { return members_.size(); }

private:
    double search(const Feature& x, const Feature& c, std::optional<std::size_t> self,
                  double best, double bound) const;

    std::span<const Feature> members_;
    KdTree tree_;
};

/// The per-candidate ratio shared by the exhaustive and accelerated paths.
double symmetry_ratio(const Feature& x, const Feature& c, const Feature& y);

struct LloydResult {
    std::vector<Feature> centers;
    std::vector<int> assignments;
    int iterations = 0;
};

/// Phase 1: seeded greedy k-means++ initialisation followed by Lloyd iterations.
/// On return every point is assigned to its Euclidean-nearest center.
LloydResult lloyd_kmeans(std::span<const Feature> points, int k, const ClusteringConfig& cfg);

/// Two-phase clustering: Lloyd k-means, then point-symmetry reassignment
/// (a point moves to the cluster of smallest symmetry distance when that
/// distance is below theta, otherwise to its nearest center) until the
/// assignment is stable or max_iter is reached. Throws TooFewPoints.
ClusterModel sym_kmeans(std::span<const Feature> points, int k, const ClusteringConfig& cfg);

/// Sum (or per-cluster mean, per mode) of member symmetry distances to their center.
double epsilon_k(const ClusterModel& model, std::span<const Feature> points,
                 EpsilonMode mode = EpsilonMode::Sum);

/// Largest pairwise Euclidean distance between centers. Throws SingleCluster.
double max_center_separation(const ClusterModel& model);

/// D_K / (K * epsilon_K), or kMaxSym when epsilon_K < kEpsilonFloor.
double sym_index(const ClusterModel& model);

/// Runs sym_kmeans for each K in [k_min, k_max] and keeps the K with the
/// largest Sym(K), ties going to the smaller K. Throws BadRange or TooFewPoints.
SymIndexReport select_k(std::span<const Feature> points, int k_min, int k_max,
                        const ClusteringConfig& cfg);

}  // namespace symfocus::cluster
