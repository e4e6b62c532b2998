#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "symfocus/raster.hpp"
#include "symfocus/symclust.hpp"

namespace symfocus::asym {

struct MidlineEstimate {
    int axis_col = kGridSize / 2;
    /// Normalized cross-correlation of the mirrored column pairs, in [-1, 1].
    double score = 0.0;
};

/// |I(r,c) - I(r, 2a - c)| over the brain mask, zero elsewhere.
struct AsymmetryMap {
    int width = kGridSize;
    int height = kGridSize;
    int axis_col = kGridSize / 2;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;

    double at(int row, int col) const {
        return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(col)];
    }
    bool in_mask(int row, int col) const {
        return mask[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(col)] != 0;
    }
};

enum class Side { Left, Right, None };

struct ClusterScore {
    int cluster_id = 0;
    double mean_asym = 0.0;
};

struct FocusReport {
    Side side = Side::None;
    std::optional<int> cluster_id;
    /// (row, col) of the selected cluster's pixels.
    std::optional<std::array<double, 2>> centroid;
    double mean_asym = 0.0;
    int axis_col = kGridSize / 2;
    std::vector<ClusterScore> per_cluster;
};

/// Which one-sided change counts as a lesion: a deficit (hypometabolism) or
/// an excess (hotspot) relative to the mirrored hemisphere.
enum class FocusPolarity { Deficit, Excess };

struct FocusConfig {
    cluster::ClusteringConfig clustering;
    int k_min = 2;
    int k_max = 6;
    /// Focus decision threshold on the mean asymmetry of a cluster (intensity units).
    double tau_a = 8.0;
    /// Brain mask threshold applied after 3x3 median smoothing.
    double background = 10.0;
    /// Half-width of the square window used for local hemispheric evidence.
    int evidence_radius = 4;
    FocusPolarity polarity = FocusPolarity::Deficit;

    void validate() const;
};

/// Searches axis columns in [0.4 W, 0.6 W] for the best mirror correlation;
/// ties go to the column nearest W/2. Throws FlatImage on a constant image.
MidlineEstimate estimate_midline(const NormalizedImage& img);

/// out(r, c) = in(r, 2 axis - c), zero where the source column is out of range.
NormalizedImage reflect_image(const NormalizedImage& img, const MidlineEstimate& midline);

/// 3x3 median of channel 0 with replicated borders.
std::vector<double> median_filter_3x3(const RasterImage& img);

/// Pixels whose median-smoothed value exceeds `background`, united with their
/// mirror image so the mask is symmetric about the axis. Pixels whose mirror
/// column falls outside the grid are left out.
std::vector<std::uint8_t> brain_mask(const NormalizedImage& img, int axis_col, double background);

/// Throws EmptyMask when no pixel clears the background threshold.
AsymmetryMap asymmetry_map(const NormalizedImage& img, const MidlineEstimate& midline,
                           double background = 10.0);

/// Mean map value over the in-mask pixels assigned to each cluster.
/// pixels[i] is the row-major grid index of the i-th clustered point.
std::vector<ClusterScore> score_cluster_asymmetry(const cluster::ClusterModel& model,
                                                  std::span<const std::size_t> pixels,
                                                  const AsymmetryMap& amap);

/// Everything detect_focus computes, kept for reporting.
struct FocusAnalysis {
    FocusReport report;
    MidlineEstimate midline;
    AsymmetryMap map;
    /// Local mean of the signed hemispheric difference (positive = lesion-like).
    std::vector<double> evidence;
    /// Row-major indices of the clustered pixels, in clustering order.
    std::vector<std::size_t> candidates;
    std::optional<cluster::SymIndexReport> clustering;
};

/// Midline -> asymmetry map -> Sym(K)-selected clustering of the pixels
/// carrying one-sided evidence -> per-cluster scoring -> side decision.
FocusAnalysis analyze_focus(const NormalizedImage& img, const FocusConfig& cfg);

FocusReport detect_focus(const NormalizedImage& img, const FocusConfig& cfg);
FocusReport detect_focus(const NormalizedImage& img, const cluster::ClusteringConfig& cfg,
                         int k_min, int k_max, double tau_a);

}  // namespace symfocus::asym
