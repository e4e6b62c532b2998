#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "symfocus/asymmetry.hpp"
#include "symfocus/raster.hpp"

namespace symfocus::phantom {

/// Brain ellipse geometry on the analysis grid: centered, semi-axes in pixels.
inline constexpr double kCenterRow = 128.0;
inline constexpr double kCenterCol = 128.0;
inline constexpr double kSemiAxisRows = 100.0;
inline constexpr double kSemiAxisCols = 80.0;
inline constexpr double kPeakIntensity = 200.0;

enum class LesionMode {
    Deficit,  ///< multiply by (1 - contrast): hypometabolism
    Additive, ///< add contrast * peak: hotspot
};

struct PhantomSpec {
    std::uint64_t seed = 0;
    bool lesion_present = false;
    asym::Side lesion_side = asym::Side::Left;
    /// (row, col)
    std::array<double, 2> lesion_center{128.0, 96.0};
    double lesion_radius = 10.0;
    double lesion_contrast = 0.3;
    double noise_sigma = 0.0;
    LesionMode mode = LesionMode::Deficit;

    /// Throws Error(InvalidSpec).
    void validate() const;
    bool operator==(const PhantomSpec&) const = default;
};

struct Phantom {
    NormalizedImage image;
    PhantomSpec spec;
};

/// Ellipse with a radial profile peaking at kPeakIntensity, mirror-paired
/// Gaussian texture blobs, an optional lesion disc, then clipped Gaussian
/// noise. A pure function of the spec.
Phantom generate_phantom(const PhantomSpec& spec);

/// Noise-free, texture-included intensity before any lesion is applied.
double base_intensity(const PhantomSpec& spec, int row, int col);

/// Same phantom reflected about column 128: side flipped, center mirrored.
PhantomSpec mirror_spec(const PhantomSpec& spec);

/// n trials alternating lesioned/clean, lesion sides alternating, centers
/// drawn inside the ellipse clear of the midline. Per-trial seeds derive from seed.
std::vector<PhantomSpec> make_trial_specs(int n, std::uint64_t seed, double contrast,
                                          double radius, double noise_sigma);

struct AccuracyReport {
    int n = 0;
    int true_positive = 0;   ///< lesion present, correct side
    int false_negative = 0;  ///< lesion present, no call or wrong side
    int true_negative = 0;
    int false_positive = 0;
    int wrong_side = 0;      ///< subset of false_negative
    double accuracy = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    /// Mean centroid-to-lesion distance (px) over true positives; 0 without any.
    double mean_localization_error = 0.0;
};

using Trial = std::pair<asym::FocusReport, PhantomSpec>;

/// Generates and analyses every spec, in parallel over specs. Results keep
/// the input order; the first failing PhantomSpec (by index) rethrows its error.
std::vector<Trial> run_trials(std::span<const PhantomSpec> specs, const asym::FocusConfig& cfg);

/// Throws EmptyInput. Rates with an empty denominator are reported as 1.0.
AccuracyReport evaluate_detections(std::span<const Trial> trials);

}  // namespace symfocus::phantom
