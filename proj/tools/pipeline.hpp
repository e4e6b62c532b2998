#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "symfocus/asymmetry.hpp"
#include "symfocus/intensity_report.hpp"
#include "symfocus/symclust.hpp"

namespace symfocus::cli {

struct PipelineConfig {
    cluster::ClusteringConfig clustering;
    int k_min = 2;
    int k_max = 6;
    report::ThresholdBand band;
    double tau_a = 8.0;
    double tau_b = 0.5;
    double background = 10.0;
    int evidence_radius = 4;
    asym::FocusPolarity polarity = asym::FocusPolarity::Deficit;
    /// Grid stride for the whole-brain segmentation written to model.json.
    int stride = 4;
    report::ReportFormat format = report::ReportFormat::Csv;

    std::filesystem::path input;
    std::filesystem::path baseline;
    std::filesystem::path output;

    void validate() const;
    asym::FocusConfig focus() const;
};

/// File name -> contents, written together by write_artifacts.
using Artifacts = std::map<std::string, std::string>;

/// Loads, converts to gray and resamples onto the analysis grid.
NormalizedImage load_normalized(const std::filesystem::path& path);

/// Whole-brain Sym(K) segmentation: model.json and labels.pgm.
Artifacts segment_artifacts(const PipelineConfig& cfg);
/// Focus detection: focus.json and asymmetry.pgm.
Artifacts analyze_artifacts(const PipelineConfig& cfg);
/// Everything: focus.json, report.csv, model.json, asymmetry.pgm.
Artifacts pipeline_artifacts(const PipelineConfig& cfg);

/// Intensity comparison of `tests` against `normal`, in cfg.format.
std::string intensity_report(const PipelineConfig& cfg, const std::filesystem::path& normal,
                             const std::vector<std::filesystem::path>& tests);

/// "label,class" lines for the baseline and each test image, classified
/// against cfg.band with cfg.tau_b.
std::string classify_images(const PipelineConfig& cfg, const std::filesystem::path& normal,
                            const std::vector<std::filesystem::path>& tests);

/// Writes specs.json and one PGM per phantom.
Artifacts phantom_batch(int n, std::uint64_t seed, double contrast, double radius, double noise);
/// Reads a phantom_batch directory and returns the AccuracyReport JSON.
std::string evaluate_batch(const std::filesystem::path& dir, const PipelineConfig& cfg);

/// Creates dir if needed and writes each file through a temporary name and
/// a rename, so a reader never sees a partially written artifact.
void write_artifacts(const std::filesystem::path& dir, const Artifacts& files);
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace symfocus::cli
