#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "symfocus/raster.hpp"

namespace symfocus::report {

/// Normal channel-value band, inclusive at both ends.
struct ThresholdBand {
    double lo = 85.0;
    double hi = 170.0;

    void validate() const;
    bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

/// Per-channel accounting of one image. Gray images report the same figures
/// for red, green and blue.
struct IntensitySummary {
    std::string label;
    std::int64_t red = 0;
    std::int64_t green = 0;
    std::int64_t blue = 0;
    std::array<double, 3> in_band_fraction{};

    bool operator==(const IntensitySummary&) const = default;
};

/// test / normal per channel, and 100 (test - normal) / normal.
struct ComparisonRecord {
    std::array<double, 3> ratio{1.0, 1.0, 1.0};
    std::array<double, 3> percent_deviation{};

    bool operator==(const ComparisonRecord&) const = default;
};

enum class ScanClass { WithinNormalBand, OutOfBand };
enum class ReportFormat { Json, Csv };

struct ReportRow {
    IntensitySummary summary;
    ComparisonRecord record;
};

/// Sums of rounded channel values plus in-band fractions.
IntensitySummary channel_summary(const RasterImage& img, const ThresholdBand& band,
                                 std::string label);

/// Throws ZeroBaseline if any normal sum is zero.
ComparisonRecord compare_summaries(const IntensitySummary& normal, const IntensitySummary& test);

/// OutOfBand iff some channel has an out-of-band fraction strictly above tau_b.
ScanClass classify_scan(const IntensitySummary& summary, const ThresholdBand& band, double tau_b);

/// The baseline row (identity record) followed by one row per test summary.
std::vector<ReportRow> comparison_rows(const IntensitySummary& normal,
                                       std::span<const IntensitySummary> tests);

inline constexpr std::string_view kCsvHeader = "label,red,green,blue,red_ratio,green_ratio,blue_ratio";

/// CSV (kCsvHeader plus one line per row) or a JSON array of the same seven fields.
/// Throws EmptyInput.
std::string emit_report(std::span<const ReportRow> rows, ReportFormat format);

/// Inverse of emit_report for CSV. Percent deviations are recomputed from the
/// ratios; in-band fractions are not part of the format and come back as 0.
std::vector<ReportRow> parse_report_csv(std::string_view csv);

std::string_view to_string(ScanClass c);

}  // namespace symfocus::report
