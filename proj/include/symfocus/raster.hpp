#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace symfocus {

enum class SourceFormat { DicomSubset, Pgm, Png };

/// Row-major intensity grid, 1 (gray) or 3 (RGB) interleaved channels.
/// Every channel value lies in [0, 255]; the constructor enforces it.
class RasterImage {
public:
    RasterImage(int width, int height, int channels, std::vector<double> pixels,
                SourceFormat source = SourceFormat::Pgm);

    static RasterImage filled(int width, int height, int channels, double value,
                              SourceFormat source = SourceFormat::Pgm);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    SourceFormat source_format() const noexcept { return source_; }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    double at(int row, int col, int channel = 0) const {
        return pixels_[index(row, col, channel)];
    }
    /// Throws InvalidSpec if value is outside [0, 255].
    void set(int row, int col, int channel, double value);

    std::span<const double> pixels() const noexcept { return pixels_; }

    bool operator==(const RasterImage& other) const = default;

private:
    std::size_t index(int row, int col, int channel) const noexcept {
        return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(col)) *
                   static_cast<std::size_t>(channels_) +
               static_cast<std::size_t>(channel);
    }

    int width_;
    int height_;
    int channels_;
    std::vector<double> pixels_;
    SourceFormat source_;
};

/// Side length of the standard analysis grid.
inline constexpr int kGridSize = 256;

/// RasterImage constrained to the kGridSize x kGridSize analysis grid.
class NormalizedImage {
public:
    explicit NormalizedImage(RasterImage grid, bool intensity_rescaled = false);

    const RasterImage& grid() const noexcept { return grid_; }
    bool intensity_rescaled() const noexcept { return rescaled_; }

    int width() const noexcept { return grid_.width(); }
    int height() const noexcept { return grid_.height(); }
    double at(int row, int col, int channel = 0) const { return grid_.at(row, col, channel); }

    bool operator==(const NormalizedImage& other) const = default;

private:
    RasterImage grid_;
    bool rescaled_;
};

}  // namespace symfocus
