#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "symfocus/raster.hpp"

namespace symfocus::io {

/// Decodes an in-memory image. DICOM input is limited to uncompressed
/// Explicit VR Little Endian with MONOCHROME1, MONOCHROME2 or interleaved RGB
/// pixels; 16-bit samples are mapped onto [0, 255] by round(v * 255 / 65535).
/// MONOCHROME1 is inverted so that higher values are brighter.
RasterImage load_image(std::span<const std::uint8_t> bytes, SourceFormat format);

/// Reads a file and picks the decoder from its magic bytes.
RasterImage load_image_file(const std::filesystem::path& path);

/// "P5\n<w> <h>\n255\n" followed by one rounded byte per pixel (gray only).
std::vector<std::uint8_t> encode_pgm(const RasterImage& img);

/// 8-bit gray or RGB PNG.
std::vector<std::uint8_t> encode_png(const RasterImage& img);

/// Bilinear resampling to the kGridSize square grid (pixel-center aligned,
/// edge-clamped) followed by a joint min-max rescale to [0, 255].
/// Constant images map to all zero.
NormalizedImage normalize_image(const RasterImage& img);

/// round(0.299 R + 0.587 G + 0.114 B); single-channel input is returned as is.
RasterImage to_grayscale(const RasterImage& img);

/// Bilinear resample of every channel to width x height, no intensity change.
RasterImage resample_bilinear(const RasterImage& img, int width, int height);

}  // namespace symfocus::io
