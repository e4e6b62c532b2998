#include "symfocus/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>

#include "symfocus/error.hpp"

namespace symfocus {

RasterImage::RasterImage(int width, int height, int channels, std::vector<double> pixels,
                         SourceFormat source)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)),
      source_(source) {
    if (width < 1 || height < 1) {
        throw Error(ErrorCode::InvalidSpec, "image dimensions must be positive");
    }
    if (channels != 1 && channels != 3) {
        throw Error(ErrorCode::InvalidSpec, "channels must be 1 or 3");
    }
    if (pixels_.size() != pixel_count() * static_cast<std::size_t>(channels)) {
        throw Error(ErrorCode::InvalidSpec, "pixel buffer does not match dimensions");
    }
    for (double v : pixels_) {
        if (!(v >= 0.0 && v <= 255.0)) {
            throw Error(ErrorCode::InvalidSpec, "channel value outside [0,255]");
        }
    }
}

RasterImage RasterImage::filled(int width, int height, int channels, double value,
                                SourceFormat source) {
    const auto n = static_cast<std::size_t>(std::max(width, 0)) *
                   static_cast<std::size_t>(std::max(height, 0)) *
                   static_cast<std::size_t>(std::max(channels, 0));
    return RasterImage(width, height, channels, std::vector<double>(n, value), source);
}

void RasterImage::set(int row, int col, int channel, double value) {
    if (!(value >= 0.0 && value <= 255.0)) {
        throw Error(ErrorCode::InvalidSpec, "channel value outside [0,255]");
    }
    pixels_[index(row, col, channel)] = value;
}

NormalizedImage::NormalizedImage(RasterImage grid, bool intensity_rescaled)
    : grid_(std::move(grid)), rescaled_(intensity_rescaled) {
    if (grid_.width() != kGridSize || grid_.height() != kGridSize) {
        throw Error(ErrorCode::InvalidSpec, "normalized image must be 256x256");
    }
}

namespace io {
namespace {

// ---------------------------------------------------------------- PGM

class PgmHeaderReader {
public:
    explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    unsigned long next_number() {
        skip_whitespace_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
            throw Error(ErrorCode::MalformedHeader, "PGM header field is not a number");
        }
        unsigned long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000) {
                throw Error(ErrorCode::MalformedHeader, "PGM header value too large");
            }
            ++pos_;
        }
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            throw Error(ErrorCode::MalformedHeader, "missing separator before PGM raster");
        }
        return pos_ + 1;
    }

private:
    void skip_whitespace_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 2;
};

RasterImage decode_pnm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        throw Error(ErrorCode::MalformedHeader, "not a binary PGM/PPM (P5/P6) file");
    }
    const int channels = bytes[1] == '5' ? 1 : 3;
    PgmHeaderReader reader(bytes);
    const auto width = reader.next_number();
    const auto height = reader.next_number();
    const auto maxval = reader.next_number();
    if (width == 0 || height == 0 || maxval == 0 || maxval > 65535) {
        throw Error(ErrorCode::MalformedHeader, "invalid PGM dimensions or maxval");
    }
    const std::size_t offset = reader.raster_offset();
    const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
    const std::size_t samples = width * height * static_cast<std::size_t>(channels);
    if (bytes.size() < offset || bytes.size() - offset < samples * sample_bytes) {
        throw Error(ErrorCode::TruncatedPixelData, "PGM raster shorter than header declares");
    }
    std::vector<double> pixels(samples);
    const auto* raster = bytes.data() + offset;
    for (std::size_t i = 0; i < samples; ++i) {
        unsigned v = sample_bytes == 2 ? (unsigned{raster[2 * i]} << 8) | raster[2 * i + 1]
                                       : raster[i];
        v = std::min<unsigned>(v, static_cast<unsigned>(maxval));
        pixels[i] = maxval == 255 ? static_cast<double>(v)
                                  : std::round(static_cast<double>(v) * 255.0 /
                                               static_cast<double>(maxval));
    }
    return RasterImage(static_cast<int>(width), static_cast<int>(height), channels,
                       std::move(pixels), SourceFormat::Pgm);
}

// ---------------------------------------------------------------- PNG

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw Error(ErrorCode::MalformedHeader, "PNG signature mismatch");
    }
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
        std::string msg = image.message;
        png_image_free(&image);
        throw Error(ErrorCode::MalformedHeader, "PNG header: " + msg);
    }
    if ((image.format & PNG_FORMAT_FLAG_ALPHA) != 0) {
        png_image_free(&image);
        throw Error(ErrorCode::UnsupportedFeature, "PNG with alpha channel");
    }
    if ((image.format & PNG_FORMAT_FLAG_LINEAR) != 0) {
        png_image_free(&image);
        throw Error(ErrorCode::UnsupportedFeature, "16-bit PNG");
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int channels = color ? 3 : 1;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
        std::string msg = image.message;
        png_image_free(&image);
        throw Error(ErrorCode::TruncatedPixelData, "PNG data: " + msg);
    }
    std::vector<double> pixels(buffer.begin(), buffer.end());
    return RasterImage(static_cast<int>(image.width), static_cast<int>(image.height), channels,
                       std::move(pixels), SourceFormat::Png);
}

// ---------------------------------------------------------------- DICOM subset

constexpr std::string_view kExplicitVrLittleEndian = "1.2.840.10008.1.2.1";

struct Tag {
    std::uint16_t group;
    std::uint16_t element;
    constexpr bool operator==(const Tag&) const = default;
};

constexpr Tag kTransferSyntax{0x0002, 0x0010};
constexpr Tag kSamplesPerPixel{0x0028, 0x0002};
constexpr Tag kPhotometric{0x0028, 0x0004};
constexpr Tag kPlanarConfiguration{0x0028, 0x0006};
constexpr Tag kRows{0x0028, 0x0010};
constexpr Tag kColumns{0x0028, 0x0011};
constexpr Tag kBitsAllocated{0x0028, 0x0100};
constexpr Tag kPixelRepresentation{0x0028, 0x0103};
constexpr Tag kPixelData{0x7FE0, 0x0010};
constexpr Tag kItem{0xFFFE, 0xE000};
constexpr Tag kItemDelimiter{0xFFFE, 0xE00D};
constexpr Tag kSequenceDelimiter{0xFFFE, 0xE0DD};
constexpr std::uint32_t kUndefinedLength = 0xFFFFFFFFu;

struct DicomFields {
    std::optional<std::string> transfer_syntax;
    std::optional<std::uint16_t> rows, columns, bits_allocated;
    std::uint16_t samples_per_pixel = 1;
    std::uint16_t planar_configuration = 0;
    std::uint16_t pixel_representation = 0;
    std::string photometric = "MONOCHROME2";
    std::optional<std::span<const std::uint8_t>> pixel_data;
};

std::string trim_value(std::span<const std::uint8_t> value) {
    std::string s(value.begin(), value.end());
    while (!s.empty() && (s.back() == ' ' || s.back() == '\0')) s.pop_back();
    while (!s.empty() && s.front() == ' ') s.erase(s.begin());
    return s;
}

bool long_length_vr(std::string_view vr) {
    static constexpr std::array<std::string_view, 13> kLong = {
        "OB", "OW", "OF", "SQ", "UT", "UN", "OD", "OL", "OV", "UC", "UR", "SV", "UV"};
    return std::find(kLong.begin(), kLong.end(), vr) != kLong.end();
}

class DicomParser {
public:
    explicit DicomParser(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    DicomFields parse() {
        if (bytes_.size() < 132 || std::memcmp(bytes_.data() + 128, "DICM", 4) != 0) {
            throw Error(ErrorCode::MalformedHeader, "missing DICOM preamble/DICM magic");
        }
        pos_ = 132;
        bool checked_syntax = false;
        while (pos_ < bytes_.size()) {
            if (!checked_syntax && peek_group() != 0x0002) {
                check_transfer_syntax();
                checked_syntax = true;
            }
            read_element(/*top_level=*/true);
        }
        if (!checked_syntax) check_transfer_syntax();
        return std::move(fields_);
    }

private:
    void check_transfer_syntax() const {
        if (fields_.transfer_syntax && *fields_.transfer_syntax != kExplicitVrLittleEndian) {
            throw Error(ErrorCode::UnsupportedFeature,
                        "transfer syntax " + *fields_.transfer_syntax +
                            " (only Explicit VR Little Endian is read)");
        }
    }

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw Error(ErrorCode::MalformedHeader, "data element runs past end of file");
        }
    }
    std::uint16_t u16_at(std::size_t at) const {
        return static_cast<std::uint16_t>(bytes_[at] | (bytes_[at + 1] << 8));
    }
    std::uint32_t u32_at(std::size_t at) const {
        return static_cast<std::uint32_t>(bytes_[at]) |
               (static_cast<std::uint32_t>(bytes_[at + 1]) << 8) |
               (static_cast<std::uint32_t>(bytes_[at + 2]) << 16) |
               (static_cast<std::uint32_t>(bytes_[at + 3]) << 24);
    }
    std::uint16_t peek_group() const {
        need(2);
        return u16_at(pos_);
    }
    Tag read_tag() {
        need(4);
        Tag t{u16_at(pos_), u16_at(pos_ + 2)};
        pos_ += 4;
        return t;
    }

    // Returns false when a delimiter item terminated the current container.
    bool read_element(bool top_level) {
        const Tag tag = read_tag();
        if (tag.group == 0xFFFE) {
            need(4);
            const std::uint32_t len = u32_at(pos_);
            pos_ += 4;
            if (tag == kItemDelimiter || tag == kSequenceDelimiter) return false;
            if (tag == kItem) {
                skip_item(len);
                return true;
            }
            throw Error(ErrorCode::MalformedHeader, "unexpected delimiter tag");
        }
        need(2);
        const std::string vr{static_cast<char>(bytes_[pos_]), static_cast<char>(bytes_[pos_ + 1])};
        if (!std::isupper(static_cast<unsigned char>(vr[0])) ||
            !std::isupper(static_cast<unsigned char>(vr[1]))) {
            throw Error(ErrorCode::MalformedHeader, "invalid value representation");
        }
        pos_ += 2;
        std::uint32_t len = 0;
        if (long_length_vr(vr)) {
            need(6);
            len = u32_at(pos_ + 2);
            pos_ += 6;
        } else {
            need(2);
            len = u16_at(pos_);
            pos_ += 2;
        }

        if (len == kUndefinedLength) {
            if (tag == kPixelData) {
                throw Error(ErrorCode::UnsupportedFeature, "encapsulated (compressed) pixel data");
            }
            if (vr != "SQ" && vr != "UN") {
                throw Error(ErrorCode::MalformedHeader, "undefined length on non-sequence");
            }
            while (pos_ < bytes_.size() && read_element(false)) {
            }
            return true;
        }

        if (bytes_.size() - pos_ < len) {
            if (tag == kPixelData) {
                throw Error(ErrorCode::TruncatedPixelData, "pixel data shorter than declared");
            }
            throw Error(ErrorCode::MalformedHeader, "element length exceeds file size");
        }
        const auto value = bytes_.subspan(pos_, len);
        pos_ += len;
        if (top_level) record(tag, value);
        return true;
    }

    void skip_item(std::uint32_t len) {
        if (len == kUndefinedLength) {
            while (pos_ < bytes_.size() && read_element(false)) {
            }
            return;
        }
        need(len);
        pos_ += len;
    }

    std::uint16_t us_value(std::span<const std::uint8_t> value) const {
        if (value.size() < 2) throw Error(ErrorCode::MalformedHeader, "short US value");
        return static_cast<std::uint16_t>(value[0] | (value[1] << 8));
    }

    void record(Tag tag, std::span<const std::uint8_t> value) {
        if (tag == kTransferSyntax) {
            fields_.transfer_syntax = trim_value(value);
        } else if (tag == kRows) {
            fields_.rows = us_value(value);
        } else if (tag == kColumns) {
            fields_.columns = us_value(value);
        } else if (tag == kBitsAllocated) {
            fields_.bits_allocated = us_value(value);
        } else if (tag == kSamplesPerPixel) {
            fields_.samples_per_pixel = us_value(value);
        } else if (tag == kPlanarConfiguration) {
            fields_.planar_configuration = us_value(value);
        } else if (tag == kPixelRepresentation) {
            fields_.pixel_representation = us_value(value);
        } else if (tag == kPhotometric) {
            fields_.photometric = trim_value(value);
        } else if (tag == kPixelData) {
            fields_.pixel_data = value;
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    DicomFields fields_;
};

RasterImage decode_dicom(std::span<const std::uint8_t> bytes) {
    const DicomFields f = DicomParser(bytes).parse();
    if (!f.rows || !f.columns || !f.bits_allocated || !f.pixel_data) {
        throw Error(ErrorCode::MalformedHeader,
                    "missing Rows, Columns, BitsAllocated or PixelData");
    }
    if (*f.bits_allocated != 8 && *f.bits_allocated != 16) {
        throw Error(ErrorCode::UnsupportedFeature,
                    "BitsAllocated " + std::to_string(*f.bits_allocated));
    }
    if (f.pixel_representation != 0) {
        throw Error(ErrorCode::UnsupportedFeature, "signed pixel representation");
    }
    int channels = 1;
    bool invert = false;
    if (f.photometric == "MONOCHROME1") {
        invert = true;
    } else if (f.photometric == "RGB") {
        channels = 3;
        if (f.planar_configuration != 0) {
            throw Error(ErrorCode::UnsupportedFeature, "planar RGB pixel data");
        }
    } else if (f.photometric != "MONOCHROME2") {
        throw Error(ErrorCode::UnsupportedFeature, "photometric interpretation " + f.photometric);
    }
    if (f.samples_per_pixel != static_cast<std::uint16_t>(channels)) {
        throw Error(ErrorCode::UnsupportedFeature, "SamplesPerPixel does not match photometric");
    }
    if (*f.rows == 0 || *f.columns == 0) {
        throw Error(ErrorCode::MalformedHeader, "zero image dimension");
    }

    const std::size_t samples = std::size_t{*f.rows} * std::size_t{*f.columns} *
                                static_cast<std::size_t>(channels);
    const std::size_t sample_bytes = *f.bits_allocated / 8;
    const auto data = *f.pixel_data;
    if (data.size() < samples * sample_bytes) {
        throw Error(ErrorCode::TruncatedPixelData, "pixel data shorter than Rows x Columns");
    }
    std::vector<double> pixels(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        if (sample_bytes == 1) {
            const unsigned v = data[i];
            pixels[i] = static_cast<double>(invert ? 255u - v : v);
        } else {
            unsigned v = static_cast<unsigned>(data[2 * i] | (data[2 * i + 1] << 8));
            if (invert) v = 65535u - v;
            pixels[i] = std::round(static_cast<double>(v) * 255.0 / 65535.0);
        }
    }
    return RasterImage(*f.columns, *f.rows, channels, std::move(pixels),
                       SourceFormat::DicomSubset);
}

}  // namespace

RasterImage load_image(std::span<const std::uint8_t> bytes, SourceFormat format) {
    if (bytes.empty()) throw Error(ErrorCode::MalformedHeader, "empty input");
    switch (format) {
        case SourceFormat::Pgm: return decode_pnm(bytes);
        case SourceFormat::Png: return decode_png(bytes);
        case SourceFormat::DicomSubset: return decode_dicom(bytes);
    }
    throw Error(ErrorCode::UnsupportedFeature, "unknown format");
}

RasterImage load_image_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>()};
    if (bytes.empty()) throw Error(ErrorCode::MalformedHeader, "empty file " + path.string());
    static constexpr std::array<std::uint8_t, 4> kPngMagic = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::equal(kPngMagic.begin(), kPngMagic.end(), bytes.begin())) {
        return load_image(bytes, SourceFormat::Png);
    }
    if (bytes.size() >= 132 && std::memcmp(bytes.data() + 128, "DICM", 4) == 0) {
        return load_image(bytes, SourceFormat::DicomSubset);
    }
    return load_image(bytes, SourceFormat::Pgm);
}

std::vector<std::uint8_t> encode_pgm(const RasterImage& img) {
    if (img.channels() != 1) {
        throw Error(ErrorCode::UnsupportedFeature, "PGM output requires a gray image");
    }
    const std::string header =
        "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + img.pixel_count());
    for (double v : img.pixels()) {
        out.push_back(static_cast<std::uint8_t>(std::lround(v)));
    }
    return out;
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> raw;
    raw.reserve(img.pixels().size());
    for (double v : img.pixels()) raw.push_back(static_cast<std::uint8_t>(std::lround(v)));

    png_alloc_size_t size = 0;
    if (png_image_write_to_memory(&image, nullptr, &size, 0, raw.data(), 0, nullptr) == 0) {
        throw Error(ErrorCode::Io, std::string("PNG encode: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (png_image_write_to_memory(&image, out.data(), &size, 0, raw.data(), 0, nullptr) == 0) {
        throw Error(ErrorCode::Io, std::string("PNG encode: ") + image.message);
    }
    out.resize(size);
    return out;
}

RasterImage resample_bilinear(const RasterImage& img, int width, int height) {
    const int channels = img.channels();
    if (width == img.width() && height == img.height()) return img;
    std::vector<double> out(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                            static_cast<std::size_t>(channels));

    // Source coordinate of each destination pixel center, clamped to the edge samples.
    auto source_coord = [](int dst, int dst_size, int src_size) {
        const double scale = static_cast<double>(src_size) / static_cast<double>(dst_size);
        const double s = (static_cast<double>(dst) + 0.5) * scale - 0.5;
        return std::clamp(s, 0.0, static_cast<double>(src_size - 1));
    };

    std::size_t k = 0;
    for (int r = 0; r < height; ++r) {
        const double sy = source_coord(r, height, img.height());
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, img.height() - 1);
        const double fy = sy - y0;
        for (int c = 0; c < width; ++c) {
            const double sx = source_coord(c, width, img.width());
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, img.width() - 1);
            const double fx = sx - x0;
            for (int ch = 0; ch < channels; ++ch) {
                const double top = img.at(y0, x0, ch) * (1.0 - fx) + img.at(y0, x1, ch) * fx;
                const double bottom = img.at(y1, x0, ch) * (1.0 - fx) + img.at(y1, x1, ch) * fx;
                out[k++] = std::clamp(top * (1.0 - fy) + bottom * fy, 0.0, 255.0);
            }
        }
    }
    return RasterImage(width, height, channels, std::move(out), img.source_format());
}

NormalizedImage normalize_image(const RasterImage& img) {
    RasterImage grid = resample_bilinear(img, kGridSize, kGridSize);
    const auto px = grid.pixels();
    const auto [lo_it, hi_it] = std::minmax_element(px.begin(), px.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (hi - lo <= 0.0) {
        return NormalizedImage(
            RasterImage::filled(kGridSize, kGridSize, grid.channels(), 0.0, grid.source_format()),
            false);
    }
    if (lo == 0.0 && hi == 255.0) return NormalizedImage(std::move(grid), true);

    // (v - lo) / (hi - lo) is exactly 0 and 1 at the extremes, so the
    // rescaled image spans [0, 255] exactly and a second pass is the identity.
    std::vector<double> out(px.size());
    const double spread = hi - lo;
    for (std::size_t i = 0; i < px.size(); ++i) {
        out[i] = std::clamp((px[i] - lo) / spread * 255.0, 0.0, 255.0);
    }
    return NormalizedImage(RasterImage(kGridSize, kGridSize, grid.channels(), std::move(out),
                                       grid.source_format()),
                           true);
}

RasterImage to_grayscale(const RasterImage& img) {
    if (img.channels() == 1) return img;
    std::vector<double> out(img.pixel_count());
    const auto px = img.pixels();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double luma = 0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2];
        out[i] = std::clamp(std::round(luma), 0.0, 255.0);
    }
    return RasterImage(img.width(), img.height(), 1, std::move(out), img.source_format());
}

}  // namespace io
}  // namespace symfocus
