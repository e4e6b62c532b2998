#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "symfocus/raster.hpp"
#include "symfocus/symclust.hpp"

namespace testing {

// Small seeded generator for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng_);
    }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double normal(double mean, double sd) { return std::normal_distribution<double>(mean, sd)(rng_); }
    symfocus::cluster::Feature feature(double lo = -5.0, double hi = 5.0) {
        return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)};
    }
    std::vector<symfocus::cluster::Feature> features(std::size_t n, double lo = -5.0, double hi = 5.0) {
        std::vector<symfocus::cluster::Feature> out(n);
        for (auto& f : out) f = feature(lo, hi);
        return out;
    }
    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline symfocus::RasterImage gray_image(int w, int h, const std::function<double(int, int)>& f,
                                        symfocus::SourceFormat fmt = symfocus::SourceFormat::Pgm) {
    std::vector<double> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) px[static_cast<std::size_t>(r) * w + c] = f(r, c);
    }
    return symfocus::RasterImage(w, h, 1, std::move(px), fmt);
}

inline symfocus::NormalizedImage grid_image(const std::function<double(int, int)>& f) {
    return symfocus::NormalizedImage(gray_image(symfocus::kGridSize, symfocus::kGridSize, f), false);
}

// Byte-level builder for Explicit VR Little Endian DICOM files.
class DicomBuilder {
public:
    DicomBuilder() : bytes_(132, 0) {
        const char magic[] = "DICM";
        std::copy(magic, magic + 4, bytes_.begin() + 128);
    }

    DicomBuilder& transfer_syntax(const std::string& uid) {
        std::string v = uid;
        if (v.size() % 2) v.push_back('\0');
        return element(0x0002, 0x0010, "UI", std::vector<std::uint8_t>(v.begin(), v.end()));
    }
    DicomBuilder& us(std::uint16_t group, std::uint16_t elem, std::uint16_t value) {
        return element(group, elem, "US",
                       {static_cast<std::uint8_t>(value & 0xFF), static_cast<std::uint8_t>(value >> 8)});
    }
    DicomBuilder& cs(std::uint16_t group, std::uint16_t elem, const std::string& value) {
        std::string v = value;
        if (v.size() % 2) v.push_back(' ');
        return element(group, elem, "CS", std::vector<std::uint8_t>(v.begin(), v.end()));
    }
    DicomBuilder& element(std::uint16_t group, std::uint16_t elem, const std::string& vr,
                          const std::vector<std::uint8_t>& value) {
        tag(group, elem);
        bytes_.push_back(static_cast<std::uint8_t>(vr[0]));
        bytes_.push_back(static_cast<std::uint8_t>(vr[1]));
        const bool long_len = vr == "OB" || vr == "OW" || vr == "SQ" || vr == "UN" || vr == "UT";
        if (long_len) {
            u16(0);
            u32(static_cast<std::uint32_t>(value.size()));
        } else {
            u16(static_cast<std::uint16_t>(value.size()));
        }
        bytes_.insert(bytes_.end(), value.begin(), value.end());
        return *this;
    }
    // A sequence of undefined length holding one undefined-length item.
    DicomBuilder& nested_sequence(std::uint16_t group, std::uint16_t elem) {
        tag(group, elem);
        bytes_.insert(bytes_.end(), {'S', 'Q', 0, 0});
        u32(0xFFFFFFFFu);
        tag(0xFFFE, 0xE000);
        u32(0xFFFFFFFFu);
        cs(0x0008, 0x0100, "CODE");
        us(0x0028, 0x0010, 999);  // nested Rows must not leak to the top level
        tag(0xFFFE, 0xE00D);
        u32(0);
        tag(0xFFFE, 0xE0DD);
        u32(0);
        return *this;
    }
    DicomBuilder& encapsulated_pixels() {
        tag(0x7FE0, 0x0010);
        bytes_.insert(bytes_.end(), {'O', 'B', 0, 0});
        u32(0xFFFFFFFFu);
        return *this;
    }
    DicomBuilder& pixels16(const std::vector<std::uint16_t>& values) {
        std::vector<std::uint8_t> raw;
        for (auto v : values) {
            raw.push_back(static_cast<std::uint8_t>(v & 0xFF));
            raw.push_back(static_cast<std::uint8_t>(v >> 8));
        }
        return element(0x7FE0, 0x0010, "OW", raw);
    }
    DicomBuilder& pixels8(const std::vector<std::uint8_t>& values) {
        return element(0x7FE0, 0x0010, "OB", values);
    }
    // Standard header for a rows x cols image.
    DicomBuilder& image_header(std::uint16_t rows, std::uint16_t cols, std::uint16_t bits,
                               const std::string& photometric = "MONOCHROME2",
                               std::uint16_t samples = 1) {
        transfer_syntax("1.2.840.10008.1.2.1");
        us(0x0028, 0x0002, samples);
        cs(0x0028, 0x0004, photometric);
        us(0x0028, 0x0010, rows);
        us(0x0028, 0x0011, cols);
        us(0x0028, 0x0100, bits);
        return *this;
    }
    std::vector<std::uint8_t> bytes() const { return bytes_; }

private:
    void tag(std::uint16_t group, std::uint16_t elem) {
        u16(group);
        u16(elem);
    }
    void u16(std::uint16_t v) {
        bytes_.push_back(static_cast<std::uint8_t>(v & 0xFF));
        bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> bytes_;
};

// Brute-force oracles, written independently of the library.

inline double oracle_norm(double a, double b, double c) { return std::sqrt(a * a + b * b + c * c); }

inline double oracle_dps(const symfocus::cluster::Feature& x, const symfocus::cluster::Feature& c,
                         const std::vector<symfocus::cluster::Feature>& members, std::size_t self_index) {
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    const double ax = oracle_norm(x[0] - c[0], x[1] - c[1], x[2] - c[2]);
    for (std::size_t j = 0; j < members.size(); ++j) {
        if (j == self_index) continue;
        any = true;
        const auto& y = members[j];
        const double ay = oracle_norm(y[0] - c[0], y[1] - c[1], y[2] - c[2]);
        const double num = oracle_norm(x[0] + y[0] - 2 * c[0], x[1] + y[1] - 2 * c[1],
                                       x[2] + y[2] - 2 * c[2]);
        const double den = ax + ay;
        best = std::min(best, den == 0.0 ? 0.0 : num / den);
    }
    if (!any) return 1.0;
    if (ax == 0.0) return 0.0;
    return best;
}

// Sum over members of d_ps to their own center.
inline double oracle_epsilon(const symfocus::cluster::ClusterModel& m,
                             const std::vector<symfocus::cluster::Feature>& pts, bool per_cluster_mean) {
    double total = 0.0;
    for (int k = 0; k < m.k; ++k) {
        std::vector<symfocus::cluster::Feature> members;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (m.assignments[i] == k) members.push_back(pts[i]);
        }
        double s = 0.0;
        for (std::size_t i = 0; i < members.size(); ++i) {
            s += oracle_dps(members[i], m.centers[static_cast<std::size_t>(k)], members, i);
        }
        total += per_cluster_mean && !members.empty() ? s / static_cast<double>(members.size()) : s;
    }
    return total;
}

inline double oracle_dk(const symfocus::cluster::ClusterModel& m) {
    double best = 0.0;
    for (std::size_t a = 0; a < m.centers.size(); ++a) {
        for (std::size_t b = a + 1; b < m.centers.size(); ++b) {
            const auto& p = m.centers[a];
            const auto& q = m.centers[b];
            best = std::max(best, oracle_norm(p[0] - q[0], p[1] - q[1], p[2] - q[2]));
        }
    }
    return best;
}

inline symfocus::cluster::Feature rotate(const symfocus::cluster::Feature& v, double yaw, double pitch) {
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    const double x1 = cy * v[0] - sy * v[1];
    const double y1 = sy * v[0] + cy * v[1];
    return {cp * x1 + sp * v[2], y1, -sp * x1 + cp * v[2]};
}

}  // namespace testing
