#include "symfocus/asymmetry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "symfocus/error.hpp"

namespace symfocus::asym {
namespace {

void require_gray(const NormalizedImage& img) {
    if (img.grid().channels() != 1) {
        throw Error(ErrorCode::InvalidSpec, "asymmetry analysis requires a grayscale image");
    }
}

std::size_t flat(int row, int col, int width) {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
}

double mirror_correlation(const RasterImage& img, int axis) {
    const int reach = std::min(axis, img.width() - 1 - axis);
    double sl = 0, sr = 0, sll = 0, srr = 0, slr = 0;
    double n = 0;
    for (int r = 0; r < img.height(); ++r) {
        for (int d = 1; d <= reach; ++d) {
            const double l = img.at(r, axis - d);
            const double rv = img.at(r, axis + d);
            sl += l;
            sr += rv;
            sll += l * l;
            srr += rv * rv;
            slr += l * rv;
            n += 1;
        }
    }
    if (n == 0) return -1.0;
    const double vl = sll - sl * sl / n;
    const double vr = srr - sr * sr / n;
    if (vl <= 0.0 || vr <= 0.0) return -1.0;
    return std::clamp((slr - sl * sr / n) / std::sqrt(vl * vr), -1.0, 1.0);
}

}  // namespace

void FocusConfig::validate() const {
    clustering.validate();
    if (k_min < 2 || k_min > k_max) throw Error(ErrorCode::InvalidConfig, "need 2 <= k_min <= k_max");
    if (!(tau_a > 0.0)) throw Error(ErrorCode::InvalidConfig, "tau_a must be > 0");
    if (!(background >= 0.0 && background < 255.0)) {
        throw Error(ErrorCode::InvalidConfig, "background threshold must lie in [0,255)");
    }
    if (evidence_radius < 0 || evidence_radius > 32) {
        throw Error(ErrorCode::InvalidConfig, "evidence_radius must lie in [0,32]");
    }
}

MidlineEstimate estimate_midline(const NormalizedImage& img) {
    require_gray(img);
    const auto px = img.grid().pixels();
    const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
    if (*lo == *hi) throw Error(ErrorCode::FlatImage, "image has zero variance");

    const int w = img.width();
    const int first = (2 * w) / 5;
    const int last = (3 * w + 4) / 5;
    const int centre = w / 2;
    MidlineEstimate best{centre, -2.0};
    for (int axis = first; axis <= last; ++axis) {
        const double s = mirror_correlation(img.grid(), axis);
        if (s > best.score ||
            (s == best.score && std::abs(axis - centre) < std::abs(best.axis_col - centre))) {
            best = {axis, s};
        }
    }
    return best;
}

NormalizedImage reflect_image(const NormalizedImage& img, const MidlineEstimate& midline) {
    const RasterImage& in = img.grid();
    const int w = in.width();
    const int ch = in.channels();
    std::vector<double> out(in.pixels().size(), 0.0);
    for (int r = 0; r < in.height(); ++r) {
        for (int c = 0; c < w; ++c) {
            const int src = 2 * midline.axis_col - c;
            if (src < 0 || src >= w) continue;
            for (int k = 0; k < ch; ++k) {
                out[flat(r, c, w) * static_cast<std::size_t>(ch) + static_cast<std::size_t>(k)] =
                    in.at(r, src, k);
            }
        }
    }
    return NormalizedImage(RasterImage(w, in.height(), ch, std::move(out), in.source_format()),
                           img.intensity_rescaled());
}

std::vector<double> median_filter_3x3(const RasterImage& img) {
    const int w = img.width();
    const int h = img.height();
    std::vector<double> out(img.pixel_count());
    std::array<double, 9> window{};
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            std::size_t k = 0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    window[k++] = img.at(std::clamp(r + dr, 0, h - 1), std::clamp(c + dc, 0, w - 1));
                }
            }
            std::nth_element(window.begin(), window.begin() + 4, window.end());
            out[flat(r, c, w)] = window[4];
        }
    }
    return out;
}

std::vector<std::uint8_t> brain_mask(const NormalizedImage& img, int axis_col, double background) {
    const int w = img.width();
    const int h = img.height();
    const auto smoothed = median_filter_3x3(img.grid());
    std::vector<std::uint8_t> mask(smoothed.size(), 0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            // A pixel without an in-grid mirror has nothing to compare against.
            const int m = 2 * axis_col - c;
            if (m < 0 || m >= w) continue;
            const bool own = smoothed[flat(r, c, w)] > background;
            const bool mirrored = smoothed[flat(r, m, w)] > background;
            mask[flat(r, c, w)] = (own || mirrored) ? 1 : 0;
        }
    }
    return mask;
}

AsymmetryMap asymmetry_map(const NormalizedImage& img, const MidlineEstimate& midline,
                           double background) {
    require_gray(img);
    AsymmetryMap amap;
    amap.width = img.width();
    amap.height = img.height();
    amap.axis_col = midline.axis_col;
    amap.mask = brain_mask(img, midline.axis_col, background);
    if (std::none_of(amap.mask.begin(), amap.mask.end(), [](std::uint8_t m) { return m != 0; })) {
        throw Error(ErrorCode::EmptyMask, "no pixel exceeds the background threshold");
    }
    const NormalizedImage mirrored = reflect_image(img, midline);
    amap.values.assign(amap.mask.size(), 0.0);
    for (int r = 0; r < amap.height; ++r) {
        for (int c = 0; c < amap.width; ++c) {
            const std::size_t i = flat(r, c, amap.width);
            if (amap.mask[i] != 0) amap.values[i] = std::abs(img.at(r, c) - mirrored.at(r, c));
        }
    }
    return amap;
}

std::vector<ClusterScore> score_cluster_asymmetry(const cluster::ClusterModel& model,
                                                  std::span<const std::size_t> pixels,
                                                  const AsymmetryMap& amap) {
    if (pixels.size() != model.assignments.size()) {
        throw Error(ErrorCode::InvalidSpec, "pixel list does not match the cluster assignments");
    }
    std::vector<double> sums(static_cast<std::size_t>(model.k), 0.0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(model.k), 0);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const std::size_t p = pixels[i];
        if (amap.mask[p] == 0) continue;
        const auto k = static_cast<std::size_t>(model.assignments[i]);
        sums[k] += amap.values[p];
        ++counts[k];
    }
    std::vector<ClusterScore> out;
    out.reserve(sums.size());
    for (std::size_t k = 0; k < sums.size(); ++k) {
        out.push_back({static_cast<int>(k),
                       counts[k] == 0 ? 0.0 : sums[k] / static_cast<double>(counts[k])});
    }
    return out;
}

FocusAnalysis analyze_focus(const NormalizedImage& img, const FocusConfig& cfg) {
    cfg.validate();
    FocusAnalysis out;
    out.midline = estimate_midline(img);
    out.map = asymmetry_map(img, out.midline, cfg.background);
    out.report.axis_col = out.midline.axis_col;

    const int w = img.width();
    const int h = img.height();
    const int axis = out.midline.axis_col;
    const AsymmetryMap& amap = out.map;

    // Signed difference to the mirrored hemisphere; positive marks the side
    // carrying the lesion-like change.
    const double sign = cfg.polarity == FocusPolarity::Deficit ? 1.0 : -1.0;
    std::vector<double> signed_diff(amap.values.size(), 0.0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int m = 2 * axis - c;
            const std::size_t i = flat(r, c, w);
            if (amap.mask[i] == 0) continue;
            const double mirrored = (m >= 0 && m < w) ? img.at(r, m) : 0.0;
            signed_diff[i] = sign * (mirrored - img.at(r, c));
        }
    }

    const int rad = cfg.evidence_radius;
    out.evidence.assign(signed_diff.size(), 0.0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (amap.mask[flat(r, c, w)] == 0) continue;
            // Out-of-mask pixels count as zero difference, so thin strips at
            // the brain edge cannot reach the threshold on a few noisy pixels.
            double sum = 0.0;
            int count = 0;
            for (int rr = std::max(0, r - rad); rr <= std::min(h - 1, r + rad); ++rr) {
                for (int cc = std::max(0, c - rad); cc <= std::min(w - 1, c + rad); ++cc) {
                    sum += signed_diff[flat(rr, cc, w)];
                    ++count;
                }
            }
            out.evidence[flat(r, c, w)] = sum / count;
        }
    }

    for (std::size_t i = 0; i < out.evidence.size(); ++i) {
        if (amap.mask[i] != 0 && out.evidence[i] >= cfg.tau_a) out.candidates.push_back(i);
    }
    // Order by row, then distance from the axis, so a mirrored image
    // presents its candidates to the clustering in corresponding order.
    std::sort(out.candidates.begin(), out.candidates.end(), [&](std::size_t a, std::size_t b) {
        const int ra = static_cast<int>(a) / w, ca = static_cast<int>(a) % w;
        const int rb = static_cast<int>(b) / w, cb = static_cast<int>(b) % w;
        if (ra != rb) return ra < rb;
        const int da = std::abs(ca - axis), db = std::abs(cb - axis);
        if (da != db) return da < db;
        return ca < cb;
    });

    const int count = static_cast<int>(out.candidates.size());
    if (count < cfg.k_min) return out;

    const auto features = cluster::features_from_pixels(img.grid(), out.candidates, cfg.clustering);
    out.clustering =
        cluster::select_k(features, cfg.k_min, std::min(cfg.k_max, count), cfg.clustering);
    const cluster::ClusterModel& model = out.clustering->best();
    out.report.per_cluster = score_cluster_asymmetry(model, out.candidates, amap);

    const auto top = std::max_element(
        out.report.per_cluster.begin(), out.report.per_cluster.end(),
        [](const ClusterScore& a, const ClusterScore& b) { return a.mean_asym < b.mean_asym; });
    out.report.cluster_id = top->cluster_id;
    out.report.mean_asym = top->mean_asym;

    double sum_r = 0.0, sum_c = 0.0;
    std::size_t members = 0, left = 0, right = 0;
    for (std::size_t i = 0; i < out.candidates.size(); ++i) {
        if (model.assignments[i] != top->cluster_id) continue;
        const int r = static_cast<int>(out.candidates[i]) / w;
        const int c = static_cast<int>(out.candidates[i]) % w;
        sum_r += r;
        sum_c += c;
        ++members;
        if (c < axis) ++left;
        if (c > axis) ++right;
    }
    out.report.centroid = std::array<double, 2>{sum_r / static_cast<double>(members),
                                                sum_c / static_cast<double>(members)};
    if (top->mean_asym < cfg.tau_a) return out;

    if (left != right) {
        out.report.side = left > right ? Side::Left : Side::Right;
    } else if ((*out.report.centroid)[1] != axis) {
        out.report.side = (*out.report.centroid)[1] < axis ? Side::Left : Side::Right;
    }
    return out;
}

FocusReport detect_focus(const NormalizedImage& img, const FocusConfig& cfg) {
    return analyze_focus(img, cfg).report;
}

FocusReport detect_focus(const NormalizedImage& img, const cluster::ClusteringConfig& cfg,
                         int k_min, int k_max, double tau_a) {
    FocusConfig fc;
    fc.clustering = cfg;
    fc.k_min = k_min;
    fc.k_max = k_max;
    fc.tau_a = tau_a;
    return detect_focus(img, fc);
}

}  // namespace symfocus::asym
