#include "symfocus/phantom.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <optional>
#include <random>
#include <thread>

#include "symfocus/error.hpp"

namespace symfocus::phantom {
namespace {

constexpr int kBlobPairs = 6;
constexpr double kMirrorCol = 2.0 * kCenterCol;

// `offset` is the distance of the left blob center from the axis column.
struct Blob {
    double row, offset, amplitude, sigma;
};

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * unit_uniform(rng);
}

double ellipse_radius_sq(double row, double col) {
    const double dr = (row - kCenterRow) / kSemiAxisRows;
    const double dc = (col - kCenterCol) / kSemiAxisCols;
    return dr * dr + dc * dc;
}

// Left-hemisphere blob centers; each is paired with its reflection.
std::vector<Blob> draw_blobs(std::mt19937_64& rng) {
    std::vector<Blob> blobs;
    while (static_cast<int>(blobs.size()) < kBlobPairs) {
        Blob b{uniform(rng, kCenterRow - 85.0, kCenterRow + 85.0), uniform(rng, 8.0, 65.0),
               uniform(rng, 10.0, 25.0), uniform(rng, 4.0, 10.0)};
        if (ellipse_radius_sq(b.row, kCenterCol - b.offset) <= 0.75) blobs.push_back(b);
    }
    return blobs;
}

double gaussian(double dr, double dc, double sigma) {
    return std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
}

double base_with_blobs(const std::vector<Blob>& blobs, int row, int col) {
    // Column offsets are taken from the axis so that col -> 256 - col only
    // negates them, which keeps the image exactly mirror symmetric.
    const double x = col - kCenterCol;
    const double dr = row - kCenterRow;
    const double rho_sq = (dr / kSemiAxisRows) * (dr / kSemiAxisRows) + (x / kSemiAxisCols) * (x / kSemiAxisCols);
    if (rho_sq > 1.0) return 0.0;
    double v = kPeakIntensity * (1.0 - 0.3 * rho_sq);
    for (const Blob& b : blobs) {
        const double br = row - b.row;
        const double pair = b.amplitude * gaussian(br, x + b.offset, b.sigma) +
                            b.amplitude * gaussian(br, x - b.offset, b.sigma);
        v += pair;
    }
    return v;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

void PhantomSpec::validate() const {
    auto fail = [](const char* what) { throw Error(ErrorCode::InvalidSpec, what); };
    if (!(lesion_radius >= 4.0 && lesion_radius <= 30.0)) fail("lesion_radius must lie in [4,30]");
    if (!(lesion_contrast >= 0.0 && lesion_contrast <= 1.0)) fail("lesion_contrast must lie in [0,1]");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be >= 0");
    if (!lesion_present) return;
    if (!(ellipse_radius_sq(lesion_center[0], lesion_center[1]) < 1.0)) {
        fail("lesion_center lies outside the brain ellipse");
    }
    const double col = lesion_center[1];
    if (lesion_side == asym::Side::None || (lesion_side == asym::Side::Left && !(col < kCenterCol)) ||
        (lesion_side == asym::Side::Right && !(col > kCenterCol))) {
        fail("lesion_side does not match the lesion_center column");
    }
}

double base_intensity(const PhantomSpec& spec, int row, int col) {
    std::mt19937_64 rng(spec.seed);
    return base_with_blobs(draw_blobs(rng), row, col);
}

Phantom generate_phantom(const PhantomSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const auto blobs = draw_blobs(rng);
    const double radius_sq = spec.lesion_radius * spec.lesion_radius;
    const double lesion_x = spec.lesion_center[1] - kCenterCol;
    std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);

    std::vector<double> pixels(static_cast<std::size_t>(kGridSize) * kGridSize);
    std::size_t i = 0;
    for (int r = 0; r < kGridSize; ++r) {
        for (int c = 0; c < kGridSize; ++c, ++i) {
            double v = base_with_blobs(blobs, r, c);
            if (spec.lesion_present && spec.lesion_contrast > 0.0) {
                const double dr = r - spec.lesion_center[0];
                const double dc = (c - kCenterCol) - lesion_x;
                if (dr * dr + dc * dc <= radius_sq) {
                    v = spec.mode == LesionMode::Deficit
                            ? v * (1.0 - spec.lesion_contrast)
                            : v + spec.lesion_contrast * kPeakIntensity;
                }
            }
            if (spec.noise_sigma > 0.0) v += noise(rng);
            pixels[i] = std::clamp(v, 0.0, 255.0);
        }
    }
    return Phantom{NormalizedImage(RasterImage(kGridSize, kGridSize, 1, std::move(pixels))), spec};
}

PhantomSpec mirror_spec(const PhantomSpec& spec) {
    PhantomSpec m = spec;
    m.lesion_center[1] = kMirrorCol - spec.lesion_center[1];
    if (spec.lesion_side == asym::Side::Left) {
        m.lesion_side = asym::Side::Right;
    } else if (spec.lesion_side == asym::Side::Right) {
        m.lesion_side = asym::Side::Left;
    }
    return m;
}

std::vector<PhantomSpec> make_trial_specs(int n, std::uint64_t seed, double contrast,
                                          double radius, double noise_sigma) {
    std::vector<PhantomSpec> specs;
    specs.reserve(static_cast<std::size_t>(std::max(n, 0)));
    for (int i = 0; i < n; ++i) {
        PhantomSpec s;
        s.seed = splitmix64(seed ^ (static_cast<std::uint64_t>(i) * 0xD1B54A32D192ED03ull));
        s.lesion_present = i % 2 == 0;
        s.lesion_radius = radius;
        s.lesion_contrast = contrast;
        s.noise_sigma = noise_sigma;
        s.lesion_side = (i / 2) % 2 == 0 ? asym::Side::Left : asym::Side::Right;
        std::mt19937_64 rng(splitmix64(s.seed));
        for (;;) {
            const double row = std::round(kCenterRow + uniform(rng, -55.0, 55.0));
            const double offset = std::round(uniform(rng, radius + 6.0, 50.0));
            const double col = s.lesion_side == asym::Side::Left ? kCenterCol - offset
                                                                 : kCenterCol + offset;
            if (ellipse_radius_sq(row, col) <= 0.6) {
                s.lesion_center = {row, col};
                break;
            }
        }
        specs.push_back(s);
    }
    return specs;
}

std::vector<Trial> run_trials(std::span<const PhantomSpec> specs, const asym::FocusConfig& cfg) {
    cfg.validate();
    std::vector<std::optional<Trial>> slots(specs.size());
    std::vector<std::exception_ptr> errors(specs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < specs.size(); i = next++) {
            try {
                const Phantom ph = generate_phantom(specs[i]);
                slots[i].emplace(asym::detect_focus(ph.image, cfg), specs[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(specs.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    std::vector<Trial> out;
    out.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

AccuracyReport evaluate_detections(std::span<const Trial> trials) {
    if (trials.empty()) throw Error(ErrorCode::EmptyInput, "no trials to evaluate");
    AccuracyReport rep;
    rep.n = static_cast<int>(trials.size());
    double error_sum = 0.0;
    for (const auto& [report, spec] : trials) {
        if (spec.lesion_present) {
            if (report.side == spec.lesion_side) {
                ++rep.true_positive;
                if (report.centroid) {
                    error_sum += std::hypot((*report.centroid)[0] - spec.lesion_center[0],
                                            (*report.centroid)[1] - spec.lesion_center[1]);
                }
            } else {
                ++rep.false_negative;
                if (report.side != asym::Side::None) ++rep.wrong_side;
            }
        } else if (report.side == asym::Side::None) {
            ++rep.true_negative;
        } else {
            ++rep.false_positive;
        }
    }
    auto rate = [](int num, int den) { return den == 0 ? 1.0 : static_cast<double>(num) / den; };
    rep.accuracy = rate(rep.true_positive + rep.true_negative, rep.n);
    rep.sensitivity = rate(rep.true_positive, rep.true_positive + rep.false_negative);
    rep.specificity = rate(rep.true_negative, rep.true_negative + rep.false_positive);
    rep.mean_localization_error =
        rep.true_positive == 0 ? 0.0 : error_sum / static_cast<double>(rep.true_positive);
    return rep;
}

}  // namespace symfocus::phantom
