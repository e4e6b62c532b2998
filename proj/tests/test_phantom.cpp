#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "symfocus/asymmetry.hpp"
#include "symfocus/error.hpp"
#include "symfocus/image_io.hpp"
#include "symfocus/phantom.hpp"

using namespace symfocus;
using asym::FocusReport;
using asym::Side;
using phantom::PhantomSpec;

namespace {

PhantomSpec lesioned(std::uint64_t seed, Side side, double row, double col, double contrast = 0.3) {
    PhantomSpec s;
    s.seed = seed;
    s.lesion_present = true;
    s.lesion_side = side;
    s.lesion_center = {row, col};
    s.lesion_contrast = contrast;
    return s;
}

FocusReport call(Side side, double row = 0, double col = 0) {
    FocusReport r;
    r.side = side;
    if (side != Side::None) r.centroid = std::array<double, 2>{row, col};
    return r;
}

}  // namespace

TEST_SUITE("phantom") {

TEST_CASE("generation is a pure function of the PhantomSpec") {
    PhantomSpec s = lesioned(9, Side::Right, 120, 160);
    s.noise_sigma = 5.0;
    const auto a = phantom::generate_phantom(s);
    const auto b = phantom::generate_phantom(s);
    CHECK(a.image == b.image);
    CHECK(io::encode_pgm(a.image.grid()) == io::encode_pgm(b.image.grid()));
    CHECK(a.spec == s);
    s.seed = 10;
    CHECK_FALSE(phantom::generate_phantom(s).image == a.image);
}

TEST_CASE("zero contrast equals the lesion-free phantom") {
    PhantomSpec s = lesioned(3, Side::Left, 128, 90, 0.0);
    s.noise_sigma = 4.0;
    PhantomSpec clean = s;
    clean.lesion_present = false;
    CHECK(phantom::generate_phantom(s).image == phantom::generate_phantom(clean).image);
}

TEST_CASE("noise-free lesion center is base times (1 - contrast)") {
    for (double contrast : {0.1, 0.3, 0.75}) {
        const PhantomSpec s = lesioned(12, Side::Left, 100, 96, contrast);
        const auto ph = phantom::generate_phantom(s);
        CHECK(ph.image.at(100, 96) == phantom::base_intensity(s, 100, 96) * (1.0 - contrast));
        // outside the disc the lesion has no effect
        CHECK(ph.image.at(100, 120) == phantom::base_intensity(s, 100, 120));
    }
}

TEST_CASE("base profile follows the ellipse") {
    const PhantomSpec s;
    CHECK(phantom::base_intensity(s, 0, 0) == 0.0);
    CHECK(phantom::base_intensity(s, 128, 20) == 0.0);   // beyond the 80 px column semi-axis
    CHECK(phantom::base_intensity(s, 128, 60) > 0.0);
    CHECK(phantom::base_intensity(s, 30, 128) > 0.0);    // inside the 100 px row semi-axis
    CHECK(phantom::base_intensity(s, 20, 128) == 0.0);
    const auto ph = phantom::generate_phantom(s);
    double peak = 0;
    for (double v : ph.image.grid().pixels()) peak = std::max(peak, v);
    CHECK(peak <= 255.0);
    CHECK(peak >= 200.0);
}

TEST_CASE("noise-free clean phantom is exactly mirror symmetric") {
    for (std::uint64_t seed : {0ULL, 1ULL, 77ULL}) {
        PhantomSpec s;
        s.seed = seed;
        const auto ph = phantom::generate_phantom(s);
        for (int r = 0; r < kGridSize; ++r) {
            for (int c = 1; c < kGridSize; ++c) REQUIRE(ph.image.at(r, c) == ph.image.at(r, 256 - c));
        }
        const auto amap = asym::asymmetry_map(ph.image, {128, 1.0});
        for (double v : amap.values) CHECK(v == 0.0);
    }
}

TEST_CASE("mirrored spec gives the column-mirrored image") {
    const PhantomSpec s = lesioned(5, Side::Left, 140, 101);
    const PhantomSpec m = phantom::mirror_spec(s);
    CHECK(m.lesion_side == Side::Right);
    CHECK(m.lesion_center[1] == 155.0);
    CHECK(m.lesion_center[0] == 140.0);
    CHECK(phantom::mirror_spec(m) == s);
    const auto a = phantom::generate_phantom(s);
    const auto b = phantom::generate_phantom(m);
    for (int r = 0; r < kGridSize; ++r) {
        for (int c = 1; c < kGridSize; ++c) REQUIRE(a.image.at(r, c) == b.image.at(r, 256 - c));
    }
}

TEST_CASE("invalid specs") {
    auto code = [](PhantomSpec s) {
        try {
            s.validate();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Io;
    };
    PhantomSpec s = lesioned(1, Side::Left, 128, 96);
    CHECK(code(s) == ErrorCode::Io);
    s.lesion_radius = 3;
    CHECK(code(s) == ErrorCode::InvalidSpec);
    s.lesion_radius = 31;
    CHECK(code(s) == ErrorCode::InvalidSpec);
    s = lesioned(1, Side::Left, 128, 96, 1.5);
    CHECK(code(s) == ErrorCode::InvalidSpec);
    s = lesioned(1, Side::Left, 10, 96);
    CHECK(code(s) == ErrorCode::InvalidSpec);  // outside the ellipse
    s = lesioned(1, Side::Right, 128, 96);
    CHECK(code(s) == ErrorCode::InvalidSpec);  // side disagrees with the column
    s = lesioned(1, Side::Left, 128, 96);
    s.noise_sigma = -1;
    CHECK(code(s) == ErrorCode::InvalidSpec);
    CHECK_THROWS_AS(phantom::generate_phantom(s), Error);
}

TEST_CASE("trial specs alternate and stay inside the brain") {
    const auto specs = phantom::make_trial_specs(40, 3, 0.3, 10, 5);
    REQUIRE(specs.size() == 40);
    int present = 0, left = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& s = specs[i];
        CHECK_NOTHROW(s.validate());
        CHECK(s.noise_sigma == 5.0);
        if (!s.lesion_present) continue;
        ++present;
        if (s.lesion_side == Side::Left) ++left;
        CHECK(s.lesion_radius == 10.0);
        CHECK(s.lesion_contrast == 0.3);
        CHECK(std::abs(s.lesion_center[1] - 128.0) >= s.lesion_radius);
    }
    CHECK(present == 20);
    CHECK(left == 10);
    CHECK(phantom::make_trial_specs(40, 3, 0.3, 10, 5) == specs);
    CHECK_FALSE(phantom::make_trial_specs(40, 4, 0.3, 10, 5) == specs);
}

TEST_CASE("perfect detector") {
    std::vector<phantom::Trial> trials;
    for (int i = 0; i < 10; ++i) {
        if (i % 2) {
            const auto s = lesioned(static_cast<std::uint64_t>(i), Side::Left, 120, 90);
            trials.emplace_back(call(Side::Left, 120, 90), s);
        } else {
            trials.emplace_back(call(Side::None), PhantomSpec{});
        }
    }
    const auto rep = phantom::evaluate_detections(trials);
    CHECK(rep.n == 10);
    CHECK(rep.accuracy == 1.0);
    CHECK(rep.sensitivity == 1.0);
    CHECK(rep.specificity == 1.0);
    CHECK(rep.mean_localization_error == 0.0);
}

TEST_CASE("null detector") {
    std::vector<phantom::Trial> trials;
    for (int i = 0; i < 5; ++i) trials.emplace_back(call(Side::None), lesioned(1, Side::Right, 120, 160));
    for (int i = 0; i < 5; ++i) trials.emplace_back(call(Side::None), PhantomSpec{});
    const auto rep = phantom::evaluate_detections(trials);
    CHECK(rep.accuracy == 0.5);
    CHECK(rep.sensitivity == 0.0);
    CHECK(rep.specificity == 1.0);
    CHECK(rep.true_positive == 0);
    CHECK(rep.false_negative == 5);
}

TEST_CASE("random confusion table matches an independent tally") {
    testing::Gen g(51);
    for (int round = 0; round < 5; ++round) {
        std::vector<phantom::Trial> trials;
        int tp = 0, fn = 0, tn = 0, fp = 0, wrong = 0;
        double err = 0;
        for (int i = 0; i < 100; ++i) {
            const bool present = g.integer(0, 1) == 1;
            const Side truth = g.integer(0, 1) ? Side::Left : Side::Right;
            const double row = g.integer(90, 160);
            const double col = truth == Side::Left ? g.integer(80, 110) : g.integer(146, 176);
            PhantomSpec s = present ? lesioned(1, truth, row, col) : PhantomSpec{};
            const int pick = g.integer(0, 2);
            const Side said = pick == 0 ? Side::None : (pick == 1 ? Side::Left : Side::Right);
            const double cr = row + g.uniform(-5, 5), cc = col + g.uniform(-5, 5);
            trials.emplace_back(call(said, cr, cc), s);
            if (present) {
                if (said == truth) {
                    ++tp;
                    err += std::sqrt((cr - row) * (cr - row) + (cc - col) * (cc - col));
                } else {
                    ++fn;
                    if (said != Side::None) ++wrong;
                }
            } else if (said == Side::None) {
                ++tn;
            } else {
                ++fp;
            }
        }
        const auto rep = phantom::evaluate_detections(trials);
        CHECK(rep.n == 100);
        CHECK(rep.true_positive == tp);
        CHECK(rep.false_negative == fn);
        CHECK(rep.true_negative == tn);
        CHECK(rep.false_positive == fp);
        CHECK(rep.wrong_side == wrong);
        CHECK(rep.accuracy == static_cast<double>(tp + tn) / 100.0);
        CHECK(rep.sensitivity == (tp + fn ? static_cast<double>(tp) / (tp + fn) : 1.0));
        CHECK(rep.specificity == (tn + fp ? static_cast<double>(tn) / (tn + fp) : 1.0));
        CHECK(rep.mean_localization_error == doctest::Approx(tp ? err / tp : 0.0).epsilon(1e-12));
        for (double f : {rep.accuracy, rep.sensitivity, rep.specificity}) {
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
        }
    }
}

TEST_CASE("empty evaluation is an error") {
    try {
        (void)phantom::evaluate_detections({});
        FAIL("expected EmptyInput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyInput);
    }
}

TEST_CASE("batch runner keeps spec order") {
    const auto specs = phantom::make_trial_specs(4, 8, 0.3, 10, 5);
    const auto trials = phantom::run_trials(specs, asym::FocusConfig{});
    REQUIRE(trials.size() == 4);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        CHECK(trials[i].second == specs[i]);
        CHECK(trials[i].first.side ==
              asym::detect_focus(phantom::generate_phantom(specs[i]).image, asym::FocusConfig{}).side);
    }
}

}  // TEST_SUITE
