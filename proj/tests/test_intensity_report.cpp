#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "support.hpp"
#include "symfocus/error.hpp"
#include "symfocus/intensity_report.hpp"

using namespace symfocus;
using report::IntensitySummary;
using report::ScanClass;
using report::ThresholdBand;

namespace {

IntensitySummary sums(std::string label, std::int64_t r, std::int64_t g, std::int64_t b) {
    IntensitySummary s;
    s.label = std::move(label);
    s.red = r;
    s.green = g;
    s.blue = b;
    return s;
}

IntensitySummary table_normal() { return sums("Normal image", 134394, 141086, 136832); }
IntensitySummary table_test() { return sums("Epileptic seizures", 195426, 192427, 193832); }

}  // namespace

TEST_SUITE("intensity_report") {

TEST_CASE("band is inclusive and validated") {
    const ThresholdBand band;
    CHECK(band.lo == 85.0);
    CHECK(band.hi == 170.0);
    CHECK(band.contains(85.0));
    CHECK(band.contains(170.0));
    CHECK_FALSE(band.contains(84.999));
    CHECK_FALSE(band.contains(170.001));
    CHECK_THROWS_AS((ThresholdBand{100, 100}.validate()), Error);
    CHECK_THROWS_AS((ThresholdBand{-1, 100}.validate()), Error);
    CHECK_THROWS_AS((ThresholdBand{0, 256}.validate()), Error);
}

TEST_CASE("constant gray images") {
    const auto in = report::channel_summary(RasterImage::filled(2, 2, 1, 100.0), {}, "in");
    CHECK(in.red == 400);
    CHECK(in.green == 400);
    CHECK(in.blue == 400);
    for (double f : in.in_band_fraction) CHECK(f == 1.0);
    CHECK(report::classify_scan(in, {}, 0.5) == ScanClass::WithinNormalBand);

    const auto out = report::channel_summary(RasterImage::filled(2, 2, 1, 200.0), {}, "out");
    CHECK(out.red == 800);
    for (double f : out.in_band_fraction) CHECK(f == 0.0);
    CHECK(report::classify_scan(out, {}, 0.5) == ScanClass::OutOfBand);
}

TEST_CASE("half in band is not out of band at tau_b = 0.5") {
    const auto img = testing::gray_image(4, 4, [](int r, int) { return r < 2 ? 50.0 : 100.0; });
    const auto s = report::channel_summary(img, {}, "half");
    CHECK(s.in_band_fraction[0] == 0.5);
    CHECK(report::classify_scan(s, {}, 0.5) == ScanClass::WithinNormalBand);
    CHECK(report::classify_scan(s, {}, 0.49) == ScanClass::OutOfBand);
    CHECK_THROWS_AS(report::classify_scan(s, {}, 0.0), Error);
    CHECK_THROWS_AS(report::classify_scan(s, {}, 1.0), Error);
}

TEST_CASE("RGB sums match a naive loop") {
    testing::Gen g(41);
    std::vector<double> px(16 * 16 * 3);
    for (auto& v : px) v = g.uniform(0, 255);
    const RasterImage img(16, 16, 3, px);
    const ThresholdBand band;
    const auto s = report::channel_summary(img, band, "rgb");
    std::array<std::int64_t, 3> expect{};
    std::array<int, 3> in_band{};
    for (int r = 0; r < 16; ++r) {
        for (int c = 0; c < 16; ++c) {
            for (int ch = 0; ch < 3; ++ch) {
                const double v = px[static_cast<std::size_t>((r * 16 + c) * 3 + ch)];
                expect[static_cast<std::size_t>(ch)] += static_cast<std::int64_t>(std::llround(v));
                if (v >= 85.0 && v <= 170.0) ++in_band[static_cast<std::size_t>(ch)];
            }
        }
    }
    CHECK(s.red == expect[0]);
    CHECK(s.green == expect[1]);
    CHECK(s.blue == expect[2]);
    for (int ch = 0; ch < 3; ++ch) {
        CHECK(s.in_band_fraction[static_cast<std::size_t>(ch)] == in_band[static_cast<std::size_t>(ch)] / 256.0);
    }
}

TEST_CASE("sums are invariant under pixel permutation") {
    testing::Gen g(42);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> px(30 * 20);
        for (auto& v : px) v = g.uniform(0, 255);
        const auto a = report::channel_summary(RasterImage(30, 20, 1, px), {}, "x");
        std::shuffle(px.begin(), px.end(), g.engine());
        const auto b = report::channel_summary(RasterImage(20, 30, 1, px), {}, "x");
        CHECK(a.red == b.red);
        CHECK(a.in_band_fraction == b.in_band_fraction);
    }
}

TEST_CASE("reference channel sums comparison") {
    const auto rec = report::compare_summaries(table_normal(), table_test());
    CHECK(rec.ratio[0] == doctest::Approx(195426.0 / 134394.0).epsilon(1e-15));
    CHECK(std::abs(rec.ratio[0] - 1.4541) <= 1e-4);
    CHECK(std::abs(rec.ratio[1] - 1.3639) <= 1e-4);
    CHECK(std::abs(rec.ratio[2] - 1.4166) <= 1e-4);
    CHECK(std::abs(rec.percent_deviation[0] - 45.41) <= 0.01);
    CHECK(rec.percent_deviation[0] == doctest::Approx(100.0 * (195426.0 - 134394.0) / 134394.0));
}

TEST_CASE("identity comparison and zero baseline") {
    testing::Gen g(43);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = sums("s", g.integer(1, 1 << 30), g.integer(1, 1 << 30), g.integer(1, 1 << 30));
        const auto rec = report::compare_summaries(s, s);
        CHECK(rec == report::ComparisonRecord{});
    }
    try {
        (void)report::compare_summaries(sums("n", 0, 1, 1), sums("t", 1, 1, 1));
        FAIL("expected ZeroBaseline");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroBaseline);
    }
}

TEST_CASE("deviation sign follows the ratio") {
    testing::Gen g(44);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = sums("n", g.integer(1, 1000), g.integer(1, 1000), g.integer(1, 1000));
        const auto t = sums("t", g.integer(0, 1000), g.integer(0, 1000), g.integer(0, 1000));
        const auto rec = report::compare_summaries(n, t);
        for (int ch = 0; ch < 3; ++ch) {
            const auto i = static_cast<std::size_t>(ch);
            CHECK((rec.percent_deviation[i] > 0) == (rec.ratio[i] > 1));
            CHECK((rec.percent_deviation[i] < 0) == (rec.ratio[i] < 1));
        }
    }
}

TEST_CASE("classification is monotone in tau_b") {
    testing::Gen g(45);
    for (int trial = 0; trial < 200; ++trial) {
        IntensitySummary s = sums("s", 1, 1, 1);
        for (auto& f : s.in_band_fraction) f = g.integer(0, 20) / 20.0;
        const double lo = g.uniform(0.01, 0.98);
        const double hi = g.uniform(lo, 0.99);
        if (report::classify_scan(s, {}, lo) == ScanClass::WithinNormalBand) {
            CHECK(report::classify_scan(s, {}, hi) == ScanClass::WithinNormalBand);
        }
    }
}

TEST_CASE("reference channel sums survive CSV verbatim") {
    const auto normal = table_normal();
    const auto test = table_test();
    const auto rows = report::comparison_rows(normal, std::span(&test, 1));
    const std::string csv = report::emit_report(rows, report::ReportFormat::Csv);
    const std::string expect_head = std::string(report::kCsvHeader) + "\n" +
                                    "Normal image,134394,141086,136832,1,1,1\n" +
                                    "Epileptic seizures,195426,192427,193832,";
    CHECK(csv.substr(0, expect_head.size()) == expect_head);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("JSON carries seven fields in column order") {
    const auto s = table_normal();
    const auto rows = report::comparison_rows(s, {});
    const auto doc = nlohmann::ordered_json::parse(report::emit_report(rows, report::ReportFormat::Json));
    REQUIRE(doc.is_array());
    REQUIRE(doc.size() == 1);
    std::vector<std::string> keys;
    for (const auto& [k, v] : doc[0].items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"label", "red", "green", "blue", "red_ratio", "green_ratio",
                                           "blue_ratio"});
    CHECK(doc[0]["red"] == 134394);
    CHECK(doc[0]["blue_ratio"] == 1.0);
}

TEST_CASE("empty report is an error") {
    try {
        (void)report::emit_report({}, report::ReportFormat::Csv);
        FAIL("expected EmptyInput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyInput);
    }
}

TEST_CASE("CSV emit, parse, emit is byte identical") {
    testing::Gen g(46);
    const std::vector<std::string> labels{"plain", "with,comma", "quote\"inside", " padded ", "", "multi\nline"};
    for (int trial = 0; trial < 50; ++trial) {
        const auto normal = sums(labels[static_cast<std::size_t>(trial) % labels.size()], g.integer(1, 1 << 30),
                                 g.integer(1, 1 << 30), g.integer(1, 1 << 30));
        std::vector<IntensitySummary> tests;
        for (int i = 0; i < g.integer(0, 4); ++i) {
            tests.push_back(sums(labels[static_cast<std::size_t>(g.integer(0, 5))], g.integer(0, 1 << 30),
                                 g.integer(0, 1 << 30), g.integer(0, 1 << 30)));
        }
        const auto rows = report::comparison_rows(normal, tests);
        const std::string first = report::emit_report(rows, report::ReportFormat::Csv);
        const auto parsed = report::parse_report_csv(first);
        REQUIRE(parsed.size() == rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(parsed[i].summary.label == rows[i].summary.label);
            CHECK(parsed[i].summary.red == rows[i].summary.red);
            CHECK(parsed[i].record.ratio == rows[i].record.ratio);
        }
        CHECK(report::emit_report(parsed, report::ReportFormat::Csv) == first);
    }
}

TEST_CASE("malformed CSV is rejected") {
    CHECK_THROWS_AS(report::parse_report_csv("wrong,header\n"), Error);
    CHECK_THROWS_AS(report::parse_report_csv(std::string(report::kCsvHeader) + "\nx,1,2\n"), Error);
    CHECK_THROWS_AS(report::parse_report_csv(std::string(report::kCsvHeader) + "\nx,a,2,3,1,1,1\n"), Error);
}

}  // TEST_SUITE
