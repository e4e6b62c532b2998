#include "symfocus/intensity_report.hpp"

#include <charconv>
#include <cmath>
#include <json.hpp>

#include "symfocus/error.hpp"

namespace symfocus::report {
namespace {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
    const bool quote = s.find_first_of(",\"\r\n") != std::string::npos ||
                       (!s.empty() && (s.front() == ' ' || s.back() == ' '));
    if (!quote) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> split_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool row_has_content = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
            continue;
        }
        if (ch == '"') {
            quoted = true;
            row_has_content = true;
        } else if (ch == ',') {
            row.push_back(std::move(field));
            field.clear();
            row_has_content = true;
        } else if (ch == '\n' || ch == '\r') {
            if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (row_has_content || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            row_has_content = false;
        } else {
            field += ch;
            row_has_content = true;
        }
    }
    if (quoted) throw Error(ErrorCode::MalformedHeader, "unterminated quoted CSV field");
    if (row_has_content || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename T>
T parse_number(const std::string& s) {
    T value{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error(ErrorCode::MalformedHeader, "bad numeric CSV cell '" + s + "'");
    }
    return value;
}

}  // namespace

void ThresholdBand::validate() const {
    if (!(lo >= 0.0 && lo < hi && hi <= 255.0)) {
        throw Error(ErrorCode::InvalidConfig, "threshold band must satisfy 0 <= lo < hi <= 255");
    }
}

IntensitySummary channel_summary(const RasterImage& img, const ThresholdBand& band,
                                 std::string label) {
    band.validate();
    IntensitySummary s;
    s.label = std::move(label);
    std::array<std::int64_t, 3> sums{};
    std::array<std::size_t, 3> in_band{};
    const auto px = img.pixels();
    const auto ch = static_cast<std::size_t>(img.channels());
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        for (std::size_t k = 0; k < 3; ++k) {
            const double v = px[i * ch + (ch == 3 ? k : 0)];
            sums[k] += std::llround(v);
            if (band.contains(v)) ++in_band[k];
        }
    }
    s.red = sums[0];
    s.green = sums[1];
    s.blue = sums[2];
    for (std::size_t k = 0; k < 3; ++k) {
        s.in_band_fraction[k] =
            static_cast<double>(in_band[k]) / static_cast<double>(img.pixel_count());
    }
    return s;
}

ComparisonRecord compare_summaries(const IntensitySummary& normal, const IntensitySummary& test) {
    const std::array<std::int64_t, 3> base{normal.red, normal.green, normal.blue};
    const std::array<std::int64_t, 3> sample{test.red, test.green, test.blue};
    ComparisonRecord rec;
    for (std::size_t k = 0; k < 3; ++k) {
        if (base[k] == 0) {
            throw Error(ErrorCode::ZeroBaseline, "baseline '" + normal.label + "' has a zero channel sum");
        }
        const auto b = static_cast<double>(base[k]);
        const auto t = static_cast<double>(sample[k]);
        rec.ratio[k] = t / b;
        rec.percent_deviation[k] = 100.0 * (t - b) / b;
    }
    return rec;
}

ScanClass classify_scan(const IntensitySummary& summary, const ThresholdBand& band, double tau_b) {
    band.validate();
    if (!(tau_b > 0.0 && tau_b < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "tau_b must lie in (0,1)");
    }
    for (double f : summary.in_band_fraction) {
        if (1.0 - f > tau_b) return ScanClass::OutOfBand;
    }
    return ScanClass::WithinNormalBand;
}

std::vector<ReportRow> comparison_rows(const IntensitySummary& normal,
                                       std::span<const IntensitySummary> tests) {
    std::vector<ReportRow> rows;
    rows.push_back({normal, compare_summaries(normal, normal)});
    for (const auto& t : tests) rows.push_back({t, compare_summaries(normal, t)});
    return rows;
}

std::string emit_report(std::span<const ReportRow> rows, ReportFormat format) {
    if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no report rows");
    if (format == ReportFormat::Json) {
        auto doc = nlohmann::ordered_json::array();
        for (const auto& row : rows) {
            nlohmann::ordered_json j;
            j["label"] = row.summary.label;
            j["red"] = row.summary.red;
            j["green"] = row.summary.green;
            j["blue"] = row.summary.blue;
            j["red_ratio"] = row.record.ratio[0];
            j["green_ratio"] = row.record.ratio[1];
            j["blue_ratio"] = row.record.ratio[2];
            doc.push_back(std::move(j));
        }
        return doc.dump(2) + "\n";
    }
    std::string out{kCsvHeader};
    out += '\n';
    for (const auto& row : rows) {
        out += csv_field(row.summary.label);
        for (std::int64_t v : {row.summary.red, row.summary.green, row.summary.blue}) {
            out += ',';
            out += std::to_string(v);
        }
        for (double r : row.record.ratio) {
            out += ',';
            out += format_number(r);
        }
        out += '\n';
    }
    return out;
}

std::vector<ReportRow> parse_report_csv(std::string_view csv) {
    const auto table = split_csv(csv);
    if (table.empty()) throw Error(ErrorCode::EmptyInput, "empty CSV");
    std::string header;
    for (std::size_t i = 0; i < table.front().size(); ++i) {
        if (i) header += ',';
        header += table.front()[i];
    }
    if (header != kCsvHeader) throw Error(ErrorCode::MalformedHeader, "unexpected CSV header");
    if (table.size() < 2) throw Error(ErrorCode::EmptyInput, "CSV has no data rows");

    std::vector<ReportRow> rows;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto& cells = table[i];
        if (cells.size() != 7) {
            throw Error(ErrorCode::MalformedHeader, "CSV row " + std::to_string(i) + " needs 7 cells");
        }
        ReportRow row;
        row.summary.label = cells[0];
        row.summary.red = parse_number<std::int64_t>(cells[1]);
        row.summary.green = parse_number<std::int64_t>(cells[2]);
        row.summary.blue = parse_number<std::int64_t>(cells[3]);
        for (std::size_t k = 0; k < 3; ++k) {
            row.record.ratio[k] = parse_number<double>(cells[4 + k]);
            row.record.percent_deviation[k] = 100.0 * (row.record.ratio[k] - 1.0);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string_view to_string(ScanClass c) {
    return c == ScanClass::WithinNormalBand ? "WithinNormalBand" : "OutOfBand";
}

}  // namespace symfocus::report
