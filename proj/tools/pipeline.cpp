#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "symfocus/error.hpp"
#include "symfocus/image_io.hpp"
#include "symfocus/phantom.hpp"
#include "symfocus/serialization.hpp"

namespace symfocus::cli {
namespace fs = std::filesystem;

namespace {

std::string bytes_to_string(const std::vector<std::uint8_t>& bytes) {
    return std::string(bytes.begin(), bytes.end());
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string pgm_of(std::vector<double> values) {
    for (double& v : values) v = std::clamp(v, 0.0, 255.0);
    return bytes_to_string(
        io::encode_pgm(RasterImage(kGridSize, kGridSize, 1, std::move(values), SourceFormat::Pgm)));
}

std::string phantom_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "phantom_%04zu.pgm", i);
    return buf;
}

// Phantoms are stored on the analysis grid already; rescaling them would
// shift the absolute intensities the focus threshold is defined on.
NormalizedImage load_grid_image(const fs::path& path) {
    RasterImage gray = io::to_grayscale(io::load_image_file(path));
    if (gray.width() == kGridSize && gray.height() == kGridSize) {
        return NormalizedImage(std::move(gray), false);
    }
    return io::normalize_image(gray);
}

template <typename F>
void parallel_for(std::size_t n, F&& body) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(n, 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::string report_label(const fs::path& p) { return p.filename().string(); }

}  // namespace

void PipelineConfig::validate() const {
    focus().validate();
    band.validate();
    if (!(tau_b > 0.0 && tau_b < 1.0)) throw Error(ErrorCode::InvalidConfig, "tau_b must lie in (0,1)");
    if (stride < 1) throw Error(ErrorCode::InvalidConfig, "stride must be >= 1");
}

asym::FocusConfig PipelineConfig::focus() const {
    asym::FocusConfig fc;
    fc.clustering = clustering;
    fc.k_min = k_min;
    fc.k_max = k_max;
    fc.tau_a = tau_a;
    fc.background = background;
    fc.evidence_radius = evidence_radius;
    fc.polarity = polarity;
    return fc;
}

NormalizedImage load_normalized(const fs::path& path) {
    return io::normalize_image(io::to_grayscale(io::load_image_file(path)));
}

namespace {

Artifacts segment_image(const NormalizedImage& img, const PipelineConfig& cfg) {
    const auto smoothed = asym::median_filter_3x3(img.grid());
    std::vector<std::size_t> pixels;
    for (int r = 0; r < kGridSize; r += cfg.stride) {
        for (int c = 0; c < kGridSize; c += cfg.stride) {
            const auto i = static_cast<std::size_t>(r * kGridSize + c);
            if (smoothed[i] > cfg.background) pixels.push_back(i);
        }
    }
    if (pixels.empty()) throw Error(ErrorCode::EmptyMask, "no pixel exceeds the background threshold");

    const auto features = cluster::features_from_pixels(img.grid(), pixels, cfg.clustering);
    const auto report = cluster::select_k(features, cfg.k_min, cfg.k_max, cfg.clustering);
    const auto& model = report.best();

    std::vector<double> labels(static_cast<std::size_t>(kGridSize * kGridSize), 0.0);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        labels[pixels[i]] = std::round(255.0 * (model.assignments[i] + 1) / model.k);
    }
    return {{"model.json", dump(to_json(model))}, {"labels.pgm", pgm_of(std::move(labels))}};
}

Artifacts analyze_image(const NormalizedImage& img, const PipelineConfig& cfg) {
    const auto analysis = asym::analyze_focus(img, cfg.focus());
    return {{"focus.json", dump(to_json(analysis.report))},
            {"asymmetry.pgm", pgm_of(analysis.map.values)}};
}

}  // namespace

Artifacts segment_artifacts(const PipelineConfig& cfg) {
    cfg.validate();
    return segment_image(load_normalized(cfg.input), cfg);
}

Artifacts analyze_artifacts(const PipelineConfig& cfg) {
    cfg.validate();
    return analyze_image(load_normalized(cfg.input), cfg);
}

Artifacts pipeline_artifacts(const PipelineConfig& cfg) {
    cfg.validate();
    const NormalizedImage img = load_normalized(cfg.input);
    Artifacts out = analyze_image(img, cfg);
    out["model.json"] = segment_image(img, cfg).at("model.json");

    const auto test = report::channel_summary(img.grid(), cfg.band, report_label(cfg.input));
    std::vector<report::ReportRow> rows;
    if (cfg.baseline.empty()) {
        rows = report::comparison_rows(test, {});
    } else {
        const auto normal = report::channel_summary(load_normalized(cfg.baseline).grid(), cfg.band,
                                                    report_label(cfg.baseline));
        rows = report::comparison_rows(normal, std::span(&test, 1));
    }
    out["report.csv"] = report::emit_report(rows, report::ReportFormat::Csv);
    return out;
}

std::string intensity_report(const PipelineConfig& cfg, const fs::path& normal,
                             const std::vector<fs::path>& tests) {
    cfg.band.validate();
    if (tests.empty()) throw Error(ErrorCode::EmptyInput, "no test image given");
    const auto base =
        report::channel_summary(io::load_image_file(normal), cfg.band, report_label(normal));
    std::vector<report::IntensitySummary> summaries;
    for (const auto& t : tests) {
        summaries.push_back(report::channel_summary(io::load_image_file(t), cfg.band, report_label(t)));
    }
    return report::emit_report(report::comparison_rows(base, summaries), cfg.format);
}

std::string classify_images(const PipelineConfig& cfg, const fs::path& normal,
                            const std::vector<fs::path>& tests) {
    cfg.band.validate();
    std::string out = "label,class\n";
    std::vector<fs::path> all{normal};
    all.insert(all.end(), tests.begin(), tests.end());
    for (const auto& p : all) {
        const auto s = report::channel_summary(io::load_image_file(p), cfg.band, report_label(p));
        out += s.label + "," + std::string(report::to_string(report::classify_scan(s, cfg.band, cfg.tau_b))) +
               "\n";
    }
    return out;
}

Artifacts phantom_batch(int n, std::uint64_t seed, double contrast, double radius, double noise) {
    const auto specs = phantom::make_trial_specs(n, seed, contrast, radius, noise);
    Artifacts out{{"specs.json", dump(to_json(specs))}};
    std::vector<std::string> images(specs.size());
    parallel_for(specs.size(), [&](std::size_t i) {
        const auto ph = phantom::generate_phantom(specs[i]);
        images[i] = bytes_to_string(io::encode_pgm(ph.image.grid()));
    });
    for (std::size_t i = 0; i < specs.size(); ++i) out[phantom_name(i)] = std::move(images[i]);
    return out;
}

std::string evaluate_batch(const fs::path& dir, const PipelineConfig& cfg) {
    cfg.validate();
    std::ifstream in(dir / "specs.json", std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + (dir / "specs.json").string());
    std::stringstream text;
    text << in.rdbuf();
    Json j;
    try {
        j = Json::parse(text.str());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedHeader, std::string("specs.json: ") + e.what());
    }
    const auto specs = phantom_specs_from_json(j);
    if (specs.empty()) throw Error(ErrorCode::EmptyInput, "specs.json lists no phantom");

    const auto focus = cfg.focus();
    std::vector<std::optional<phantom::Trial>> slots(specs.size());
    parallel_for(specs.size(), [&](std::size_t i) {
        const auto img = load_grid_image(dir / phantom_name(i));
        slots[i].emplace(asym::detect_focus(img, focus), specs[i]);
    });
    std::vector<phantom::Trial> trials;
    for (auto& s : slots) trials.push_back(std::move(*s));
    return dump(to_json(phantom::evaluate_detections(trials)));
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    fs::path tmp = path;
    tmp += ".part";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw Error(ErrorCode::Io, "short write to " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
    }
}

void write_artifacts(const fs::path& dir, const Artifacts& files) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    for (const auto& [name, contents] : files) write_file_atomic(dir / name, contents);
}

}  // namespace symfocus::cli
