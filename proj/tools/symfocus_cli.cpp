#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "pipeline.hpp"
#include "symfocus/error.hpp"

namespace {

using symfocus::cli::PipelineConfig;
namespace fs = std::filesystem;

std::string config_scalar(const std::string& key, const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConfigError("unsupported value for '" + key + "'");
}

// A flat JSON object whose keys are long option names; '_' and '-' are
// interchangeable, arrays become repeated values, null is skipped.
std::vector<CLI::ConfigItem> read_json_config(std::istream& input) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::exception& e) {
        throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConfigError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
        if (value.is_object()) throw CLI::ConfigError("nested object for '" + key + "'");
        if (value.is_null()) continue;
        CLI::ConfigItem item;
        item.name = key;
        std::replace(item.name.begin(), item.name.end(), '_', '-');
        if (value.is_array()) {
            for (const auto& v : value) item.inputs.push_back(config_scalar(key, v));
        } else {
            item.inputs.push_back(config_scalar(key, value));
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::map<CLI::App*, std::string> config_files;
std::vector<std::pair<CLI::App*, CLI::Option*>> required_options;

void add_config(CLI::App* app) {
    app->add_option("--config", config_files[app],
                    "JSON file of option values; flags given on the command line win");
}

CLI::Option* required(CLI::App* app, CLI::Option* opt) {
    required_options.emplace_back(app, opt);
    opt->description(opt->get_description() + " (required)");
    return opt;
}

// Fills every option still unset on target from a JSON config file.
void apply_config(CLI::App* target, const std::string& file) {
    std::ifstream in(file);
    if (!in) throw CLI::FileError::Missing(file);
    for (const auto& item : read_json_config(in)) {
        CLI::Option* opt = target->get_option_no_throw("--" + item.name);
        if (opt == nullptr || item.name == "config") {
            throw CLI::ConfigError("unknown config key '" + item.name + "' for " + target->get_name());
        }
        if (opt->count() > 0) continue;
        opt->add_result(item.inputs);
        opt->run_callback();
    }
}

void add_clustering(CLI::App* app, PipelineConfig& cfg) {
    auto& c = cfg.clustering;
    app->add_option("--kmin", cfg.k_min, "Smallest cluster count tried")->capture_default_str();
    app->add_option("--kmax", cfg.k_max, "Largest cluster count tried")->capture_default_str();
    app->add_option("--seed", c.seed, "Seed for the k-means++ initialisation")->capture_default_str();
    app->add_option("--theta", c.theta, "Symmetry acceptance threshold")->capture_default_str();
    app->add_option("--max-iter", c.max_iter, "Iteration cap per phase")->capture_default_str();
    app->add_option("--tol", c.tol, "Center movement stop threshold")->capture_default_str();
    app->add_option("--spatial-weight", c.spatial_weight, "Weight of the row/col features")
        ->capture_default_str();
    app->add_option("--intensity-weight", c.intensity_weight, "Weight of the intensity feature")
        ->capture_default_str();
    const std::map<std::string, symfocus::cluster::EpsilonMode> modes{
        {"sum", symfocus::cluster::EpsilonMode::Sum}, {"mean", symfocus::cluster::EpsilonMode::Mean}};
    app->add_option("--epsilon-mode", c.epsilon_mode, "How symmetry distances form epsilon_K")
        ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case))
        ->default_str("sum");
    app->add_option("--background", cfg.background, "Brain mask threshold")->capture_default_str();
}

void add_focus(CLI::App* app, PipelineConfig& cfg) {
    app->add_option("--tau-a", cfg.tau_a, "Focus threshold on mean cluster asymmetry")
        ->capture_default_str();
    app->add_option("--evidence-radius", cfg.evidence_radius, "Half-width of the evidence window")
        ->capture_default_str();
    const std::map<std::string, symfocus::asym::FocusPolarity> polarities{
        {"deficit", symfocus::asym::FocusPolarity::Deficit},
        {"excess", symfocus::asym::FocusPolarity::Excess}};
    app->add_option("--polarity", cfg.polarity, "Lesion polarity searched for")
        ->transform(CLI::CheckedTransformer(polarities, CLI::ignore_case))
        ->default_str("deficit");
}

void add_band(CLI::App* app, PipelineConfig& cfg) {
    app->add_option("--band-lo", cfg.band.lo, "Lower edge of the normal band")->capture_default_str();
    app->add_option("--band-hi", cfg.band.hi, "Upper edge of the normal band")->capture_default_str();
    app->add_option("--tau-b", cfg.tau_b, "Out-of-band fraction that flags a scan")
        ->capture_default_str();
}

int exit_code(symfocus::ErrorCode code) {
    switch (code) {
        case symfocus::ErrorCode::InvalidConfig:
        case symfocus::ErrorCode::BadRange: return 2;
        default: return 1;
    }
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text << std::flush;
    } else {
        symfocus::cli::write_file_atomic(out, text);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Symmetry-based brain scan segmentation and focus localisation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "symfocus 0.1.0");

    PipelineConfig cfg;
    std::string out_dir;

    auto* segment = app.add_subcommand("segment", "Sym(K)-selected whole-brain clustering");
    add_config(segment);
    required(segment, segment->add_option("--input", cfg.input, "Image file (PGM, PNG or DICOM)"));
    required(segment, segment->add_option("--out", out_dir, "Output directory"));
    segment->add_option("--stride", cfg.stride, "Grid stride of the clustered pixels")
        ->capture_default_str();
    add_clustering(segment, cfg);

    auto* analyze = app.add_subcommand("analyze", "Hemispheric asymmetry and focus detection");
    add_config(analyze);
    required(analyze, analyze->add_option("--input", cfg.input, "Image file (PGM, PNG or DICOM)"));
    required(analyze, analyze->add_option("--out", out_dir, "Output directory"));
    add_clustering(analyze, cfg);
    add_focus(analyze, cfg);

    std::string normal;
    std::vector<std::string> tests;
    std::string report_out;
    bool classify = false;
    auto* report = app.add_subcommand("report", "Per-channel intensity comparison against a baseline");
    add_config(report);
    required(report, report->add_option("--normal", normal, "Baseline image"));
    required(report, report->add_option("--test", tests, "Test image (repeatable)"));
    report->add_option("--out", report_out, "Output file; '-' or omitted writes to stdout");
    const std::map<std::string, symfocus::report::ReportFormat> formats{
        {"csv", symfocus::report::ReportFormat::Csv}, {"json", symfocus::report::ReportFormat::Json}};
    report->add_option("--format", cfg.format, "csv or json")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case))
        ->default_str("csv");
    report->add_flag("--classify", classify, "Print label,class per image instead of the report");
    add_band(report, cfg);

    auto* phantom = app.add_subcommand("phantom", "Synthetic phantom batches");
    add_config(phantom);
    phantom->require_subcommand(1);

    int n = 100;
    std::uint64_t phantom_seed = 1;
    double contrast = 0.3, radius = 10.0, noise = 5.0;
    auto* gen = phantom->add_subcommand("gen", "Write specs.json and one PGM per phantom");
    add_config(gen);
    gen->add_option("--n", n, "Number of phantoms")->capture_default_str()->check(CLI::PositiveNumber);
    gen->add_option("--seed", phantom_seed, "Batch seed")->capture_default_str();
    gen->add_option("--contrast", contrast, "Fractional lesion deficit")->capture_default_str();
    gen->add_option("--radius", radius, "Lesion radius in pixels")->capture_default_str();
    gen->add_option("--noise", noise, "Gaussian noise sigma")->capture_default_str();
    required(gen, gen->add_option("--out", out_dir, "Output directory"));

    std::string eval_dir;
    std::string eval_out;
    auto* eval = phantom->add_subcommand("eval", "Detect on a phantom batch and print accuracy");
    add_config(eval);
    required(eval, eval->add_option("--dir", eval_dir, "Directory written by phantom gen"));
    eval->add_option("--out", eval_out, "Output file; '-' or omitted writes to stdout");
    add_clustering(eval, cfg);
    add_focus(eval, cfg);

    auto* pipeline = app.add_subcommand("pipeline", "Load, detect, segment and report in one run");
    add_config(pipeline);
    required(pipeline, pipeline->add_option("--input", cfg.input, "Image file (PGM, PNG or DICOM)"));
    pipeline->add_option("--baseline", cfg.baseline, "Normal image for the intensity comparison");
    required(pipeline, pipeline->add_option("--out", out_dir, "Output directory"));
    pipeline->add_option("--stride", cfg.stride, "Grid stride of the segmentation")
        ->capture_default_str();
    add_clustering(pipeline, cfg);
    add_focus(pipeline, cfg);
    add_band(pipeline, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "symfocus: " << e.what() << "\n";
        return 2;
    }

    try {
        CLI::App* leaf = &app;
        std::vector<CLI::App*> chain;
        while (!leaf->get_subcommands().empty()) {
            leaf = leaf->get_subcommands().front();
            chain.push_back(leaf);
        }
        // The innermost subcommand's file takes precedence over its parent's.
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            const std::string& file = config_files[*it];
            if (!file.empty()) apply_config(leaf, file);
        }
        for (const auto& [owner, opt] : required_options) {
            if (owner->parsed() && opt->count() == 0) {
                throw CLI::RequiredError(opt->get_name());
            }
        }
    } catch (const CLI::Error& e) {
        std::cerr << "symfocus: " << e.what() << "\n";
        return 2;
    }

    try {
        if (segment->parsed()) {
            symfocus::cli::write_artifacts(out_dir, symfocus::cli::segment_artifacts(cfg));
        } else if (analyze->parsed()) {
            symfocus::cli::write_artifacts(out_dir, symfocus::cli::analyze_artifacts(cfg));
        } else if (pipeline->parsed()) {
            symfocus::cli::write_artifacts(out_dir, symfocus::cli::pipeline_artifacts(cfg));
        } else if (report->parsed()) {
            std::vector<fs::path> paths(tests.begin(), tests.end());
            if (classify) {
                emit(symfocus::cli::classify_images(cfg, normal, paths), report_out);
            } else {
                emit(symfocus::cli::intensity_report(cfg, normal, paths), report_out);
            }
        } else if (gen->parsed()) {
            symfocus::cli::write_artifacts(
                out_dir, symfocus::cli::phantom_batch(n, phantom_seed, contrast, radius, noise));
        } else if (eval->parsed()) {
            emit(symfocus::cli::evaluate_batch(eval_dir, cfg), eval_out);
        }
    } catch (const symfocus::Error& e) {
        std::cerr << "symfocus: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "symfocus: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
