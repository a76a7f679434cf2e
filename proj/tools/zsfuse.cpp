// zsfuse: confidence-weighted fusion of zero-shot alignment scores.
//
// Subcommands: run | score | fuse | eval | report | split | prompts | synth.
// Exit status: 0 success, 1 usage error, 2 data/validation error, 3 I/O error.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "zsfuse/bundle.hpp"
#include "zsfuse/error.hpp"
#include "zsfuse/evaluation.hpp"
#include "zsfuse/pipeline.hpp"
#include "zsfuse/prompt_forge.hpp"
#include "zsfuse/synthetic.hpp"

namespace fs = std::filesystem;
using namespace zsfuse;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes to `out` when given, stdout otherwise.
void deliver(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    write_text_file(out, text);
}

ReportFormat parse_format(const std::string& s) {
    if (s == "json") return ReportFormat::json;
    if (s == "csv") return ReportFormat::csv;
    throw Error(ErrorKind::usage, "format must be json or csv");
}

void emit(const EvalReport& report, const PipelineConfig& cfg, const std::string& out, const std::string& format) {
    PipelineConfig c = cfg;
    if (!format.empty()) c.report_format = parse_format(format);
    if (!out.empty()) c.report_path = out;
    if (c.report_path) write_report(report, c);
    else std::cout << format_report(report, c.report_format);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Confidence-weighted multi-method zero-shot classification engine"};
    app.require_subcommand(1);

    std::string config_path, out, format, scores_dir, fusion_dir, out_dir;

    auto* run = app.add_subcommand("run", "Full pipeline: score, calibrate, weight, fuse, evaluate, report");
    run->add_option("-c,--config", config_path, "Pipeline config JSON")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--out", out, "Report path (overrides config report.path)");
    run->add_option("-f,--format", format, "json or csv (overrides config)");

    auto* score = app.add_subcommand("score", "Write raw cosine score tables for the configured methods");
    score->add_option("-c,--config", config_path, "Pipeline config JSON")->required()->check(CLI::ExistingFile);
    score->add_option("-o,--out-dir", out_dir, "Output directory")->required();

    auto* fuse = app.add_subcommand("fuse", "Calibrate score tables and fuse them");
    fuse->add_option("-c,--config", config_path, "Pipeline config JSON")->required()->check(CLI::ExistingFile);
    fuse->add_option("-s,--scores", scores_dir, "Directory written by `score`")->required()->check(CLI::ExistingDirectory);
    fuse->add_option("-o,--out-dir", out_dir, "Output directory")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate calibrated and fused probabilities");
    eval->add_option("-c,--config", config_path, "Pipeline config JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("-p,--fusion", fusion_dir, "Directory written by `fuse`")->required()->check(CLI::ExistingDirectory);
    eval->add_option("-o,--out", out, "Report path (overrides config report.path)");
    eval->add_option("-f,--format", format, "json or csv (overrides config)");

    std::string report_in, report_format = "csv";
    auto* report = app.add_subcommand("report", "Convert a JSON report to JSON or CSV");
    report->add_option("-i,--in", report_in, "Report JSON")->required()->check(CLI::ExistingFile);
    report->add_option("-f,--format", report_format, "json or csv")->capture_default_str();
    report->add_option("-o,--out", out, "Output path (stdout if omitted)");

    std::string catalog_path, dataset;
    std::size_t m = 0;
    std::uint64_t seed = 0;
    auto* split = app.add_subcommand("split", "Draw a seeded closed/open split of a catalog");
    split->add_option("--catalog", catalog_path, "catalog.json")->required()->check(CLI::ExistingFile);
    split->add_option("--m", m, "Closed-set size")->required();
    split->add_option("--seed", seed, "64-bit seed")->default_val(0);
    split->add_option("--dataset", dataset, "Dataset name recorded in the split");
    split->add_option("-o,--out", out, "Output path (stdout if omitted)");

    std::string mode, class_name, cc, class_a, class_b, classes, input;
    std::size_t images_per_class = 3;
    auto* prompts = app.add_subcommand("prompts", "Build reference-generation prompts or parse grouping responses");
    prompts->add_option("--mode", mode, "analysis | grouping | confirmation | similarity | generation | parse | batch")
        ->required()
        ->check(CLI::IsMember({"analysis", "grouping", "confirmation", "similarity", "generation", "parse", "batch"}));
    prompts->add_option("--catalog", catalog_path, "catalog.json (analysis, parse, batch)");
    prompts->add_option("--classes", classes, "Comma-separated class names (analysis)");
    prompts->add_option("--class", class_name, "Class name (generation)");
    prompts->add_option("--cc", cc, "Common features shared with a confusable class (generation)");
    prompts->add_option("--a", class_a, "First class (similarity)");
    prompts->add_option("--b", class_b, "Second class (similarity)");
    prompts->add_option("--input", input, "Grouping response text file (parse, batch)");
    prompts->add_option("--images-per-class", images_per_class, "Images to request per prompt (batch)");
    prompts->add_option("-o,--out", out, "Output path (stdout if omitted)");

    SyntheticParams synth_params;
    std::string noise = "0.6,0.9,0.5";
    auto* synth = app.add_subcommand("synth", "Generate a synthetic bundle");
    synth->add_option("--classes", synth_params.n_classes, "Number of classes")->default_val(10);
    synth->add_option("--samples", synth_params.samples_per_class, "Test samples per class")->default_val(50);
    synth->add_option("--dim", synth_params.dim, "Embedding dimension")->default_val(64);
    synth->add_option("--noise", noise, "Noise per method: M1,M2,M3")->default_val("0.6,0.9,0.5");
    synth->add_option("--refs", synth_params.refs_per_class, "Reference images per class")->default_val(3);
    synth->add_option("--ref-noise-ratio", synth_params.reference_noise_ratio, "Reference noise relative to method noise")
        ->default_val(0.25);
    synth->add_option("--seed", synth_params.seed, "64-bit seed")->default_val(1);
    synth->add_option("-o,--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*run) {
            const auto cfg = PipelineConfig::load(config_path);
            emit(run_pipeline(cfg), cfg, out, format);
        } else if (*score) {
            const auto cfg = PipelineConfig::load(config_path);
            const auto bundle = load_bundle(cfg.bundle);
            write_scores(out_dir, score_stage(bundle, cfg.methods), bundle.catalog);
        } else if (*fuse) {
            const auto cfg = PipelineConfig::load(config_path);
            const auto catalog = load_bundle(cfg.bundle).catalog;
            const auto scores = read_scores(scores_dir, cfg.methods, catalog);
            write_fusion(out_dir, calibrate_and_fuse(scores, cfg.fusion), catalog);
        } else if (*eval) {
            const auto cfg = PipelineConfig::load(config_path);
            const auto bundle = load_bundle(cfg.bundle);
            const auto fusion = read_fusion(fusion_dir, cfg.methods, bundle.catalog);
            emit(evaluate_stage(bundle, resolve_split(cfg, bundle.catalog), fusion, cfg), cfg, out, format);
        } else if (*report) {
            const auto r = report_from_json(read_json_file(report_in));
            deliver(format_report(r, parse_format(report_format)), out);
        } else if (*split) {
            const auto catalog = load_catalog(catalog_path);
            deliver(split_to_json(split_catalog(catalog, m, seed, dataset)).dump(2) + "\n", out);
        } else if (*prompts) {
            std::string text;
            if (mode == "analysis") {
                std::vector<std::string> names = classes.empty() ? std::vector<std::string>{} : split_csv(classes);
                if (names.empty() && !catalog_path.empty()) names = load_catalog(catalog_path).names();
                text = prompts::analysis_prompt(names) + "\n";
            } else if (mode == "grouping") {
                text = prompts::grouping_prompt() + "\n";
            } else if (mode == "confirmation") {
                text = prompts::confirmation_prompt() + "\n";
            } else if (mode == "similarity") {
                text = prompts::similarity_prompt(class_a, class_b) + "\n";
            } else if (mode == "generation") {
                if (!catalog_path.empty()) load_catalog(catalog_path).index_of(class_name);
                text = prompts::generation_prompt(class_name, cc) + "\n";
            } else {
                if (input.empty()) throw Error(ErrorKind::usage, "--input is required for --mode " + mode);
                std::optional<ClassCatalog> catalog;
                if (!catalog_path.empty()) catalog = load_catalog(catalog_path);
                const auto parsed = prompts::parse_grouping_response(read_text(input), catalog ? &*catalog : nullptr);
                for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
                if (mode == "parse") {
                    nlohmann::ordered_json groups = nlohmann::ordered_json::array();
                    for (const auto& g : parsed.records)
                        groups.push_back({{"class_a", g.class_a}, {"class_b", g.class_b}, {"common_features", g.common_features}});
                    text = nlohmann::ordered_json{{"groups", groups}}.dump(2) + "\n";
                } else {
                    if (!catalog) throw Error(ErrorKind::usage, "--catalog is required for --mode batch");
                    text = prompts::batch_to_json(prompts::generation_batch(*catalog, parsed.records), images_per_class)
                               .dump(2) + "\n";
                }
            }
            deliver(text, out);
        } else if (*synth) {
            const auto parts = split_csv(noise);
            if (parts.size() != 3) throw Error(ErrorKind::usage, "--noise expects three comma-separated values");
            for (std::size_t i = 0; i < 3; ++i) {
                try {
                    synth_params.noise[i] = std::stod(parts[i]);
                } catch (const std::exception&) {
                    throw Error(ErrorKind::usage, "--noise: cannot parse '" + parts[i] + "'");
                }
            }
            save_bundle(generate_synthetic_bundle(synth_params), out_dir);
        }
    } catch (const Error& e) {
        std::cerr << "zsfuse: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "zsfuse: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
