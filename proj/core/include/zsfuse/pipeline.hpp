#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsfuse/bundle.hpp"
#include "zsfuse/evaluation.hpp"
#include "zsfuse/fusion.hpp"
#include "zsfuse/similarity.hpp"

namespace zsfuse {

enum class SplitMode {
    seeded,   // split_catalog(m, seed)
    file,     // SplitSpec JSON written by `zsfuse split`
    catalog,  // closed/open tags in catalog.json
};

/// One evaluation run. See docs/config.md for the JSON form.
struct PipelineConfig {
    std::filesystem::path bundle;
    std::vector<Method> methods = {kAllMethods.begin(), kAllMethods.end()};
    FusionConfig fusion;
    SplitMode split_mode = SplitMode::seeded;
    std::size_t split_m = 0;
    std::uint64_t split_seed = 0;
    std::filesystem::path split_file;
    std::string dataset;
    LabelSpace label_space = LabelSpace::closed;
    ReportFormat report_format = ReportFormat::json;
    std::optional<std::filesystem::path> report_path;

    void validate() const;

    /// Relative paths resolve against `base_dir`.
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    static PipelineConfig load(const std::filesystem::path& path);
};

SplitSpec resolve_split(const PipelineConfig& config, const ClassCatalog& catalog);

/// Scores the configured methods, in config order.
std::vector<ScoreMatrix> score_stage(const DatasetBundle& bundle, std::span<const Method> methods);

/// Metrics for every calibrated method followed by the fused matrix.
EvalReport evaluate_stage(const DatasetBundle& bundle, const SplitSpec& split, const FusionResult& fusion,
                          const PipelineConfig& config);

/// load bundle -> score -> calibrate -> weight -> fuse -> split -> evaluate.
/// Does not write the report; see write_report.
EvalReport run_pipeline(const PipelineConfig& config);
EvalReport run_pipeline(const DatasetBundle& bundle, const PipelineConfig& config);

void write_report(const EvalReport& report, const PipelineConfig& config);

// Intermediate artifacts: float64 ZSEB tables with a JSON sidecar of the same stem.
void write_scores(const std::filesystem::path& dir, std::span<const ScoreMatrix> scores, const ClassCatalog& catalog);
std::vector<ScoreMatrix> read_scores(const std::filesystem::path& dir, std::span<const Method> methods,
                                     const ClassCatalog& catalog);
void write_fusion(const std::filesystem::path& dir, const FusionResult& fusion, const ClassCatalog& catalog);
FusionResult read_fusion(const std::filesystem::path& dir, std::span<const Method> methods, const ClassCatalog& catalog);

}  // namespace zsfuse
