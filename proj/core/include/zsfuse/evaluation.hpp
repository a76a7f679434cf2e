#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsfuse/bundle.hpp"
#include "zsfuse/fusion.hpp"

namespace zsfuse {

/// Closed/open partition of a catalog.
struct SplitSpec {
    std::string dataset;
    std::size_t m = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> closed;  // catalog order
    std::vector<std::string> open;    // catalog order

    friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

/// Shuffles the class names with Rng(seed) and takes the first m as closed.
/// Both resulting lists are reported in catalog order.
SplitSpec split_catalog(const ClassCatalog& catalog, std::size_t m, std::uint64_t seed, std::string dataset = {});

/// Uses the closed/open tags stored in the catalog itself.
SplitSpec split_from_tags(const ClassCatalog& catalog, std::string dataset = {});

/// Checks that closed and open partition the catalog.
void validate_split(const SplitSpec& split, const ClassCatalog& catalog);

nlohmann::ordered_json split_to_json(const SplitSpec& s);
SplitSpec split_from_json(const nlohmann::json& j);

/// Catalog column indices of the closed classes, ascending.
std::vector<std::size_t> closed_columns(const SplitSpec& split, const ClassCatalog& catalog);

/// Fraction of samples with label in `label_space` whose true class ranks
/// within the top k among the `label_space` columns. Ties rank the lower
/// catalog index first. Throws ErrorKind::validation if no sample is eligible.
double topk_accuracy(const ProbMatrix& p, std::span<const std::size_t> labels, std::span<const std::size_t> label_space,
                     std::size_t k);

/// Probability that a random positive outscores a random negative, ties
/// counted half. O((P + Q) log Q).
double auroc(std::span<const double> pos, std::span<const double> neg);

struct OpenSetScores {
    std::vector<double> pos;  // samples whose true class is closed
    std::vector<double> neg;  // samples whose true class is open
};

/// Detection score per sample = max probability over the closed columns.
OpenSetScores openset_scores(const ProbMatrix& p, std::span<const std::size_t> labels, const SplitSpec& split,
                             const ClassCatalog& catalog);

struct MethodMetrics {
    std::string method;  // method tag or "fused"
    double top1 = 0.0;
    double top3 = 0.0;
    double top5 = 0.0;
    double auroc = 0.0;
    std::size_t eligible = 0;   // samples counted for top-k
    std::size_t positives = 0;  // closed-class samples
    std::size_t negatives = 0;  // open-class samples

    friend bool operator==(const MethodMetrics&, const MethodMetrics&) = default;
};

enum class LabelSpace { closed, full };

struct ReportConfig {
    std::vector<std::string> methods;
    std::string scheme;
    std::array<double, 3> fixed_weights = {1.0, 1.0, 1.0};
    std::array<double, 3> temperatures = {100.0, 100.0, 100.0};
    double epsilon = 1e-6;
    std::string label_space = "closed";
    SplitSpec split;
    /// backbone -> class -> reference count
    std::map<std::string, std::map<std::string, std::size_t>> references_per_class;

    friend bool operator==(const ReportConfig&, const ReportConfig&) = default;
};

struct EvalReport {
    ReportConfig config;
    std::size_t samples = 0;
    std::vector<MethodMetrics> results;  // one per method, then "fused"

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Computes top-1/3/5 and AUROC for one probability matrix.
MethodMetrics evaluate_probs(const ProbMatrix& p, std::span<const std::size_t> labels, const SplitSpec& split,
                             const ClassCatalog& catalog, LabelSpace space);

enum class ReportFormat { json, csv };

/// Fixed field order, floats with six decimals.
std::string format_report(const EvalReport& report, ReportFormat format);
void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path);
EvalReport report_from_json(const nlohmann::json& j);

inline constexpr const char* kCsvHeader = "method,top1,top3,top5,auroc,eligible,positives,negatives";

/// Fixed-point decimal with six places, "-0.000000" normalized to "0.000000".
std::string format_fixed6(double v);

}  // namespace zsfuse
