#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zsfuse/embedding_store.hpp"
#include "zsfuse/method.hpp"
#include "zsfuse/similarity.hpp"

namespace zsfuse {

/// How a per-sample confidence weight is derived from a probability row.
enum class Scheme {
    max,              // W = max_n p_n
    inv_entropy,      // W = 1 / (H + epsilon)
    neg_exp_entropy,  // W = exp(-H)
    fixed,            // constant per-method weights, e.g. 1:1:1 or 3:3:4
};

std::string_view to_string(Scheme s) noexcept;
std::optional<Scheme> parse_scheme(std::string_view s) noexcept;

struct FusionConfig {
    Scheme scheme = Scheme::inv_entropy;
    /// Used by Scheme::fixed, indexed by Method (text_image_clip, image_image_clip, image_image_dino).
    std::array<double, 3> fixed_weights = {1.0, 1.0, 1.0};
    /// Softmax temperature per method, indexed by Method.
    std::array<double, 3> temperatures = {100.0, 100.0, 100.0};
    double epsilon = 1e-6;

    void validate() const;

    static FusionConfig fixed(std::array<double, 3> weights) {
        FusionConfig c;
        c.scheme = Scheme::fixed;
        c.fixed_weights = weights;
        return c;
    }
};

/// Row-stochastic T x N matrix.
struct ProbMatrix {
    std::string source;  // method tag or "fused"
    double temperature = 0.0;  // 0 for fused output
    Table probs;

    std::size_t rows() const noexcept { return probs.rows; }
    std::size_t cols() const noexcept { return probs.cols; }
    std::span<const double> row(std::size_t i) const noexcept { return probs.row(i); }
};

struct ConfidenceVector {
    Scheme scheme = Scheme::inv_entropy;
    std::vector<double> values;
};

/// Row-wise softmax of temperature * scores, stabilized by subtracting the row max.
ProbMatrix softmax_rows(const Table& scores, double temperature, std::string source = {});
ProbMatrix softmax_rows(const ScoreMatrix& scores, double temperature);

/// Natural-log Shannon entropy with 0 log 0 = 0.
/// Throws on a negative entry or a row whose sum is more than 1e-6 away from 1.
double entropy(std::span<const double> p);

/// Per-row confidence for the max, inv_entropy and neg_exp_entropy schemes.
ConfidenceVector confidence(const ProbMatrix& p, Scheme scheme, double epsilon = 1e-6);

/// Per row: normalizes the weight tuple to sum 1 and returns the convex
/// combination of the input rows. weights[k][t] is the weight of input k on row t.
ProbMatrix fuse(std::span<const ProbMatrix> probs, std::span<const std::vector<double>> weights);

/// Three-input form with confidence vectors.
ProbMatrix fuse(const ProbMatrix& p1, const ProbMatrix& p2, const ProbMatrix& p3, const ConfidenceVector& w1,
                const ConfidenceVector& w2, const ConfidenceVector& w3);

/// Same constant weight tuple on every row.
ProbMatrix fuse_fixed(std::span<const ProbMatrix> probs, std::span<const double> weights);

struct FusionResult {
    std::vector<Method> methods;
    std::vector<ProbMatrix> calibrated;         // one per method, same order
    std::vector<std::vector<double>> weights;   // raw (unnormalized) weight per method per row
    ProbMatrix fused;
};

/// Calibrates every method's scores with its temperature, derives weights per
/// `config.scheme` and fuses. A single method fuses to itself.
FusionResult calibrate_and_fuse(std::span<const ScoreMatrix> scores, const FusionConfig& config);

/// Same as calibrate_and_fuse but starting from already calibrated matrices.
FusionResult fuse_calibrated(std::vector<Method> methods, std::vector<ProbMatrix> calibrated, const FusionConfig& config);

}  // namespace zsfuse
