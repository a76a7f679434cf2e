#include "zsfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "parallel.hpp"
#include "zsfuse/error.hpp"

namespace zsfuse {

std::string_view to_string(Scheme s) noexcept {
    switch (s) {
        case Scheme::max: return "max";
        case Scheme::inv_entropy: return "inv_entropy";
        case Scheme::neg_exp_entropy: return "neg_exp_entropy";
        case Scheme::fixed: return "fixed";
    }
    return "unknown";
}

std::optional<Scheme> parse_scheme(std::string_view s) noexcept {
    for (Scheme k : {Scheme::max, Scheme::inv_entropy, Scheme::neg_exp_entropy, Scheme::fixed}) {
        if (s == to_string(k)) return k;
    }
    return std::nullopt;
}

void FusionConfig::validate() const {
    for (double t : temperatures) {
        if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorKind::usage, "temperatures must be positive and finite");
    }
    if (!(epsilon > 0.0)) throw Error(ErrorKind::usage, "epsilon must be positive");
    if (scheme == Scheme::fixed) {
        double sum = 0.0;
        for (double w : fixed_weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::usage, "fixed weights must be non-negative");
            sum += w;
        }
        if (!(sum > 0.0)) throw Error(ErrorKind::usage, "fixed weights must have a positive sum");
    }
}

ProbMatrix softmax_rows(const Table& scores, double temperature, std::string source) {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw Error(ErrorKind::usage, "softmax temperature must be positive, got " + std::to_string(temperature));
    ProbMatrix out{std::move(source), temperature, Table{scores.rows, scores.cols, std::vector<double>(scores.values.size())}};
    detail::parallel_rows(scores.rows, [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            const auto in = scores.row(t);
            auto row = out.probs.row(t);
            const double c = temperature * *std::max_element(in.begin(), in.end());
            double sum = 0.0;
            for (std::size_t n = 0; n < in.size(); ++n) {
                row[n] = std::exp(temperature * in[n] - c);
                sum += row[n];
            }
            for (double& v : row) v /= sum;
        }
    });
    return out;
}

ProbMatrix softmax_rows(const ScoreMatrix& scores, double temperature) {
    return softmax_rows(scores.scores, temperature, std::string(to_string(scores.method)));
}

double entropy(std::span<const double> p) {
    double sum = 0.0;
    double h = 0.0;
    for (double v : p) {
        if (v < 0.0 || !std::isfinite(v)) throw Error(ErrorKind::validation, "entropy: negative or non-finite probability");
        sum += v;
        if (v > 0.0) h -= v * std::log(v);
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw Error(ErrorKind::validation, "entropy: row sums to " + std::to_string(sum) + ", not 1");
    return std::max(h, 0.0);
}

ConfidenceVector confidence(const ProbMatrix& p, Scheme scheme, double epsilon) {
    if (scheme == Scheme::fixed) throw Error(ErrorKind::usage, "confidence: fixed weights are not derived from probabilities");
    ConfidenceVector out{scheme, std::vector<double>(p.rows())};
    for (std::size_t t = 0; t < p.rows(); ++t) {
        const auto row = p.row(t);
        switch (scheme) {
            case Scheme::max: out.values[t] = *std::max_element(row.begin(), row.end()); break;
            case Scheme::inv_entropy: out.values[t] = 1.0 / (entropy(row) + epsilon); break;
            case Scheme::neg_exp_entropy: out.values[t] = std::exp(-entropy(row)); break;
            case Scheme::fixed: break;
        }
    }
    return out;
}

ProbMatrix fuse(std::span<const ProbMatrix> probs, std::span<const std::vector<double>> weights) {
    if (probs.empty()) throw Error(ErrorKind::usage, "fuse: no inputs");
    if (weights.size() != probs.size()) throw Error(ErrorKind::usage, "fuse: one weight vector per input required");
    const std::size_t rows = probs[0].rows();
    const std::size_t cols = probs[0].cols();
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k].rows() != rows || probs[k].cols() != cols)
            throw Error(ErrorKind::validation, "fuse: input shapes differ");
        if (weights[k].size() != rows) throw Error(ErrorKind::validation, "fuse: weight vector length != rows");
    }

    ProbMatrix out{"fused", 0.0, Table{rows, cols, std::vector<double>(rows * cols, 0.0)}};
    std::vector<double> w(probs.size());
    for (std::size_t t = 0; t < rows; ++t) {
        double total = 0.0;
        for (std::size_t k = 0; k < probs.size(); ++k) {
            w[k] = weights[k][t];
            if (!(w[k] >= 0.0) || !std::isfinite(w[k]))
                throw Error(ErrorKind::validation, "fuse: negative or non-finite weight on row " + std::to_string(t));
            total += w[k];
        }
        if (!(total > 0.0)) throw Error(ErrorKind::degenerate, "fuse: all weights are zero on row " + std::to_string(t));
        auto row = out.probs.row(t);
        for (std::size_t k = 0; k < probs.size(); ++k) {
            const double share = w[k] / total;
            const auto in = probs[k].row(t);
            for (std::size_t n = 0; n < cols; ++n) row[n] += share * in[n];
        }
    }
    return out;
}

ProbMatrix fuse(const ProbMatrix& p1, const ProbMatrix& p2, const ProbMatrix& p3, const ConfidenceVector& w1,
                const ConfidenceVector& w2, const ConfidenceVector& w3) {
    const ProbMatrix probs[] = {p1, p2, p3};
    const std::vector<double> weights[] = {w1.values, w2.values, w3.values};
    return fuse(probs, weights);
}

ProbMatrix fuse_fixed(std::span<const ProbMatrix> probs, std::span<const double> weights) {
    if (probs.empty()) throw Error(ErrorKind::usage, "fuse: no inputs");
    if (weights.size() != probs.size()) throw Error(ErrorKind::usage, "fuse: one weight per input required");
    std::vector<std::vector<double>> per_row;
    for (double w : weights) per_row.emplace_back(probs[0].rows(), w);
    return fuse(probs, per_row);
}

FusionResult fuse_calibrated(std::vector<Method> methods, std::vector<ProbMatrix> calibrated, const FusionConfig& config) {
    config.validate();
    if (methods.empty() || methods.size() != calibrated.size())
        throw Error(ErrorKind::usage, "fusion needs one calibrated matrix per method");
    FusionResult r;
    r.methods = std::move(methods);
    r.calibrated = std::move(calibrated);
    for (std::size_t k = 0; k < r.methods.size(); ++k) {
        if (config.scheme == Scheme::fixed)
            r.weights.emplace_back(r.calibrated[k].rows(), config.fixed_weights[index_of(r.methods[k])]);
        else
            r.weights.push_back(confidence(r.calibrated[k], config.scheme, config.epsilon).values);
    }
    r.fused = fuse(r.calibrated, r.weights);
    return r;
}

FusionResult calibrate_and_fuse(std::span<const ScoreMatrix> scores, const FusionConfig& config) {
    config.validate();
    std::vector<Method> methods;
    std::vector<ProbMatrix> calibrated;
    for (const auto& s : scores) {
        methods.push_back(s.method);
        calibrated.push_back(softmax_rows(s, config.temperatures[index_of(s.method)]));
    }
    return fuse_calibrated(std::move(methods), std::move(calibrated), config);
}

}  // namespace zsfuse
