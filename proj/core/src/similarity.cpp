#include "zsfuse/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "parallel.hpp"
#include "zsfuse/error.hpp"

namespace zsfuse {

namespace {

constexpr double kMinNorm = 1e-12;

// Four interleaved float64 accumulators combined in a fixed order: the
// summation order depends only on the length, so results are reproducible.
double dot(std::span<const float> a, std::span<const float> b) noexcept {
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n = a.size(), body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4)
        for (std::size_t k = 0; k < 4; ++k) s[k] += static_cast<double>(a[i + k]) * static_cast<double>(b[i + k]);
    for (std::size_t i = body; i < n; ++i) s[i - body] += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return (s[0] + s[1]) + (s[2] + s[3]);
}

std::vector<double> row_norms(const EmbeddingMatrix& m, const char* what) {
    std::vector<double> norms(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        norms[r] = std::sqrt(dot(m.row(r), m.row(r)));
        if (norms[r] < kMinNorm)
            throw Error(ErrorKind::degenerate, std::string(what) + " row " + std::to_string(r) + " has near-zero norm");
    }
    return norms;
}

double clamp_unit(double v) noexcept { return std::clamp(v, -1.0, 1.0); }

}  // namespace

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw Error(ErrorKind::validation, "cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                               std::to_string(b.size()) + ")");
    const double na = std::sqrt(dot(a, a));
    const double nb = std::sqrt(dot(b, b));
    if (na < kMinNorm || nb < kMinNorm) throw Error(ErrorKind::degenerate, "cosine: zero vector");
    return clamp_unit(dot(a, b) / (na * nb));
}

double pairwise_sum(std::span<const double> values) noexcept {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

ScoreMatrix score_text_image(const EmbeddingMatrix& test, const EmbeddingMatrix& text) {
    if (test.dim() != text.dim())
        throw Error(ErrorKind::validation, "score_text_image: test dim " + std::to_string(test.dim()) +
                                               " != text dim " + std::to_string(text.dim()));
    const auto test_norms = row_norms(test, "test");
    const auto text_norms = row_norms(text, "text");

    ScoreMatrix out{Method::text_image_clip, Table{test.rows(), text.rows(), std::vector<double>(test.rows() * text.rows())}};
    detail::parallel_rows(test.rows(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            auto row = out.scores.row(t);
            for (std::size_t n = 0; n < text.rows(); ++n)
                row[n] = clamp_unit(dot(test.row(t), text.row(n)) / (test_norms[t] * text_norms[n]));
        }
    });
    return out;
}

ScoreMatrix score_image_image(const EmbeddingMatrix& test, const EmbeddingMatrix& refs,
                              const ReferenceManifest::ClassLists& per_class, Method tag, const ClassCatalog* catalog) {
    if (test.dim() != refs.dim())
        throw Error(ErrorKind::validation, "score_image_image: test dim " + std::to_string(test.dim()) +
                                               " != reference dim " + std::to_string(refs.dim()));
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        if (per_class[c].empty()) {
            const std::string name = catalog ? (*catalog)[c].name : "#" + std::to_string(c);
            throw Error(ErrorKind::config, "class '" + name + "' has no reference images");
        }
        for (std::size_t idx : per_class[c]) {
            if (idx >= refs.rows())
                throw Error(ErrorKind::validation, "reference index " + std::to_string(idx) + " out of range");
        }
    }
    const auto test_norms = row_norms(test, "test");
    const auto ref_norms = row_norms(refs, "reference");

    std::size_t max_refs = 0;
    for (const auto& l : per_class) max_refs = std::max(max_refs, l.size());

    ScoreMatrix out{tag, Table{test.rows(), per_class.size(), std::vector<double>(test.rows() * per_class.size())}};
    detail::parallel_rows(test.rows(), [&](std::size_t begin, std::size_t end) {
        std::vector<double> cosines(max_refs);
        for (std::size_t t = begin; t < end; ++t) {
            auto row = out.scores.row(t);
            for (std::size_t c = 0; c < per_class.size(); ++c) {
                const auto& refs_of_class = per_class[c];
                for (std::size_t i = 0; i < refs_of_class.size(); ++i) {
                    const std::size_t r = refs_of_class[i];
                    cosines[i] = clamp_unit(dot(test.row(t), refs.row(r)) / (test_norms[t] * ref_norms[r]));
                }
                row[c] = pairwise_sum(std::span<const double>(cosines).first(refs_of_class.size())) /
                         static_cast<double>(refs_of_class.size());
            }
        }
    });
    return out;
}

ScoreMatrix score_method(const DatasetBundle& bundle, Method m) {
    const Method one[] = {m};
    bundle.validate(one);
    const auto& bb = bundle.backbone(m);
    const auto& test = bundle.test.find(bb)->second;
    if (m == Method::text_image_clip) return score_text_image(test, *bundle.text);
    return score_image_image(test, bundle.references.find(bb)->second, bundle.reference_manifest.lists(bb), m,
                             &bundle.catalog);
}

}  // namespace zsfuse
