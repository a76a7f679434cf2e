#pragma once

#include <span>
#include <vector>

#include "zsfuse/bundle.hpp"
#include "zsfuse/embedding_store.hpp"
#include "zsfuse/method.hpp"

namespace zsfuse {

/// T x N raw cosine scores for one method, columns in catalog order.
struct ScoreMatrix {
    Method method = Method::text_image_clip;
    Table scores;

    std::size_t rows() const noexcept { return scores.rows; }
    std::size_t cols() const noexcept { return scores.cols; }
};

/// dot(a, b) / (|a| |b|) accumulated in float64 and clamped to [-1, 1].
/// Throws on dimension mismatch or a vector with norm below 1e-12.
double cosine(std::span<const float> a, std::span<const float> b);

/// Pairwise (cascade) summation in float64, in input order.
double pairwise_sum(std::span<const double> values) noexcept;

/// Entry (t, n) = cosine(test row t, text row n).
ScoreMatrix score_text_image(const EmbeddingMatrix& test, const EmbeddingMatrix& text);

/// Entry (t, n) = mean over class n's references of cosine(test row t, ref).
/// `per_class` lists, for every catalog class, row indices into `refs`.
ScoreMatrix score_image_image(const EmbeddingMatrix& test, const EmbeddingMatrix& refs,
                              const ReferenceManifest::ClassLists& per_class, Method tag,
                              const ClassCatalog* catalog = nullptr);

/// Scores one method against a validated bundle.
ScoreMatrix score_method(const DatasetBundle& bundle, Method m);

}  // namespace zsfuse
