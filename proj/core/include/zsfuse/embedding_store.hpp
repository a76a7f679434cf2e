#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace zsfuse {

/// Dense row-major float32 matrix of feature vectors produced by one backbone
/// for one item set (test images, class prompts or reference images).
///
/// Construction validates the invariants: rows >= 1, dim >= 1,
/// data.size() == rows * dim, all entries finite, and, when `normalized` is
/// set, every row has unit L2 norm within kNormTolerance.
class EmbeddingMatrix {
public:
    static constexpr double kNormTolerance = 1e-5;

    EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data, bool normalized = false);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }
    bool normalized() const noexcept { return normalized_; }
    std::span<const float> data() const noexcept { return data_; }
    std::span<const float> row(std::size_t i) const noexcept { return {data_.data() + i * dim_, dim_}; }

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

private:
    std::size_t rows_;
    std::size_t dim_;
    std::vector<float> data_;
    bool normalized_;
};

// ZSEB container layout, all integers little-endian:
//
//   offset  size  field
//   0       4     magic "ZSEB"
//   4       2     version (1)
//   6       2     flags: bit 0 normalized rows, bit 1 float64 elements
//   8       8     rows
//   16      4     columns
//   20      r*c*e elements, row-major (e = 4 for float32, 8 for float64)
//   end-4   4     CRC-32 (IEEE) over every preceding byte
//
// Embeddings are always float32. The float64 variant carries intermediate
// score and probability tables between pipeline stages.
inline constexpr std::uint16_t kZsebVersion = 1;
inline constexpr std::uint16_t kZsebFlagNormalized = 0x1;
inline constexpr std::uint16_t kZsebFlagFloat64 = 0x2;
inline constexpr std::size_t kZsebHeaderSize = 20;

void write_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix read_matrix(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_matrix(const EmbeddingMatrix& m);
EmbeddingMatrix decode_matrix(std::span<const std::uint8_t> bytes);

/// Row-major float64 table; the on-disk form of score and probability matrices.
struct Table {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    std::span<const double> row(std::size_t i) const noexcept { return {values.data() + i * cols, cols}; }
    std::span<double> row(std::size_t i) noexcept { return {values.data() + i * cols, cols}; }

    friend bool operator==(const Table&, const Table&) = default;
};

void write_table(const Table& t, const std::filesystem::path& path);
Table read_table(const std::filesystem::path& path);

/// Returns a copy with unit-norm rows and the normalized flag set.
/// Throws ErrorKind::degenerate naming the first row whose norm is below 1e-12.
EmbeddingMatrix l2_normalize_rows(const EmbeddingMatrix& m);

}  // namespace zsfuse
