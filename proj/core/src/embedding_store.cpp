#include "zsfuse/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include <zlib.h>

#include "zsfuse/error.hpp"

namespace zsfuse {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'Z', 'S', 'E', 'B'};

double row_norm(std::span<const float> row) {
    double sum = 0.0;
    for (float v : row) sum += static_cast<double>(v) * v;
    return std::sqrt(sum);
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[offset + i]) << (8 * i);
    return value;
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks for very large payloads.
    constexpr std::size_t kChunk = std::size_t{1} << 30;
    for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
        const auto len = static_cast<uInt>(std::min(kChunk, bytes.size() - off));
        crc = ::crc32(crc, bytes.data() + off, len);
    }
    return static_cast<std::uint32_t>(crc);
}

struct Header {
    std::uint16_t flags;
    std::uint64_t rows;
    std::uint32_t cols;
};

std::vector<std::uint8_t> begin_file(std::uint16_t flags, std::uint64_t rows, std::uint32_t cols, std::size_t payload) {
    std::vector<std::uint8_t> out;
    out.reserve(kZsebHeaderSize + payload + 4);
    for (std::uint8_t b : kMagic) out.push_back(b);
    put_le<std::uint16_t>(out, kZsebVersion);
    put_le<std::uint16_t>(out, flags);
    put_le<std::uint64_t>(out, rows);
    put_le<std::uint32_t>(out, cols);
    return out;
}

void finish_file(std::vector<std::uint8_t>& out) { put_le<std::uint32_t>(out, crc32_of(out)); }

// Validates framing and checksum; returns the header.
Header open_file(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        if (bytes.size() < 4) throw Error(ErrorKind::corruption, "ZSEB: file truncated before magic");
        throw Error(ErrorKind::format, "ZSEB: bad magic bytes");
    }
    if (bytes.size() < kZsebHeaderSize + 4) throw Error(ErrorKind::corruption, "ZSEB: file truncated in header");

    const auto stored_crc = get_le<std::uint32_t>(bytes, bytes.size() - 4);
    if (crc32_of(bytes.first(bytes.size() - 4)) != stored_crc)
        throw Error(ErrorKind::corruption, "ZSEB: CRC-32 mismatch");

    const auto version = get_le<std::uint16_t>(bytes, 4);
    if (version != kZsebVersion)
        throw Error(ErrorKind::format, "ZSEB: unsupported version " + std::to_string(version));
    Header h{get_le<std::uint16_t>(bytes, 6), get_le<std::uint64_t>(bytes, 8), get_le<std::uint32_t>(bytes, 16)};
    if ((h.flags & ~(kZsebFlagNormalized | kZsebFlagFloat64)) != 0)
        throw Error(ErrorKind::format, "ZSEB: unknown flag bits " + std::to_string(h.flags));
    if (h.rows == 0 || h.cols == 0) throw Error(ErrorKind::validation, "ZSEB: empty matrix shape");

    const std::size_t elem = (h.flags & kZsebFlagFloat64) ? 8 : 4;
    const std::uint64_t max_elems = (std::numeric_limits<std::uint64_t>::max() / elem) / h.cols;
    if (h.rows > max_elems) throw Error(ErrorKind::corruption, "ZSEB: shape overflows");
    const std::uint64_t expected = kZsebHeaderSize + h.rows * h.cols * elem + 4;
    if (expected != bytes.size())
        throw Error(ErrorKind::corruption, "ZSEB: size " + std::to_string(bytes.size()) + " does not match shape (" +
                                               std::to_string(expected) + " expected)");
    return h;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorKind::io, "read failed: " + path.string());
    return bytes;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, "write failed: " + path.string());
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data, bool normalized)
    : rows_(rows), dim_(dim), data_(std::move(data)), normalized_(normalized) {
    if (rows_ == 0 || dim_ == 0) throw Error(ErrorKind::validation, "embedding matrix needs rows >= 1 and dim >= 1");
    if (data_.size() / dim_ != rows_ || data_.size() % dim_ != 0)
        throw Error(ErrorKind::validation, "embedding data length " + std::to_string(data_.size()) +
                                               " != rows x dim (" + std::to_string(rows_) + " x " +
                                               std::to_string(dim_) + ")");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i]))
            throw Error(ErrorKind::validation, "non-finite entry at row " + std::to_string(i / dim_) + ", column " +
                                                   std::to_string(i % dim_));
    }
    if (normalized_) {
        for (std::size_t r = 0; r < rows_; ++r) {
            const double n = row_norm(row(r));
            if (std::abs(n - 1.0) > kNormTolerance)
                throw Error(ErrorKind::validation, "row " + std::to_string(r) + " flagged normalized has norm " +
                                                       std::to_string(n));
        }
    }
}

std::vector<std::uint8_t> encode_matrix(const EmbeddingMatrix& m) {
    const std::uint16_t flags = m.normalized() ? kZsebFlagNormalized : 0;
    auto out = begin_file(flags, m.rows(), static_cast<std::uint32_t>(m.dim()), m.data().size() * 4);
    for (float v : m.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    finish_file(out);
    return out;
}

EmbeddingMatrix decode_matrix(std::span<const std::uint8_t> bytes) {
    const Header h = open_file(bytes);
    if (h.flags & kZsebFlagFloat64) throw Error(ErrorKind::format, "ZSEB: expected float32 embeddings, found float64");
    std::vector<float> data(h.rows * h.cols);
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, kZsebHeaderSize + 4 * i));
    return EmbeddingMatrix(h.rows, h.cols, std::move(data), (h.flags & kZsebFlagNormalized) != 0);
}

void write_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    if (m.dim() > std::numeric_limits<std::uint32_t>::max())
        throw Error(ErrorKind::validation, "dimension exceeds 32-bit field");
    write_bytes(path, encode_matrix(m));
}

EmbeddingMatrix read_matrix(const std::filesystem::path& path) {
    try {
        return decode_matrix(read_bytes(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

void write_table(const Table& t, const std::filesystem::path& path) {
    if (t.rows == 0 || t.cols == 0 || t.values.size() != t.rows * t.cols)
        throw Error(ErrorKind::validation, "table shape does not match its data");
    for (double v : t.values) {
        if (!std::isfinite(v)) throw Error(ErrorKind::validation, "table contains a non-finite value");
    }
    auto out = begin_file(kZsebFlagFloat64, t.rows, static_cast<std::uint32_t>(t.cols), t.values.size() * 8);
    for (double v : t.values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    finish_file(out);
    write_bytes(path, out);
}

Table read_table(const std::filesystem::path& path) {
    try {
        const auto bytes = read_bytes(path);
        const Header h = open_file(bytes);
        if (!(h.flags & kZsebFlagFloat64)) throw Error(ErrorKind::format, "ZSEB: expected a float64 table");
        Table t{h.rows, h.cols, std::vector<double>(h.rows * h.cols)};
        for (std::size_t i = 0; i < t.values.size(); ++i) {
            t.values[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, kZsebHeaderSize + 8 * i));
            if (!std::isfinite(t.values[i])) throw Error(ErrorKind::validation, "table contains a non-finite value");
        }
        return t;
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

EmbeddingMatrix l2_normalize_rows(const EmbeddingMatrix& m) {
    std::vector<float> out(m.data().begin(), m.data().end());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double n = row_norm(m.row(r));
        if (n < 1e-12) throw Error(ErrorKind::degenerate, "row " + std::to_string(r) + " has near-zero norm");
        for (std::size_t c = 0; c < m.dim(); ++c) {
            auto& v = out[r * m.dim() + c];
            v = static_cast<float>(static_cast<double>(v) / n);
        }
    }
    return EmbeddingMatrix(m.rows(), m.dim(), std::move(out), true);
}

}  // namespace zsfuse
