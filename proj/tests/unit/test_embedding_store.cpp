#include <fstream>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "zsfuse/embedding_store.hpp"
#include "zsfuse/error.hpp"

using namespace zsfuse;
using zsfuse::testing::TempDir;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected zsfuse::Error");
    return ErrorKind::usage;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_SUITE("embedding_store") {
    TEST_CASE("matrix invariants are enforced at construction") {
        CHECK_NOTHROW(EmbeddingMatrix(1, 3, {1, 0, 0}, true));
        CHECK(kind_of([] { EmbeddingMatrix(0, 3, {}); }) == ErrorKind::validation);
        CHECK(kind_of([] { EmbeddingMatrix(2, 3, {1, 2, 3}); }) == ErrorKind::validation);
        CHECK(kind_of([] { EmbeddingMatrix(1, 2, {3, 4}, true); }) == ErrorKind::validation);
        CHECK(kind_of([] { EmbeddingMatrix(1, 2, {std::numeric_limits<float>::quiet_NaN(), 1}); }) ==
              ErrorKind::validation);
        CHECK(kind_of([] { EmbeddingMatrix(1, 2, {std::numeric_limits<float>::infinity(), 1}); }) ==
              ErrorKind::validation);
    }

    TEST_CASE("1x3 normalized matrix is 36 bytes with the documented header") {
        TempDir dir;
        write_matrix(EmbeddingMatrix(1, 3, {1, 0, 0}, true), dir / "m.zseb");
        const auto bytes = slurp(dir / "m.zseb");
        // 4 magic + 2 version + 2 flags + 8 rows + 4 dim + 12 payload + 4 crc
        REQUIRE(bytes.size() == 36);
        CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "ZSEB");
        CHECK(bytes[4] == 1);
        CHECK(bytes[5] == 0);
        CHECK(bytes[6] == kZsebFlagNormalized);
        CHECK(bytes[8] == 1);
        CHECK(bytes[16] == 3);
        // 1.0f little-endian
        CHECK(bytes[20] == 0x00);
        CHECK(bytes[23] == 0x3f);
    }

    TEST_CASE("roundtrip preserves data bit for bit") {
        TempDir dir;
        const EmbeddingMatrix m(2, 3, {0.1f, -2.5f, 3e-20f, 1e30f, -0.0f, 7.0f});
        write_matrix(m, dir / "m.zseb");
        const auto back = read_matrix(dir / "m.zseb");
        CHECK(back == m);
        CHECK(std::signbit(back.data()[4]));
    }

    TEST_CASE("reader rejects malformed files") {
        TempDir dir;
        write_matrix(EmbeddingMatrix(2, 2, {1, 2, 3, 4}), dir / "m.zseb");
        const auto good = slurp(dir / "m.zseb");

        SUBCASE("truncated") {
            dump(dir / "t.zseb", {good.begin(), good.end() - 5});
            CHECK(kind_of([&] { read_matrix(dir / "t.zseb"); }) == ErrorKind::corruption);
            dump(dir / "t.zseb", {good.begin(), good.begin() + 2});
            CHECK(kind_of([&] { read_matrix(dir / "t.zseb"); }) == ErrorKind::corruption);
        }
        SUBCASE("bad magic") {
            auto bad = good;
            bad[0] = 'X';
            dump(dir / "b.zseb", bad);
            CHECK(kind_of([&] { read_matrix(dir / "b.zseb"); }) == ErrorKind::format);
        }
        SUBCASE("payload bit flip") {
            auto bad = good;
            bad[25] ^= 0x10;
            dump(dir / "b.zseb", bad);
            CHECK(kind_of([&] { read_matrix(dir / "b.zseb"); }) == ErrorKind::corruption);
        }
        SUBCASE("missing file") {
            CHECK(kind_of([&] { read_matrix(dir / "nope.zseb"); }) == ErrorKind::io);
        }
    }

    TEST_CASE("normalized flag is re-checked on load") {
        // A writer that lies about normalization: [3, 4] with flag set and a valid CRC.
        TempDir dir;
        write_matrix(EmbeddingMatrix(1, 2, {0.6f, 0.8f}, true), dir / "ok.zseb");
        auto bytes = encode_matrix(EmbeddingMatrix(1, 2, {3, 4}, false));
        bytes[6] = kZsebFlagNormalized;
        // Re-seal with a bitwise reference CRC-32 so only the norm check can object.
        bytes.resize(bytes.size() - 4);
        std::uint32_t crc = 0xFFFFFFFFu;
        for (std::uint8_t b : bytes) {
            crc ^= b;
            for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
        }
        crc ^= 0xFFFFFFFFu;
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
        dump(dir / "lie.zseb", bytes);
        CHECK(kind_of([&] { read_matrix(dir / "lie.zseb"); }) == ErrorKind::validation);
        CHECK_NOTHROW(read_matrix(dir / "ok.zseb"));
    }

    TEST_CASE("float64 tables roundtrip exactly and are distinct from embeddings") {
        TempDir dir;
        Table t{2, 2, {1.0 / 3.0, 2.0 / 3.0, 1e-300, 1.0 - 1e-300}};
        write_table(t, dir / "t.zseb");
        CHECK(read_table(dir / "t.zseb") == t);
        // A float64 table is not an embedding matrix and vice versa.
        CHECK(kind_of([&] { read_matrix(dir / "t.zseb"); }) == ErrorKind::format);
        write_matrix(EmbeddingMatrix(1, 1, {1}), dir / "m.zseb");
        CHECK(kind_of([&] { read_table(dir / "m.zseb"); }) == ErrorKind::format);
        CHECK(kind_of([&] { write_table(Table{1, 1, {std::nan("")}}, dir / "n.zseb"); }) == ErrorKind::validation);
        CHECK_FALSE(std::filesystem::exists(dir / "n.zseb"));
    }

    TEST_CASE("l2_normalize_rows") {
        const auto n = l2_normalize_rows(EmbeddingMatrix(1, 2, {3, 4}));
        CHECK(n.normalized());
        CHECK(n.data()[0] == doctest::Approx(0.6).epsilon(1e-7));
        CHECK(n.data()[1] == doctest::Approx(0.8).epsilon(1e-7));

        const EmbeddingMatrix unit(1, 3, {0, 1, 0}, true);
        CHECK(l2_normalize_rows(unit).data()[1] == 1.0f);

        try {
            l2_normalize_rows(EmbeddingMatrix(2, 2, {1, 0, 0, 0}));
            FAIL("expected degenerate-row error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::degenerate);
            CHECK(std::string(e.what()).find("row 1") != std::string::npos);
        }
    }

    TEST_CASE("l2_normalize_rows is idempotent within 1e-7") {
        std::mt19937_64 gen(11);
        for (int trial = 0; trial < 50; ++trial) {
            const auto once = l2_normalize_rows(zsfuse::testing::random_matrix(gen, 1 + gen() % 8, 1 + gen() % 32));
            const auto twice = l2_normalize_rows(once);
            for (std::size_t i = 0; i < once.data().size(); ++i)
                CHECK(std::abs(once.data()[i] - twice.data()[i]) <= 1e-7);
        }
    }
}
