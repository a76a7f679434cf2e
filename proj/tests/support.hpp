#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "zsfuse/embedding_store.hpp"

namespace zsfuse::testing {

// Unique scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 gen(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("zsfuse_test_" + std::to_string(gen()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline EmbeddingMatrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t dim) {
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::vector<float> data(rows * dim);
    for (auto& v : data) v = dist(gen);
    return EmbeddingMatrix(rows, dim, std::move(data));
}

// Textbook cosine in long double, independent of the library's float64 path.
inline double cosine_oracle(std::span<const float> a, std::span<const float> b) {
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        na += static_cast<long double>(a[i]) * a[i];
        nb += static_cast<long double>(b[i]) * b[i];
    }
    return static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
}

// Mann-Whitney statistic by enumerating every (positive, negative) pair.
inline double auroc_pair_count(std::span<const double> pos, std::span<const double> neg) {
    double wins = 0.0;
    for (double p : pos)
        for (double q : neg) wins += p > q ? 1.0 : (p == q ? 0.5 : 0.0);
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

}  // namespace zsfuse::testing
