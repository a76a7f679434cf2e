#pragma once

#include <array>
#include <cstdint>

#include "zsfuse/bundle.hpp"

namespace zsfuse {

struct SyntheticParams {
    std::size_t n_classes = 10;
    std::size_t samples_per_class = 50;
    std::size_t dim = 64;
    /// Per-component Gaussian noise scale for each method's embedding space,
    /// indexed by Method.
    std::array<double, 3> noise = {0.6, 0.9, 0.5};
    std::size_t refs_per_class = 3;
    /// Reference noise scale as a multiple of the method's noise. Keeps the
    /// image-image methods ranked by their nominal noise instead of being
    /// dominated by reference noise.
    double reference_noise_ratio = 0.25;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Builds a bundle with one embedding space per method (backbones "m1", "m2",
/// "m3"). In each space, unit-norm class prototypes are drawn; test rows are
/// normalize(prototype + sigma * N(0, I)); "m1" carries the prototypes as text
/// embeddings; "m2" and "m3" carry references drawn the same way with
/// sigma * reference_noise_ratio. Classes are named class_00, class_01, ...; labels are class-major.
DatasetBundle generate_synthetic_bundle(const SyntheticParams& params);

}  // namespace zsfuse
