#include "zsfuse/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "zsfuse/error.hpp"
#include "zsfuse/rng.hpp"

namespace zsfuse {

namespace {

void normalize_into(std::span<const double> v, std::vector<float>& out) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm < 1e-12) throw Error(ErrorKind::degenerate, "synthetic: drew a zero vector");
    for (double x : v) out.push_back(static_cast<float>(x / norm));
}

std::vector<double> random_direction(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double norm = std::sqrt(sq);
    for (double& x : v) x /= norm;
    return v;
}

// Appends `count` rows of normalize(prototype + sigma * N(0, I)).
void noisy_rows(Rng& rng, std::span<const double> proto, double sigma, std::size_t count, std::vector<float>& out) {
    std::vector<double> v(proto.size());
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t d = 0; d < proto.size(); ++d) v[d] = proto[d] + sigma * rng.normal();
        normalize_into(v, out);
    }
}

}  // namespace

void SyntheticParams::validate() const {
    if (n_classes < 2) throw Error(ErrorKind::usage, "synthetic: need at least 2 classes");
    if (samples_per_class < 1 || refs_per_class < 1) throw Error(ErrorKind::usage, "synthetic: counts must be >= 1");
    if (dim < 2) throw Error(ErrorKind::usage, "synthetic: dim must be >= 2");
    if (!(reference_noise_ratio >= 0.0) || !std::isfinite(reference_noise_ratio))
        throw Error(ErrorKind::usage, "synthetic: reference noise ratio must be >= 0");
    for (double s : noise) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw Error(ErrorKind::usage, "synthetic: noise must be >= 0");
    }
}

DatasetBundle generate_synthetic_bundle(const SyntheticParams& params) {
    params.validate();
    const std::size_t n = params.n_classes;
    const std::size_t dim = params.dim;

    std::vector<std::string> names;
    for (std::size_t c = 0; c < n; ++c) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "class_%02zu", c);
        names.emplace_back(buf);
    }

    DatasetBundle b;
    b.catalog = ClassCatalog::from_names(names);
    for (std::size_t c = 0; c < n; ++c) b.labels.insert(b.labels.end(), params.samples_per_class, c);

    Rng rng(params.seed);
    for (Method m : kAllMethods) {
        const std::string space = "m" + std::to_string(index_of(m) + 1);
        const double sigma = params.noise[index_of(m)];
        b.method_backbone[index_of(m)] = space;

        std::vector<std::vector<double>> protos;
        for (std::size_t c = 0; c < n; ++c) protos.push_back(random_direction(rng, dim));

        std::vector<float> test;
        test.reserve(n * params.samples_per_class * dim);
        for (std::size_t c = 0; c < n; ++c) noisy_rows(rng, protos[c], sigma, params.samples_per_class, test);
        b.test.emplace(space, EmbeddingMatrix(n * params.samples_per_class, dim, std::move(test), true));

        if (m == Method::text_image_clip) {
            std::vector<float> text;
            for (const auto& p : protos) normalize_into(p, text);
            b.text.emplace(n, dim, std::move(text), true);
            continue;
        }
        std::vector<float> refs;
        ReferenceManifest::ClassLists lists(n);
        for (std::size_t c = 0; c < n; ++c) {
            noisy_rows(rng, protos[c], sigma * params.reference_noise_ratio, params.refs_per_class, refs);
            for (std::size_t i = 0; i < params.refs_per_class; ++i) lists[c].push_back(c * params.refs_per_class + i);
        }
        b.references.emplace(space, EmbeddingMatrix(n * params.refs_per_class, dim, std::move(refs), true));
        b.reference_manifest.set(space, std::move(lists));
    }

    b.provenance = {{"generator", "zsfuse synth"},
                    {"classes", n},
                    {"samples_per_class", params.samples_per_class},
                    {"dim", dim},
                    {"noise", params.noise},
                    {"refs_per_class", params.refs_per_class},
                    {"reference_noise_ratio", params.reference_noise_ratio},
                    {"seed", params.seed}};
    return b;
}

}  // namespace zsfuse
