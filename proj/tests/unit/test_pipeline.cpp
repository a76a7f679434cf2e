#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "zsfuse/error.hpp"
#include "zsfuse/pipeline.hpp"
#include "zsfuse/synthetic.hpp"

using namespace zsfuse;
using zsfuse::testing::TempDir;

namespace {

const std::filesystem::path kGolden = std::filesystem::path(ZSFUSE_FIXTURE_DIR) / "golden";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PipelineConfig parse(const std::string& text) {
    return PipelineConfig::from_json(nlohmann::json::parse(text), kGolden);
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected zsfuse::Error");
    return ErrorKind::io;
}

}  // namespace

TEST_SUITE("pipeline") {
    TEST_CASE("fixture bundle reproduces the golden report byte for byte") {
        const auto cfg = PipelineConfig::load(kGolden / "config.json");
        const auto first = format_report(run_pipeline(cfg), ReportFormat::json);
        const auto second = format_report(run_pipeline(cfg), ReportFormat::json);
        CHECK(first == second);
        CHECK(first == slurp(kGolden / "golden_report.json"));
    }

    TEST_CASE("stages run separately equal the one-shot pipeline") {
        TempDir dir;
        const auto cfg = PipelineConfig::load(kGolden / "config.json");
        const auto bundle = load_bundle(cfg.bundle);

        write_scores(dir / "scores", score_stage(bundle, cfg.methods), bundle.catalog);
        const auto scores = read_scores(dir / "scores", cfg.methods, bundle.catalog);
        write_fusion(dir / "fusion", calibrate_and_fuse(scores, cfg.fusion), bundle.catalog);
        const auto fusion = read_fusion(dir / "fusion", cfg.methods, bundle.catalog);
        const auto staged = evaluate_stage(bundle, resolve_split(cfg, bundle.catalog), fusion, cfg);

        CHECK(staged == run_pipeline(bundle, cfg));
        CHECK(format_report(staged, ReportFormat::json) == slurp(kGolden / "golden_report.json"));
    }

    TEST_CASE("intermediate sidecars guard against mismatched catalogs") {
        TempDir dir;
        const auto cfg = PipelineConfig::load(kGolden / "config.json");
        const auto bundle = load_bundle(cfg.bundle);
        write_scores(dir.path(), score_stage(bundle, cfg.methods), bundle.catalog);
        const auto other = ClassCatalog::from_names({"a", "b"});
        CHECK(kind_of([&] { read_scores(dir.path(), cfg.methods, other); }) == ErrorKind::validation);
    }

    TEST_CASE("a single-method subset fuses to that method") {
        auto cfg = parse(R"({"bundle": "bundle/bundle.json", "methods": ["M1"], "split": {"m": 6, "seed": 7}})");
        const auto r = run_pipeline(cfg);
        REQUIRE(r.results.size() == 2);
        auto fused = r.results[1];
        fused.method = r.results[0].method;
        CHECK(fused == r.results[0]);
        CHECK(r.config.references_per_class.empty());
    }

    TEST_CASE("fixed-weight baselines run as configs") {
        const auto r111 = run_pipeline(PipelineConfig::load(kGolden / "config_111.json"));
        const auto r334 = run_pipeline(PipelineConfig::load(kGolden / "config_334.json"));
        CHECK(r111.config.scheme == "fixed");
        CHECK(r334.config.fixed_weights == std::array<double, 3>{3, 3, 4});
        CHECK(r111.results.back().method == "fused");
        CHECK(r334.results.back().method == "fused");
    }

    TEST_CASE("split sources") {
        TempDir dir;
        const auto bundle = load_bundle(kGolden / "bundle" / "bundle.json");
        const auto split = split_catalog(bundle.catalog, 6, 7, "synthetic");
        std::ofstream(dir / "split.json") << split_to_json(split).dump();
        auto cfg = parse(R"({"bundle": "bundle/bundle.json", "split": {"mode": "file", "path": ")" +
                         (dir / "split.json").string() + R"("}})");
        CHECK(resolve_split(cfg, bundle.catalog) == split);
        CHECK(format_report(run_pipeline(bundle, cfg), ReportFormat::json) == slurp(kGolden / "golden_report.json"));

        // Catalog tags: every fixture class is tagged closed, so there is no open set.
        cfg = parse(R"({"bundle": "bundle/bundle.json", "split": {"mode": "catalog"}})");
        CHECK(kind_of([&] { resolve_split(cfg, bundle.catalog); }) == ErrorKind::validation);
    }

    TEST_CASE("full label space evaluates all N columns") {
        const auto cfg = parse(R"({"bundle": "bundle/bundle.json", "label_space": "full", "split": {"m": 6, "seed": 7}})");
        const auto r = run_pipeline(cfg);
        CHECK(r.config.label_space == "full");
        for (const auto& m : r.results) CHECK(m.eligible == r.samples);
    }

    TEST_CASE("config schema violations are usage errors") {
        const char* bad[] = {
            R"({"bundle": "bundle/bundle.json", "split": {"m": 6}, "colour": 1})",
            R"({"bundle": "bundle/bundle.json", "split": {"m": 6}, "methods": []})",
            R"({"bundle": "bundle/bundle.json", "split": {"m": 6}, "methods": ["M4"]})",
            R"({"bundle": "bundle/bundle.json", "split": {"m": 6}, "methods": ["M1", "text_image_clip"]})",
            R"({"bundle": "bundle/bundle.json", "split": {"m": 6}, "fusion": {"scheme": "median"}})",
            R"({"bundle": "bundle/bundle.json", "split": {"m": 6}, "fusion": {"temperatures": 0}})",
            R"({"bundle": "bundle/bundle.json", "split": {"m": 6}, "fusion": {"scheme": "fixed", "fixed_weights": [0, 0, 0]}})",
            R"({"bundle": "bundle/bundle.json", "split": {"m": 6}, "methods": ["M1"], "fusion": {"scheme": "fixed", "fixed_weights": [0, 1, 1]}})",
            R"({"bundle": "bundle/bundle.json", "split": {"mode": "seeded"}})",
            R"({"bundle": "bundle/bundle.json", "split": {"m": 6}, "label_space": "half"})",
            R"({"split": {"m": 6}})",
        };
        for (const char* text : bad) {
            CAPTURE(text);
            CHECK(kind_of([&] { parse(text); }) == ErrorKind::usage);
        }
        const auto per_method = parse(
            R"({"bundle": "bundle/bundle.json", "split": {"m": 6}, "fusion": {"temperatures": {"M3": 50, "image_image_clip": 20}}})");
        CHECK(per_method.fusion.temperatures == std::array<double, 3>{100, 20, 50});
    }

    TEST_CASE("failed runs leave no report behind") {
        TempDir dir;
        auto cfg = parse(R"({"bundle": "bundle/bundle.json", "split": {"m": 10, "seed": 7}})");
        cfg.report_path = dir / "report.json";
        CHECK_THROWS_AS(write_report(run_pipeline(cfg), cfg), Error);
        CHECK_FALSE(std::filesystem::exists(dir / "report.json"));
    }

    TEST_CASE("synthetic benchmark: fusion margin over the best single method") {
        // Frozen means from running the generator and pipeline as their own
        // oracle: 10 classes, dim 64, 50 samples/class, noise (0.6, 0.9, 0.5),
        // 3 references, inv_entropy, m = 6, split seed = bundle seed = 1..20.
        double top1[4] = {};
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            SyntheticParams p;
            p.seed = seed;
            PipelineConfig cfg;
            cfg.split_m = 6;
            cfg.split_seed = seed;
            const auto r = run_pipeline(generate_synthetic_bundle(p), cfg);
            for (std::size_t k = 0; k < 4; ++k) top1[k] += r.results[k].top1 / 20.0;
        }
        CHECK(top1[0] == doctest::Approx(0.658500).epsilon(1e-6));
        CHECK(top1[1] == doctest::Approx(0.370500).epsilon(1e-6));
        CHECK(top1[2] == doctest::Approx(0.680667).epsilon(1e-6));
        CHECK(top1[3] == doctest::Approx(0.739333).epsilon(1e-6));
        const double margin = top1[3] - std::max({top1[0], top1[1], top1[2]});
        CHECK(margin == doctest::Approx(0.058667).epsilon(1e-5));
    }
}
