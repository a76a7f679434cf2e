#include "zsfuse/pipeline.hpp"

#include <algorithm>
#include <set>

#include "zsfuse/error.hpp"

namespace zsfuse {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> known, const std::string& where) {
    if (!j.is_object()) throw Error(ErrorKind::usage, where + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw Error(ErrorKind::usage, where + ": unknown key '" + key + "'");
    }
}

fs::path resolve(const fs::path& base, const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; }

std::string stem(Method m) { return std::string(to_string(m)); }

nlohmann::ordered_json sidecar(std::string_view kind, std::string_view source, double temperature, const ClassCatalog& c) {
    ojson j;
    j["kind"] = kind;
    j["source"] = source;
    if (temperature > 0.0) j["temperature"] = temperature;
    j["classes"] = c.names();
    return j;
}

void check_sidecar(const fs::path& path, std::string_view kind, std::string_view source, const ClassCatalog& c) {
    const auto j = read_json_file(path);
    if (j.value("kind", std::string()) != kind || j.value("source", std::string()) != source)
        throw Error(ErrorKind::format, path.string() + ": expected a " + std::string(kind) + " sidecar for " + std::string(source));
    if (j.value("classes", std::vector<std::string>{}) != c.names())
        throw Error(ErrorKind::validation, path.string() + ": class columns do not match the catalog");
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

void PipelineConfig::validate() const {
    if (methods.empty()) throw Error(ErrorKind::usage, "config: method subset must be non-empty");
    std::set<Method> unique(methods.begin(), methods.end());
    if (unique.size() != methods.size()) throw Error(ErrorKind::usage, "config: duplicate method");
    fusion.validate();
    if (fusion.scheme == Scheme::fixed) {
        double sum = 0.0;
        for (Method m : methods) sum += fusion.fixed_weights[index_of(m)];
        if (!(sum > 0.0)) throw Error(ErrorKind::usage, "config: fixed weights of the selected methods sum to zero");
    }
    if (split_mode == SplitMode::seeded && split_m == 0) throw Error(ErrorKind::usage, "config: split.m is required");
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    try {
        reject_unknown_keys(j, {"bundle", "methods", "fusion", "split", "label_space", "report"}, "config");
        PipelineConfig c;
        c.bundle = resolve(base_dir, j.at("bundle").get<std::string>());

        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j.at("methods")) {
                auto parsed = parse_method(m.get<std::string>());
                if (!parsed) throw Error(ErrorKind::usage, "config: unknown method '" + m.get<std::string>() + "'");
                c.methods.push_back(*parsed);
            }
        }

        if (j.contains("fusion")) {
            const auto& f = j.at("fusion");
            reject_unknown_keys(f, {"scheme", "fixed_weights", "temperatures", "epsilon"}, "config.fusion");
            if (f.contains("scheme")) {
                auto s = parse_scheme(f.at("scheme").get<std::string>());
                if (!s) throw Error(ErrorKind::usage, "config: unknown scheme '" + f.at("scheme").get<std::string>() + "'");
                c.fusion.scheme = *s;
            }
            if (f.contains("fixed_weights")) c.fusion.fixed_weights = f.at("fixed_weights").get<std::array<double, 3>>();
            if (f.contains("temperatures")) {
                const auto& t = f.at("temperatures");
                if (t.is_number()) {
                    c.fusion.temperatures.fill(t.get<double>());
                } else {
                    for (const auto& [name, value] : t.items()) {
                        auto m = parse_method(name);
                        if (!m) throw Error(ErrorKind::usage, "config: unknown method '" + name + "' in temperatures");
                        c.fusion.temperatures[index_of(*m)] = value.get<double>();
                    }
                }
            }
            if (f.contains("epsilon")) c.fusion.epsilon = f.at("epsilon").get<double>();
        }

        if (j.contains("split")) {
            const auto& s = j.at("split");
            reject_unknown_keys(s, {"mode", "m", "seed", "path", "dataset"}, "config.split");
            const auto mode = s.value("mode", std::string("seeded"));
            if (mode == "seeded") c.split_mode = SplitMode::seeded;
            else if (mode == "file") c.split_mode = SplitMode::file;
            else if (mode == "catalog") c.split_mode = SplitMode::catalog;
            else throw Error(ErrorKind::usage, "config: split.mode must be seeded, file or catalog");
            c.split_m = s.value("m", std::size_t{0});
            c.split_seed = s.value("seed", std::uint64_t{0});
            c.dataset = s.value("dataset", std::string());
            if (c.split_mode == SplitMode::file) c.split_file = resolve(base_dir, s.at("path").get<std::string>());
        }

        if (j.contains("label_space")) {
            const auto ls = j.at("label_space").get<std::string>();
            if (ls == "closed") c.label_space = LabelSpace::closed;
            else if (ls == "full") c.label_space = LabelSpace::full;
            else throw Error(ErrorKind::usage, "config: label_space must be closed or full");
        }

        if (j.contains("report")) {
            const auto& r = j.at("report");
            reject_unknown_keys(r, {"format", "path"}, "config.report");
            const auto fmt = r.value("format", std::string("json"));
            if (fmt == "json") c.report_format = ReportFormat::json;
            else if (fmt == "csv") c.report_format = ReportFormat::csv;
            else throw Error(ErrorKind::usage, "config: report.format must be json or csv");
            if (r.contains("path")) c.report_path = resolve(base_dir, r.at("path").get<std::string>());
        }
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::usage, std::string("config: ") + e.what());
    }
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    return from_json(read_json_file(path), path.parent_path());
}

SplitSpec resolve_split(const PipelineConfig& config, const ClassCatalog& catalog) {
    SplitSpec split;
    switch (config.split_mode) {
        case SplitMode::seeded: split = split_catalog(catalog, config.split_m, config.split_seed, config.dataset); break;
        case SplitMode::file: split = split_from_json(read_json_file(config.split_file)); break;
        case SplitMode::catalog: split = split_from_tags(catalog, config.dataset); break;
    }
    validate_split(split, catalog);
    return split;
}

std::vector<ScoreMatrix> score_stage(const DatasetBundle& bundle, std::span<const Method> methods) {
    bundle.validate(methods);
    std::vector<ScoreMatrix> out;
    for (Method m : methods) out.push_back(score_method(bundle, m));
    return out;
}

EvalReport evaluate_stage(const DatasetBundle& bundle, const SplitSpec& split, const FusionResult& fusion,
                          const PipelineConfig& config) {
    EvalReport report;
    auto& c = report.config;
    for (Method m : fusion.methods) c.methods.emplace_back(to_string(m));
    c.scheme = std::string(to_string(config.fusion.scheme));
    c.fixed_weights = config.fusion.fixed_weights;
    c.temperatures = config.fusion.temperatures;
    c.epsilon = config.fusion.epsilon;
    c.label_space = config.label_space == LabelSpace::closed ? "closed" : "full";
    c.split = split;
    for (Method m : fusion.methods) {
        if (m == Method::text_image_clip) continue;
        const auto& bb = bundle.backbone(m);
        const auto counts = bundle.reference_manifest.counts(bb);
        auto& per_class = c.references_per_class[bb];
        for (std::size_t i = 0; i < counts.size(); ++i) per_class[bundle.catalog[i].name] = counts[i];
    }
    report.samples = bundle.labels.size();

    for (const auto& p : fusion.calibrated)
        report.results.push_back(evaluate_probs(p, bundle.labels, split, bundle.catalog, config.label_space));
    report.results.push_back(evaluate_probs(fusion.fused, bundle.labels, split, bundle.catalog, config.label_space));
    return report;
}

EvalReport run_pipeline(const DatasetBundle& bundle, const PipelineConfig& config) {
    config.validate();
    const auto split = resolve_split(config, bundle.catalog);
    const auto scores = score_stage(bundle, config.methods);
    const auto fusion = calibrate_and_fuse(scores, config.fusion);
    return evaluate_stage(bundle, split, fusion, config);
}

EvalReport run_pipeline(const PipelineConfig& config) {
    config.validate();
    return run_pipeline(load_bundle(config.bundle), config);
}

void write_report(const EvalReport& report, const PipelineConfig& config) {
    if (!config.report_path) throw Error(ErrorKind::usage, "config: report.path is not set");
    emit_report(report, config.report_format, *config.report_path);
}

void write_scores(const fs::path& dir, std::span<const ScoreMatrix> scores, const ClassCatalog& catalog) {
    ensure_dir(dir);
    for (const auto& s : scores) {
        write_table(s.scores, dir / (stem(s.method) + ".score.zseb"));
        write_text_file(dir / (stem(s.method) + ".score.json"),
                        sidecar("score", to_string(s.method), 0.0, catalog).dump(2) + "\n");
    }
}

std::vector<ScoreMatrix> read_scores(const fs::path& dir, std::span<const Method> methods, const ClassCatalog& catalog) {
    std::vector<ScoreMatrix> out;
    for (Method m : methods) {
        check_sidecar(dir / (stem(m) + ".score.json"), "score", to_string(m), catalog);
        ScoreMatrix s{m, read_table(dir / (stem(m) + ".score.zseb"))};
        if (s.cols() != catalog.size()) throw Error(ErrorKind::validation, "score table width != catalog size");
        out.push_back(std::move(s));
    }
    return out;
}

void write_fusion(const fs::path& dir, const FusionResult& fusion, const ClassCatalog& catalog) {
    ensure_dir(dir);
    for (const auto& p : fusion.calibrated) {
        write_table(p.probs, dir / (p.source + ".prob.zseb"));
        write_text_file(dir / (p.source + ".prob.json"), sidecar("prob", p.source, p.temperature, catalog).dump(2) + "\n");
    }
    write_table(fusion.fused.probs, dir / "fused.prob.zseb");
    write_text_file(dir / "fused.prob.json", sidecar("prob", "fused", 0.0, catalog).dump(2) + "\n");

    Table w{fusion.fused.rows(), fusion.methods.size(), std::vector<double>(fusion.fused.rows() * fusion.methods.size())};
    for (std::size_t t = 0; t < w.rows; ++t)
        for (std::size_t k = 0; k < w.cols; ++k) w.values[t * w.cols + k] = fusion.weights[k][t];
    write_table(w, dir / "weights.zseb");
    ojson methods = ojson::array();
    for (Method m : fusion.methods) methods.push_back(to_string(m));
    write_text_file(dir / "weights.json", ojson{{"kind", "weights"}, {"methods", methods}}.dump(2) + "\n");
}

FusionResult read_fusion(const fs::path& dir, std::span<const Method> methods, const ClassCatalog& catalog) {
    FusionResult r;
    auto load = [&](const std::string& source) {
        const auto meta = read_json_file(dir / (source + ".prob.json"));
        check_sidecar(dir / (source + ".prob.json"), "prob", source, catalog);
        ProbMatrix p{source, meta.value("temperature", 0.0), read_table(dir / (source + ".prob.zseb"))};
        if (p.cols() != catalog.size()) throw Error(ErrorKind::validation, "probability table width != catalog size");
        return p;
    };
    for (Method m : methods) {
        r.methods.push_back(m);
        r.calibrated.push_back(load(stem(m)));
    }
    r.fused = load("fused");
    const auto w = read_table(dir / "weights.zseb");
    if (w.cols != methods.size() || w.rows != r.fused.rows())
        throw Error(ErrorKind::validation, "weights table does not match the method subset");
    r.weights.assign(w.cols, std::vector<double>(w.rows));
    for (std::size_t t = 0; t < w.rows; ++t)
        for (std::size_t k = 0; k < w.cols; ++k) r.weights[k][t] = w.values[t * w.cols + k];
    return r;
}

}  // namespace zsfuse
