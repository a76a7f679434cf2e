#include "zsfuse/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "zsfuse/error.hpp"
#include "zsfuse/rng.hpp"

namespace zsfuse {

using ojson = nlohmann::ordered_json;

SplitSpec split_catalog(const ClassCatalog& catalog, std::size_t m, std::uint64_t seed, std::string dataset) {
    const std::size_t n = catalog.size();
    if (m < 1 || m >= n)
        throw Error(ErrorKind::usage, "closed-set size m=" + std::to_string(m) + " must satisfy 1 <= m < " +
                                          std::to_string(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    std::vector<bool> is_closed(n, false);
    for (std::size_t i = 0; i < m; ++i) is_closed[order[i]] = true;

    SplitSpec s{std::move(dataset), m, seed, {}, {}};
    for (std::size_t c = 0; c < n; ++c) (is_closed[c] ? s.closed : s.open).push_back(catalog[c].name);
    return s;
}

SplitSpec split_from_tags(const ClassCatalog& catalog, std::string dataset) {
    SplitSpec s{std::move(dataset), catalog.closed_count(), 0, {}, {}};
    for (const auto& e : catalog.entries()) (e.split == SplitTag::closed ? s.closed : s.open).push_back(e.name);
    validate_split(s, catalog);
    return s;
}

void validate_split(const SplitSpec& split, const ClassCatalog& catalog) {
    std::set<std::string> seen;
    for (const auto* list : {&split.closed, &split.open}) {
        for (const auto& name : *list) {
            catalog.index_of(name);
            if (!seen.insert(name).second)
                throw Error(ErrorKind::validation, "split lists class '" + name + "' twice");
        }
    }
    if (seen.size() != catalog.size()) throw Error(ErrorKind::validation, "split does not cover every catalog class");
    if (split.closed.empty() || split.open.empty())
        throw Error(ErrorKind::validation, "split needs at least one closed and one open class");
    if (split.m != split.closed.size()) throw Error(ErrorKind::validation, "split m does not match its closed list");
}

ojson split_to_json(const SplitSpec& s) {
    return {{"dataset", s.dataset}, {"m", s.m}, {"seed", s.seed}, {"closed", s.closed}, {"open", s.open}};
}

SplitSpec split_from_json(const nlohmann::json& j) {
    try {
        SplitSpec s;
        s.dataset = j.value("dataset", std::string());
        s.closed = j.at("closed").get<std::vector<std::string>>();
        s.open = j.at("open").get<std::vector<std::string>>();
        s.m = j.value("m", s.closed.size());
        s.seed = j.value("seed", std::uint64_t{0});
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::format, std::string("split: ") + e.what());
    }
}

std::vector<std::size_t> closed_columns(const SplitSpec& split, const ClassCatalog& catalog) {
    std::vector<std::size_t> cols;
    for (const auto& name : split.closed) cols.push_back(catalog.index_of(name));
    std::sort(cols.begin(), cols.end());
    return cols;
}

double topk_accuracy(const ProbMatrix& p, std::span<const std::size_t> labels, std::span<const std::size_t> label_space,
                     std::size_t k) {
    if (k == 0) throw Error(ErrorKind::usage, "top-k needs k >= 1");
    if (label_space.empty()) throw Error(ErrorKind::usage, "top-k label space is empty");
    if (labels.size() != p.rows()) throw Error(ErrorKind::validation, "label count does not match probability rows");
    std::vector<bool> in_space(p.cols(), false);
    for (std::size_t c : label_space) {
        if (c >= p.cols()) throw Error(ErrorKind::validation, "label space column out of range");
        in_space[c] = true;
    }

    std::size_t eligible = 0;
    std::size_t hits = 0;
    for (std::size_t t = 0; t < p.rows(); ++t) {
        const std::size_t truth = labels[t];
        if (truth >= p.cols() || !in_space[truth]) continue;
        ++eligible;
        const auto row = p.row(t);
        const double target = row[truth];
        std::size_t rank = 0;
        for (std::size_t c : label_space) {
            if (row[c] > target || (row[c] == target && c < truth)) ++rank;
        }
        hits += rank < k;
    }
    if (eligible == 0) throw Error(ErrorKind::validation, "top-k: no test sample has a label in the label space");
    return static_cast<double>(hits) / static_cast<double>(eligible);
}

double auroc(std::span<const double> pos, std::span<const double> neg) {
    if (pos.empty() || neg.empty()) throw Error(ErrorKind::usage, "auroc needs non-empty positive and negative lists");
    std::vector<double> sorted(neg.begin(), neg.end());
    std::sort(sorted.begin(), sorted.end());
    // Twice the Mann-Whitney count stays an exact integer.
    std::uint64_t twice_wins = 0;
    for (double s : pos) {
        const auto [lo, hi] = std::equal_range(sorted.begin(), sorted.end(), s);
        twice_wins += 2 * static_cast<std::uint64_t>(lo - sorted.begin()) + static_cast<std::uint64_t>(hi - lo);
    }
    return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

OpenSetScores openset_scores(const ProbMatrix& p, std::span<const std::size_t> labels, const SplitSpec& split,
                             const ClassCatalog& catalog) {
    if (labels.size() != p.rows()) throw Error(ErrorKind::validation, "label count does not match probability rows");
    const auto closed = closed_columns(split, catalog);
    std::vector<bool> is_closed(catalog.size(), false);
    for (std::size_t c : closed) is_closed[c] = true;

    OpenSetScores out;
    for (std::size_t t = 0; t < p.rows(); ++t) {
        const auto row = p.row(t);
        double best = row[closed.front()];
        for (std::size_t c : closed) best = std::max(best, row[c]);
        (is_closed[labels[t]] ? out.pos : out.neg).push_back(best);
    }
    if (out.pos.empty()) throw Error(ErrorKind::validation, "open-set evaluation: no closed-class samples in the test set");
    if (out.neg.empty()) throw Error(ErrorKind::validation, "open-set evaluation: no open-class samples in the test set");
    return out;
}

MethodMetrics evaluate_probs(const ProbMatrix& p, std::span<const std::size_t> labels, const SplitSpec& split,
                             const ClassCatalog& catalog, LabelSpace space) {
    std::vector<std::size_t> columns;
    if (space == LabelSpace::closed) {
        columns = closed_columns(split, catalog);
    } else {
        columns.resize(catalog.size());
        std::iota(columns.begin(), columns.end(), std::size_t{0});
    }
    MethodMetrics m;
    m.method = p.source;
    m.top1 = topk_accuracy(p, labels, columns, 1);
    m.top3 = topk_accuracy(p, labels, columns, 3);
    m.top5 = topk_accuracy(p, labels, columns, 5);
    std::vector<bool> in_space(catalog.size(), false);
    for (std::size_t c : columns) in_space[c] = true;
    for (std::size_t l : labels) m.eligible += in_space[l];

    const auto scores = openset_scores(p, labels, split, catalog);
    m.auroc = auroc(scores.pos, scores.neg);
    m.positives = scores.pos.size();
    m.negatives = scores.neg.size();
    return m;
}

std::string format_fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

namespace {

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

std::string string_list(const std::vector<std::string>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + quoted(items[i]);
    return out + "]";
}

std::string format_json(const EvalReport& r) {
    const auto& c = r.config;
    std::ostringstream o;
    o << "{\n";
    o << "  \"format\": \"zsfuse-report\",\n";
    o << "  \"version\": 1,\n";
    o << "  \"config\": {\n";
    o << "    \"methods\": " << string_list(c.methods) << ",\n";
    o << "    \"scheme\": " << quoted(c.scheme) << ",\n";
    o << "    \"fixed_weights\": [" << format_fixed6(c.fixed_weights[0]) << ", " << format_fixed6(c.fixed_weights[1])
      << ", " << format_fixed6(c.fixed_weights[2]) << "],\n";
    o << "    \"temperatures\": {";
    for (Method m : kAllMethods)
        o << (index_of(m) ? ", " : "") << quoted(std::string(to_string(m))) << ": "
          << format_fixed6(c.temperatures[index_of(m)]);
    o << "},\n";
    char eps[32];
    std::snprintf(eps, sizeof eps, "%.6e", c.epsilon);
    o << "    \"epsilon\": " << eps << ",\n";
    o << "    \"label_space\": " << quoted(c.label_space) << ",\n";
    o << "    \"split\": {\n";
    o << "      \"dataset\": " << quoted(c.split.dataset) << ",\n";
    o << "      \"m\": " << c.split.m << ",\n";
    o << "      \"seed\": " << c.split.seed << ",\n";
    o << "      \"closed\": " << string_list(c.split.closed) << ",\n";
    o << "      \"open\": " << string_list(c.split.open) << "\n";
    o << "    },\n";
    o << "    \"references_per_class\": {";
    bool first_bb = true;
    for (const auto& [bb, counts] : c.references_per_class) {
        o << (first_bb ? "\n" : ",\n") << "      " << quoted(bb) << ": {";
        bool first = true;
        for (const auto& [name, n] : counts) {
            o << (first ? "" : ", ") << quoted(name) << ": " << n;
            first = false;
        }
        o << "}";
        first_bb = false;
    }
    o << (first_bb ? "}\n" : "\n    }\n");
    o << "  },\n";
    o << "  \"samples\": " << r.samples << ",\n";
    o << "  \"results\": [";
    for (std::size_t i = 0; i < r.results.size(); ++i) {
        const auto& m = r.results[i];
        o << (i ? ",\n" : "\n") << "    {\"method\": " << quoted(m.method) << ", \"top1\": " << format_fixed6(m.top1)
          << ", \"top3\": " << format_fixed6(m.top3) << ", \"top5\": " << format_fixed6(m.top5)
          << ", \"auroc\": " << format_fixed6(m.auroc) << ", \"eligible\": " << m.eligible
          << ", \"positives\": " << m.positives << ", \"negatives\": " << m.negatives << "}";
    }
    o << (r.results.empty() ? "]\n" : "\n  ]\n");
    o << "}\n";
    return o.str();
}

std::string format_csv(const EvalReport& r) {
    std::ostringstream o;
    o << kCsvHeader << "\n";
    for (const auto& m : r.results) {
        o << m.method << "," << format_fixed6(m.top1) << "," << format_fixed6(m.top3) << "," << format_fixed6(m.top5)
          << "," << format_fixed6(m.auroc) << "," << m.eligible << "," << m.positives << "," << m.negatives << "\n";
    }
    return o.str();
}

}  // namespace

std::string format_report(const EvalReport& report, ReportFormat format) {
    return format == ReportFormat::json ? format_json(report) : format_csv(report);
}

void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path) {
    const std::string text = format_report(report, format);
    // Write beside the target and rename so a failed run never leaves a partial report.
    auto tmp = path;
    tmp += ".tmp";
    write_text_file(tmp, text);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::io, "cannot move report into place at " + path.string() + ": " + ec.message());
}

EvalReport report_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", std::string()) != "zsfuse-report") throw Error(ErrorKind::format, "not a zsfuse report");
        EvalReport r;
        const auto& c = j.at("config");
        r.config.methods = c.at("methods").get<std::vector<std::string>>();
        r.config.scheme = c.at("scheme").get<std::string>();
        r.config.fixed_weights = c.at("fixed_weights").get<std::array<double, 3>>();
        for (Method m : kAllMethods) r.config.temperatures[index_of(m)] = c.at("temperatures").at(std::string(to_string(m)));
        r.config.epsilon = c.at("epsilon").get<double>();
        r.config.label_space = c.at("label_space").get<std::string>();
        r.config.split = split_from_json(c.at("split"));
        r.config.references_per_class =
            c.at("references_per_class").get<std::map<std::string, std::map<std::string, std::size_t>>>();
        r.samples = j.at("samples").get<std::size_t>();
        for (const auto& m : j.at("results")) {
            r.results.push_back({m.at("method").get<std::string>(), m.at("top1").get<double>(), m.at("top3").get<double>(),
                                 m.at("top5").get<double>(), m.at("auroc").get<double>(), m.at("eligible").get<std::size_t>(),
                                 m.at("positives").get<std::size_t>(), m.at("negatives").get<std::size_t>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::format, std::string("report: ") + e.what());
    }
}

}  // namespace zsfuse
