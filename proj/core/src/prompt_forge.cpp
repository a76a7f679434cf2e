#include "zsfuse/prompt_forge.hpp"

#include <algorithm>
#include <cctype>

#include "zsfuse/error.hpp"

namespace zsfuse::prompts {

namespace {

constexpr std::string_view kAnalysisLead = "Please analyze the appearance characteristics of these classes [";
constexpr std::string_view kRealism = "As realistic as possible. More fit for life.";

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool iequals_prefix(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) != std::tolower(static_cast<unsigned char>(prefix[i]))) return false;
    }
    return true;
}

// Drops list markers such as "-", "*", "1." or "2)" that chat models prepend.
std::string_view strip_list_marker(std::string_view s) {
    if (!s.empty() && (s.front() == '-' || s.front() == '*')) return trim(s.substr(1));
    std::size_t i = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')')) return trim(s.substr(i + 1));
    return s;
}

}  // namespace

std::string analysis_prompt(const std::vector<std::string>& classes) {
    if (classes.empty()) throw Error(ErrorKind::usage, "analysis prompt needs at least one class");
    std::string out(kAnalysisLead);
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (i) out += ", ";
        out += '\'';
        for (char ch : classes[i]) {
            if (ch == '\\' || ch == '\'') out += '\\';
            out += ch;
        }
        out += '\'';
    }
    out += ']';
    return out;
}

std::vector<std::string> parse_analysis_prompt(std::string_view prompt) {
    if (prompt.substr(0, kAnalysisLead.size()) != kAnalysisLead || prompt.empty() || prompt.back() != ']')
        throw Error(ErrorKind::format, "not an analysis prompt");
    std::string_view body = prompt.substr(kAnalysisLead.size(), prompt.size() - kAnalysisLead.size() - 1);
    std::vector<std::string> names;
    std::size_t i = 0;
    while (i < body.size()) {
        if (body[i] != '\'') throw Error(ErrorKind::format, "analysis prompt: expected opening quote");
        std::string name;
        ++i;
        while (i < body.size() && body[i] != '\'') {
            if (body[i] == '\\' && i + 1 < body.size()) ++i;
            name += body[i++];
        }
        if (i >= body.size()) throw Error(ErrorKind::format, "analysis prompt: unterminated name");
        ++i;
        names.push_back(std::move(name));
        if (i < body.size()) {
            if (body.substr(i, 2) != ", ") throw Error(ErrorKind::format, "analysis prompt: expected ', ' separator");
            i += 2;
        }
    }
    return names;
}

std::string grouping_prompt() {
    return "Please group the classes I'm talking about without using any other class names. Ask for similar features "
           "in appearance, a group of two class names, and tell me what the features of similar appearance are, a "
           "sentence description is fine. Format: desk and dining_table - Both have flat horizontal surfaces with legs "
           "for support";
}

std::string confirmation_prompt() { return "Is there any other combination with similar appearance? If not, answer no"; }

std::string similarity_prompt(std::string_view a, std::string_view b) {
    if (a.empty() || b.empty()) throw Error(ErrorKind::usage, "similarity prompt needs two class names");
    if (a == b) throw Error(ErrorKind::usage, "similarity prompt needs two different classes, got '" + std::string(a) + "' twice");
    const std::string x(a);
    const std::string y(b);
    return "What does the similarity between " + x + " and " + y + " in appearance? Please answer in the format of: both " +
           x + " and " + y + " have A, B, C...., where A, B, and C are phrases to describe the similarities between " + x +
           " and " + y + ". Please state specific similarities, not just generalizations such as similar shape!";
}

std::string generation_prompt(std::string_view class_name, std::optional<std::string_view> common_features) {
    if (trim(class_name).empty()) throw Error(ErrorKind::usage, "generation prompt needs a class name");
    std::string out = "generate an image of " + std::string(class_name);
    if (common_features && !trim(*common_features).empty()) out += " that has " + std::string(*common_features);
    out += ". ";
    out += kRealism;
    return out;
}

std::string format_grouping_line(const GroupRecord& r) {
    return r.class_a + " and " + r.class_b + " - " + r.common_features;
}

ParseResult parse_grouping_response(std::string_view text, const ClassCatalog* catalog) {
    ParseResult out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view raw = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;

        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        auto warn = [&](const std::string& why) {
            out.warnings.push_back("line " + std::to_string(line_no) + ": " + why + ": " + std::string(line));
        };

        const std::string_view body = strip_list_marker(line);
        const auto dash = body.find(" - ");
        if (dash == std::string_view::npos) {
            warn("expected '<a> and <b> - <description>'");
            continue;
        }
        const std::string_view pair = trim(body.substr(0, dash));
        const std::string_view desc = trim(body.substr(dash + 3));
        const auto and_pos = pair.find(" and ");
        if (and_pos == std::string_view::npos || desc.empty()) {
            warn("expected '<a> and <b> - <description>'");
            continue;
        }
        GroupRecord r{std::string(trim(pair.substr(0, and_pos))), std::string(trim(pair.substr(and_pos + 5))),
                      std::string(desc)};
        if (r.class_a.empty() || r.class_b.empty()) {
            warn("empty class name");
            continue;
        }
        if (r.class_a == r.class_b) {
            warn("a class cannot be grouped with itself");
            continue;
        }
        if (catalog && (!catalog->find(r.class_a) || !catalog->find(r.class_b))) {
            warn("class not in catalog");
            continue;
        }
        out.records.push_back(std::move(r));
    }
    return out;
}

std::string extract_common_features(std::string_view answer, std::string_view a, std::string_view b) {
    std::string_view s = trim(answer);
    for (const auto& lead : {"both " + std::string(a) + " and " + std::string(b) + " have",
                             "both " + std::string(b) + " and " + std::string(a) + " have"}) {
        if (iequals_prefix(s, lead)) {
            s = trim(s.substr(lead.size()));
            break;
        }
    }
    while (!s.empty() && (s.back() == '.' || s.back() == '!')) s.remove_suffix(1);
    return std::string(trim(s));
}

std::vector<BatchEntry> generation_batch(const ClassCatalog& catalog, const std::vector<GroupRecord>& groups) {
    std::vector<BatchEntry> batch;
    for (const auto& entry : catalog.entries()) {
        bool grouped = false;
        for (const auto& g : groups) {
            const std::string* partner = nullptr;
            if (g.class_a == entry.name) partner = &g.class_b;
            else if (g.class_b == entry.name) partner = &g.class_a;
            if (!partner) continue;
            grouped = true;
            batch.push_back({entry.name, *partner, generation_prompt(entry.name, g.common_features)});
        }
        if (!grouped) batch.push_back({entry.name, std::nullopt, generation_prompt(entry.name)});
    }
    return batch;
}

nlohmann::ordered_json batch_to_json(const std::vector<BatchEntry>& batch, std::size_t images_per_class) {
    nlohmann::ordered_json prompts = nlohmann::ordered_json::array();
    for (const auto& e : batch) {
        nlohmann::ordered_json item;
        item["class"] = e.class_name;
        item["confused_with"] = e.confused_with ? nlohmann::ordered_json(*e.confused_with) : nlohmann::ordered_json(nullptr);
        item["prompt"] = e.prompt;
        prompts.push_back(std::move(item));
    }
    return {{"format", "zsfuse-prompt-batch"}, {"version", 1}, {"images_per_class", images_per_class}, {"prompts", prompts}};
}

}  // namespace zsfuse::prompts
