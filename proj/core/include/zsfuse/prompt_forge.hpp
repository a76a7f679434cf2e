#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsfuse/bundle.hpp"

namespace zsfuse::prompts {

/// A pair of easily confused classes and what they share in appearance.
struct GroupRecord {
    std::string class_a;
    std::string class_b;
    std::string common_features;

    friend bool operator==(const GroupRecord&, const GroupRecord&) = default;
};

struct ParseResult {
    std::vector<GroupRecord> records;
    std::vector<std::string> warnings;
};

/// `Please analyze the appearance characteristics of these classes ['a', 'b']`.
/// Each name is wrapped in single quotes; backslash and single quote inside a
/// name are escaped with a backslash.
std::string analysis_prompt(const std::vector<std::string>& classes);

/// Inverse of the quoting in analysis_prompt; returns the class names.
std::vector<std::string> parse_analysis_prompt(std::string_view prompt);

std::string grouping_prompt();
std::string confirmation_prompt();

/// Asks for the shared appearance of two classes in "both a and b have A, B, C" form.
std::string similarity_prompt(std::string_view a, std::string_view b);

/// With common features: `generate an image of <class> that has <cc>. As
/// realistic as possible. More fit for life.`; without (or empty): the same
/// sentence minus the "that has" clause.
std::string generation_prompt(std::string_view class_name, std::optional<std::string_view> common_features = {});

/// `<a> and <b> - <description>`
std::string format_grouping_line(const GroupRecord& r);

/// Parses one record per line. Blank lines are skipped; other lines that do
/// not match (or, when a catalog is given, name unknown or identical classes)
/// become warnings.
ParseResult parse_grouping_response(std::string_view text, const ClassCatalog* catalog = nullptr);

/// Strips a leading "both <a> and <b> have" and trailing punctuation from a
/// similarity answer, leaving the feature list.
std::string extract_common_features(std::string_view answer, std::string_view a, std::string_view b);

struct BatchEntry {
    std::string class_name;
    std::optional<std::string> confused_with;
    std::string prompt;
};

/// One generation prompt per (class, confusable partner); classes in no group
/// get a single plain prompt. Order: catalog order, then group order.
std::vector<BatchEntry> generation_batch(const ClassCatalog& catalog, const std::vector<GroupRecord>& groups);

nlohmann::ordered_json batch_to_json(const std::vector<BatchEntry>& batch, std::size_t images_per_class);

}  // namespace zsfuse::prompts
